from __future__ import annotations

import random

from ..lang.nodes import (
    Assign, Ast, Binary, Compound, Continue, Declaration, Declarator,
    DoWhile, ExprStmt, For, Ident, IntLit, Node, TranslationUnit, While,
    rewrite,
)
from ..lang.scope import declared_names, mentioned_names
from .base import Operator, register
from .util import FreshNames


def _replace_continues(stmt: Node, step_stmt: ExprStmt) -> Node:
    """Prefix every ``continue`` of the current loop with ``step_stmt``."""
    probe = Ast(TranslationUnit((stmt,)))
    targets = {}
    blocked = set()
    for nid, node in enumerate(probe.nodes):
        pid = probe.parents[nid]
        if pid in blocked or isinstance(node, (While, DoWhile, For)):
            blocked.add(nid)
            continue
        if isinstance(node, Continue):
            targets[nid] = lambda n, i: Compound((step_stmt, Continue()))
    if not targets:
        return stmt
    return rewrite(probe.root, targets).items[0]


@register
class ChangeFor(Operator):
    id = 2
    name = "changeFor"
    description = "Rewrite a for loop as a while loop"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes) if isinstance(n, For)]

    def rewrite_site(self, node: For, nid: int):
        cond = node.cond if node.cond is not None else IntLit("1")
        body = node.body
        body_items: tuple
        if node.step is not None:
            step_stmt = ExprStmt(node.step)
            body = _replace_continues(body, step_stmt)
            step_names = mentioned_names(node.step)
            if isinstance(body, Compound) and not any(
                    declared_names(s) & step_names for s in body.items):
                body_items = body.items + (step_stmt,)
            else:
                body_items = (body, step_stmt)
        else:
            body_items = body.items if isinstance(body, Compound) else (body,)
        loop = While(cond, Compound(body_items))
        if isinstance(node.init, Declaration):
            # keep the loop variable scoped to the loop
            return [Compound((node.init, loop))]
        if node.init is not None:
            return [ExprStmt(node.init), loop]
        return loop


@register
class ChangeWhile(Operator):
    id = 3
    name = "changeWhile"
    description = "Rewrite a while loop as a for loop"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes) if isinstance(n, While)]

    def rewrite_site(self, node: While, nid: int):
        return For(None, node.cond, None, node.body)


@register
class ChangeDo(Operator):
    """``do B while (c);`` becomes a flag-guarded ``while (first || c)``.

    The flag keeps ``continue`` jumping to the condition test, which a plain
    unrolled copy of the body would get wrong.
    """

    id = 4
    name = "changeDo"
    description = "Rewrite a do-while loop as a while loop"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes) if isinstance(n, DoWhile)]

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        fresh = FreshNames(ast)
        flags = {nid: fresh.take("first") for nid in sites}

        def make(flag):
            def fn(node: DoWhile, nid: int):
                body = node.body.items if isinstance(node.body, Compound) else (node.body,)
                reset = ExprStmt(Assign("=", Ident(flag), IntLit("0")))
                loop = While(Binary("||", Ident(flag), node.cond), Compound((reset,) + tuple(body)))
                return [Compound((Declaration("int", (Declarator(flag, IntLit("1")),)), loop))]
            return fn

        return rewrite(ast.root, {nid: make(flags[nid]) for nid in sites})
