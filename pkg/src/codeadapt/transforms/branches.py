from __future__ import annotations

import random
from typing import Optional

from ..lang.nodes import (
    Ast, Binary, Break, Comment, Compound, Declaration, Declarator, Expr,
    ExprStmt, Ident, If, IntLit, Stmt, Switch, TranslationUnit, Unary,
    rewrite,
)
from .base import Operator, register
from .util import FreshNames, breaks_outside_nested, is_pure


@register
class ChangeIfElseIf(Operator):
    id = 5
    name = "changeIfElseIf"
    description = "Rewrite an else-if chain as nested if/else"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes)
                if isinstance(n, If) and isinstance(n.orelse, If)]

    def rewrite_site(self, node: If, nid: int):
        return If(node.cond, node.then, Compound((node.orelse,)))


@register
class ChangeIf(Operator):
    """``if (a) X else Y`` becomes ``if (a) X else if (!(a)) Y``.

    An impure condition cannot be re-evaluated, so it gets the guard ``1``
    instead. An else block holding a single ``if`` is simply unwrapped.
    """

    id = 6
    name = "changeIf"
    description = "Rewrite if/else as if/else-if with the negated condition"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes)
                if isinstance(n, If) and n.orelse is not None and not isinstance(n.orelse, If)]

    def rewrite_site(self, node: If, nid: int):
        orelse = node.orelse
        if isinstance(orelse, Compound) and len(orelse.items) == 1 and isinstance(orelse.items[0], If):
            return If(node.cond, node.then, orelse.items[0])
        guard = Unary("!", node.cond) if is_pure(node.cond) else IntLit("1")
        return If(node.cond, node.then, If(guard, orelse))


def _strip_terminal_break(body: tuple[Stmt, ...]) -> tuple[tuple[Stmt, ...], bool]:
    items = [s for s in body if not isinstance(s, Comment)]
    if items and isinstance(items[-1], Break):
        idx = max(i for i, s in enumerate(body) if s is items[-1])
        return body[:idx] + body[idx + 1:], True
    if len(items) == 1 and isinstance(items[0], Compound):
        inner, ended = _strip_terminal_break(items[0].items)
        if ended:
            return tuple(Compound(inner) if s is items[0] else s for s in body), True
    return body, False


def switch_arms(node: Switch) -> Optional[list[tuple[Stmt, ...]]]:
    """Per-case statement lists with fall-through expanded, or None if unsupported."""
    stripped = []
    for case in node.cases:
        body, ended = _strip_terminal_break(case.body)
        if any(isinstance(s, Declaration) for s in body):
            return None
        for stmt in body:
            if breaks_outside_nested(stmt):
                return None
        stripped.append((body, ended))
    arms = []
    for i in range(len(stripped)):
        arm: list[Stmt] = []
        for body, ended in stripped[i:]:
            arm.extend(body)
            if ended:
                break
        arms.append(tuple(arm))
    return arms


@register
class ChangeSwitch(Operator):
    id = 7
    name = "changeSwitch"
    description = "Rewrite a switch as an if/else-if chain"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes)
                if isinstance(n, Switch) and switch_arms(n) is not None]

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        fresh = FreshNames(ast)
        temps = {nid: fresh.take("sw") for nid in sites
                 if not isinstance(ast.nodes[nid].expr, Ident)}

        def make(nid):
            def fn(node: Switch, _nid: int):
                return _switch_to_if(node, temps.get(nid))
            return fn

        return rewrite(ast.root, {nid: make(nid) for nid in sites})


def _switch_to_if(node: Switch, temp: Optional[str]):
    arms = switch_arms(node)
    prefix: list[Stmt] = []
    if temp is None:
        subject: Expr = node.expr
    else:
        prefix.append(Declaration("int", (Declarator(temp, node.expr),)))
        subject = Ident(temp)

    matched = []
    default_arm = None
    for case, arm in zip(node.cases, arms):
        tests = [Binary("==", subject, label) for label in case.labels if label is not None]
        if None in case.labels:
            default_arm = arm
        if tests:
            cond = tests[0]
            for t in tests[1:]:
                cond = Binary("||", cond, t)
            matched.append((cond, arm))

    if not matched:
        # the subject is still evaluated exactly once
        stmts = prefix if temp is not None else [ExprStmt(subject)]
        if default_arm is not None:
            stmts.append(Compound(default_arm))
        return [Compound(tuple(stmts))] if temp is not None else stmts

    chain: Optional[Stmt] = Compound(default_arm) if default_arm is not None else None
    for cond, arm in reversed(matched):
        chain = If(cond, Compound(arm), chain)
    if temp is None:
        return chain
    return [Compound(tuple(prefix) + (chain,))]
