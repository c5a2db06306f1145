from __future__ import annotations

import random

from ..lang.nodes import (
    Assign, Ast, Call, Comment, Compound, Declaration, Declarator, ExprStmt,
    FunctionDef, Ident, If, IntLit, StrLit, TranslationUnit, rewrite,
    string_literal_value,
)
from ..lang.scope import mentioned_names
from .base import Operator, register
from .util import in_statement_list, is_pure


@register
class ChangeDefine(Operator):
    """``int b = 0;`` becomes ``int b; b = 0;``."""

    id = 12
    name = "changeDefine"
    description = "Split an initialized declaration into a declaration and an assignment"

    def sites(self, ast: Ast) -> list[int]:
        out = []
        for nid, n in enumerate(ast.nodes):
            if not isinstance(n, Declaration) or "const" in n.type.split():
                continue
            if not any(d.init is not None for d in n.declarators):
                continue
            if not in_statement_list(ast, nid):
                continue
            names = {d.name for d in n.declarators}
            if any(d.init is not None and mentioned_names(d.init) & names for d in n.declarators):
                continue
            out.append(nid)
        return out

    def rewrite_site(self, node: Declaration, nid: int):
        bare = Declaration(node.type, tuple(Declarator(d.name) for d in node.declarators))
        assigns = [ExprStmt(Assign("=", Ident(d.name), d.init))
                   for d in node.declarators if d.init is not None]
        return [bare] + assigns


JUNK_BODIES = (
    ExprStmt(Call("printf", (StrLit('""'),))),
    ExprStmt(Call("printf", (StrLit('"%d\\n"'), IntLit("0")))),
    ExprStmt(Call("printf", (StrLit('"unreachable\\n"'),))),
)


def _junk_statement(choice: int) -> If:
    return If(IntLit("0"), Compound((JUNK_BODIES[choice],)))


def _is_junk(stmt) -> bool:
    return (isinstance(stmt, If) and stmt.orelse is None
            and isinstance(stmt.cond, IntLit) and stmt.cond.text == "0")


@register
class ChangeAddJunk(Operator):
    """Insert one never-executed ``if (0) { printf(...); }`` per block."""

    id = 13
    name = "changeAddJunk"
    description = "Insert a dead if (0) block into each statement block"

    def sites(self, ast: Ast) -> list[int]:
        out = []
        for nid, n in enumerate(ast.nodes):
            if not isinstance(n, Compound) or any(_is_junk(s) for s in n.items):
                continue
            parent = ast.parent(nid)
            if parent is not None and _is_junk(parent):
                continue
            out.append(nid)
        return out

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        plan = {}
        for nid in sites:
            block = ast.nodes[nid]
            plan[nid] = (rng.randint(0, len(block.items)), rng.randrange(len(JUNK_BODIES)))

        def make(nid):
            pos, choice = plan[nid]

            def fn(node: Compound, _nid: int):
                items = list(node.items)
                items.insert(min(pos, len(items)), _junk_statement(choice))
                return Compound(tuple(items))
            return fn

        return rewrite(ast.root, {nid: make(nid) for nid in sites})


def _swappable(a: Declaration, b: Declaration) -> bool:
    names_a = {d.name for d in a.declarators}
    names_b = {d.name for d in b.declarators}
    if names_a & names_b:
        return False
    for first, names_other in ((a, names_b), (b, names_a)):
        for d in first.declarators:
            if d.init is None:
                continue
            if not is_pure(d.init) or mentioned_names(d.init) & names_other:
                return False
    return True


@register
class ChangeExchangeCode(Operator):
    """Swap adjacent independent declarations, pairing left to right."""

    id = 14
    name = "changeExchangeCode"
    description = "Swap adjacent declarations that do not depend on each other"

    def _pairs(self, ast: Ast) -> list[tuple[int, int]]:
        pairs = []
        nodes, parents = ast.nodes, ast.parents
        children: dict[int, list[int]] = {}
        for nid in range(len(nodes)):
            if in_statement_list(ast, nid):
                children.setdefault(parents[nid], []).append(nid)
        for pid, kids in children.items():
            i = 0
            while i + 1 < len(kids):
                a, b = kids[i], kids[i + 1]
                na, nb = nodes[a], nodes[b]
                if isinstance(na, Declaration) and isinstance(nb, Declaration) and _swappable(na, nb):
                    pairs.append((a, b))
                    i += 2
                else:
                    i += 1
        pairs.sort()
        return pairs

    def sites(self, ast: Ast) -> list[int]:
        return [a for a, _ in self._pairs(ast)]

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        targets = {}
        for a, b in self._pairs(ast):
            na, nb = ast.nodes[a], ast.nodes[b]
            targets[a] = lambda n, i, nb=nb: nb
            targets[b] = lambda n, i, na=na: na
        return rewrite(ast.root, targets)


def is_debug_print(stmt) -> bool:
    if not (isinstance(stmt, ExprStmt) and isinstance(stmt.expr, Call)):
        return False
    call = stmt.expr
    if call.name != "printf" or len(call.args) != 1 or not isinstance(call.args[0], StrLit):
        return False
    return "%" not in string_literal_value(call.args[0].text).replace("%%", "")


@register
class ChangeDeleteComments(Operator):
    """Drop comments and argument-free ``printf("...")`` debug statements."""

    id = 15
    name = "changeDeleteComments"
    description = "Remove comments and argument-free debug printf calls"

    def sites(self, ast: Ast) -> list[int]:
        user_printf = any(isinstance(i, FunctionDef) and i.name == "printf" for i in ast.root.items)
        out = []
        for nid, n in enumerate(ast.nodes):
            if isinstance(n, Comment):
                out.append(nid)
            elif not user_printf and is_debug_print(n):
                out.append(nid)
        return out

    def rewrite_site(self, node, nid: int):
        return []
