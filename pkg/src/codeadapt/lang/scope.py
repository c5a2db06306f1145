"""Static name resolution over an :class:`Ast`.

Every ``Ident`` and ``Call`` node is mapped to the node id of the declaration
it refers to (a ``Declarator``, ``Param`` or ``FunctionDef``), or to ``None``
when the name is free, e.g. ``printf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .nodes import (
    Ast, Call, Compound, Declaration, Declarator, For, FunctionDef,
    Ident, Node, Opaque, Param, Switch,
)
from .tokens import tokenize


@dataclass
class Resolution:
    uses: dict[int, Optional[int]] = field(default_factory=dict)
    decls: dict[int, str] = field(default_factory=dict)
    functions: dict[str, int] = field(default_factory=dict)

    def free_names(self, ast: Ast) -> set[str]:
        out = set()
        for nid, target in self.uses.items():
            if target is None:
                node = ast.nodes[nid]
                out.add(node.name)
        return out

    def uses_of(self, decl_id: int) -> list[int]:
        return [u for u, d in self.uses.items() if d == decl_id]


def resolve(ast: Ast) -> Resolution:
    res = Resolution()
    root = ast.root
    counter = 0
    # function names are visible everywhere, including before their definition
    nid = 1
    for item in root.items:
        if isinstance(item, FunctionDef):
            res.functions.setdefault(item.name, nid)
        nid += _size(item)

    scopes: list[dict[str, int]] = [dict()]

    def lookup(name: str) -> Optional[int]:
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        return None

    def visit(node: Node, new_scope: bool = False) -> None:
        nonlocal counter
        my_id = counter
        counter += 1
        if isinstance(node, Ident):
            res.uses[my_id] = lookup(node.name)
            return
        if isinstance(node, Call):
            target = lookup(node.name)
            if target is None:
                target = res.functions.get(node.name)
            res.uses[my_id] = target
            for arg in node.args:
                visit(arg)
            return
        if isinstance(node, Declarator):
            # the name is in scope inside its own initializer, as in C
            scopes[-1][node.name] = my_id
            res.decls[my_id] = node.name
            if node.init is not None:
                visit(node.init)
            return
        if isinstance(node, Param):
            scopes[-1][node.name] = my_id
            res.decls[my_id] = node.name
            return
        if isinstance(node, FunctionDef):
            res.decls[my_id] = node.name
            scopes.append({})
            for p in node.params:
                visit(p)
            # the outermost block shares the parameter scope
            body = node.body
            counter += 1
            for item in body.items:
                visit(item)
            scopes.pop()
            return
        opens = isinstance(node, (Compound, For, Switch))
        if opens:
            scopes.append({})
        for child in node.children():
            visit(child)
        if opens:
            scopes.pop()

    counter = 1
    for item in root.items:
        visit(item)
    return res


def _size(node: Node) -> int:
    n = 1
    stack = list(node.children())
    while stack:
        cur = stack.pop()
        n += 1
        stack.extend(cur.children())
    return n


def all_names(ast: Ast) -> set[str]:
    """Every identifier spelled anywhere, including inside opaque text."""
    names = set()
    for node in ast.nodes:
        if isinstance(node, Ident):
            names.add(node.name)
        elif isinstance(node, Call):
            names.add(node.name)
        elif isinstance(node, (Declarator, Param, FunctionDef)):
            names.add(node.name)
        elif isinstance(node, Opaque):
            names.update(opaque_identifiers(node))
    return names


def opaque_identifiers(node: Opaque) -> set[str]:
    try:
        return {t.lexeme for t in tokenize(node.text) if t.kind == "identifier"}
    except ValueError:
        return set()


def declared_names(stmt: Node) -> set[str]:
    if isinstance(stmt, Declaration):
        return {d.name for d in stmt.declarators}
    return set()


def mentioned_names(node: Node) -> set[str]:
    """Names read, written or called anywhere under ``node``."""
    out = set()
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, (Ident, Call, Declarator)):
            out.add(cur.name)
        elif isinstance(cur, Opaque):
            out.update(opaque_identifiers(cur))
        stack.extend(cur.children())
    return out


__all__ = ["Resolution", "resolve", "all_names", "declared_names", "mentioned_names", "opaque_identifiers"]
