"""Small analyses shared by the operators."""
from __future__ import annotations

from typing import Iterable, Optional

from ..lang.nodes import (
    Assign, Ast, Binary, Break, Call, Case, Compound, DoWhile, ExprStmt, For,
    Node, Postfix,
    Stmt, Switch, TranslationUnit, Unary, While, walk,
)
from ..lang.scope import all_names

LIST_PARENTS = (Compound, Case, TranslationUnit)


def is_pure(expr: Optional[Node]) -> bool:
    """No writes and no calls anywhere inside ``expr``."""
    if expr is None:
        return True
    for node in walk(expr):
        if isinstance(node, (Assign, Postfix, Call)):
            return False
        if isinstance(node, Unary) and node.op in ("++", "--"):
            return False
    return True


def in_statement_list(ast: Ast, nid: int) -> bool:
    parent = ast.parent(nid)
    field = ast.fields[nid]
    return (isinstance(parent, Compound) and field == "items") or (isinstance(parent, Case) and field == "body")


def value_discarded(ast: Ast, nid: int) -> bool:
    """True if the value of expression ``nid`` is thrown away."""
    while True:
        pid = ast.parents[nid]
        if pid is None:
            return False
        parent = ast.nodes[pid]
        field = ast.fields[nid]
        if isinstance(parent, ExprStmt):
            return True
        if isinstance(parent, For):
            return field in ("init", "step")
        if isinstance(parent, Binary) and parent.op == ",":
            # node ids are pre-order, so the left operand directly follows its parent
            if nid == pid + 1:
                return True
            nid = pid
            continue
        return False


def loop_free_walk(stmt: Node) -> Iterable[Node]:
    """Walk ``stmt`` without entering nested loops."""
    stack = [stmt]
    while stack:
        cur = stack.pop()
        yield cur
        if cur is not stmt and isinstance(cur, (While, DoWhile, For)):
            continue
        stack.extend(reversed(list(cur.children())))


def breaks_outside_nested(stmt: Node) -> list[Node]:
    """Break statements in ``stmt`` that would leave an enclosing switch or loop."""
    out = []
    stack = [stmt]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Break):
            out.append(cur)
            continue
        if cur is not stmt and isinstance(cur, (While, DoWhile, For, Switch)):
            continue
        stack.extend(cur.children())
    return out


class FreshNames:
    """Generates identifiers not used anywhere in a program."""

    def __init__(self, ast: Ast):
        self.taken = all_names(ast)

    def take(self, prefix: str) -> str:
        i = 1
        while f"{prefix}{i}" in self.taken:
            i += 1
        name = f"{prefix}{i}"
        self.taken.add(name)
        return name


def as_block(stmt: Stmt) -> tuple[Stmt, ...]:
    return stmt.items if isinstance(stmt, Compound) else (stmt,)
