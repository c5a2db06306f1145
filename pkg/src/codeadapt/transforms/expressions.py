from __future__ import annotations

from ..lang.nodes import Assign, Ast, Binary, Case, Ident, IntLit, Postfix, Unary
from .base import Operator, register
from .util import is_pure, value_discarded

_FLIPPED = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}


@register
class ChangeRelation(Operator):
    """``a < b`` becomes ``b > a``; both sides must be free of side effects."""

    id = 8
    name = "changeRelation"
    description = "Mirror relational comparisons, a < b to b > a"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes)
                if isinstance(n, Binary) and n.op in _FLIPPED
                and is_pure(n.left) and is_pure(n.right)]

    def rewrite_site(self, node: Binary, nid: int):
        return Binary(_FLIPPED[node.op], node.right, node.left)


@register
class ChangeUnary(Operator):
    """``i++`` becomes ``i = i + 1`` where the expression's value is unused."""

    id = 9
    name = "changeUnary"
    description = "Expand i++ and i-- statements into assignments"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes)
                if (isinstance(n, Postfix) or (isinstance(n, Unary) and n.op in ("++", "--")))
                and value_discarded(ast, nid)]

    def rewrite_site(self, node, nid: int):
        name = node.operand.name
        op = "+" if node.op == "++" else "-"
        return Assign("=", Ident(name), Binary(op, Ident(name), IntLit("1")))


@register
class ChangeIncrement(Operator):
    id = 10
    name = "changeIncrement"
    description = "Expand compound assignments, i += 1 to i = i + 1"

    def sites(self, ast: Ast) -> list[int]:
        return [nid for nid, n in enumerate(ast.nodes) if isinstance(n, Assign) and n.op != "="]

    def rewrite_site(self, node: Assign, nid: int):
        return Assign("=", node.target, Binary(node.op[:-1], node.target, node.value))


def _is_constant_wrapper(node) -> bool:
    return (isinstance(node, Binary) and node.op == "-"
            and isinstance(node.right, IntLit) and node.right.text == "8"
            and isinstance(node.left, Binary) and node.left.op == "+"
            and isinstance(node.left.left, IntLit)
            and isinstance(node.left.right, IntLit) and node.left.right.text == "8")


@register
class ChangeConstant(Operator):
    """Integer literal ``c`` becomes ``(c + 8) - 8``.

    Literals already inside such a wrapper are skipped so repeated
    application does not grow the program without bound.
    """

    id = 11
    name = "changeConstant"
    description = "Wrap integer literals as c + 8 - 8"

    def sites(self, ast: Ast) -> list[int]:
        out = []
        nodes, parents = ast.nodes, ast.parents
        for nid, n in enumerate(nodes):
            if not isinstance(n, IntLit):
                continue
            pid = parents[nid]
            parent = nodes[pid]
            if isinstance(parent, Case) or _is_constant_wrapper(parent):
                continue
            gid = parents[pid]
            if gid is not None and _is_constant_wrapper(nodes[gid]) and pid == gid + 1:
                continue
            out.append(nid)
        return out

    def rewrite_site(self, node: IntLit, nid: int):
        return Binary("-", Binary("+", node, IntLit("8")), IntLit("8"))
