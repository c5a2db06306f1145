"""Immutable syntax tree for the C subset.

Node ids are pre-order indices over a whole tree. They are recomputed for
every new tree, so a rewrite never has to keep them stable.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional, Union


class Node:
    __slots__ = ()
    _children_: tuple[str, ...] = ()

    def children(self) -> Iterator["Node"]:
        for name in self._children_:
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, tuple):
                yield from value
            else:
                yield value


# -- expressions -----------------------------------------------------------

class Expr(Node):
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Ident(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class IntLit(Expr):
    text: str

    @property
    def value(self) -> int:
        return int_literal_value(self.text)

    @property
    def is_char(self) -> bool:
        return self.text.startswith("'")


@dataclass(frozen=True, slots=True)
class StrLit(Expr):
    # Raw source text including quotes; adjacent literals are kept space-joined.
    text: str


@dataclass(frozen=True, slots=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    _children_ = ("left", "right")


@dataclass(frozen=True, slots=True)
class Unary(Expr):
    op: str
    operand: Expr
    _children_ = ("operand",)


@dataclass(frozen=True, slots=True)
class Postfix(Expr):
    op: str
    operand: Expr
    _children_ = ("operand",)


@dataclass(frozen=True, slots=True)
class Assign(Expr):
    op: str
    target: Expr
    value: Expr
    _children_ = ("target", "value")


@dataclass(frozen=True, slots=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]
    _children_ = ("args",)


@dataclass(frozen=True, slots=True)
class Conditional(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    _children_ = ("cond", "then", "orelse")


# -- declarations and statements ------------------------------------------

class Stmt(Node):
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Declarator(Node):
    name: str
    init: Optional[Expr] = None
    _children_ = ("init",)


@dataclass(frozen=True, slots=True)
class Declaration(Stmt):
    type: str
    declarators: tuple[Declarator, ...]
    _children_ = ("declarators",)


@dataclass(frozen=True, slots=True)
class Param(Node):
    type: str
    name: str


@dataclass(frozen=True, slots=True)
class Compound(Stmt):
    items: tuple[Stmt, ...] = ()
    _children_ = ("items",)


@dataclass(frozen=True, slots=True)
class ExprStmt(Stmt):
    expr: Optional[Expr] = None
    _children_ = ("expr",)


@dataclass(frozen=True, slots=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None
    _children_ = ("cond", "then", "orelse")


@dataclass(frozen=True, slots=True)
class While(Stmt):
    cond: Expr
    body: Stmt
    _children_ = ("cond", "body")


@dataclass(frozen=True, slots=True)
class DoWhile(Stmt):
    body: Stmt
    cond: Expr
    _children_ = ("body", "cond")


@dataclass(frozen=True, slots=True)
class For(Stmt):
    init: Union[Declaration, Expr, None]
    cond: Optional[Expr]
    step: Optional[Expr]
    body: Stmt
    _children_ = ("init", "cond", "step", "body")


@dataclass(frozen=True, slots=True)
class Case(Node):
    # A ``None`` label stands for ``default``.
    labels: tuple[Optional[Expr], ...]
    body: tuple[Stmt, ...]
    _children_ = ("labels", "body")

    def children(self) -> Iterator[Node]:
        for label in self.labels:
            if label is not None:
                yield label
        yield from self.body


@dataclass(frozen=True, slots=True)
class Switch(Stmt):
    expr: Expr
    cases: tuple[Case, ...]
    _children_ = ("expr", "cases")


@dataclass(frozen=True, slots=True)
class Return(Stmt):
    value: Optional[Expr] = None
    _children_ = ("value",)


@dataclass(frozen=True, slots=True)
class Break(Stmt):
    pass


@dataclass(frozen=True, slots=True)
class Continue(Stmt):
    pass


@dataclass(frozen=True, slots=True)
class Comment(Stmt):
    text: str


@dataclass(frozen=True, slots=True)
class Opaque(Stmt):
    """Source outside the subset, kept byte-for-byte."""
    text: str


@dataclass(frozen=True, slots=True)
class FunctionDef(Node):
    ret_type: str
    name: str
    params: tuple[Param, ...]
    body: Compound
    _children_ = ("params", "body")


@dataclass(frozen=True, slots=True)
class TranslationUnit(Node):
    items: tuple[Node, ...] = ()
    _children_ = ("items",)


STATEMENT_LIST_FIELDS = {(Compound, "items"), (Case, "body"), (TranslationUnit, "items")}


def int_literal_value(text: str) -> int:
    if text.startswith("'"):
        body = text[1:-1]
        decoded = decode_escapes(body)
        return ord(decoded[0]) if decoded else 0
    digits = text.rstrip("uUlL")
    if digits[:2] in ("0x", "0X"):
        return int(digits, 16)
    if len(digits) > 1 and digits[0] == "0":
        return int(digits, 8)
    return int(digits)


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'",
            '"': '"', "a": "\a", "b": "\b", "f": "\f", "v": "\v", "?": "?"}


def decode_escapes(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt == "x":
                j = i + 2
                while j < len(body) and body[j] in "0123456789abcdefABCDEF":
                    j += 1
                out.append(chr(int(body[i + 2:j] or "0", 16) & 0xFF))
                i = j
                continue
            if nxt in "01234567" and nxt != "0" or (nxt == "0" and i + 2 < len(body) and body[i + 2] in "01234567"):
                j = i + 1
                while j < len(body) and j < i + 4 and body[j] in "01234567":
                    j += 1
                out.append(chr(int(body[i + 1:j], 8) & 0xFF))
                i = j
                continue
            out.append(_ESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def string_literal_value(text: str) -> str:
    """Decode a (possibly concatenated) string literal's source text."""
    parts = []
    i = 0
    while i < len(text):
        if text[i] == '"':
            j = i + 1
            while text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            parts.append(decode_escapes(text[i + 1:j]))
            i = j + 1
        else:
            i += 1
    return "".join(parts)


class Ast:
    """A tree root plus a lazily built pre-order index.

    ``nodes[i]`` is the node with id ``i``; ``parents[i]`` is its parent's id
    (``None`` for the root) and ``fields[i]`` the parent field holding it.
    """

    __slots__ = ("root", "_nodes", "_parents", "_fields")

    def __init__(self, root: TranslationUnit):
        self.root = root
        self._nodes = None
        self._parents = None
        self._fields = None

    def _index(self) -> None:
        nodes: list[Node] = []
        parents: list[Optional[int]] = []
        fields: list[Optional[str]] = []
        stack: list[tuple[Node, Optional[int], Optional[str]]] = [(self.root, None, None)]
        while stack:
            node, parent, field = stack.pop()
            nid = len(nodes)
            nodes.append(node)
            parents.append(parent)
            fields.append(field)
            pending = []
            for name in node._children_:
                value = getattr(node, name)
                if value is None:
                    continue
                if isinstance(value, tuple):
                    pending.extend((child, nid, name) for child in value if child is not None)
                else:
                    pending.append((value, nid, name))
            stack.extend(reversed(pending))
        self._nodes, self._parents, self._fields = nodes, parents, fields

    @property
    def nodes(self) -> list[Node]:
        if self._nodes is None:
            self._index()
        return self._nodes

    @property
    def parents(self) -> list[Optional[int]]:
        if self._parents is None:
            self._index()
        return self._parents

    @property
    def fields(self) -> list[Optional[str]]:
        if self._fields is None:
            self._index()
        return self._fields

    def parent(self, nid: int) -> Optional[Node]:
        p = self.parents[nid]
        return None if p is None else self.nodes[p]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ast) and self.root == other.root

    def __hash__(self) -> int:
        return hash(self.root)

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return f"Ast({len(self)} nodes)"


Rewrite = Callable[[Node, int], Union[Node, list]]


def rewrite(root: TranslationUnit, targets: dict[int, Rewrite]) -> TranslationUnit:
    """Rebuild ``root`` bottom-up, replacing node ``i`` with ``targets[i](node, i)``.

    The callback receives the node with its children already rewritten. A
    callback on a statement may return a list, which is spliced into the
    enclosing statement list or wrapped in a block elsewhere.
    """
    if not targets:
        return root
    counter = 0

    def visit(node: Node) -> Union[Node, list]:
        nonlocal counter
        nid = counter
        counter += 1
        changes = {}
        for name in node._children_:
            value = getattr(node, name)
            if value is None:
                continue
            if isinstance(value, tuple):
                out = []
                changed = False
                for child in value:
                    if child is None:
                        out.append(None)
                        continue
                    new = visit(child)
                    if isinstance(new, list):
                        out.extend(new)
                        changed = True
                    else:
                        out.append(new)
                        changed = changed or new is not child
                if changed:
                    changes[name] = tuple(out)
            else:
                new = visit(value)
                if isinstance(new, list):
                    new = as_statement(new)
                if new is not value:
                    changes[name] = new
        if changes:
            node = replace(node, **changes)
        fn = targets.get(nid)
        return fn(node, nid) if fn is not None else node

    result = visit(root)
    assert isinstance(result, TranslationUnit)
    return result


def as_statement(stmts: list) -> Stmt:
    if len(stmts) == 1:
        return stmts[0]
    if not stmts:
        return ExprStmt(None)
    return Compound(tuple(stmts))


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal matching node-id order."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(list(cur.children())))
