"""Canonical pretty printer: single spaces, 4-space indents, minimal parentheses."""
from __future__ import annotations

from typing import Union

from .nodes import (
    Assign, Ast, Binary, Break, Call, Comment, Compound, Conditional,
    Continue, Declaration, DoWhile, Expr, ExprStmt, For, FunctionDef, Ident,
    If, IntLit, Node, Opaque, Postfix, Return, StrLit, Stmt, Switch,
    TranslationUnit, Unary, While,
)
from .parser import BINARY_PRECEDENCE

INDENT = "    "

PREC_COMMA = 1
PREC_ASSIGN = 2
PREC_COND = 3
PREC_UNARY = 14
PREC_POSTFIX = 15
PREC_PRIMARY = 16


def precedence(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return PREC_COMMA if expr.op == "," else BINARY_PRECEDENCE[expr.op]
    if isinstance(expr, Assign):
        return PREC_ASSIGN
    if isinstance(expr, Conditional):
        return PREC_COND
    if isinstance(expr, Unary):
        return PREC_UNARY
    if isinstance(expr, (Postfix, Call)):
        return PREC_POSTFIX
    return PREC_PRIMARY


def print_expr(expr: Expr, min_prec: int = PREC_COMMA) -> str:
    text = _expr(expr)
    if precedence(expr) < min_prec:
        return f"({text})"
    return text


def _expr(e: Expr) -> str:
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, (IntLit, StrLit)):
        return e.text
    if isinstance(e, Binary):
        p = precedence(e)
        left = print_expr(e.left, p)
        right = print_expr(e.right, p + 1)
        if e.op == ",":
            return f"{left}, {right}"
        return f"{left} {e.op} {right}"
    if isinstance(e, Assign):
        return f"{print_expr(e.target, PREC_UNARY)} {e.op} {print_expr(e.value, PREC_ASSIGN)}"
    if isinstance(e, Conditional):
        return (f"{print_expr(e.cond, PREC_COND + 1)} ? {print_expr(e.then, PREC_COMMA)}"
                f" : {print_expr(e.orelse, PREC_COND)}")
    if isinstance(e, Unary):
        operand = print_expr(e.operand, PREC_UNARY)
        # keep "- -x" and "+ ++x" from lexing as a different operator
        sep = " " if operand[:1] in ("+", "-") and operand[:1] == e.op[-1] else ""
        return f"{e.op}{sep}{operand}"
    if isinstance(e, Postfix):
        return f"{print_expr(e.operand, PREC_POSTFIX)}{e.op}"
    if isinstance(e, Call):
        args = ", ".join(print_expr(a, PREC_ASSIGN) for a in e.args)
        return f"{e.name}({args})"
    raise TypeError(f"not an expression: {e!r}")


def _declaration_text(d: Declaration) -> str:
    parts = []
    for decl in d.declarators:
        if decl.init is None:
            parts.append(decl.name)
        else:
            parts.append(f"{decl.name} = {print_expr(decl.init, PREC_ASSIGN)}")
    return f"{d.type} {', '.join(parts)}"


class _Printer:
    def __init__(self):
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(INDENT * depth + text)

    def body(self, stmt: Stmt, depth: int, head: str) -> bool:
        """Print ``head`` followed by ``stmt``; True if it ended with a brace line."""
        if isinstance(stmt, Compound):
            self.emit(depth, head + " {")
            self.items(stmt.items, depth + 1)
            self.emit(depth, "}")
            return True
        self.emit(depth, head)
        self.stmt(stmt, depth + 1)
        return False

    def items(self, stmts, depth: int) -> None:
        for s in stmts:
            self.stmt(s, depth)

    def stmt(self, s: Stmt, depth: int) -> None:
        if isinstance(s, Declaration):
            self.emit(depth, _declaration_text(s) + ";")
        elif isinstance(s, ExprStmt):
            self.emit(depth, ";" if s.expr is None else print_expr(s.expr) + ";")
        elif isinstance(s, Compound):
            self.emit(depth, "{")
            self.items(s.items, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, If):
            self._if(s, depth, "if")
        elif isinstance(s, While):
            self.body(s.body, depth, f"while ({print_expr(s.cond)})")
        elif isinstance(s, DoWhile):
            tail = f"while ({print_expr(s.cond)});"
            if self.body(s.body, depth, "do"):
                self.lines[-1] += " " + tail
            else:
                self.emit(depth, tail)
        elif isinstance(s, For):
            if s.init is None:
                init = ""
            elif isinstance(s.init, Declaration):
                init = _declaration_text(s.init)
            else:
                init = print_expr(s.init)
            cond = "" if s.cond is None else " " + print_expr(s.cond)
            step = "" if s.step is None else " " + print_expr(s.step)
            self.body(s.body, depth, f"for ({init};{cond};{step})")
        elif isinstance(s, Switch):
            self.emit(depth, f"switch ({print_expr(s.expr)}) {{")
            for case in s.cases:
                for label in case.labels:
                    self.emit(depth + 1, "default:" if label is None else f"case {print_expr(label, PREC_COND)}:")
                self.items(case.body, depth + 2)
            self.emit(depth, "}")
        elif isinstance(s, Return):
            self.emit(depth, "return;" if s.value is None else f"return {print_expr(s.value)};")
        elif isinstance(s, Break):
            self.emit(depth, "break;")
        elif isinstance(s, Continue):
            self.emit(depth, "continue;")
        elif isinstance(s, (Comment, Opaque)):
            self.emit(depth, s.text)
        else:
            raise TypeError(f"not a statement: {s!r}")

    def _if(self, s: If, depth: int, keyword: str) -> None:
        head = f"{keyword} ({print_expr(s.cond)})"
        then = s.then
        if s.orelse is not None and _ends_with_open_if(then):
            then = Compound((then,))
        braced = self.body(then, depth, head)
        if s.orelse is None:
            return
        if braced:
            prefix = self.lines.pop()[len(INDENT * depth):] + " "
        else:
            prefix = ""
        if isinstance(s.orelse, If):
            self._if(s.orelse, depth, prefix + "else if")
        else:
            self.body(s.orelse, depth, prefix + "else")

    def function(self, f: FunctionDef) -> None:
        params = ", ".join(f"{p.type} {p.name}" for p in f.params)
        self.emit(0, f"{f.ret_type} {f.name}({params}) {{")
        self.items(f.body.items, 1)
        self.emit(0, "}")


def _ends_with_open_if(s: Stmt) -> bool:
    # an else printed after this statement would bind to the wrong if
    while True:
        if isinstance(s, If):
            if s.orelse is None:
                return True
            s = s.orelse
        elif isinstance(s, (While, For)):
            s = s.body
        else:
            return False


def print_ast(tree: Union[Ast, Node]) -> str:
    root = tree.root if isinstance(tree, Ast) else tree
    p = _Printer()
    if isinstance(root, TranslationUnit):
        for i, item in enumerate(root.items):
            if isinstance(item, FunctionDef):
                if i > 0:
                    p.lines.append("")
                p.function(item)
            else:
                p.stmt(item, 0)
    elif isinstance(root, FunctionDef):
        p.function(root)
    elif isinstance(root, Stmt):
        p.stmt(root, 0)
    else:
        return print_expr(root)
    return "\n".join(p.lines) + "\n" if p.lines else ""
