"""Recursive-descent parser for the C subset.

Constructs outside the subset (pointers, arrays, structs, casts, labels,
goto, ...) do not abort parsing: the smallest enclosing statement or
top-level item is kept verbatim as an :class:`Opaque` node. A
:class:`ParseError` is raised only when no statement boundary can be found,
e.g. unbalanced brackets or a truncated file, or for any unsupported
construct when ``strict=True``.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .nodes import (
    Assign, Ast, Binary, Break, Call, Case, Comment, Compound, Conditional,
    Continue, Declaration, Declarator, DoWhile, Expr, ExprStmt, For,
    FunctionDef, Ident, If, IntLit, Opaque, Param, Postfix, Return, StrLit,
    Stmt, Switch, TranslationUnit, Unary, While,
)
from .tokens import Token, tokenize

TYPE_KEYWORDS = frozenset({"int", "long", "short", "char", "unsigned", "signed", "_Bool"})
QUALIFIERS = frozenset({"const", "static", "register", "volatile"})
TYPEDEF_NAMES = frozenset({
    "size_t", "ssize_t", "int8_t", "int16_t", "int32_t", "int64_t",
    "uint8_t", "uint16_t", "uint32_t", "uint64_t", "bool",
})

BINARY_PRECEDENCE = {
    "||": 4, "&&": 5, "|": 6, "^": 7, "&": 8,
    "==": 9, "!=": 9, "<": 10, ">": 10, "<=": 10, ">=": 10,
    "<<": 11, ">>": 11, "+": 12, "-": 12, "*": 13, "/": 13, "%": 13,
}
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "^=", "|="})
PREFIX_OPS = frozenset({"++", "--", "+", "-", "!", "~"})


class ParseError(SyntaxError):
    def __init__(self, message: str, index: int, expected: Sequence[str] = ()):
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at token {index}{detail}")
        self.index = index
        self.expected = tuple(expected)


class Unsupported(Exception):
    """Raised internally for well-bracketed input outside the subset."""


_CLOSERS = {"(": ")", "[": "]", "{": "}"}


class Parser:
    def __init__(self, tokens: Sequence[Token], strict: bool = False):
        self.toks = list(tokens)
        self.pos = 0
        self.strict = strict

    # -- cursor helpers ---------------------------------------------------

    def _skip(self, i: int) -> int:
        toks = self.toks
        while i < len(toks) and toks[i].kind == "comment":
            i += 1
        return i

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self._skip(self.pos)
        for _ in range(ahead):
            i = self._skip(i + 1)
        return self.toks[i] if i < len(self.toks) else None

    def at(self, lexeme: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.lexeme == lexeme and tok.kind in ("operator", "punctuation", "keyword")

    def next(self) -> Token:
        self.pos = self._skip(self.pos)
        if self.pos >= len(self.toks):
            raise ParseError("unexpected end of input", self.pos)
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, lexeme: str) -> Token:
        tok = self.peek()
        if tok is None or tok.lexeme != lexeme or tok.kind in ("identifier", "string-literal", "comment"):
            if tok is None:
                raise ParseError("unexpected end of input", self.pos, [lexeme])
            raise Unsupported(f"expected {lexeme!r}, got {tok.lexeme!r}")
        return self.next()

    def raw_text(self, start: int, end: int) -> str:
        toks = self.toks[start:end]
        if not toks:
            return ""
        return toks[0].lexeme + "".join(t.leading + t.lexeme for t in toks[1:])

    # -- extents used for recovery ---------------------------------------

    def _match_close(self, i: int) -> int:
        """Index just past the bracket that closes ``toks[i]``."""
        stack = []
        toks = self.toks
        while i < len(toks):
            tok = toks[i]
            if tok.kind == "punctuation":
                if tok.lexeme in _CLOSERS:
                    stack.append(_CLOSERS[tok.lexeme])
                elif tok.lexeme in (")", "]", "}"):
                    if not stack or stack.pop() != tok.lexeme:
                        raise ParseError(f"unbalanced {tok.lexeme!r}", i, [stack[-1]] if stack else [])
                    if not stack:
                        return i + 1
            i += 1
        raise ParseError("unexpected end of input", i, [stack[-1]] if stack else [])

    def _scan_to_semicolon(self, i: int) -> int:
        toks = self.toks
        while i < len(toks):
            tok = toks[i]
            if tok.kind == "punctuation":
                if tok.lexeme in _CLOSERS:
                    i = self._match_close(i)
                    continue
                if tok.lexeme == ";":
                    return i + 1
                if tok.lexeme in (")", "]", "}"):
                    raise ParseError(f"unexpected {tok.lexeme!r}", i, [";"])
            i += 1
        raise ParseError("unexpected end of input", i, [";"])

    def _statement_extent(self, i: int) -> int:
        i = self._skip(i)
        toks = self.toks
        if i >= len(toks):
            raise ParseError("unexpected end of input", i, ["statement"])
        tok = toks[i]
        lex = tok.lexeme
        if tok.kind == "directive":
            return i + 1
        if tok.kind == "punctuation" and lex == "{":
            return self._match_close(i)
        if tok.kind == "keyword":
            if lex in ("if", "while", "for", "switch"):
                j = self._skip(i + 1)
                if j < len(toks) and toks[j].lexeme == "(":
                    j = self._match_close(j)
                    end = self._statement_extent(j)
                    if lex == "if":
                        k = self._skip(end)
                        if k < len(toks) and toks[k].kind == "keyword" and toks[k].lexeme == "else":
                            end = self._statement_extent(k + 1)
                    return end
            if lex == "do":
                j = self._statement_extent(i + 1)
                return self._scan_to_semicolon(j)
            if lex == "else":
                return self._statement_extent(i + 1)
        if tok.kind == "identifier":
            j = self._skip(i + 1)
            if j < len(toks) and toks[j].lexeme == ":" and toks[j].kind == "operator":
                # label: statement
                return self._statement_extent(j + 1)
        return self._scan_to_semicolon(i)

    def _top_level_extent(self, i: int) -> int:
        toks = self.toks
        if toks[i].kind == "directive":
            return i + 1
        while i < len(toks):
            tok = toks[i]
            if tok.kind == "punctuation":
                if tok.lexeme == "{":
                    i = self._match_close(i)
                    j = self._skip(i)
                    if j < len(toks) and toks[j].lexeme == ";":
                        continue
                    return i
                if tok.lexeme in ("(", "["):
                    i = self._match_close(i)
                    continue
                if tok.lexeme == ";":
                    return i + 1
                if tok.lexeme in (")", "]", "}"):
                    raise ParseError(f"unexpected {tok.lexeme!r}", i)
            i += 1
        raise ParseError("unexpected end of input", i, [";", "{"])

    def _opaque(self, start: int, end: int) -> Opaque:
        self.pos = end
        return Opaque(self.raw_text(start, end))

    # -- top level ----------------------------------------------------------

    def parse_unit(self) -> TranslationUnit:
        items = []
        toks = self.toks
        while self.pos < len(toks):
            tok = toks[self.pos]
            if tok.kind == "comment":
                items.append(Comment(tok.lexeme))
                self.pos += 1
                continue
            start = self.pos
            try:
                items.append(self.parse_external())
            except Unsupported as exc:
                if self.strict:
                    raise ParseError(str(exc), self.pos) from None
                items.append(self._opaque(start, self._top_level_extent(start)))
        return TranslationUnit(tuple(items))

    def parse_external(self):
        tok = self.peek()
        if tok.kind == "directive":
            raise Unsupported("preprocessor directive")
        type_name = self.parse_type()
        name_tok = self.next()
        if name_tok.kind != "identifier":
            raise Unsupported("expected identifier")
        if self.at("("):
            self.next()
            params = self.parse_params()
            self.expect(")")
            if not self.at("{"):
                raise Unsupported("function prototype")
            body = self.parse_compound()
            return FunctionDef(type_name, name_tok.lexeme, params, body)
        if type_name == "void":
            raise Unsupported("void variable")
        return self.parse_declarators(type_name, name_tok.lexeme)

    def parse_params(self) -> tuple[Param, ...]:
        if self.at(")"):
            return ()
        if self.at("void") and self.at(")", 1):
            self.next()
            return ()
        params = []
        while True:
            ptype = self.parse_type()
            if ptype == "void":
                raise Unsupported("void parameter")
            tok = self.next()
            if tok.kind != "identifier":
                raise Unsupported("unnamed or complex parameter")
            params.append(Param(ptype, tok.lexeme))
            if self.at(","):
                self.next()
                continue
            return tuple(params)

    def starts_type(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind == "keyword":
            return tok.lexeme in TYPE_KEYWORDS or tok.lexeme in QUALIFIERS or tok.lexeme == "void"
        if tok.kind == "identifier" and tok.lexeme in TYPEDEF_NAMES:
            nxt = self.peek(1)
            return nxt is not None and nxt.kind == "identifier"
        return False

    def parse_type(self) -> str:
        words = []
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind == "keyword" and (tok.lexeme in TYPE_KEYWORDS or tok.lexeme in QUALIFIERS or tok.lexeme == "void"):
                words.append(self.next().lexeme)
                continue
            if not words and tok.kind == "identifier" and tok.lexeme in TYPEDEF_NAMES:
                words.append(self.next().lexeme)
                continue
            break
        if not words or all(w in QUALIFIERS for w in words):
            raise Unsupported("expected a scalar type")
        if "void" in words and len(words) > 1:
            raise Unsupported("qualified void")
        return " ".join(words)

    def parse_declarators(self, type_name: str, first: Optional[str] = None) -> Declaration:
        decls = []
        name = first
        while True:
            if name is None:
                tok = self.next()
                if tok.kind != "identifier":
                    raise Unsupported("expected declarator name")
                name = tok.lexeme
            init = None
            if self.at("="):
                self.next()
                init = self.parse_assignment()
            elif not (self.at(",") or self.at(";")):
                raise Unsupported("complex declarator")
            decls.append(Declarator(name, init))
            name = None
            if self.at(","):
                self.next()
                continue
            self.expect(";")
            return Declaration(type_name, tuple(decls))

    # -- statements -----------------------------------------------------

    def parse_block_items(self, closers: tuple[str, ...]) -> list[Stmt]:
        items: list[Stmt] = []
        toks = self.toks
        while True:
            if self.pos < len(toks) and toks[self.pos].kind == "comment":
                items.append(Comment(toks[self.pos].lexeme))
                self.pos += 1
                continue
            tok = self.peek()
            if tok is None:
                raise ParseError("unexpected end of input", self.pos, ["}"])
            if tok.kind in ("punctuation", "keyword") and tok.lexeme in closers:
                return items
            items.append(self.parse_statement())

    def parse_compound(self) -> Compound:
        self.expect("{")
        items = self.parse_block_items(("}",))
        self.expect("}")
        return Compound(tuple(items))

    def parse_statement(self) -> Stmt:
        start = self._skip(self.pos)
        try:
            return self._statement()
        except Unsupported as exc:
            if self.strict:
                raise ParseError(str(exc), self.pos) from None
            return self._opaque(start, self._statement_extent(start))

    def _statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "directive":
            raise Unsupported("directive inside function")
        lex = tok.lexeme
        if tok.kind == "punctuation":
            if lex == "{":
                return self.parse_compound()
            if lex == ";":
                self.next()
                return ExprStmt(None)
        if tok.kind == "keyword":
            if lex == "if":
                self.next()
                cond = self.parse_paren_expr()
                then = self.parse_statement()
                orelse = None
                if self.at("else"):
                    self.next()
                    orelse = self.parse_statement()
                return If(cond, then, orelse)
            if lex == "while":
                self.next()
                cond = self.parse_paren_expr()
                return While(cond, self.parse_statement())
            if lex == "do":
                self.next()
                body = self.parse_statement()
                self.expect("while")
                cond = self.parse_paren_expr()
                self.expect(";")
                return DoWhile(body, cond)
            if lex == "for":
                return self.parse_for()
            if lex == "switch":
                return self.parse_switch()
            if lex == "return":
                self.next()
                value = None if self.at(";") else self.parse_expression()
                self.expect(";")
                return Return(value)
            if lex == "break":
                self.next()
                self.expect(";")
                return Break()
            if lex == "continue":
                self.next()
                self.expect(";")
                return Continue()
        if self.starts_type():
            type_name = self.parse_type()
            if type_name == "void" or "static" in type_name.split():
                raise Unsupported("unsupported declaration")
            return self.parse_declarators(type_name)
        expr = self.parse_expression()
        self.expect(";")
        return ExprStmt(expr)

    def parse_paren_expr(self) -> Expr:
        self.expect("(")
        expr = self.parse_expression()
        self.expect(")")
        return expr

    def parse_for(self) -> For:
        self.next()
        self.expect("(")
        init = None
        if self.starts_type():
            type_name = self.parse_type()
            if type_name == "void":
                raise Unsupported("void declaration")
            init = self.parse_declarators(type_name)
        else:
            if not self.at(";"):
                init = self.parse_expression()
            self.expect(";")
        cond = None if self.at(";") else self.parse_expression()
        self.expect(";")
        step = None if self.at(")") else self.parse_expression()
        self.expect(")")
        return For(init, cond, step, self.parse_statement())

    def parse_switch(self) -> Switch:
        self.next()
        expr = self.parse_paren_expr()
        self.expect("{")
        cases: list[Case] = []
        while not self.at("}"):
            if self.peek() is None:
                raise ParseError("unexpected end of input", self.pos, ["}"])
            labels = []
            while self.at("case") or self.at("default"):
                if self.next().lexeme == "case":
                    labels.append(self.parse_conditional())
                else:
                    labels.append(None)
                self.expect(":")
            if not labels:
                raise Unsupported("statement before first case label")
            body = self.parse_block_items(("case", "default", "}"))
            cases.append(Case(tuple(labels), tuple(body)))
        self.expect("}")
        return Switch(expr, tuple(cases))

    # -- expressions ----------------------------------------------------

    def parse_expression(self) -> Expr:
        expr = self.parse_assignment()
        while self.at(","):
            self.next()
            expr = Binary(",", expr, self.parse_assignment())
        return expr

    def parse_assignment(self) -> Expr:
        left = self.parse_conditional()
        tok = self.peek()
        if tok is not None and tok.kind == "operator" and tok.lexeme in ASSIGN_OPS:
            if not isinstance(left, Ident):
                raise Unsupported("assignment to non-variable")
            self.next()
            return Assign(tok.lexeme, left, self.parse_assignment())
        return left

    def parse_conditional(self) -> Expr:
        cond = self.parse_binary(4)
        if self.at("?"):
            self.next()
            then = self.parse_expression()
            self.expect(":")
            return Conditional(cond, then, self.parse_conditional())
        return cond

    def parse_binary(self, min_prec: int) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "operator":
                return left
            prec = BINARY_PRECEDENCE.get(tok.lexeme)
            if prec is None or prec < min_prec:
                return left
            self.next()
            right = self.parse_binary(prec + 1)
            left = Binary(tok.lexeme, left, right)

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos, ["expression"])
        if tok.kind == "operator" and tok.lexeme in PREFIX_OPS:
            self.next()
            operand = self.parse_unary()
            if tok.lexeme in ("++", "--") and not isinstance(operand, Ident):
                raise Unsupported("increment of non-variable")
            return Unary(tok.lexeme, operand)
        if tok.kind == "keyword" and tok.lexeme == "sizeof":
            raise Unsupported("sizeof")
        if tok.kind == "operator" and tok.lexeme in ("*", "&"):
            raise Unsupported("pointer operation")
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if tok is None:
                return expr
            if tok.kind == "operator" and tok.lexeme in ("++", "--"):
                if not isinstance(expr, Ident):
                    raise Unsupported("increment of non-variable")
                self.next()
                expr = Postfix(tok.lexeme, expr)
                continue
            if tok.lexeme == "(" and tok.kind == "punctuation":
                if not isinstance(expr, Ident):
                    raise Unsupported("indirect call")
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.parse_assignment())
                    while self.at(","):
                        self.next()
                        args.append(self.parse_assignment())
                self.expect(")")
                expr = Call(expr.name, tuple(args))
                continue
            if tok.lexeme in ("[", ".", "->"):
                raise Unsupported("member or index access")
            return expr

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos, ["expression"])
        if tok.kind == "identifier":
            self.next()
            return Ident(tok.lexeme)
        if tok.kind == "integer-literal":
            self.next()
            return IntLit(tok.lexeme)
        if tok.kind == "string-literal":
            parts = [self.next().lexeme]
            while (nxt := self.peek()) is not None and nxt.kind == "string-literal":
                parts.append(self.next().lexeme)
            return StrLit(" ".join(parts))
        if tok.kind == "punctuation" and tok.lexeme == "(":
            if self._looks_like_cast():
                raise Unsupported("cast")
            self.next()
            expr = self.parse_expression()
            self.expect(")")
            return expr
        raise Unsupported(f"unexpected token {tok.lexeme!r}")

    def _looks_like_cast(self) -> bool:
        tok = self.peek(1)
        if tok is None:
            return False
        if tok.kind == "keyword" and tok.lexeme in (TYPE_KEYWORDS | QUALIFIERS | {"void", "struct", "float", "double"}):
            return True
        return tok.kind == "identifier" and tok.lexeme in TYPEDEF_NAMES


def parse(tokens: Sequence[Token], strict: bool = False) -> Ast:
    parser = Parser(tokens, strict=strict)
    return Ast(parser.parse_unit())


def parse_source(source: str, strict: bool = False) -> Ast:
    return parse(tokenize(source), strict=strict)
