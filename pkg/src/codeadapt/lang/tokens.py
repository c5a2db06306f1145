"""Full-fidelity lexer for the C subset.

Every token remembers the whitespace that preceded it, and the last token
also carries the trailing whitespace of the file, so the original text can
be rebuilt exactly with :func:`untokenize`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset({
    "auto", "break", "case", "char", "const", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if", "int",
    "long", "register", "return", "short", "signed", "sizeof", "static",
    "struct", "switch", "typedef", "union", "unsigned", "void", "volatile",
    "while", "_Bool", "inline", "restrict",
})

# Longest operators first so the alternation is greedy.
OPERATORS = (
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":", ".",
)
PUNCTUATION = ("(", ")", "{", "}", "[", "]", ";", ",")

KINDS = (
    "keyword", "identifier", "integer-literal", "string-literal",
    "operator", "punctuation", "comment", "directive", "float-literal",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<directive>\#[^\n]*(?:\\\n[^\n]*)*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<char>'(?:[^'\\\n]|\\.)+')
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fFlL]?|\d+[eE][+-]?\d+[fFlL]?)
  | (?P<number>(?:0[xX][0-9a-fA-F]+|\d+)(?:[uU]?[lL]{0,2}|[lL]{1,2}[uU])(?![\w.]))
  | (?P<word>[A-Za-z_]\w*)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in OPERATORS)
    + r""")
  | (?P<punct>[(){}\[\];,])
    """,
    re.VERBOSE | re.DOTALL,
)


class LexError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    span: tuple[int, int]
    leading: str = ""
    trailing: str = ""

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.lexeme!r})"


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, comments included.

    Raises :class:`LexError` carrying the byte offset of the first character
    that starts no valid token.
    """
    tokens: list[Token] = []
    pos = 0
    byte_pos = 0
    pending_ws = ""
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unrecognized character {source[pos]!r}", byte_pos)
        text = m.group()
        nbytes = len(text.encode("utf-8"))
        group = m.lastgroup
        if group == "ws":
            pending_ws += text
        else:
            kind = {
                "comment": "comment",
                "directive": "directive",
                "string": "string-literal",
                "char": "integer-literal",
                "number": "integer-literal",
                "float": "float-literal",
                "op": "operator",
                "punct": "punctuation",
            }.get(group)
            if group == "word":
                kind = "keyword" if text in KEYWORDS else "identifier"
            tokens.append(Token(kind, text, (byte_pos, byte_pos + nbytes), pending_ws))
            pending_ws = ""
        pos = m.end()
        byte_pos += nbytes
    if tokens and pending_ws:
        last = tokens[-1]
        tokens[-1] = Token(last.kind, last.lexeme, last.span, last.leading, pending_ws)
    return tokens


def untokenize(tokens: list[Token]) -> str:
    return "".join(t.leading + t.lexeme + t.trailing for t in tokens)
