"""The unit of work passed between modules: one program plus its label."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from .lang import Ast, parse_source, print_ast


@dataclass(frozen=True)
class SourceUnit:
    id: str
    ast: Ast
    label: Optional[int] = None
    original_text: Optional[str] = field(default=None, compare=False)

    @classmethod
    def from_code(cls, id: str, code: str, label: Optional[int] = None) -> "SourceUnit":
        return cls(id, parse_source(code), label, code)

    @cached_property
    def text(self) -> str:
        """Canonical printed form; this is what features are computed from."""
        return print_ast(self.ast)

    @property
    def code(self) -> str:
        """The source as it should be written out: original bytes if untouched."""
        return self.original_text if self.original_text is not None else self.text

    def with_ast(self, ast: Ast) -> "SourceUnit":
        if ast == self.ast:
            return self
        return SourceUnit(self.id, ast, self.label)
