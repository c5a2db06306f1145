"""JSONL corpus files: one ``{"id", "code", "label"}`` object per line."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..errors import FormatError
from ..lang import Ast, LexError, Opaque, ParseError, TranslationUnit
from ..units import SourceUnit


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    code: str
    label: Optional[int]

    def to_unit(self) -> SourceUnit:
        """Parse the code; text the parser cannot handle at all becomes one opaque item."""
        try:
            return SourceUnit.from_code(self.id, self.code, self.label)
        except (LexError, ParseError):
            ast = Ast(TranslationUnit((Opaque(self.code),)))
            return SourceUnit(self.id, ast, self.label, self.code)


def parse_records(lines: Iterable[str], num_classes: Optional[int] = None,
                  require_label: bool = True) -> list[CorpusRecord]:
    records, seen = [], set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON: {exc.msg}", lineno) from exc
        if not isinstance(obj, dict):
            raise FormatError("expected a JSON object", lineno)
        fields = ("id", "code", "label") if require_label else ("id", "code")
        missing = [f for f in fields if f not in obj]
        if missing:
            raise FormatError(f"missing field(s) {', '.join(missing)}", lineno)
        rid, code, label = obj["id"], obj["code"], obj.get("label")
        if not isinstance(rid, str) or not isinstance(code, str):
            raise FormatError("id and code must be strings", lineno)
        if label is not None:
            if not isinstance(label, int) or isinstance(label, bool) or label < 0:
                raise FormatError(f"label must be a non-negative integer, got {label!r}", lineno)
            if num_classes is not None and label >= num_classes:
                raise FormatError(f"label {label} out of range for {num_classes} classes", lineno)
        if rid in seen:
            raise FormatError(f"duplicate id {rid!r}", lineno)
        seen.add(rid)
        records.append(CorpusRecord(rid, code, label))
    return records


def load_corpus(path, num_classes: Optional[int] = None, require_label: bool = True) -> list[CorpusRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh, num_classes, require_label)


def load_units(path, num_classes: Optional[int] = None, require_label: bool = True) -> list[SourceUnit]:
    return [r.to_unit() for r in load_corpus(path, num_classes, require_label)]


def dump_jsonl(rows: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise FormatError(f"malformed JSON: {exc.msg}", lineno) from exc
    return out


def save_units(units: Sequence[SourceUnit], path) -> None:
    dump_jsonl(({"id": u.id, "code": u.code, "label": u.label} for u in units), path)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
