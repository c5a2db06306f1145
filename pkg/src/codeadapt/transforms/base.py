from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Sequence, Union

from ..lang.nodes import Ast, Node, TranslationUnit, rewrite
from ..lang.printer import print_ast


class Operator:
    """One rewrite rule. Subclasses define where it applies and how."""

    id: int = 0
    name: str = ""
    description: str = ""

    def sites(self, ast: Ast) -> list[int]:
        raise NotImplementedError

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        return rewrite(ast.root, {nid: self.rewrite_site for nid in sites})

    def rewrite_site(self, node: Node, nid: int):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<op {self.id} {self.name}>"


REGISTRY: dict[int, Operator] = {}


def register(cls):
    op = cls()
    if op.id in REGISTRY:
        raise ValueError(f"operator id {op.id} registered twice")
    REGISTRY[op.id] = op
    return cls


@dataclass(frozen=True)
class TransformOp:
    id: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.id not in range(1, 16):
            raise ValueError(f"operator id must be in 1..15, got {self.id}")

    @property
    def name(self) -> str:
        return REGISTRY[self.id].name

    @property
    def operator(self) -> Operator:
        return REGISTRY[self.id]

    @classmethod
    def of(cls, spec: Union[int, str, "TransformOp"], rng_seed: int = 0) -> "TransformOp":
        if isinstance(spec, TransformOp):
            return spec
        if isinstance(spec, str):
            if spec.isdigit():
                return cls(int(spec), rng_seed)
            for op in REGISTRY.values():
                if op.name == spec:
                    return cls(op.id, rng_seed)
            if spec == "changeExchangeCod":
                return cls(14, rng_seed)
            raise ValueError(f"unknown operator {spec!r}")
        return cls(int(spec), rng_seed)


@dataclass(frozen=True)
class TransformRecord:
    op: TransformOp
    sites_found: int
    sites_rewritten: int
    before_hash: str
    after_hash: str

    def to_dict(self) -> dict:
        return {"op": self.op.id, "name": self.op.name, "seed": self.op.rng_seed,
                "sites_found": self.sites_found, "sites_rewritten": self.sites_rewritten,
                "before_hash": self.before_hash, "after_hash": self.after_hash}


def content_hash(ast: Ast) -> str:
    return hashlib.sha1(print_ast(ast).encode("utf-8")).hexdigest()[:16]


def enumerate_sites(ast: Ast, op: Union[TransformOp, int, str]) -> list[int]:
    """Node ids where ``op`` applies, in document order."""
    return REGISTRY[TransformOp.of(op).id].sites(ast)


def apply(ast: Ast, op: Union[TransformOp, int, str], *, with_hashes: bool = True) -> tuple[Ast, TransformRecord]:
    """Rewrite every applicable site of ``op`` in ``ast``."""
    op = TransformOp.of(op)
    impl = REGISTRY[op.id]
    sites = impl.sites(ast)
    before = content_hash(ast) if with_hashes else ""
    if not sites:
        return ast, TransformRecord(op, 0, 0, before, before)
    new_root = impl.transform(ast, sites, random.Random(op.rng_seed))
    out = Ast(new_root)
    after = content_hash(out) if with_hashes else ""
    return out, TransformRecord(op, len(sites), len(sites), before, after)


def apply_sequence(ast: Ast, ops: Sequence[Union[TransformOp, int, str]], *,
                   with_hashes: bool = True) -> tuple[Ast, list[TransformRecord]]:
    if not ops:
        raise ValueError("apply_sequence needs at least one operator")
    records = []
    for op in ops:
        ast, rec = apply(ast, op, with_hashes=with_hashes)
        records.append(rec)
    return ast, records


def all_operators(rng_seed: int = 0) -> list[TransformOp]:
    return [TransformOp(i, rng_seed) for i in range(1, 16)]
