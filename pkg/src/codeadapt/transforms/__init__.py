"""The fifteen semantic-preserving rewrite operators."""
from . import branches, expressions, loops, naming, statements  # noqa: F401  (registration)
from .base import (
    REGISTRY, Operator, TransformOp, TransformRecord, all_operators, apply,
    apply_sequence, content_hash, enumerate_sites,
)

OPERATOR_NAMES = {op.id: op.name for op in REGISTRY.values()}

__all__ = [
    "REGISTRY", "OPERATOR_NAMES", "Operator", "TransformOp", "TransformRecord",
    "all_operators", "apply", "apply_sequence", "content_hash", "enumerate_sites",
]
