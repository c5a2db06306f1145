"""Hashed bag-of-tokens features."""
from __future__ import annotations

import zlib
from typing import Iterable, Sequence

import numpy as np

from ..lang import tokenize
from ..lang.tokens import LexError

DEFAULT_VOCAB_DIM = 1024


def _bucket(key: str, dim: int) -> int:
    return zlib.crc32(key.encode("utf-8")) % dim


def token_keys(text: str) -> list[str]:
    """One key per token lexeme and one per token kind."""
    try:
        tokens = tokenize(text)
    except LexError:
        # unlexable text still gets a deterministic, if crude, encoding
        return ["raw:" + w for w in text.split()]
    keys = []
    for tok in tokens:
        keys.append("lex:" + tok.lexeme)
        keys.append("kind:" + tok.kind)
    return keys



def featurize_text(text: str, vocab_dim: int = DEFAULT_VOCAB_DIM) -> np.ndarray:
    counts = np.zeros(vocab_dim)
    for key in token_keys(text):
        counts[_bucket(key, vocab_dim)] += 1.0
    norm = np.linalg.norm(counts)
    return counts / norm if norm > 0 else counts


def featurize(unit, vocab_dim: int = DEFAULT_VOCAB_DIM) -> np.ndarray:
    return featurize_text(unit.text, vocab_dim)


def featurize_many(units: Iterable, vocab_dim: int = DEFAULT_VOCAB_DIM) -> np.ndarray:
    rows = [featurize(u, vocab_dim) for u in units]
    if not rows:
        return np.zeros((0, vocab_dim))
    return np.vstack(rows)


def labels_of(units: Sequence) -> np.ndarray:
    return np.array([u.label for u in units], dtype=np.int64)
