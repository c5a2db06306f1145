"""Per-sub-model validity scores and their layer-weighted aggregate."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import ConfigError, LengthMismatch

WEIGHT_SCHEMES = ("linear", "logarithmic", "exponential")


def validity_score_k(l_x: int, probs: Sequence[float]) -> float:
    """Score one sub-model's softmax against the main model's label ``l_x``.

    When ``l_x`` attains the sub-model's maximum (ties included) the score is
    ``p[l_x]`` plus its lead over the runner-up; otherwise ``p[l_x]`` minus
    its gap to the sub-model's top label. The result lies in [-1, 2].
    """
    p = np.asarray(probs, dtype=float)
    px = p[l_x]
    others = np.delete(p, l_x)
    top_other = others.max()
    if px >= top_other:
        return float(px + (px - top_other))
    return float(px - (top_other - px))


def validity_scores(l_x: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Row-wise :func:`validity_score_k` for label vector ``l_x`` and softmax rows."""
    probs = np.asarray(probs, dtype=float)
    rows = np.arange(len(probs))
    px = probs[rows, l_x]
    rest = probs.copy()
    rest[rows, l_x] = -np.inf
    top_other = rest.max(axis=1)
    # both branches reduce to 2*p[l_x] - top_other
    return 2.0 * px - top_other


def final_score(scores: Sequence[float], weights: Sequence[float]) -> float:
    s = np.asarray(scores, dtype=float)
    w = np.asarray(weights, dtype=float)
    if s.shape != w.shape:
        raise LengthMismatch(f"{s.size} scores but {w.size} weights")
    if s.size == 0:
        raise LengthMismatch("no scores to aggregate")
    return float(np.dot(s, w) / w.sum())


def final_scores(score_matrix: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    """Weighted mean across columns (one column per sub-model)."""
    w = np.asarray(weights, dtype=float)
    score_matrix = np.asarray(score_matrix, dtype=float)
    if score_matrix.shape[1] != w.size:
        raise LengthMismatch(f"{score_matrix.shape[1]} sub-models but {w.size} weights")
    return score_matrix @ w / w.sum()


def layer_weight(scheme: str, k: int, num_layers: int) -> float:
    if scheme == "linear":
        return float(k)
    if scheme == "logarithmic":
        return math.log(k + 1)
    if scheme == "exponential":
        return math.exp(k / num_layers)
    raise ConfigError(f"unknown weight scheme {scheme!r}", "weight_scheme")
