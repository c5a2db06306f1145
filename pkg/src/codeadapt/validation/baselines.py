"""Confidence baselines for telling in-scope from out-of-scope inputs.

Every function in :data:`METHODS` returns one score per input, oriented so
that higher means more likely in scope. Uncertainty measures (entropy and
friends) are negated for that reason; the raw, unoriented quantities are
available as separate helpers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import ConfigError
from ..model.base import softmax
from .scores import final_scores, layer_weight, validity_scores

METHODS = ("vanilla", "temp_scale", "least_conf", "margin_conf", "ratio_conf", "entropy",
           "pred_entropy", "mutual_info", "mc_dropout", "deep_ensemble", "hidden_direct")

_EPS = 1e-12


def _top2(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.sort(P, axis=1)
    return s[:, -1], s[:, -2]


def least_confidence(P: np.ndarray) -> np.ndarray:
    return 1.0 - P.max(axis=1)


def margin(P: np.ndarray) -> np.ndarray:
    p1, p2 = _top2(P)
    return p1 - p2


def ratio(P: np.ndarray) -> np.ndarray:
    """Runner-up over top probability; close to 1 means undecided."""
    p1, p2 = _top2(P)
    return p2 / np.maximum(p1, _EPS)


def entropy(P: np.ndarray) -> np.ndarray:
    return -(P * np.log(np.clip(P, _EPS, 1.0))).sum(axis=1)


def nll(logits: np.ndarray, y: np.ndarray, T: float = 1.0) -> float:
    z = logits / T
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


def fit_temperature(logits: np.ndarray, y: np.ndarray) -> float:
    """Temperature minimizing validation NLL, optimized over log T with BFGS."""
    res = minimize(lambda t: nll(logits, y, float(np.exp(t[0]))), x0=np.zeros(1), method="BFGS")
    T = float(np.exp(res.x[0]))
    # BFGS starts at T = 1, but never hand back something worse than it
    return T if nll(logits, y, T) <= nll(logits, y, 1.0) else 1.0


def mc_probs(model, X: np.ndarray, samples: int, rate: float, seed: int) -> np.ndarray:
    """Stacked softmax outputs of ``samples`` dropout forward passes."""
    if not hasattr(model, "forward"):
        raise ConfigError("model does not support dropout sampling", "method")
    rng = np.random.default_rng([seed, 3])
    return np.stack([softmax(model.logits(X, rate, rng)) for _ in range(samples)])


@dataclass
class BaselineContext:
    """Extra inputs some methods need."""

    val_X: Optional[np.ndarray] = None
    val_y: Optional[np.ndarray] = None
    mc_samples: int = 20
    mc_dropout: float = 0.1
    seed: int = 0
    ensemble: Sequence = ()
    hidden_layers: Optional[Sequence[int]] = None
    weight_scheme: str = "linear"
    temperature: Optional[float] = field(default=None, init=False)


def hidden_direct(model, X: np.ndarray, layers: Optional[Sequence[int]] = None,
                  seed: int = 0, weight_scheme: str = "linear") -> np.ndarray:
    """Validity scores from untrained linear maps of the hidden layers.

    Each layer's representation is projected to class logits by a fixed,
    seeded Gaussian matrix; nothing is trained. This isolates how much the
    trained heads contribute.
    """
    layers = list(layers) if layers else list(range(1, model.num_layers + 1))
    l_x = model.predict(X).argmax(axis=1)
    rng = np.random.default_rng([seed, 4])
    cols, weights = [], []
    for k in layers:
        H = model.hidden(X, k)
        W = rng.normal(0.0, 1.0 / np.sqrt(H.shape[1]), (H.shape[1], model.num_classes))
        cols.append(validity_scores(l_x, softmax(H @ W)))
        weights.append(layer_weight(weight_scheme, k, model.num_layers))
    return final_scores(np.column_stack(cols), weights)


def baseline_scores(method: str, model, X: np.ndarray,
                    ctx: Optional[BaselineContext] = None) -> np.ndarray:
    ctx = ctx or BaselineContext()
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}", "method")
    if method == "hidden_direct":
        return hidden_direct(model, X, ctx.hidden_layers, ctx.seed, ctx.weight_scheme)
    if method == "temp_scale":
        if ctx.val_X is None or ctx.val_y is None:
            raise ConfigError("temperature scaling needs a labeled validation corpus", "validation")
        if ctx.temperature is None:
            ctx.temperature = fit_temperature(model.logits(ctx.val_X), ctx.val_y)
        return softmax(model.logits(X) / ctx.temperature).max(axis=1)
    if method in ("mc_dropout", "pred_entropy", "mutual_info"):
        if method == "mc_dropout":
            rng = np.random.default_rng([ctx.seed, 3])
            mean_logits = np.mean([model.logits(X, ctx.mc_dropout, rng)
                                   for _ in range(ctx.mc_samples)], axis=0)
            return softmax(mean_logits).max(axis=1)
        S = mc_probs(model, X, ctx.mc_samples, ctx.mc_dropout, ctx.seed)
        pred = entropy(S.mean(axis=0))
        if method == "pred_entropy":
            return -pred
        expected = np.mean([entropy(s) for s in S], axis=0)
        return expected - pred + 0.0
    if method == "deep_ensemble":
        members = list(ctx.ensemble) or [model]
        return np.mean([m.predict(X) for m in members], axis=0).max(axis=1)

    P = model.predict(X)
    if method == "vanilla":
        return P.max(axis=1)
    if method == "least_conf":
        return -least_confidence(P)
    if method == "margin_conf":
        return margin(P)
    if method == "ratio_conf":
        return -ratio(P)
    return -entropy(P)
