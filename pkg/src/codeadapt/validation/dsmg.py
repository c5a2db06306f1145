"""Dropout-based sub-model generation and input validation.

Each sub-model reads one hidden layer of the frozen main model through a
fixed dropout mask and maps it to class probabilities with a freshly trained
softmax head. How strongly the sub-models back the main model's label
decides whether an input is in scope.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import ConfigError, FormatError
from ..model.base import cross_entropy, softmax
from ..model.features import labels_of
from ..model.mlp import TrainConfig, sgd_epoch
from .scores import WEIGHT_SCHEMES, final_scores, layer_weight, validity_scores

BUNDLE_VERSION = 1
IN_SCOPE, OUT_OF_SCOPE = "in-scope", "out-of-scope"
DEFAULT_HEAD_CONFIG = TrainConfig(epochs=20)


def default_threshold(num_classes: int) -> float:
    return 0.3 if num_classes == 2 else 0.2


@dataclass(frozen=True, eq=False)
class SubModel:
    layer_k: int
    dropout_mask: np.ndarray   # bool, one entry per unit of layer k
    weights: np.ndarray        # (retained units, n)
    bias: np.ndarray
    sample_index: int = 0

    def logits(self, H: np.ndarray) -> np.ndarray:
        return H[:, self.dropout_mask] @ self.weights + self.bias

    def predict(self, H: np.ndarray) -> np.ndarray:
        return softmax(self.logits(H))

    def to_dict(self) -> dict:
        return {"layer_k": self.layer_k, "sample_index": self.sample_index,
                "dropout_mask": [int(v) for v in self.dropout_mask],
                "weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SubModel":
        return cls(d["layer_k"], np.array(d["dropout_mask"], dtype=bool),
                   np.array(d["weights"], dtype=float), np.array(d["bias"], dtype=float),
                   d["sample_index"])


@dataclass(eq=False)
class SubModelBundle:
    submodels: list[SubModel]
    weight_scheme: str = "linear"
    num_layers: int = 4
    dropout_rate: float = 0.1
    seed: int = 0
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ConfigError(f"unknown weight scheme {self.weight_scheme!r}", "weight_scheme")
        self.weights = np.array([layer_weight(self.weight_scheme, s.layer_k, self.num_layers)
                                 for s in self.submodels])

    def with_scheme(self, scheme: str) -> "SubModelBundle":
        return SubModelBundle(self.submodels, scheme, self.num_layers, self.dropout_rate, self.seed)

    @property
    def layers(self) -> list[int]:
        return sorted({s.layer_k for s in self.submodels})

    def to_dict(self) -> dict:
        return {"version": BUNDLE_VERSION, "weight_scheme": self.weight_scheme,
                "num_layers": self.num_layers, "dropout_rate": self.dropout_rate,
                "seed": self.seed, "submodels": [s.to_dict() for s in self.submodels]}

    @classmethod
    def from_dict(cls, d: dict) -> "SubModelBundle":
        try:
            if d["version"] != BUNDLE_VERSION:
                raise FormatError(f"unsupported bundle version {d['version']}")
            return cls([SubModel.from_dict(s) for s in d["submodels"]], d["weight_scheme"],
                       d["num_layers"], d["dropout_rate"], d["seed"])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad bundle checkpoint: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SubModelBundle":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_head(H: np.ndarray, y: np.ndarray, num_classes: int, cfg: TrainConfig,
               rng: np.random.Generator, standardize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Softmax regression by mini-batch SGD, starting from zero weights.

    With ``standardize`` the inputs are centred and scaled for training and
    the transform is folded back into the returned weights.
    """
    if standardize:
        mu = H.mean(axis=0)
        sd = np.maximum(H.std(axis=0), 1e-3)
        W, b = train_head((H - mu) / sd, y, num_classes, cfg, rng, standardize=False)
        # fold the standardization back into the dense layer
        return W / sd[:, None], b - (mu / sd) @ W
    W = np.zeros((H.shape[1], num_classes))
    b = np.zeros(num_classes)

    def grad_fn(idx):
        delta = softmax(H[idx] @ W + b)
        delta[np.arange(len(idx)), y[idx]] -= 1.0
        delta /= len(idx)
        return H[idx].T @ delta, delta.sum(axis=0)

    for _ in range(cfg.epochs):
        sgd_epoch([W, b], grad_fn, len(y), cfg.batch_size, cfg.learning_rate, rng)
    return W, b


def draw_mask(width: int, dropout_rate: float, rng: np.random.Generator) -> np.ndarray:
    mask = rng.random(width) >= dropout_rate
    if not mask.any():
        mask[rng.integers(width)] = True
    return mask


def build_submodels(model, train_corpus: Sequence, layers: Optional[Iterable[int]] = None,
                    samples_per_layer: int = 3, dropout_rate: float = 0.1,
                    cfg: TrainConfig = DEFAULT_HEAD_CONFIG, weight_scheme: str = "linear",
                    X: Optional[np.ndarray] = None, standardize: bool = True) -> SubModelBundle:
    """Train one head per (layer, dropout draw) on the frozen model's hidden states."""
    if not 0.0 <= dropout_rate < 1.0:
        raise ConfigError("must be in [0, 1)", "dropout_rate")
    layers = sorted(set(layers)) if layers is not None else list(range(1, model.num_layers + 1))
    if not layers:
        raise ConfigError("no layers selected", "layers")
    for k in layers:
        if not 1 <= k <= model.num_layers:
            raise ConfigError(f"layer {k} outside 1..{model.num_layers}", "layers")
    if samples_per_layer < 1:
        raise ConfigError("must be at least 1", "samples_per_layer")
    if any(u.label is None for u in train_corpus):
        raise ConfigError("every unit needs a label", "corpus")
    y = labels_of(train_corpus)
    if X is None:
        X = model.encode(train_corpus)
    rng = np.random.default_rng([cfg.rng_seed, 2])
    subs = []
    for k in layers:
        H = model.hidden(X, k)
        for s in range(samples_per_layer):
            mask = draw_mask(H.shape[1], dropout_rate, rng)
            W, b = train_head(H[:, mask], y, model.num_classes, cfg, rng, standardize)
            subs.append(SubModel(k, mask, W, b, s))
    return SubModelBundle(subs, weight_scheme, model.num_layers, dropout_rate, cfg.rng_seed)


@dataclass(frozen=True)
class ValidityReport:
    input_id: str
    l_x: int
    per_submodel_scores: tuple[float, ...]
    final_score: float
    threshold: float

    @property
    def verdict(self) -> str:
        return OUT_OF_SCOPE if self.final_score <= self.threshold else IN_SCOPE

    def to_dict(self) -> dict:
        return {"id": self.input_id, "l_x": self.l_x, "score": self.final_score,
                "verdict": self.verdict}


def score_inputs(model, bundle: SubModelBundle, X: np.ndarray):
    """Main-model labels, per-sub-model score matrix and final scores for rows of ``X``."""
    l_x = model.predict(X).argmax(axis=1)
    cache: dict[int, np.ndarray] = {}
    cols = []
    for sub in bundle.submodels:
        if sub.layer_k not in cache:
            cache[sub.layer_k] = model.hidden(X, sub.layer_k)
        cols.append(validity_scores(l_x, sub.predict(cache[sub.layer_k])))
    matrix = np.column_stack(cols) if cols else np.zeros((len(l_x), 0))
    return l_x, matrix, final_scores(matrix, bundle.weights)


def validate(model, bundle: SubModelBundle, units: Sequence, threshold: float,
             X: Optional[np.ndarray] = None) -> list[ValidityReport]:
    if X is None:
        X = model.encode(units)
    l_x, matrix, final = score_inputs(model, bundle, X)
    return [ValidityReport(u.id, int(l_x[i]), tuple(float(v) for v in matrix[i]),
                           float(final[i]), threshold)
            for i, u in enumerate(units)]


def validate_one(model, bundle: SubModelBundle, unit, threshold: float) -> ValidityReport:
    return validate(model, bundle, [unit], threshold)[0]


def head_accuracy(model, sub: SubModel, X: np.ndarray, y: np.ndarray) -> float:
    return float((sub.predict(model.hidden(X, sub.layer_k)).argmax(axis=1) == y).mean())


def head_loss(model, sub: SubModel, X: np.ndarray, y: np.ndarray) -> float:
    return cross_entropy(sub.logits(model.hidden(X, sub.layer_k)), y)
