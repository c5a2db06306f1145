"""Reference classifier: a small ReLU multilayer perceptron in numpy."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, DimensionError, FormatError
from .base import cross_entropy, softmax
from .features import DEFAULT_VOCAB_DIM, featurize_many, labels_of

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
DEFAULT_WIDTHS = (64, 64, 64, 64)
SCALE_FLOOR = 1e-2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.05
    batch_size: int = 32
    dropout_rate: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("must be in [0, 1)", "dropout_rate")
        if self.learning_rate <= 0:
            raise ConfigError("must be positive", "learning_rate")
        if self.epochs < 0:
            raise ConfigError("must be non-negative", "epochs")
        if self.batch_size < 1:
            raise ConfigError("must be at least 1", "batch_size")


def sgd_epoch(params: list[np.ndarray], grad_fn, n: int, batch_size: int, lr: float,
              rng: np.random.Generator) -> None:
    """One shuffled pass of plain mini-batch SGD, updating ``params`` in place."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        grads = grad_fn(idx)
        for p, g in zip(params, grads):
            p -= lr * g


class MLP:
    """``vocab_dim`` inputs, ReLU hidden layers, linear head, softmax output.

    Inputs are standardized with a per-feature mean and scale that ``fit``
    freezes from the training data before the first update. Hashed token
    features share a large common component, and plain SGD at the default
    rate barely moves without this step.
    """

    def __init__(self, vocab_dim: int = DEFAULT_VOCAB_DIM, widths: Sequence[int] = DEFAULT_WIDTHS,
                 num_classes: int = 2, seed: int = 0):
        if len(widths) < 2:
            raise ConfigError("need at least two hidden layers", "widths")
        if num_classes < 2:
            raise ConfigError("need at least two classes", "num_classes")
        self.vocab_dim = vocab_dim
        self.layer_widths = tuple(int(w) for w in widths)
        self.num_layers = len(self.layer_widths)
        self.num_classes = num_classes
        self.seed = seed
        rng = np.random.default_rng([seed, 0])
        dims = [vocab_dim, *self.layer_widths, num_classes]
        self.weights = [rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out))
                        for fan_in, fan_out in zip(dims[:-1], dims[1:])]
        self.biases = [np.zeros(fan_out) for fan_out in dims[1:]]
        self.input_mean = np.zeros(vocab_dim)
        self.input_scale = np.ones(vocab_dim)
        self.history: list[float] = []

    # inference

    def encode(self, units: Sequence) -> np.ndarray:
        return featurize_many(units, self.vocab_dim)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.vocab_dim:
            raise DimensionError(f"expected inputs of width {self.vocab_dim}, got shape {X.shape}")
        return X

    def forward(self, X, dropout: float = 0.0, rng: Optional[np.random.Generator] = None):
        """Activations of every layer (input first) and the head logits.

        With ``dropout > 0`` an inverted-dropout mask is drawn for each hidden
        layer; the masks are returned for backpropagation.
        """
        X = self._check(X)
        acts = [X]
        masks = []
        h = (X - self.input_mean) / self.input_scale
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
            if dropout > 0.0:
                m = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
                h = h * m
                masks.append(m)
            acts.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return acts, logits, masks

    def hidden(self, X, k: int) -> np.ndarray:
        if not 1 <= k <= self.num_layers:
            raise IndexError(f"layer {k} outside 1..{self.num_layers}")
        h = (self._check(X) - self.input_mean) / self.input_scale
        for W, b in zip(self.weights[:k], self.biases[:k]):
            h = np.maximum(h @ W + b, 0.0)
        return h

    def head(self, H: np.ndarray) -> np.ndarray:
        return H @ self.weights[-1] + self.biases[-1]

    def logits(self, X, dropout: float = 0.0, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return self.forward(X, dropout, rng)[1]

    def predict(self, X) -> np.ndarray:
        return softmax(self.logits(X))

    # training

    def loss_and_grads(self, X, y, dropout: float = 0.0, rng: Optional[np.random.Generator] = None):
        """Mean cross-entropy and its gradient for every weight and bias."""
        acts, logits, masks = self.forward(X, dropout, rng)
        y = np.asarray(y)
        n = len(y)
        loss = cross_entropy(logits, y)
        delta = softmax(logits)
        delta[np.arange(n), y] -= 1.0
        delta /= n
        gW = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            inp = acts[i] if i else (acts[0] - self.input_mean) / self.input_scale
            gW[i] = inp.T @ delta
            gb[i] = delta.sum(axis=0)
            if i == 0:
                break
            delta = delta @ self.weights[i].T
            if masks:
                delta = delta * masks[i - 1]
            delta = delta * (acts[i] > 0)
        return loss, gW, gb

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def fit(self, X, y, cfg: TrainConfig) -> "MLP":
        X = self._check(X)
        y = np.asarray(y, dtype=np.int64)
        if len(np.unique(y)) < 2:
            raise ConfigError("training data has a single class", "corpus")
        if cfg.epochs > 0:
            self.input_mean = X.mean(axis=0)
            self.input_scale = np.maximum(X.std(axis=0), SCALE_FLOOR)
        rng = np.random.default_rng([cfg.rng_seed, 1])
        self.history = [cross_entropy(self.logits(X), y)]

        def grad_fn(idx):
            _, gW, gb = self.loss_and_grads(X[idx], y[idx], cfg.dropout_rate, rng)
            return [*gW, *gb]

        for epoch in range(cfg.epochs):
            sgd_epoch(self.parameters(), grad_fn, len(y), cfg.batch_size, cfg.learning_rate, rng)
            self.history.append(cross_entropy(self.logits(X), y))
            log.debug("epoch %d loss %.5f", epoch + 1, self.history[-1])
        return self

    # persistence

    def header(self) -> dict:
        return {"version": CHECKPOINT_VERSION, "n": self.num_classes, "L": self.num_layers,
                "widths": list(self.layer_widths), "vocab_dim": self.vocab_dim, "seed": self.seed}

    def to_dict(self) -> dict:
        return {"header": self.header(),
                "weights": [W.tolist() for W in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "input_mean": self.input_mean.tolist(),
                "input_scale": self.input_scale.tolist(),
                "history": list(self.history)}

    @classmethod
    def from_dict(cls, data: dict) -> "MLP":
        try:
            h = data["header"]
            if h["version"] != CHECKPOINT_VERSION:
                raise FormatError(f"unsupported checkpoint version {h['version']}")
            model = cls(h["vocab_dim"], h["widths"], h["n"], h["seed"])
            model.weights = [np.array(W, dtype=float) for W in data["weights"]]
            model.biases = [np.array(b, dtype=float) for b in data["biases"]]
            model.input_mean = np.array(data["input_mean"], dtype=float)
            model.input_scale = np.array(data["input_scale"], dtype=float)
            model.history = list(data.get("history", []))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad model checkpoint: {exc}") from exc
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MLP":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train(corpus: Sequence, cfg: TrainConfig = TrainConfig(), num_classes: Optional[int] = None,
          widths: Sequence[int] = DEFAULT_WIDTHS, vocab_dim: int = DEFAULT_VOCAB_DIM) -> MLP:
    """Fit a fresh reference model on labeled units."""
    if any(u.label is None for u in corpus):
        raise ConfigError("every unit needs a label", "corpus")
    y = labels_of(corpus)
    if len(np.unique(y)) < 2:
        raise ConfigError("training data has a single class", "corpus")
    n = num_classes if num_classes is not None else int(y.max()) + 1
    model = MLP(vocab_dim, widths, n, cfg.rng_seed)
    return model.fit(featurize_many(corpus, vocab_dim), y, cfg)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
