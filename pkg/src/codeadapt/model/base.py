"""The layered-classifier contract consumed by validation and adaptation."""
from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class LayeredModel(Protocol):
    num_classes: int
    num_layers: int
    layer_widths: tuple[int, ...]

    def encode(self, units: Sequence) -> np.ndarray:
        """Model inputs for a batch of units, one row per unit."""

    def hidden(self, X: np.ndarray, k: int) -> np.ndarray:
        """Post-activation representation at layer ``k`` (1-based)."""

    def logits(self, X: np.ndarray) -> np.ndarray:
        ...

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Softmax rows."""


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> float:
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())
