"""A layered model backed by dumped representations instead of live inference.

Each JSONL row carries ``id``, ``layer_<k>_repr`` lists for k = 1..L and a
``softmax`` list. Inputs are addressed by id: ``encode`` turns units into row
indices and every other method looks the rows up. Programs absent from the
dump cannot be scored, so this model supports validation but not adaptation.
"""
from __future__ import annotations

import json
import re
from typing import Sequence

import numpy as np

from ..errors import DimensionError, FormatError

_LAYER_KEY = re.compile(r"^layer_(\d+)_repr$")
_LOG_FLOOR = 1e-12


class PrecomputedModel:
    def __init__(self, ids: Sequence[str], layers: Sequence[np.ndarray], probs: np.ndarray):
        self.ids = list(ids)
        self.index = {rid: i for i, rid in enumerate(self.ids)}
        self.layers = [np.asarray(h, dtype=float) for h in layers]
        self.probs = np.asarray(probs, dtype=float)
        self.num_layers = len(self.layers)
        self.layer_widths = tuple(h.shape[1] for h in self.layers)
        self.num_classes = self.probs.shape[1]

    @classmethod
    def from_rows(cls, rows: Sequence[dict]) -> "PrecomputedModel":
        if not rows:
            raise FormatError("no rows", 1)
        ids, layers, probs = [], None, []
        num_layers = None
        for lineno, row in enumerate(rows, 1):
            if "id" not in row or "softmax" not in row:
                raise FormatError("missing field(s) id or softmax", lineno)
            ks = sorted(int(m.group(1)) for m in map(_LAYER_KEY.match, row) if m)
            if not ks or ks != list(range(1, len(ks) + 1)):
                raise FormatError("layer_<k>_repr fields must run 1..L", lineno)
            if num_layers is None:
                num_layers = len(ks)
                layers = [[] for _ in ks]
            elif len(ks) != num_layers:
                raise FormatError(f"expected {num_layers} layers, found {len(ks)}", lineno)
            if row["id"] in ids:
                raise FormatError(f"duplicate id {row['id']!r}", lineno)
            ids.append(row["id"])
            for k in ks:
                layers[k - 1].append(row[f"layer_{k}_repr"])
            probs.append(row["softmax"])
        try:
            return cls(ids, [np.array(h, dtype=float) for h in layers], np.array(probs, dtype=float))
        except ValueError as exc:
            raise FormatError(f"ragged rows: {exc}", 1) from exc

    @classmethod
    def load(cls, path) -> "PrecomputedModel":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        rows.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise FormatError(f"malformed JSON: {exc.msg}", lineno) from exc
        return cls.from_rows(rows)

    def encode(self, units: Sequence) -> np.ndarray:
        missing = [u.id for u in units if u.id not in self.index]
        if missing:
            raise DimensionError(f"no precomputed row for id(s) {missing[:5]}")
        return np.array([[self.index[u.id]] for u in units], dtype=float)

    def _rows(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != 1:
            raise DimensionError(f"expected a column of row indices, got shape {X.shape}")
        return X[:, 0].astype(int)

    def hidden(self, X, k: int) -> np.ndarray:
        if not 1 <= k <= self.num_layers:
            raise IndexError(f"layer {k} outside 1..{self.num_layers}")
        return self.layers[k - 1][self._rows(X)]

    def logits(self, X) -> np.ndarray:
        return np.log(np.maximum(self.predict(X), _LOG_FLOOR))

    def predict(self, X) -> np.ndarray:
        return self.probs[self._rows(X)]
