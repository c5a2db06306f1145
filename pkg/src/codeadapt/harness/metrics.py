"""Evaluation metrics: AUC, classification scores and correction rates."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ..errors import DegenerateError, LengthMismatch


def compute_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Chance that a positive (label 1) outscores a negative; ties count half.

    Uses the rank-sum form of the Mann-Whitney statistic with midranks for
    ties, which equals the pairwise count exactly.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.size} scores but {y.size} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError("AUC needs both positive and negative samples")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def classification_metrics(pred: Sequence[int], truth: Sequence[int], num_classes: int) -> dict:
    """Accuracy plus precision/recall/F1: positive class for two classes, macro otherwise."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    counts = {}
    per_class = []
    for c in range(num_classes):
        tp = int(((pred == c) & (truth == c)).sum())
        fp = int(((pred == c) & (truth != c)).sum())
        fn = int(((pred != c) & (truth == c)).sum())
        tn = int(((pred != c) & (truth != c)).sum())
        counts[str(c)] = {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_class.append((p, r, f))
    if num_classes == 2:
        precision, recall, f1 = per_class[1]
    else:
        precision, recall, f1 = (float(np.mean([pc[i] for pc in per_class])) for i in range(3))
    accuracy = float((pred == truth).mean()) if len(truth) else None
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1,
            "counts": counts}


def correction_metrics(before: Sequence[int], after: Sequence[int], truth: Sequence[int],
                       flagged: Sequence[bool], train_accuracy: Optional[float] = None) -> dict:
    """CSR, MCR, CVR, MVR and RI. Zero denominators give ``None``."""
    before = np.asarray(before)
    after = np.asarray(after)
    truth = np.asarray(truth)
    flagged = np.asarray(flagged, dtype=bool)
    if not (len(before) == len(after) == len(truth) == len(flagged)):
        raise LengthMismatch("before, after, truth and flagged must align")
    wrong_before = before != truth
    right_before = ~wrong_before
    right_after = after == truth
    corrected = int((flagged & wrong_before & right_after).sum())
    miscorrected = int((right_before & ~right_after).sum())
    flagged_wrong = int((flagged & wrong_before).sum())
    flagged_right = int((flagged & right_before).sum())
    n_wrong = int(wrong_before.sum())
    n_right = int(right_before.sum())
    n = len(truth)
    acc_before = n_right / n if n else None
    acc_after = int(right_after.sum()) / n if n else None
    ri = None
    if train_accuracy is not None and acc_before is not None and train_accuracy != acc_before:
        ri = (acc_after - acc_before) / (train_accuracy - acc_before)
    return {
        "csr": _ratio(corrected, flagged_wrong),
        "mcr": _ratio(miscorrected, n_right),
        "cvr": _ratio(flagged_wrong, n_wrong),
        "mvr": _ratio(flagged_right, n_right),
        "ri": ri,
        "tallies": {"corrected": corrected, "miscorrected": miscorrected,
                    "flagged_wrong": flagged_wrong, "flagged_right": flagged_right,
                    "wrong_before": n_wrong, "right_before": n_right, "total": n},
    }


def measure_tps(transformations: Sequence[int], elapsed: Sequence[float]) -> Optional[float]:
    """Transformations applied per second of adaptation time; ``None`` if nothing ran."""
    total_t = float(sum(elapsed))
    total_n = int(sum(transformations))
    if not transformations or total_t <= 0.0:
        return None
    return total_n / total_t


@dataclass
class MetricsReport:
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    accuracy_after: Optional[float] = None
    precision_after: Optional[float] = None
    recall_after: Optional[float] = None
    f1_after: Optional[float] = None
    ri: Optional[float] = None
    csr: Optional[float] = None
    mcr: Optional[float] = None
    cvr: Optional[float] = None
    mvr: Optional[float] = None
    auc: Optional[float] = None
    tps: Optional[float] = None
    counts: dict = field(default_factory=dict)

    def to_dict(self, with_timing: bool = True) -> dict:
        d = asdict(self)
        if not with_timing:
            d.pop("tps")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**d)
