"""Imbalance-aware evaluation: confusion matrix, per-class recall, balanced
accuracy and intra-class variance (ICV)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np


def confusion_matrix(predictions: Sequence[int], labels: Sequence[int], K: int) -> np.ndarray:
    """K x K counts; entry (i, j) = samples of true class i predicted as j."""
    p = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError(f"{p.size} predictions for {y.size} labels")
    for name, v in (("prediction", p), ("label", y)):
        if v.size and (v.min() < 0 or v.max() >= K):
            raise ValueError(f"{name} out of range for K={K}")
    return np.bincount(y * K + p, minlength=K * K).reshape(K, K)


def per_class_recall(cm: np.ndarray) -> np.ndarray:
    """Diagonal over row sums. Classes with no true samples are NaN (absent)."""
    cm = np.asarray(cm)
    rows = cm.sum(axis=1).astype(np.float64)
    diag = np.diag(cm).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, diag / np.where(rows > 0, rows, 1), np.nan)


def _present(recalls) -> np.ndarray:
    r = np.asarray(recalls, dtype=np.float64)
    r = r[~np.isnan(r)]
    if r.size == 0:
        raise ValueError("no class present")
    return r


def balanced_accuracy(recalls: Sequence[float]) -> float:
    """Macro-averaged recall over the present classes."""
    return float(_present(recalls).mean())


def intra_class_variance(acc: float, recalls: Sequence[float], sqrt: bool = True) -> float:
    """Euclidean distance between ``acc`` and each present class recall.

    ``sqrt=False`` returns the plain sum of squares instead.
    """
    if not 0.0 <= acc <= 1.0:
        raise ValueError(f"accuracy must be in [0, 1], got {acc}")
    ss = float(((acc - _present(recalls)) ** 2).sum())
    return math.sqrt(ss) if sqrt else ss


def accuracy(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(cm) / total)


@dataclass
class MetricsReport:
    validation_accuracy: float
    per_class_recall: List[float]
    balanced_accuracy: float
    icv: float
    confusion: Optional[List[List[int]]] = field(default=None, compare=False)

    @classmethod
    def from_recalls(cls, acc: float, recalls: Sequence[float], confusion=None) -> "MetricsReport":
        r = [float(v) for v in recalls]
        return cls(
            validation_accuracy=float(acc),
            per_class_recall=r,
            balanced_accuracy=balanced_accuracy(r),
            icv=intra_class_variance(acc, r),
            confusion=confusion,
        )

    @classmethod
    def from_confusion(cls, cm: np.ndarray) -> "MetricsReport":
        return cls.from_recalls(accuracy(cm), per_class_recall(cm), np.asarray(cm).tolist())

    @classmethod
    def from_predictions(cls, predictions, labels, K: int) -> "MetricsReport":
        return cls.from_confusion(confusion_matrix(predictions, labels, K))

    def check(self, tol: float = 1e-9) -> None:
        """Raise if the derived fields disagree with the recalls."""
        ba = balanced_accuracy(self.per_class_recall)
        icv = intra_class_variance(self.validation_accuracy, self.per_class_recall)
        if abs(ba - self.balanced_accuracy) > tol or abs(icv - self.icv) > tol:
            raise ValueError(
                f"inconsistent report: bal_acc {self.balanced_accuracy} vs {ba}, icv {self.icv} vs {icv}"
            )

    def to_json(self) -> dict:
        out = {
            "validation_accuracy": self.validation_accuracy,
            "per_class_recall": [None if math.isnan(v) else v for v in self.per_class_recall],
            "balanced_accuracy": self.balanced_accuracy,
            "icv": self.icv,
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "MetricsReport":
        return cls(
            validation_accuracy=obj["validation_accuracy"],
            per_class_recall=[math.nan if v is None else v for v in obj["per_class_recall"]],
            balanced_accuracy=obj["balanced_accuracy"],
            icv=obj["icv"],
            confusion=obj.get("confusion"),
        )
