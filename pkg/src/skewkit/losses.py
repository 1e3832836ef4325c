"""Cross-entropy, label-distribution-aware margin (LDAM) loss and the
deferred re-weighting (DRW) class-weight schedule.

Per-sample functions work on numpy vectors in float64 and come with closed-form
gradients; ``batch_loss`` is the torch path used for training.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .data import ClassHistogram
from .sampling import (
    _check_present,
    _counts,
    effective_number_class_weights,
    inverse_frequency_class_weights,
)


@dataclass
class LdamConfig:
    max_margin: float = 0.5
    scale_s: float = 30.0
    # None disables deferred re-weighting entirely
    drw_start_epoch: Optional[int] = 20
    drw_beta: float = 0.9999
    drw_reweight: str = "effective_number"

    def __post_init__(self):
        if self.max_margin <= 0:
            raise ValueError("max_margin must be > 0")
        if self.scale_s <= 0:
            raise ValueError("scale_s must be > 0")
        if self.drw_start_epoch is not None and self.drw_start_epoch < 0:
            raise ValueError("drw_start_epoch must be >= 0")
        if self.drw_reweight not in ("effective_number", "inverse_frequency"):
            raise ValueError(f"unknown drw_reweight {self.drw_reweight!r}")


def _log_softmax(z: np.ndarray) -> np.ndarray:
    # log1p over the non-max terms keeps full relative precision for confident logits
    i = int(np.argmax(z))
    e = np.exp(z - z[i])
    e[i] = 0.0
    return (z - z[i]) - np.log1p(e.sum())


def _check_label(logits: np.ndarray, label: int) -> None:
    if not 0 <= label < logits.shape[-1]:
        raise ValueError(f"label {label} out of range for {logits.shape[-1]} classes")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")


def _weight(class_weights, label: int) -> float:
    return 1.0 if class_weights is None else float(np.asarray(class_weights)[label])


def cross_entropy(logits: Sequence[float], label: int, class_weights: Optional[Sequence[float]] = None) -> float:
    z = np.asarray(logits, dtype=np.float64)
    _check_label(z, label)
    return -_weight(class_weights, label) * float(_log_softmax(z)[label])


def ldam_margins(hist: ClassHistogram | Sequence[int], config: Optional[LdamConfig] = None) -> np.ndarray:
    """Per-class margins C / n_j**(1/4), C set so the largest margin is ``max_margin``."""
    config = config or LdamConfig()
    counts = _counts(hist)
    _check_present(counts)
    m = counts ** -0.25
    return m * (config.max_margin / m.max())


def _ldam_logits(z: np.ndarray, label: int, margins, s: float) -> np.ndarray:
    zm = z.copy()
    zm[label] -= float(np.asarray(margins)[label])
    return s * zm


def ldam_loss(
    logits: Sequence[float],
    label: int,
    margins: Sequence[float],
    s: float = 30.0,
    class_weights: Optional[Sequence[float]] = None,
) -> float:
    z = np.asarray(logits, dtype=np.float64)
    _check_label(z, label)
    if len(margins) != z.size:
        raise ValueError(f"{len(margins)} margins for {z.size} classes")
    return -_weight(class_weights, label) * float(_log_softmax(_ldam_logits(z, label, margins, s))[label])


def ldam_loss_grad(
    logits: Sequence[float],
    label: int,
    margins: Sequence[float],
    s: float = 30.0,
    class_weights: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """d ldam_loss / d logits = w_y * s * (softmax(s * z_margined) - onehot(y))."""
    z = np.asarray(logits, dtype=np.float64)
    _check_label(z, label)
    p = np.exp(_log_softmax(_ldam_logits(z, label, margins, s)))
    # p_y - 1 cancels when p_y ~ 1; the rows sum to one so use the exact complement
    p[label] = 0.0
    p[label] = -p.sum()
    return _weight(class_weights, label) * s * p


def drw_class_weights(epoch: int, config: LdamConfig, hist: ClassHistogram | Sequence[int]) -> np.ndarray:
    """Uniform weights before ``drw_start_epoch``, class-balanced weights from then on."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    K = _counts(hist).size
    if config.drw_start_epoch is None or epoch < config.drw_start_epoch:
        return np.ones(K)
    if config.drw_reweight == "inverse_frequency":
        w = inverse_frequency_class_weights(hist)
        return w * (K / w.sum())
    return effective_number_class_weights(hist, config.drw_beta)


def drw_active(epoch: int, config: LdamConfig) -> bool:
    return config.drw_start_epoch is not None and epoch >= config.drw_start_epoch


@dataclass
class LossSpec:
    """What ``batch_loss`` computes: ``kind`` is ``cross_entropy`` or ``ldam``.

    ``scale_s`` multiplies the (margined) logits for either kind.
    """

    kind: str = "cross_entropy"
    margins: Optional[np.ndarray] = None
    scale_s: float = 1.0
    class_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("cross_entropy", "ldam"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if self.kind == "ldam" and self.margins is None:
            raise ValueError("ldam loss needs margins")


def batch_loss(logits: torch.Tensor, labels: torch.Tensor, spec: LossSpec) -> torch.Tensor:
    """Mean per-sample loss; with class weights, sum(w_y * l) / sum(w_y)."""
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise ValueError(f"logits {tuple(logits.shape)} do not match {labels.shape[0]} labels")
    if logits.shape[0] == 0:
        raise ValueError("empty batch")
    labels = labels.long()
    if spec.kind == "ldam":
        margins = torch.as_tensor(spec.margins, dtype=logits.dtype, device=logits.device)
        shift = torch.zeros_like(logits).scatter_(1, labels[:, None], margins[labels][:, None])
        logits = logits - shift
    if spec.scale_s != 1.0:
        logits = spec.scale_s * logits
    weight = None
    if spec.class_weights is not None:
        weight = torch.as_tensor(spec.class_weights, dtype=logits.dtype, device=logits.device)
    return F.cross_entropy(logits, labels, weight=weight)
