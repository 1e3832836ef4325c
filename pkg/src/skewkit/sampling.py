"""Class re-weighting and re-sampling for imbalanced label distributions."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .data import ClassHistogram, Dataset


def _counts(hist: ClassHistogram | Sequence[int]) -> np.ndarray:
    if isinstance(hist, ClassHistogram):
        return hist.counts.astype(np.float64)
    return ClassHistogram(np.asarray(hist)).counts.astype(np.float64)


def _check_present(counts: np.ndarray) -> None:
    if np.any(counts <= 0):
        absent = [int(j) for j in np.flatnonzero(counts <= 0)]
        raise ValueError(f"class(es) {absent} have no samples")


def inverse_frequency_class_weights(hist: ClassHistogram | Sequence[int]) -> np.ndarray:
    """Weights proportional to 1/n_j, normalized to sum to 1."""
    counts = _counts(hist)
    _check_present(counts)
    w = 1.0 / counts
    return w / w.sum()


def effective_number_class_weights(hist: ClassHistogram | Sequence[int], beta: float = 0.9999) -> np.ndarray:
    """Class-balanced weights (1 - beta) / (1 - beta**n_j), rescaled to mean 1.

    ``beta = 0`` gives uniform weights; ``beta -> 1`` approaches 1/n_j.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    counts = _counts(hist)
    _check_present(counts)
    # -expm1(n log beta) == 1 - beta**n without cancellation near beta = 1
    effective = -np.expm1(counts * np.log(beta)) if beta > 0 else np.ones_like(counts)
    w = (1.0 - beta) / effective
    return w * (counts.size / w.sum())


def sample_weights(labels: Sequence[int], class_weights: Sequence[float]) -> np.ndarray:
    """Per-sample weight = weight of the sample's class."""
    cw = np.asarray(class_weights, dtype=np.float64)
    return cw[np.asarray(labels, dtype=np.int64)]


def weighted_sampler(
    dataset: Dataset | Sequence[int],
    class_weights: Sequence[float],
    n_draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``n_draws`` indices with replacement, P(i) proportional to class_weights[label_i]."""
    if n_draws < 0:
        raise ValueError("n_draws must be >= 0")
    labels = dataset.labels if isinstance(dataset, Dataset) else np.asarray(dataset)
    if n_draws == 0:
        return np.zeros(0, dtype=np.int64)
    w = sample_weights(labels, class_weights)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("class weights must be non-negative with a positive total")
    return rng.choice(labels.size, size=n_draws, replace=True, p=w / w.sum()).astype(np.int64)


def _class_indices(labels: np.ndarray, K: int):
    return [np.flatnonzero(labels == j) for j in range(K)]


def oversample_indices(hist: ClassHistogram | Sequence[int], labels: Sequence[int]) -> np.ndarray:
    """Bring every class up to the majority count by cycling its indices.

    Deterministic: class j's indices are repeated in order until
    ``max_j n_j`` entries exist. Output is grouped by class.
    """
    counts = _counts(hist).astype(np.int64)
    _check_present(counts)
    labels = np.asarray(labels, dtype=np.int64)
    target = int(counts.max())
    out = [np.resize(idx, target) for idx in _class_indices(labels, counts.size)]
    return np.concatenate(out)


def undersample_indices(
    hist: ClassHistogram | Sequence[int],
    labels: Sequence[int],
    rng: np.random.Generator,
) -> np.ndarray:
    """Keep ``min_j n_j`` samples per class, chosen without replacement."""
    counts = _counts(hist).astype(np.int64)
    _check_present(counts)
    labels = np.asarray(labels, dtype=np.int64)
    target = int(counts.min())
    out = []
    for idx in _class_indices(labels, counts.size):
        if idx.size > target:
            idx = np.sort(rng.choice(idx, size=target, replace=False))
        out.append(idx)
    return np.concatenate(out)


def class_weights_for(reweight: str, hist: ClassHistogram, beta: float = 0.9999) -> Optional[np.ndarray]:
    """Resolve a ``reweight`` config value to a weight vector (None for ``none``)."""
    if reweight == "none":
        return None
    if reweight == "inverse_frequency":
        return inverse_frequency_class_weights(hist)
    if reweight == "effective_number":
        return effective_number_class_weights(hist, beta)
    raise ValueError(f"unknown reweight scheme {reweight!r}")


def epoch_indices(
    sampler: str,
    hist: ClassHistogram,
    labels: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Index order for one training epoch under a ``sampler`` config value."""
    n = labels.size
    if sampler == "none":
        return rng.permutation(n)
    if sampler == "inverse_frequency":
        return weighted_sampler(labels, inverse_frequency_class_weights(hist), n, rng)
    if sampler == "oversample":
        idx = oversample_indices(hist, labels)
    elif sampler == "undersample":
        idx = undersample_indices(hist, labels, rng)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    return idx[rng.permutation(idx.size)]
