"""Triangular cyclical learning rate and stochastic weight averaging."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import torch
from torch import nn


@dataclass
class ClrConfig:
    lower_bound: float = 1e-5
    upper_bound: float = 1e-3
    stepsize: float = 2
    form: str = "triangular"
    # "epoch": t and stepsize in epochs; "iteration": both in optimizer steps
    step_unit: str = "epoch"

    def __post_init__(self):
        if not 0 < self.lower_bound < self.upper_bound:
            raise ValueError("need 0 < lower_bound < upper_bound")
        if self.stepsize < 1:
            raise ValueError("stepsize must be >= 1")
        if self.form != "triangular":
            raise ValueError(f"unsupported CLR form {self.form!r}")
        if self.step_unit not in ("epoch", "iteration"):
            raise ValueError(f"unknown step_unit {self.step_unit!r}")

    def scaled(self, factor: float) -> "ClrConfig":
        return ClrConfig(self.lower_bound * factor, self.upper_bound * factor, self.stepsize, self.form, self.step_unit)


def clr_value(t: float, config: ClrConfig) -> float:
    """Triangular wave with period 2 * stepsize, trough ``lower_bound`` at t = 0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    period = 2 * config.stepsize
    # fmod is exact, so periodic shifts that are representable give identical values
    t = math.fmod(t, period)
    cycle = math.floor(1 + t / period)
    x = abs(t / config.stepsize - 2 * cycle + 1)
    return config.lower_bound + (config.upper_bound - config.lower_bound) * max(0.0, 1.0 - x)


@dataclass
class SwaState:
    averaged: Optional[np.ndarray] = None
    n_snapshots: int = 0

    def __post_init__(self):
        if (self.averaged is None) != (self.n_snapshots == 0):
            raise ValueError("an SWA state has weights iff it has snapshots")


def swa_update(state: SwaState, weights) -> SwaState:
    """Fold one snapshot into the running mean; returns a new state."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if state.n_snapshots == 0:
        return SwaState(w.copy(), 1)
    if w.shape != state.averaged.shape:
        raise ValueError(f"snapshot has {w.size} weights, state has {state.averaged.size}")
    n = state.n_snapshots
    return SwaState(state.averaged + (w - state.averaged) / (n + 1), n + 1)


def swa_capture_points(epoch: int, swa_start: int, cycle_len: int) -> bool:
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if cycle_len < 1:
        raise ValueError("cycle_len must be >= 1")
    return epoch >= swa_start and (epoch - swa_start) % cycle_len == 0


def _bn_layers(model: nn.Module):
    return [
        m for m in model.modules()
        if isinstance(m, nn.modules.batchnorm._BatchNorm) and m.track_running_stats
    ]


class _Moments:
    """Per-channel running mean / M2 merged batch by batch (Chan et al.)."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def update(self, x: torch.Tensor) -> None:
        x = x.detach().to(torch.float64)
        dims = [0] + list(range(2, x.ndim))
        nb = x.numel() // x.shape[1]
        mb = x.mean(dim=dims)
        m2b = ((x - mb.view(1, -1, *[1] * (x.ndim - 2))) ** 2).sum(dim=dims)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta ** 2 * (self.n * nb / n)
        self.n = n


def _batches(data, batch_size: int) -> Iterable[torch.Tensor]:
    from .data import Dataset

    if isinstance(data, Dataset):
        for i in range(0, len(data), batch_size):
            yield torch.from_numpy(np.array(data.pixels[i : i + batch_size]))
    elif isinstance(data, torch.Tensor):
        for i in range(0, data.shape[0], batch_size):
            yield data[i : i + batch_size]
    else:
        for batch in data:
            yield batch[0] if isinstance(batch, (tuple, list)) else batch


@torch.no_grad()
def recalibrate_running_stats(model: nn.Module, data, batch_size: int = 256) -> nn.Module:
    """Recompute batch-norm running statistics under the current weights.

    One pass over ``data`` with only the normalization layers in training
    mode. Each layer's running mean/var is set to the exact pooled moments of
    its inputs over the whole pass (unbiased variance); other parameters are
    not touched.
    """
    layers = _bn_layers(model)
    if not layers:
        return model
    was_training = {m: m.training for m in model.modules()}
    moments = {m: _Moments() for m in layers}
    hooks = [m.register_forward_pre_hook(lambda mod, inp: moments[mod].update(inp[0])) for m in layers]
    try:
        model.eval()
        for m in layers:
            m.train()
        for x in _batches(data, batch_size):
            model(x)
    finally:
        for h in hooks:
            h.remove()
        for m, flag in was_training.items():
            m.train(flag)
    for m in layers:
        mom = moments[m]
        if mom.n == 0:
            continue
        m.running_mean.copy_(mom.mean.to(m.running_mean.dtype))
        var = mom.m2 / max(mom.n - 1, 1)
        m.running_var.copy_(var.to(m.running_var.dtype))
    return model
