"""DC-GAN minority-class synthesis and GAN-based class balancing.

Architecture follows the usual DC-GAN layout. For 64 x 64 output with
``feature_maps = f`` and latent size ``z``:

    G: z x 1 x 1 -> ConvT(8f, 4x4) -> ConvT(4f, 8x8) -> ConvT(2f, 16x16)
       -> ConvT(f, 32x32) -> ConvT(3, 64x64) -> tanh
       (BatchNorm + ReLU after every layer but the last)
    D: 3 x 64 x 64 -> Conv(f, 32) -> Conv(2f, 16) -> Conv(4f, 8)
       -> Conv(8f, 4) -> Conv(1, 1x1)
       (LeakyReLU(0.2); BatchNorm on all but the first and last)

All kernels are 4 x 4, stride 2, padding 1, except the 4 x 4 <-> 1 x 1 ends.
Weights start from N(0, 0.02); batch-norm scales from N(1, 0.02).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .data import PROVENANCE_GAN, _PROVENANCE_CODES, DatasetError, Dataset, class_histogram, concatenate
from .model import load_flat, save_flat


class GanDivergenceError(RuntimeError):
    """A generator or discriminator loss became non-finite."""


@dataclass
class GanConfig:
    resolution: int = 64
    epochs: int = 45
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    latent_dim: int = 100
    channels: int = 3
    feature_maps: int = 64
    batch_size: int = 64

    def __post_init__(self):
        r = self.resolution
        if r < 8 or r & (r - 1):
            raise ValueError(f"resolution must be a power of two >= 8, got {r}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        for name in ("epochs", "latent_dim", "channels", "feature_maps", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    @property
    def n_stages(self) -> int:
        return int(math.log2(self.resolution)) - 3


@dataclass
class GanTrainLog:
    generator_loss: List[float] = field(default_factory=list)
    discriminator_loss: List[float] = field(default_factory=list)
    # per epoch: mean of real-accuracy and fake-accuracy on a fresh probe batch
    discriminator_accuracy: List[float] = field(default_factory=list)
    iterations_per_epoch: int = 0


def _init_weights(m: nn.Module) -> None:
    name = m.__class__.__name__
    if "Conv" in name:
        nn.init.normal_(m.weight, 0.0, 0.02)
    elif "BatchNorm" in name:
        nn.init.normal_(m.weight, 1.0, 0.02)
        nn.init.zeros_(m.bias)


class Generator(nn.Module):
    def __init__(self, config: GanConfig):
        super().__init__()
        self.config = config
        f, n = config.feature_maps, config.n_stages
        layers: List[nn.Module] = [
            nn.ConvTranspose2d(config.latent_dim, f * 2**n, 4, 1, 0, bias=False),
            nn.BatchNorm2d(f * 2**n),
            nn.ReLU(True),
        ]
        for i in range(n, 0, -1):
            layers += [
                nn.ConvTranspose2d(f * 2**i, f * 2 ** (i - 1), 4, 2, 1, bias=False),
                nn.BatchNorm2d(f * 2 ** (i - 1)),
                nn.ReLU(True),
            ]
        layers += [nn.ConvTranspose2d(f, config.channels, 4, 2, 1, bias=False), nn.Tanh()]
        self.main = nn.Sequential(*layers)
        # affine map from [-1, 1] back to dataset units, per channel
        self.register_buffer("value_low", -torch.ones(config.channels))
        self.register_buffer("value_high", torch.ones(config.channels))
        self.apply(_init_weights)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.main(z.view(z.shape[0], -1, 1, 1))


class Discriminator(nn.Module):
    """Outputs one logit per image (the final sigmoid lives in the loss)."""

    def __init__(self, config: GanConfig):
        super().__init__()
        f, n = config.feature_maps, config.n_stages
        layers: List[nn.Module] = [nn.Conv2d(config.channels, f, 4, 2, 1, bias=False), nn.LeakyReLU(0.2, True)]
        for i in range(n):
            layers += [
                nn.Conv2d(f * 2**i, f * 2 ** (i + 1), 4, 2, 1, bias=False),
                nn.BatchNorm2d(f * 2 ** (i + 1)),
                nn.LeakyReLU(0.2, True),
            ]
        layers.append(nn.Conv2d(f * 2**n, 1, 4, 1, 0, bias=False))
        self.main = nn.Sequential(*layers)
        self.apply(_init_weights)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.main(x).view(-1)


def _torch_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**62))
    return int(rng)


def _finite_or_raise(value: float, what: str, epoch: int, it: int) -> float:
    if not math.isfinite(value):
        raise GanDivergenceError(f"{what} loss is {value} at epoch {epoch}, iteration {it}; training aborted")
    return value


def train_dcgan(images, config: Optional[GanConfig] = None, rng=0) -> Tuple[Generator, GanTrainLog]:
    """Adversarial training with Adam(lr, (beta1, beta2)) on both networks.

    ``images`` is N x channels x res x res in [-1, 1]. Each epoch reshuffles
    and runs ``max(1, N // batch_size)`` iterations (the tail of the shuffle
    is dropped). Deterministic for a fixed ``rng`` seed on a fixed platform.
    """
    config = config or GanConfig()
    x_all = torch.as_tensor(np.asarray(images, dtype=np.float32))
    if x_all.ndim != 4 or x_all.shape[0] == 0:
        raise ValueError("need a non-empty N x C x H x W image set")
    expected = (config.channels, config.resolution, config.resolution)
    if tuple(x_all.shape[1:]) != expected:
        raise ValueError(f"images must be {expected}, got {tuple(x_all.shape[1:])}")
    if x_all.min() < -1 - 1e-6 or x_all.max() > 1 + 1e-6:
        raise ValueError("images must be scaled to [-1, 1]")

    n = x_all.shape[0]
    bs = min(config.batch_size, n)
    iters = max(1, n // bs)
    log = GanTrainLog(iterations_per_epoch=iters)
    seed = _torch_seed(rng)
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        gen = torch.Generator().manual_seed(seed + 1)
        netG, netD = Generator(config), Discriminator(config)
        betas = (config.beta1, config.beta2)
        optG = torch.optim.Adam(netG.parameters(), lr=config.learning_rate, betas=betas)
        optD = torch.optim.Adam(netD.parameters(), lr=config.learning_rate, betas=betas)
        ones = torch.ones(bs)
        zeros = torch.zeros(bs)
        for epoch in range(config.epochs):
            netG.train()
            netD.train()
            order = torch.randperm(n, generator=gen)
            for it in range(iters):
                real = x_all[order[it * bs : (it + 1) * bs]]
                z = torch.randn(bs, config.latent_dim, generator=gen)
                fake = netG(z)

                optD.zero_grad()
                d_loss = F.binary_cross_entropy_with_logits(netD(real), ones) + F.binary_cross_entropy_with_logits(
                    netD(fake.detach()), zeros
                )
                d_loss.backward()
                optD.step()

                optG.zero_grad()
                g_loss = F.binary_cross_entropy_with_logits(netD(fake), ones)
                g_loss.backward()
                optG.step()

                log.discriminator_loss.append(_finite_or_raise(d_loss.item(), "discriminator", epoch, it))
                log.generator_loss.append(_finite_or_raise(g_loss.item(), "generator", epoch, it))
            log.discriminator_accuracy.append(_probe_accuracy(netG, netD, x_all, gen, config))
    netG.eval()
    return netG, log


@torch.no_grad()
def _probe_accuracy(netG: Generator, netD: Discriminator, x_all: torch.Tensor, gen: torch.Generator, config: GanConfig) -> float:
    """Discriminator accuracy under training-mode normalization, as D sees
    batches during training; running statistics are restored afterwards."""
    m = min(config.batch_size, x_all.shape[0])
    idx = torch.randperm(x_all.shape[0], generator=gen)[:m]
    z = torch.randn(m, config.latent_dim, generator=gen)
    saved = [{k: v.clone() for k, v in net.state_dict().items()} for net in (netG, netD)]
    real_ok = (netD(x_all[idx]) > 0).float().mean()
    fake_ok = (netD(netG(z)) <= 0).float().mean()
    netG.load_state_dict(saved[0])
    netD.load_state_dict(saved[1])
    return float((real_ok + fake_ok) / 2)


@torch.no_grad()
def generate_samples(generator: Generator, n: int, rng=0) -> np.ndarray:
    """``n`` images of shape channels x res x res with values in [-1, 1]."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cfg = generator.config
    if n == 0:
        return np.zeros((0, cfg.channels, cfg.resolution, cfg.resolution), dtype=np.float32)
    gen = torch.Generator().manual_seed(_torch_seed(rng))
    z = torch.randn(n, cfg.latent_dim, generator=gen)
    was = generator.training
    generator.eval()
    try:
        out = generator(z)
    finally:
        generator.train(was)
    return out.clamp_(-1.0, 1.0).numpy()


# --------------------------------------------------------------------------
# Moving between dataset rasters and GAN rasters


def _fit(pixels: np.ndarray, h: int, w: int) -> np.ndarray:
    """Centre crop or zero-pad of the spatial dims to h x w.

    Odd differences put the extra row/column at the bottom/right, so
    65 -> 64 drops the last row and column and 64 -> 65 pads them back.
    """
    n, c, H, W = pixels.shape
    out = np.zeros((n, c, h, w), dtype=np.float32)
    hh, ww = min(h, H), min(w, W)
    sy, sx = (H - hh) // 2, (W - ww) // 2
    dy, dx = (h - hh) // 2, (w - ww) // 2
    out[:, :, dy : dy + hh, dx : dx + ww] = pixels[:, :, sy : sy + hh, sx : sx + ww]
    return out


def to_gan_range(pixels: np.ndarray, resolution: int = 64, low=None, high=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Crop to ``resolution`` and map each channel's [low, high] onto [-1, 1].

    ``low``/``high`` default to the 0.5th/99.5th percentiles per channel;
    values outside are clipped.
    """
    x = _fit(np.asarray(pixels, dtype=np.float32), resolution, resolution)
    if low is None:
        low = np.percentile(x, 0.5, axis=(0, 2, 3))
    if high is None:
        high = np.percentile(x, 99.5, axis=(0, 2, 3))
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    span = np.where(high > low, high - low, 1.0)
    y = 2.0 * (x - low[None, :, None, None]) / span[None, :, None, None] - 1.0
    return np.clip(y, -1.0, 1.0).astype(np.float32), low, high


def from_gan_range(samples: np.ndarray, generator: Generator, height: int, width: int) -> np.ndarray:
    low = generator.value_low.numpy().astype(np.float64)[None, :, None, None]
    high = generator.value_high.numpy().astype(np.float64)[None, :, None, None]
    x = low + (np.asarray(samples, dtype=np.float64) + 1.0) / 2.0 * (high - low)
    return _fit(x.astype(np.float32), height, width)


def train_class_generator(dataset: Dataset, class_index: int, config: Optional[GanConfig] = None, rng=0) -> Tuple[Generator, GanTrainLog]:
    """Train an unconditional generator on one class of a 3-band dataset."""
    config = config or GanConfig()
    if dataset.image_shape[0] != config.channels:
        raise DatasetError(
            f"GAN expects {config.channels}-band images; compose the dataset first (has {dataset.image_shape[0]})"
        )
    pixels = dataset.pixels[dataset.labels == class_index]
    if pixels.shape[0] == 0:
        raise ValueError(f"class {class_index} has no samples")
    x, low, high = to_gan_range(pixels, config.resolution)
    netG, log = train_dcgan(x, config, rng)
    netG.value_low.copy_(torch.as_tensor(low, dtype=torch.float32))
    netG.value_high.copy_(torch.as_tensor(high, dtype=torch.float32))
    return netG, log


def balance_with_gan(
    dataset: Dataset,
    generators: Mapping[int, Generator],
    target_per_class: int,
    rng=0,
    truncate_majority: bool = False,
) -> Dataset:
    """Top every class up to ``target_per_class`` with generated samples.

    Real samples are kept byte-for-byte and come first; synthetic ones are
    appended and tagged ``gan-synthetic``. Classes above the target are an
    error unless ``truncate_majority``, which keeps their first
    ``target_per_class`` samples.
    """
    if target_per_class < 1:
        raise ValueError("target_per_class must be >= 1")
    counts = class_histogram(dataset).counts
    over = [j for j in range(dataset.K) if counts[j] > target_per_class]
    if over and not truncate_majority:
        raise ValueError(f"class(es) {over} exceed target {target_per_class}; enable truncate_majority")
    missing = [j for j in range(dataset.K) if counts[j] < target_per_class and j not in generators]
    if missing:
        raise ValueError(f"no generator for deficient class(es) {missing}")

    keep = []
    for j in range(dataset.K):
        idx = np.flatnonzero(dataset.labels == j)
        keep.append(idx[:target_per_class])
    keep_idx = np.sort(np.concatenate(keep))
    parts = [dataset.subset(keep_idx) if keep_idx.size < len(dataset) else dataset]

    seeds = np.random.SeedSequence(_torch_seed(rng)).spawn(dataset.K)
    _, H, W = dataset.image_shape
    for j in range(dataset.K):
        deficit = target_per_class - int(counts[j])
        if deficit <= 0:
            continue
        g = generators[j]
        if g.config.channels != dataset.image_shape[0]:
            raise DatasetError(f"generator for class {j} makes {g.config.channels} bands, dataset has {dataset.image_shape[0]}")
        samples = generate_samples(g, deficit, int(seeds[j].generate_state(1)[0]))
        parts.append(
            dataset.replace(
                pixels=from_gan_range(samples, g, H, W),
                labels=np.full(deficit, j, dtype=np.int64),
                provenance=np.full(deficit, _PROVENANCE_CODES[PROVENANCE_GAN], dtype=np.uint8),
            )
        )
    return concatenate(parts)


def synthetic_count(counts: Sequence[int], target_per_class: int) -> int:
    """Number of generated samples ``balance_with_gan`` would append."""
    return int(sum(max(0, target_per_class - int(c)) for c in counts))


def export_sample_grid(generator: Generator, rows: int, cols: int, path: str | Path, rng=0) -> Path:
    """Tile rows x cols samples into one PNG; [-1, 1] maps affinely onto [0, 255]."""
    from PIL import Image

    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    imgs = generate_samples(generator, rows * cols, rng)
    grid = tile(imgs, rows, cols)
    path = Path(path)
    Image.fromarray(to_uint8(grid)).save(path, format="PNG")
    return path


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint((np.asarray(x, dtype=np.float64) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def tile(imgs: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """N x C x h x w -> (rows*h) x (cols*w) x C (single band stays 2-D)."""
    n, c, h, w = imgs.shape
    grid = imgs[: rows * cols].reshape(rows, cols, c, h, w).transpose(0, 3, 1, 4, 2).reshape(rows * h, cols * w, c)
    return grid[..., 0] if c == 1 else grid


def save_generator(generator: Generator, path: str | Path, class_index: Optional[int] = None) -> Path:
    meta = {"kind": "dcgan-generator", "config": asdict(generator.config), "class_index": class_index}
    return save_flat(generator.state_dict(), path, meta)


def load_generator(path: str | Path) -> Generator:
    state, meta = load_flat(path)
    if meta.get("kind") != "dcgan-generator":
        raise ValueError(f"{path} is not a generator checkpoint")
    g = Generator(GanConfig(**meta["config"]))
    g.load_state_dict(state)
    g.eval()
    return g


def load_generators(directory: str | Path) -> Dict[int, Generator]:
    """All ``class_<j>.json`` generator checkpoints in a directory, keyed by class."""
    out = {}
    for p in sorted(Path(directory).glob("class_*.json")):
        if not p.with_suffix(".f32").exists():
            continue
        _, meta = load_flat(p)
        j = meta.get("class_index")
        if j is None:
            j = int(p.stem.split("_")[1])
        out[int(j)] = load_generator(p)
    return out
