"""Classifier interface, a small residual reference CNN, compound scaling and
the flat-vector checkpoint format shared with the GAN module."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

log = logging.getLogger(__name__)

MIN_RESOLUTION = 8


@dataclass
class ScalingConfig:
    alpha: float = 1.2
    beta: float = 1.1
    gamma: float = 1.15
    phi: float = 0.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 1:
            raise ValueError("alpha, beta and gamma must all be >= 1")
        if self.phi < 0:
            raise ValueError("phi must be >= 0")


@dataclass(frozen=True)
class ScalingResult:
    depth: float
    width: float
    resolution: float
    residual: float

    @property
    def warn(self) -> bool:
        return self.residual > 0.1


def compound_scaling(config: ScalingConfig) -> ScalingResult:
    """Depth/width/resolution multipliers alpha**phi, beta**phi, gamma**phi.

    ``residual`` is |alpha * beta**2 * gamma**2 - 2|, the distance from the
    FLOPS-doubling constraint.
    """
    a, b, g, phi = config.alpha, config.beta, config.gamma, config.phi
    res = ScalingResult(a**phi, b**phi, g**phi, abs(a * b**2 * g**2 - 2.0))
    if res.warn:
        log.warning("compound scaling constraint residual %.4f exceeds 0.1", res.residual)
    return res


def round_channels(x: float, divisor: int = 8) -> int:
    return max(divisor, int(x / divisor + 0.5) * divisor)


class ClassifierModel(nn.Module):
    """Base for anything the harness can train.

    Subclasses implement ``forward`` (N x C x H x W -> N x K logits) and set
    ``in_channels`` / ``num_classes``. Weight snapshots cover trainable
    parameters only; batch-norm buffers travel with checkpoints.
    """

    in_channels: int
    num_classes: int

    def snapshot(self) -> np.ndarray:
        return parameters_to_vector(self.parameters()).detach().cpu().numpy().copy()

    def load_snapshot(self, vector) -> "ClassifierModel":
        ref = next(self.parameters())
        vec = torch.as_tensor(np.asarray(vector), dtype=ref.dtype, device=ref.device)
        if vec.numel() != sum(p.numel() for p in self.parameters()):
            raise ValueError("snapshot length does not match the architecture")
        with torch.no_grad():
            vector_to_parameters(vec, self.parameters())
        return self

    def metadata(self) -> dict:
        return {"in_channels": self.in_channels, "num_classes": self.num_classes}


class ExternalClassifier(ClassifierModel):
    """Wrap an arbitrary ``nn.Module`` (e.g. a torchvision backbone)."""

    def __init__(self, module: nn.Module, in_channels: int, num_classes: int):
        super().__init__()
        self.module = module
        self.in_channels = in_channels
        self.num_classes = num_classes

    def forward(self, x):
        return self.module(x)


class CosineLinear(nn.Module):
    """Linear head on L2-normalized features and weights; logits in [-1, 1]."""

    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(out_features, in_features))
        nn.init.kaiming_uniform_(self.weight, a=math.sqrt(5))

    def forward(self, x):
        return F.normalize(x, dim=1) @ F.normalize(self.weight, dim=1).t()


class BasicBlock(nn.Module):
    def __init__(self, cin: int, cout: int, stride: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(cout)
        self.shortcut = nn.Sequential()
        if stride != 1 or cin != cout:
            self.shortcut = nn.Sequential(nn.Conv2d(cin, cout, 1, stride, bias=False), nn.BatchNorm2d(cout))

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return F.relu(out + self.shortcut(x))


@dataclass
class ReferenceCnnConfig:
    in_channels: int = 10
    num_classes: int = 4
    base_depth: int = 1
    base_width: int = 16
    resolution: int = 65
    stages: int = 3
    head: str = "linear"
    scaling: ScalingConfig = field(default_factory=ScalingConfig)

    def __post_init__(self):
        if isinstance(self.scaling, dict):
            self.scaling = ScalingConfig(**self.scaling)
        for name in ("in_channels", "num_classes", "base_depth", "base_width", "resolution", "stages"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.head not in ("linear", "cosine"):
            raise ValueError(f"unknown head {self.head!r}")

    def derived(self) -> Tuple[list, list, int]:
        """(channels per stage, blocks per stage, input resolution) after scaling."""
        s = compound_scaling(self.scaling)
        widths = [round_channels(self.base_width * 2**i * s.width) for i in range(self.stages)]
        depths = [max(1, math.ceil(self.base_depth * s.depth - 1e-9)) for _ in range(self.stages)]
        resolution = int(round(self.resolution * s.resolution))
        return widths, depths, resolution


class ReferenceCNN(ClassifierModel):
    """Stride-2 stem, ``stages`` residual stages (stride 1, then 2), global
    average pooling and a linear or cosine head."""

    def __init__(self, config: ReferenceCnnConfig):
        super().__init__()
        widths, depths, resolution = config.derived()
        if resolution < MIN_RESOLUTION:
            raise ValueError(f"input resolution {resolution} is below the {MIN_RESOLUTION}px minimum")
        self.config = config
        self.in_channels = config.in_channels
        self.num_classes = config.num_classes
        self.resolution = resolution
        self.widths = widths
        self.depths = depths
        self.stem = nn.Sequential(
            nn.Conv2d(config.in_channels, widths[0], 3, 2, 1, bias=False),
            nn.BatchNorm2d(widths[0]),
            nn.ReLU(inplace=True),
        )
        blocks = []
        cin = widths[0]
        for i, (w, d) in enumerate(zip(widths, depths)):
            for j in range(d):
                blocks.append(BasicBlock(cin, w, 2 if (i > 0 and j == 0) else 1))
                cin = w
        self.blocks = nn.Sequential(*blocks)
        head = CosineLinear if config.head == "cosine" else nn.Linear
        self.head = head(cin, config.num_classes)

    def forward(self, x):
        if x.shape[-1] != self.resolution or x.shape[-2] != self.resolution:
            x = F.interpolate(x, size=(self.resolution, self.resolution), mode="bilinear", align_corners=False)
        x = self.blocks(self.stem(x))
        x = torch.flatten(F.adaptive_avg_pool2d(x, 1), 1)
        return self.head(x)

    def metadata(self) -> dict:
        cfg = asdict(self.config)
        return {**super().metadata(), "architecture": "reference_cnn", "config": cfg}


def build_reference_cnn(config: Optional[ReferenceCnnConfig] = None) -> ReferenceCNN:
    return ReferenceCNN(config or ReferenceCnnConfig())


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


@torch.no_grad()
def predict_logits(model: nn.Module, pixels, batch_size: int = 256) -> np.ndarray:
    was = model.training
    model.eval()
    out = []
    try:
        for i in range(0, len(pixels), batch_size):
            x = torch.from_numpy(np.array(pixels[i : i + batch_size], dtype=np.float32))
            out.append(model(x).numpy())
    finally:
        model.train(was)
    if not out:
        return np.zeros((0, getattr(model, "num_classes", 0)), dtype=np.float32)
    return np.concatenate(out)


def predict(model: ClassifierModel, dataset, batch_size: int = 256) -> np.ndarray:
    """Argmax class per sample, evaluation mode."""
    channels = dataset.image_shape[0]
    if getattr(model, "in_channels", channels) != channels:
        raise ValueError(f"model expects {model.in_channels} channels, dataset has {channels}")
    return predict_logits(model, dataset.pixels, batch_size).argmax(axis=1).astype(np.int64)


# --------------------------------------------------------------------------
# Flat checkpoint format: <stem>.f32 (little-endian float32) + <stem>.json


def save_flat(tensors: Dict[str, torch.Tensor], path: str | Path, meta: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries, chunks = [], []
    for name, t in tensors.items():
        a = t.detach().cpu().numpy()
        entries.append({"name": name, "shape": list(a.shape), "dtype": str(a.dtype)})
        chunks.append(a.astype("<f4").ravel())
    flat = np.concatenate(chunks) if chunks else np.zeros(0, "<f4")
    flat.tofile(path.with_suffix(".f32"))
    manifest = {"format": "flat-f32", "version": 1, "numel": int(flat.size), "tensors": entries, "meta": meta or {}}
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2) + "\n")
    return path.with_suffix(".json")


def load_flat(path: str | Path) -> Tuple[Dict[str, torch.Tensor], dict]:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    flat = np.fromfile(path.with_suffix(".f32"), dtype="<f4")
    if flat.size != manifest["numel"]:
        raise ValueError(f"checkpoint {path}: {flat.size} values, manifest says {manifest['numel']}")
    out, pos = {}, 0
    for e in manifest["tensors"]:
        n = int(np.prod(e["shape"], dtype=np.int64))
        a = flat[pos : pos + n].reshape(e["shape"]).astype(e["dtype"])
        out[e["name"]] = torch.from_numpy(a)
        pos += n
    return out, manifest["meta"]


def save_checkpoint(model: nn.Module, path: str | Path) -> Path:
    meta = model.metadata() if hasattr(model, "metadata") else {}
    return save_flat(model.state_dict(), path, meta)


def load_checkpoint(path: str | Path, model: Optional[nn.Module] = None) -> nn.Module:
    """Restore weights; builds a ``ReferenceCNN`` from the metadata if no model is given."""
    state, meta = load_flat(path)
    if model is None:
        if meta.get("architecture") != "reference_cnn":
            raise ValueError("checkpoint does not describe a reference CNN; pass a model")
        model = ReferenceCNN(ReferenceCnnConfig(**meta["config"]))
    model.load_state_dict(state)
    return model
