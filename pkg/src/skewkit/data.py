"""Multi-spectral datasets: in-memory model, on-disk format, band composition,
normalization, standard augmentation and a synthetic imbalanced generator.

On-disk layout (one directory per dataset)::

    manifest.json            # see ``save_dataset``
    <split>.f32              # raw little-endian float32, C-order, N x C x H x W
    <split>.labels.u8        # raw uint8, length N
    <split>.prov.u8          # raw uint8, length N (0 = real, 1 = gan-synthetic)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

PROVENANCE_REAL = "real"
PROVENANCE_GAN = "gan-synthetic"
_PROVENANCE_CODES = {PROVENANCE_REAL: 0, PROVENANCE_GAN: 1}
_PROVENANCE_NAMES = {v: k for k, v in _PROVENANCE_CODES.items()}

DEFAULT_BAND_IDS = tuple(f"B{i}" for i in range(1, 11))

# Named LANDSAT-style composites, resolved against ``DEFAULT_BAND_IDS``.
NAMED_TRIPLES = {
    "natural_color": ("B4", "B3", "B2"),
    "near_infrared": ("B5", "B4", "B3"),
    "agriculture": ("B6", "B5", "B2"),
}


class DatasetError(ValueError):
    """Raised for malformed datasets, manifests or tensor files."""


@dataclass(frozen=True)
class MultiSpectralImage:
    """A single C x H x W raster with one identifier per channel."""

    pixels: np.ndarray
    band_ids: Tuple[str, ...]

    def __post_init__(self):
        if self.pixels.ndim != 3:
            raise DatasetError(f"expected a C x H x W array, got shape {self.pixels.shape}")
        if self.pixels.shape[0] != len(self.band_ids):
            raise DatasetError(
                f"{self.pixels.shape[0]} channels but {len(self.band_ids)} band ids"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise DatasetError("image contains non-finite values")
        object.__setattr__(self, "band_ids", tuple(self.band_ids))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.pixels.shape)


@dataclass(frozen=True)
class BandTriple:
    bands: Tuple[str, str, str]

    def __post_init__(self):
        if len(self.bands) != 3:
            raise DatasetError(f"a band triple needs exactly 3 identifiers, got {self.bands}")
        object.__setattr__(self, "bands", tuple(self.bands))

    @classmethod
    def parse(cls, text: str) -> "BandTriple":
        """Accept ``"B6,B5,B2"``, ``"6-5-2"``, ``"6,5,2"`` or a named composite."""
        if text in NAMED_TRIPLES:
            return cls(NAMED_TRIPLES[text])
        parts = [p.strip() for p in text.replace("-", ",").split(",") if p.strip()]
        parts = [f"B{p}" if p.isdigit() else p for p in parts]
        return cls(tuple(parts))

    def __str__(self) -> str:
        return ",".join(self.bands)


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise DatasetError("mean and std must be 1-D vectors of equal length")
        if np.any(~np.isfinite(std)) or np.any(std <= 0):
            bad = [int(i) for i in np.flatnonzero(~(std > 0))]
            raise DatasetError(f"degenerate band(s) with zero std: {bad}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationStats":
        return cls(np.asarray(obj["mean"]), np.asarray(obj["std"]))


@dataclass(frozen=True)
class ClassHistogram:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise DatasetError("class histogram must be a non-empty vector")
        if np.any(counts < 0) or not np.all(counts == np.round(counts)):
            raise DatasetError(f"counts must be non-negative integers, got {counts.tolist()}")
        counts = counts.astype(np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def K(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tolist(self) -> List[int]:
        return [int(c) for c in self.counts]


def _readonly(a: np.ndarray) -> np.ndarray:
    if a.flags.writeable:
        a = a.view()
        a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable stack of images with labels and per-sample provenance.

    ``pixels`` is an N x C x H x W float32 array; indexing returns a
    ``MultiSpectralImage``.
    """

    pixels: np.ndarray
    labels: np.ndarray
    K: int
    band_ids: Tuple[str, ...]
    split: str = "train"
    provenance: Optional[np.ndarray] = None
    normalization: Optional[NormalizationStats] = field(default=None, compare=False)

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 4:
            raise DatasetError(f"pixels must be N x C x H x W, got shape {pixels.shape}")
        if pixels.dtype != np.float32:
            pixels = pixels.astype(np.float32)
        labels = np.asarray(self.labels)
        if labels.shape != (pixels.shape[0],):
            raise DatasetError(
                f"{pixels.shape[0]} images but {labels.shape} labels"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            bad = int(np.flatnonzero((labels < 0) | (labels >= self.K))[0])
            raise DatasetError(
                f"sample {bad}: label {int(labels[bad])} out of range for K={self.K}"
            )
        if pixels.shape[1] != len(self.band_ids):
            raise DatasetError(
                f"{pixels.shape[1]} channels but {len(self.band_ids)} band ids"
            )
        prov = self.provenance
        if prov is None:
            prov = np.zeros(pixels.shape[0], dtype=np.uint8)
        prov = np.asarray(prov, dtype=np.uint8)
        if prov.shape != labels.shape:
            raise DatasetError("provenance must have one entry per sample")
        if prov.size and prov.max() > max(_PROVENANCE_NAMES):
            raise DatasetError(f"unknown provenance code {int(prov.max())}")
        object.__setattr__(self, "pixels", _readonly(pixels))
        object.__setattr__(self, "labels", _readonly(labels.astype(np.int64)))
        object.__setattr__(self, "provenance", _readonly(prov))
        object.__setattr__(self, "band_ids", tuple(self.band_ids))

    def __len__(self) -> int:
        return int(self.pixels.shape[0])

    def __getitem__(self, i: int) -> MultiSpectralImage:
        return MultiSpectralImage(np.asarray(self.pixels[i]), self.band_ids)

    def __iter__(self) -> Iterator[MultiSpectralImage]:
        for i in range(len(self)):
            yield self[i]

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.pixels.shape[1:])

    def provenance_tags(self) -> List[str]:
        return [_PROVENANCE_NAMES[int(c)] for c in self.provenance]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            pixels=self.pixels[idx],
            labels=self.labels[idx],
            K=self.K,
            band_ids=self.band_ids,
            split=self.split,
            provenance=self.provenance[idx],
            normalization=self.normalization,
        )

    def replace(self, **changes) -> "Dataset":
        kw = dict(
            pixels=self.pixels,
            labels=self.labels,
            K=self.K,
            band_ids=self.band_ids,
            split=self.split,
            provenance=self.provenance,
            normalization=self.normalization,
        )
        kw.update(changes)
        return Dataset(**kw)


def concatenate(parts: Sequence[Dataset]) -> Dataset:
    if not parts:
        raise DatasetError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.band_ids != first.band_ids or p.K != first.K or p.image_shape != first.image_shape:
            raise DatasetError("datasets differ in bands, K or image shape")
    return first.replace(
        pixels=np.concatenate([p.pixels for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        provenance=np.concatenate([p.provenance for p in parts]),
    )


# --------------------------------------------------------------------------
# On-disk format


def _split_files(split: str) -> Dict[str, str]:
    return {
        "tensor_file": f"{split}.f32",
        "label_file": f"{split}.labels.u8",
        "provenance_file": f"{split}.prov.u8",
    }


def save_dataset(splits: Dict[str, Dataset] | Dataset, out_dir: str | Path) -> Path:
    """Write one or more splits plus a manifest; returns the manifest path."""
    if isinstance(splits, Dataset):
        splits = {splits.split: splits}
    if not splits:
        raise DatasetError("no splits to save")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref = next(iter(splits.values()))
    manifest = {
        "version": MANIFEST_VERSION,
        "K": ref.K,
        "band_ids": list(ref.band_ids),
        "image_shape": list(ref.image_shape),
        "splits": {},
    }
    for name, ds in splits.items():
        if ds.band_ids != ref.band_ids or ds.K != ref.K or ds.image_shape != ref.image_shape:
            raise DatasetError(f"split {name!r} is inconsistent with the other splits")
        if ds.K > 256:
            raise DatasetError("labels are stored as uint8; K must be <= 256")
        files = _split_files(name)
        ds.pixels.astype("<f4", copy=False).tofile(out / files["tensor_file"])
        ds.labels.astype(np.uint8).tofile(out / files["label_file"])
        ds.provenance.astype(np.uint8).tofile(out / files["provenance_file"])
        manifest["splits"][name] = {"n": len(ds), **files}
    norm = ref.normalization
    if norm is not None:
        manifest["normalization"] = norm.to_json()
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _manifest_path(path: str | Path) -> Path:
    p = Path(path)
    return p / MANIFEST_NAME if p.is_dir() else p


def read_manifest(path: str | Path) -> dict:
    mpath = _manifest_path(path)
    if not mpath.exists():
        raise DatasetError(f"manifest not found: {mpath}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest {mpath} is not valid JSON: {exc}") from exc
    required = ("version", "K", "band_ids", "image_shape", "splits")
    missing = [k for k in required if k not in manifest]
    if missing:
        raise DatasetError(f"manifest {mpath} missing fields {missing}")
    if manifest["version"] != MANIFEST_VERSION:
        raise DatasetError(f"unsupported manifest version {manifest['version']}")
    shape = manifest["image_shape"]
    if len(shape) != 3 or shape[0] != len(manifest["band_ids"]):
        raise DatasetError("image_shape must be [C, H, W] with C == len(band_ids)")
    return manifest


def load_dataset(path: str | Path, split: Optional[str] = None) -> Dataset:
    """Load one split from a manifest file or dataset directory.

    Tensor files are memory-mapped read-only. ``split`` defaults to the only
    split present, else ``"train"``.
    """
    mpath = _manifest_path(path)
    manifest = read_manifest(mpath)
    root = mpath.parent
    splits = manifest["splits"]
    if split is None:
        split = next(iter(splits)) if len(splits) == 1 else "train"
    if split not in splits:
        raise DatasetError(f"split {split!r} not in manifest (have {sorted(splits)})")
    entry = splits[split]
    n = int(entry["n"])
    C, H, W = (int(v) for v in manifest["image_shape"])
    per = C * H * W

    tensor_path = root / entry["tensor_file"]
    if not tensor_path.exists():
        raise DatasetError(f"split {split!r}: tensor file {tensor_path} is missing")
    nbytes = tensor_path.stat().st_size
    if nbytes != n * per * 4:
        complete = nbytes // (per * 4)
        raise DatasetError(
            f"split {split!r}: tensor file {tensor_path.name} holds {nbytes} bytes, "
            f"expected {n * per * 4}; sample {complete} is truncated or missing"
        )
    pixels = np.memmap(tensor_path, dtype="<f4", mode="r", shape=(n, C, H, W)) if n else np.zeros((0, C, H, W), np.float32)
    finite = np.isfinite(pixels.reshape(n, -1)).all(axis=1)
    if not finite.all():
        raise DatasetError(
            f"split {split!r}: sample {int(np.flatnonzero(~finite)[0])} contains non-finite values"
        )

    label_path = root / entry["label_file"]
    if not label_path.exists():
        raise DatasetError(f"split {split!r}: label file {label_path} is missing")
    labels = np.fromfile(label_path, dtype=np.uint8)
    if labels.size != n:
        raise DatasetError(f"split {split!r}: {labels.size} labels for {n} samples")

    prov = None
    prov_name = entry.get("provenance_file")
    if prov_name:
        prov_path = root / prov_name
        if not prov_path.exists():
            raise DatasetError(f"split {split!r}: provenance file {prov_path} is missing")
        prov = np.fromfile(prov_path, dtype=np.uint8)
        if prov.size != n:
            raise DatasetError(f"split {split!r}: {prov.size} provenance tags for {n} samples")

    norm = manifest.get("normalization")
    return Dataset(
        pixels=np.asarray(pixels),
        labels=labels,
        K=int(manifest["K"]),
        band_ids=tuple(manifest["band_ids"]),
        split=split,
        provenance=prov,
        normalization=NormalizationStats.from_json(norm) if norm else None,
    )


def load_splits(path: str | Path) -> Dict[str, Dataset]:
    manifest = read_manifest(path)
    return {name: load_dataset(path, name) for name in manifest["splits"]}


# --------------------------------------------------------------------------
# Statistics, composition, normalization


def class_histogram(dataset: Dataset | Sequence[int], K: Optional[int] = None) -> ClassHistogram:
    if isinstance(dataset, Dataset):
        labels, K = dataset.labels, dataset.K
    else:
        labels = np.asarray(dataset, dtype=np.int64)
        if K is None:
            K = int(labels.max()) + 1 if labels.size else 0
    if labels.size == 0:
        raise DatasetError("cannot build a histogram of an empty dataset")
    return ClassHistogram(np.bincount(labels, minlength=K)[:K])


def _resolve_bands(band_ids: Sequence[str], triple: BandTriple) -> List[int]:
    lookup = {b: i for i, b in enumerate(band_ids)}
    missing = [b for b in triple.bands if b not in lookup]
    if missing:
        raise DatasetError(
            f"unknown band(s) {missing}; available bands: {', '.join(band_ids)}"
        )
    return [lookup[b] for b in triple.bands]


def compose_bands(image, triple: BandTriple | str):
    """Select three channels by identifier, in triple order.

    Works on a ``MultiSpectralImage`` or a whole ``Dataset``. Pixel values
    are copied, never modified.
    """
    if isinstance(triple, str):
        triple = BandTriple.parse(triple)
    idx = _resolve_bands(image.band_ids, triple)
    if isinstance(image, Dataset):
        stats = image.normalization
        if stats is not None:
            stats = NormalizationStats(stats.mean[idx], stats.std[idx])
        return image.replace(
            pixels=np.ascontiguousarray(image.pixels[:, idx]),
            band_ids=triple.bands,
            normalization=stats,
        )
    return MultiSpectralImage(image.pixels[idx].copy(), triple.bands)


_CHUNK = 256


def compute_normalization(dataset: Dataset) -> NormalizationStats:
    """Per-band mean/std (population) over every pixel of every sample.

    Two chunked passes in float64, so memory stays bounded for large sets.
    """
    n = len(dataset)
    if n == 0:
        raise DatasetError("cannot compute statistics of an empty dataset")
    x = dataset.pixels
    count = n * x.shape[2] * x.shape[3]
    total = np.zeros(x.shape[1])
    for i in range(0, n, _CHUNK):
        total += x[i : i + _CHUNK].sum(axis=(0, 2, 3), dtype=np.float64)
    mean = total / count
    sq = np.zeros(x.shape[1])
    for i in range(0, n, _CHUNK):
        d = x[i : i + _CHUNK].astype(np.float64) - mean[None, :, None, None]
        sq += (d * d).sum(axis=(0, 2, 3))
    return NormalizationStats(mean, np.sqrt(sq / count))


def _affine(pixels: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    out = np.empty(pixels.shape, dtype=np.float32)
    a = scale[None, :, None, None]
    b = shift[None, :, None, None]
    for i in range(0, pixels.shape[0], _CHUNK):
        out[i : i + _CHUNK] = pixels[i : i + _CHUNK].astype(np.float64) * a + b
    return out


def normalize(dataset: Dataset, stats: NormalizationStats) -> Dataset:
    """Apply (x - mean) / std per band."""
    if stats.mean.size != len(dataset.band_ids):
        raise DatasetError(
            f"stats cover {stats.mean.size} bands, dataset has {len(dataset.band_ids)}"
        )
    out = _affine(dataset.pixels, 1.0 / stats.std, -stats.mean / stats.std)
    return dataset.replace(pixels=out, normalization=stats)


def denormalize(dataset: Dataset, stats: NormalizationStats) -> Dataset:
    out = _affine(dataset.pixels, stats.std, stats.mean)
    return dataset.replace(pixels=out, normalization=None)


# --------------------------------------------------------------------------
# Augmentation


@dataclass
class AugmentConfig:
    hflip: bool = True
    vflip: bool = True
    rotate: bool = True
    # Off by default: arbitrary angles need interpolation and a fill value.
    arbitrary_rotation: bool = False
    max_angle: float = 180.0


def augment_array(pixels: np.ndarray, rng: np.random.Generator, config: AugmentConfig) -> np.ndarray:
    """Random flips/rotation of a C x H x W array. Shape is preserved."""
    out = pixels
    if config.hflip and rng.random() < 0.5:
        out = out[:, :, ::-1]
    if config.vflip and rng.random() < 0.5:
        out = out[:, ::-1, :]
    if config.rotate:
        if config.arbitrary_rotation:
            angle = float(rng.uniform(-config.max_angle, config.max_angle))
            out = rotate_image(out, angle)
        elif out.shape[1] == out.shape[2]:
            out = np.rot90(out, k=int(rng.integers(4)), axes=(1, 2))
    return np.ascontiguousarray(out)


def augment_standard(image: MultiSpectralImage, rng: np.random.Generator, config: Optional[AugmentConfig] = None) -> MultiSpectralImage:
    return MultiSpectralImage(augment_array(image.pixels, rng, config or AugmentConfig()), image.band_ids)


def hflip(image: MultiSpectralImage) -> MultiSpectralImage:
    return MultiSpectralImage(np.ascontiguousarray(image.pixels[:, :, ::-1]), image.band_ids)


def vflip(image: MultiSpectralImage) -> MultiSpectralImage:
    return MultiSpectralImage(np.ascontiguousarray(image.pixels[:, ::-1, :]), image.band_ids)


def rotate_image(pixels: np.ndarray, angle: float) -> np.ndarray:
    """Rotate each channel by ``angle`` degrees about the centre, zero fill."""
    if angle % 360 == 0:
        return pixels.copy()
    if angle % 90 == 0 and pixels.shape[1] == pixels.shape[2]:
        return np.ascontiguousarray(np.rot90(pixels, k=int(angle // 90) % 4, axes=(1, 2)))
    from scipy.ndimage import rotate

    return rotate(pixels, angle, axes=(2, 1), reshape=False, order=1, mode="constant", cval=0.0).astype(pixels.dtype)


# --------------------------------------------------------------------------
# Synthetic imbalanced data

DEFAULT_PRIORS = (0.60, 0.15, 0.15, 0.10)


def allocate_counts(priors: Sequence[float], size: int) -> List[int]:
    """Largest-remainder rounding of ``priors * size``; ties go to the lower class index."""
    p = np.asarray(priors, dtype=np.float64)
    raw = p * size
    counts = np.floor(raw).astype(np.int64)
    remainder = size - int(counts.sum())
    order = sorted(range(p.size), key=lambda j: (-(raw[j] - counts[j]), j))
    for j in order[:remainder]:
        counts[j] += 1
    return counts.tolist()


@dataclass
class SyntheticSpec:
    priors: Tuple[float, ...] = DEFAULT_PRIORS
    size: int = 1000
    channels: int = 10
    height: int = 65
    width: int = 65
    seed: int = 0
    noise: float = 1.0
    # std of the latent class jitter; larger means more class overlap
    overlap: float = 0.35
    split: str = "train"
    band_ids: Optional[Tuple[str, ...]] = None


# Class signatures are fixed, independent of the sampling seed.
_SIGNATURE_SEED = 20200426


def _signatures(channels: int) -> Dict[str, np.ndarray]:
    rs = np.random.default_rng(_SIGNATURE_SEED)
    return {
        "freq0": rs.uniform(0.04, 0.08, channels),
        "dfreq": rs.uniform(0.025, 0.04, channels),
        "theta0": rs.uniform(0.0, np.pi, channels),
        "dtheta": rs.uniform(0.25, 0.45, channels),
        "offset": rs.normal(0.0, 0.5, channels),
    }


def make_synthetic_imbalanced(spec: SyntheticSpec) -> Dataset:
    """Procedural class-imbalanced multi-spectral dataset.

    Each sample carries a latent ordinal position ``t = label + N(0, overlap)``.
    Channel c shows an oriented sinusoidal grating whose frequency and
    orientation move linearly with ``t`` along per-channel signatures, with
    random phase and amplitude, plus white noise of std ``noise``. Adjacent
    classes therefore overlap while distant ones are well separated.
    """
    priors = np.asarray(spec.priors, dtype=np.float64)
    K = priors.size
    if np.any(priors <= 0):
        raise DatasetError(f"every class prior must be > 0, got {priors.tolist()}")
    if not math.isclose(priors.sum(), 1.0, abs_tol=1e-6):
        raise DatasetError(f"priors must sum to 1, got {priors.sum():.6f}")
    if spec.size < K:
        raise DatasetError(f"size {spec.size} is smaller than the class count {K}")

    counts = allocate_counts(priors, spec.size)
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(K), counts)
    labels = labels[rng.permutation(labels.size)]

    C, H, W = spec.channels, spec.height, spec.width
    sig = _signatures(C)
    yy, xx = np.meshgrid(np.arange(H) - (H - 1) / 2, np.arange(W) - (W - 1) / 2, indexing="ij")

    t = labels + rng.normal(0.0, spec.overlap, labels.size)
    phase = rng.uniform(0, 2 * np.pi, (labels.size, C))
    amp = rng.uniform(0.7, 1.3, (labels.size, C))
    pixels = np.empty((labels.size, C, H, W), dtype=np.float32)
    for i in range(labels.size):
        freq = sig["freq0"] + t[i] * sig["dfreq"]
        theta = sig["theta0"] + t[i] * sig["dtheta"]
        proj = (np.cos(theta)[:, None, None] * xx + np.sin(theta)[:, None, None] * yy)
        wave = np.sin(2 * np.pi * np.abs(freq)[:, None, None] * proj + phase[i][:, None, None])
        img = amp[i][:, None, None] * wave + sig["offset"][:, None, None]
        img += rng.normal(0.0, spec.noise, (C, H, W))
        pixels[i] = img
    band_ids = spec.band_ids or (DEFAULT_BAND_IDS if C == 10 else tuple(f"B{i}" for i in range(1, C + 1)))
    return Dataset(pixels=pixels, labels=labels, K=K, band_ids=band_ids, split=spec.split)


def make_synthetic_splits(
    priors: Sequence[float] = DEFAULT_PRIORS,
    n_train: int = 8000,
    n_val: int = 2000,
    seed: int = 0,
    **kwargs,
) -> Dict[str, Dataset]:
    """Train/validation pair drawn with independent seeds from the same classes."""
    ss = np.random.SeedSequence(seed)
    s_train, s_val = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    train = make_synthetic_imbalanced(SyntheticSpec(priors=tuple(priors), size=n_train, seed=s_train, split="train", **kwargs))
    val = make_synthetic_imbalanced(SyntheticSpec(priors=tuple(priors), size=n_val, seed=s_val, split="validation", **kwargs))
    return {"train": train, "validation": val}
