"""Config-driven experiment runner, run artifacts and report emission."""
from __future__ import annotations

import copy
import csv
import dataclasses
import io
import json
import logging
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import torch

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import data as D
from .data import AugmentConfig, BandTriple, Dataset
from .gan import GanConfig, balance_with_gan, load_generators, save_generator, train_class_generator
from .losses import LdamConfig, LossSpec, batch_loss, drw_active, drw_class_weights, ldam_margins
from .metrics import MetricsReport
from .model import ExternalClassifier, ReferenceCnnConfig, ScalingConfig, build_reference_cnn, predict, save_checkpoint
from .sampling import class_weights_for, epoch_indices
from .schedule import ClrConfig, SwaState, clr_value, recalibrate_running_stats, swa_capture_points, swa_update

log = logging.getLogger(__name__)

SEED_ENV = "SKEWKIT_SEED"


class ConfigError(ValueError):
    """Invalid or self-contradictory experiment configuration."""


# --------------------------------------------------------------------------
# Configuration


@dataclass
class SyntheticSource:
    priors: List[float] = field(default_factory=lambda: list(D.DEFAULT_PRIORS))
    n_train: int = 8000
    n_val: int = 2000
    channels: int = 10
    height: int = 65
    width: int = 65
    noise: float = 1.0
    overlap: float = 0.35
    seed: int = 0


@dataclass
class DatasetSection:
    path: Optional[str] = None
    synthetic: Optional[SyntheticSource] = None
    normalize: bool = True


@dataclass
class ModelSection:
    kind: str = "reference_cnn"
    depth: int = 1
    width: int = 16
    resolution: Optional[int] = None
    phi: float = 0.0
    alpha: float = 1.2
    beta: float = 1.1
    gamma: float = 1.15
    # "auto": cosine head for LDAM, linear otherwise
    head: str = "auto"
    # "package.module:callable", called with (in_channels, num_classes)
    factory: Optional[str] = None


@dataclass
class LdamSection:
    max_margin: float = 0.5
    scale_s: float = 30.0


@dataclass
class DrwSection:
    enabled: bool = False
    start_epoch: int = 20
    beta: float = 0.9999
    reweight: str = "effective_number"
    lr_factor: float = 0.1


@dataclass
class LrSection:
    mode: str = "constant"
    constant: float = 1e-3


@dataclass
class ClrSection:
    lower: float = 1e-5
    upper: float = 1e-3
    stepsize: float = 2
    step_unit: str = "epoch"


@dataclass
class OptimizerSection:
    name: str = "adam"
    weight_decay: float = 0.0
    momentum: float = 0.9


@dataclass
class SwaSection:
    enabled: bool = False
    # None: floor(0.75 E), pushed to the next CLR trough when cycling
    start_epoch: Optional[int] = None
    # None: one CLR period in epochs, or 1 for constant LR
    cycle: Optional[int] = None


@dataclass
class GanSection:
    enabled: bool = False
    target_per_class: Optional[int] = None
    truncate_majority: bool = False
    generators_dir: Optional[str] = None
    epochs: int = 45
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    latent_dim: int = 100
    feature_maps: int = 64
    batch_size: int = 64

    def gan_config(self, channels: int = 3) -> GanConfig:
        return GanConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            latent_dim=self.latent_dim,
            feature_maps=self.feature_maps,
            batch_size=self.batch_size,
            channels=channels,
        )


@dataclass
class ExperimentConfig:
    run_id: str = "run"
    seed: int = 0
    epochs: int = 30
    batch_size: int = 64
    mode: str = "reproducible"
    bands: str = "all"
    loss: str = "cross_entropy"
    sampler: str = "none"
    reweight: str = "none"
    effective_number_beta: float = 0.9999
    eval_batch_size: int = 256
    out_dir: str = "runs"
    dataset: DatasetSection = field(default_factory=lambda: DatasetSection(synthetic=SyntheticSource()))
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelSection = field(default_factory=ModelSection)
    ldam: LdamSection = field(default_factory=LdamSection)
    drw: DrwSection = field(default_factory=DrwSection)
    lr: LrSection = field(default_factory=LrSection)
    clr: ClrSection = field(default_factory=ClrSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    swa: SwaSection = field(default_factory=SwaSection)
    gan: GanSection = field(default_factory=GanSection)

    def to_dict(self) -> dict:
        return asdict(self)

    # -- resolved defaults -------------------------------------------------

    def clr_config(self) -> ClrConfig:
        c = self.clr
        return ClrConfig(c.lower, c.upper, c.stepsize, "triangular", c.step_unit)

    def swa_cycle(self) -> int:
        if self.swa.cycle is not None:
            return self.swa.cycle
        if self.lr.mode == "clr" and self.clr.step_unit == "epoch":
            return max(1, int(round(2 * self.clr.stepsize)))
        return 1

    def swa_start(self) -> int:
        if self.swa.start_epoch is not None:
            return self.swa.start_epoch
        # three quarters in, pushed forward to the next CLR trough when cycling
        cycle = self.swa_cycle()
        return int(math.ceil(math.floor(0.75 * self.epochs) / cycle) * cycle)

    def head(self) -> str:
        if self.model.head != "auto":
            return self.model.head
        return "cosine" if self.loss == "ldam" else "linear"

    def validate(self) -> "ExperimentConfig":
        choices = {
            "mode": ("reproducible", "fast"),
            "loss": ("cross_entropy", "ldam"),
            "sampler": ("none", "inverse_frequency", "oversample", "undersample"),
            "reweight": ("none", "inverse_frequency", "effective_number"),
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}, got {getattr(self, key)!r}")
        if self.lr.mode not in ("constant", "clr"):
            raise ConfigError(f"lr.mode must be constant or clr, got {self.lr.mode!r}")
        if self.model.kind not in ("reference_cnn", "external"):
            raise ConfigError(f"model.kind must be reference_cnn or external, got {self.model.kind!r}")
        if self.model.kind == "external" and not self.model.factory:
            raise ConfigError("model.kind = external needs model.factory")
        if self.model.head not in ("auto", "linear", "cosine"):
            raise ConfigError(f"unknown model.head {self.model.head!r}")
        if self.optimizer.name not in ("adam", "sgd"):
            raise ConfigError(f"optimizer.name must be adam or sgd, got {self.optimizer.name!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        ds = self.dataset
        if (ds.path is None) == (ds.synthetic is None):
            raise ConfigError("dataset needs exactly one of path or synthetic")
        if self.gan.enabled:
            if self.bands == "all":
                raise ConfigError("GAN augmentation works on a 3-band composition; set bands (e.g. 6,5,2)")
            if self.gan.target_per_class is None:
                raise ConfigError("gan.enabled needs gan.target_per_class")
        if self.bands != "all":
            BandTriple.parse(self.bands)
        if self.reweight != "none" and self.drw.enabled:
            raise ConfigError("reweight and drw both set class weights; enable only one")
        if self.drw.enabled and self.drw.start_epoch < 0:
            raise ConfigError("drw.start_epoch must be >= 0")
        self.clr_config()
        LdamConfig(self.ldam.max_margin, self.ldam.scale_s)
        return self


def _build(cls, obj: Any, path: str):
    if not dataclasses.is_dataclass(cls):
        return obj
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or 'config'} must be a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {unknown}")
    kwargs = {}
    hints = _field_types(cls)
    for k, v in obj.items():
        kwargs[k] = _build(hints[k], v, f"{path}.{k}" if path else k)
    return cls(**kwargs)


def _field_types(cls) -> Dict[str, Any]:
    import typing

    out = {}
    for name, hint in typing.get_type_hints(cls).items():
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        out[name] = args[0] if args and dataclasses.is_dataclass(args[0]) else hint
    return out


def config_from_dict(obj: dict) -> ExperimentConfig:
    if "seed" not in obj:
        raise ConfigError(f"config must set a seed (or export {SEED_ENV})")
    obj = copy.deepcopy(obj)
    ds = obj.get("dataset")
    if isinstance(ds, dict) and "path" in ds and "synthetic" not in ds:
        ds["synthetic"] = None
    return _build(ExperimentConfig, obj, "").validate()


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(obj: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.key=value`` overrides (values parsed as TOML literals)."""
    obj = copy.deepcopy(obj)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = obj
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key}: {p} is not a table")
        node[parts[-1]] = _parse_value(value.strip())
    return obj


def read_config_file(path: str | Path) -> dict:
    p = Path(path)
    text = p.read_text()
    if p.suffix == ".json":
        return json.loads(text)
    return tomllib.loads(text)


def load_config(path: str | Path, overrides: Sequence[str] = (), env: Optional[Mapping] = None) -> ExperimentConfig:
    """Read a TOML/JSON config, apply CLI overrides, then ``SKEWKIT_SEED``."""
    obj = apply_overrides(read_config_file(path), overrides)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        obj["seed"] = int(env[SEED_ENV])
    return config_from_dict(obj)


# --------------------------------------------------------------------------
# Running


@dataclass
class RunArtifact:
    config: dict
    metrics: MetricsReport
    swa_metrics: Optional[MetricsReport] = None
    trace: List[dict] = field(default_factory=list)
    wall_clock: float = 0.0
    checkpoints: Dict[str, str] = field(default_factory=dict)
    n_swa_snapshots: int = 0
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return self.config["run_id"]

    def check(self) -> None:
        self.metrics.check()
        if self.swa_metrics is not None:
            self.swa_metrics.check()

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "metrics": self.metrics.to_json(),
            "swa_metrics": None if self.swa_metrics is None else self.swa_metrics.to_json(),
            "trace": self.trace,
            "wall_clock": self.wall_clock,
            "checkpoints": self.checkpoints,
            "n_swa_snapshots": self.n_swa_snapshots,
            "info": self.info,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunArtifact":
        swa = obj.get("swa_metrics")
        return cls(
            config=obj["config"],
            metrics=MetricsReport.from_json(obj["metrics"]),
            swa_metrics=None if swa is None else MetricsReport.from_json(swa),
            trace=obj.get("trace", []),
            wall_clock=obj.get("wall_clock", 0.0),
            checkpoints=obj.get("checkpoints", {}),
            n_swa_snapshots=obj.get("n_swa_snapshots", 0),
            info=obj.get("info", {}),
        )

    def write(self, path: str | Path) -> Path:
        self.check()
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunArtifact":
        return cls.from_json(json.loads(Path(path).read_text()))


def set_determinism(mode: str) -> None:
    if mode == "reproducible":
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)
    else:
        torch.use_deterministic_algorithms(False)


def _load_data(config: ExperimentConfig) -> Dict[str, Dataset]:
    ds = config.dataset
    if ds.synthetic is not None:
        s = ds.synthetic
        return D.make_synthetic_splits(
            s.priors, s.n_train, s.n_val, seed=s.seed,
            channels=s.channels, height=s.height, width=s.width, noise=s.noise, overlap=s.overlap,
        )
    splits = D.load_splits(ds.path)
    val = splits.get("validation", splits.get("val"))
    if "train" not in splits or val is None:
        raise ConfigError(f"dataset {ds.path} needs train and validation splits, has {sorted(splits)}")
    return {"train": splits["train"], "validation": val}


def prepare_data(config: ExperimentConfig) -> Dict[str, Dataset]:
    """Load, compose bands and normalize with training-split statistics."""
    splits = _load_data(config)
    if config.bands != "all":
        triple = BandTriple.parse(config.bands)
        splits = {k: D.compose_bands(v, triple) for k, v in splits.items()}
    if config.dataset.normalize:
        stats = D.compute_normalization(splits["train"])
        splits = {k: D.normalize(v, stats) for k, v in splits.items()}
    return splits


def _import_factory(spec: str):
    import importlib

    mod, _, attr = spec.partition(":")
    return getattr(importlib.import_module(mod), attr)


def build_model(config: ExperimentConfig, in_channels: int, num_classes: int, resolution: int):
    m = config.model
    if m.kind == "external":
        module = _import_factory(m.factory)(in_channels, num_classes)
        return module if hasattr(module, "snapshot") else ExternalClassifier(module, in_channels, num_classes)
    cfg = ReferenceCnnConfig(
        in_channels=in_channels,
        num_classes=num_classes,
        base_depth=m.depth,
        base_width=m.width,
        resolution=m.resolution or resolution,
        head=config.head(),
        scaling=ScalingConfig(m.alpha, m.beta, m.gamma, m.phi),
    )
    return build_reference_cnn(cfg)


def learning_rate(config: ExperimentConfig, t_epochs: float, step: int, epoch: int) -> float:
    if config.lr.mode == "clr":
        c = config.clr_config()
        lr = clr_value(step if c.step_unit == "iteration" else t_epochs, c)
    else:
        lr = config.lr.constant
    if config.drw.enabled and epoch >= config.drw.start_epoch:
        lr *= config.drw.lr_factor
    return lr


def _gan_balance(config: ExperimentConfig, train: Dataset, rng: np.random.Generator, run_dir: Path) -> Dataset:
    g = config.gan
    target = g.target_per_class
    counts = D.class_histogram(train).counts
    if g.generators_dir:
        generators = load_generators(g.generators_dir)
    else:
        generators = {}
        for j in range(train.K):
            if counts[j] >= target:
                continue
            gen, _ = train_class_generator(train, j, g.gan_config(train.image_shape[0]), rng)
            save_generator(gen, run_dir / "generators" / f"class_{j}", class_index=j)
            generators[j] = gen
    return balance_with_gan(train, generators, target, rng, g.truncate_majority)


def _evaluate(model, dataset: Dataset, batch_size: int) -> MetricsReport:
    preds = predict(model, dataset, batch_size)
    return MetricsReport.from_predictions(preds, dataset.labels, dataset.K)


def run_experiment(config: ExperimentConfig, out_dir: Optional[str | Path] = None, overwrite: bool = False) -> RunArtifact:
    """Train and evaluate one configuration; writes ``<out_dir>/<run_id>/artifact.json``."""
    config.validate()
    started = time.perf_counter()
    out_root = Path(out_dir if out_dir is not None else config.out_dir)
    run_dir = out_root / config.run_id
    if (run_dir / "artifact.json").exists() and not overwrite:
        raise ConfigError(f"run_id {config.run_id!r} already exists in {out_root}")
    run_dir.mkdir(parents=True, exist_ok=True)

    set_determinism(config.mode)
    ss = np.random.SeedSequence(config.seed)
    s_torch, s_sample, s_aug, s_gan = (int(s.generate_state(1)[0]) for s in ss.spawn(4))
    sample_rng = np.random.default_rng(s_sample)
    aug_rng = np.random.default_rng(s_aug)

    splits = prepare_data(config)
    train, val = splits["train"], splits["validation"]
    if config.gan.enabled:
        train = _gan_balance(config, train, np.random.default_rng(s_gan), run_dir)
    hist = D.class_histogram(train)
    if np.any(hist.counts == 0):
        raise ConfigError(f"training split lacks class(es) {np.flatnonzero(hist.counts == 0).tolist()}")

    with torch.random.fork_rng():
        torch.manual_seed(s_torch)
        model = build_model(config, train.image_shape[0], train.K, train.image_shape[1])
        artifact = _train(config, model, train, val, hist, sample_rng, aug_rng, run_dir)
    artifact.wall_clock = time.perf_counter() - started
    artifact.info.update(
        torch=torch.__version__,
        numpy=np.__version__,
        python=platform.python_version(),
        train_histogram=hist.tolist(),
        n_synthetic=int((train.provenance != 0).sum()),
        swa_start=config.swa_start() if config.swa.enabled else None,
        swa_cycle=config.swa_cycle() if config.swa.enabled else None,
        head=config.head(),
    )
    artifact.write(run_dir / "artifact.json")
    return artifact


def _train(config, model, train: Dataset, val: Dataset, hist, sample_rng, aug_rng, run_dir: Path) -> RunArtifact:
    opt_cfg = config.optimizer
    if opt_cfg.name == "adam":
        optimizer = torch.optim.Adam(model.parameters(), lr=config.lr.constant, weight_decay=opt_cfg.weight_decay)
    else:
        optimizer = torch.optim.SGD(
            model.parameters(), lr=config.lr.constant, momentum=opt_cfg.momentum, weight_decay=opt_cfg.weight_decay
        )

    ldam_cfg = LdamConfig(
        max_margin=config.ldam.max_margin,
        scale_s=config.ldam.scale_s,
        drw_start_epoch=config.drw.start_epoch if config.drw.enabled else None,
        drw_beta=config.drw.beta,
        drw_reweight=config.drw.reweight,
    )
    margins = ldam_margins(hist, ldam_cfg) if config.loss == "ldam" else None
    scale = config.ldam.scale_s if config.head() == "cosine" else 1.0
    static_weights = class_weights_for(config.reweight, hist, config.effective_number_beta)

    swa_state = SwaState()
    swa_start, swa_cycle = config.swa_start(), config.swa_cycle()
    trace = []
    step = 0
    labels = train.labels
    for epoch in range(config.epochs):
        weights = drw_class_weights(epoch, ldam_cfg, hist) if config.drw.enabled else static_weights
        spec = LossSpec(config.loss, margins=margins, scale_s=scale, class_weights=weights)
        order = epoch_indices(config.sampler, hist, labels, sample_rng)
        n_batches = int(math.ceil(order.size / config.batch_size))
        model.train()
        total, seen = 0.0, 0
        for b in range(n_batches):
            lr = learning_rate(config, epoch + b / n_batches, step, epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            x = np.stack([D.augment_array(train.pixels[i], aug_rng, config.augment) for i in idx])
            xb = torch.from_numpy(x)
            yb = torch.from_numpy(labels[idx])
            loss = batch_loss(model(xb), yb, spec)
            if not torch.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss at epoch {epoch}, batch {b}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * idx.size
            seen += idx.size
            step += 1
        completed = epoch + 1
        captured = False
        if config.swa.enabled and swa_capture_points(completed, swa_start, swa_cycle):
            swa_state = swa_update(swa_state, model.snapshot())
            captured = True
        report = _evaluate(model, val, config.eval_batch_size)
        trace.append(
            {
                "epoch": epoch,
                "train_loss": total / max(seen, 1),
                "lr_end": lr,
                "drw_active": bool(config.drw.enabled and drw_active(epoch, ldam_cfg)),
                "swa_captured": captured,
                "val_acc": report.validation_accuracy,
                "bal_acc": report.balanced_accuracy,
                "icv": report.icv,
            }
        )
        log.info("epoch %d loss %.4f val_acc %.4f bal_acc %.4f icv %.4f", epoch, trace[-1]["train_loss"],
                 report.validation_accuracy, report.balanced_accuracy, report.icv)

    final = _evaluate(model, val, config.eval_batch_size)
    checkpoints = {"final": str(save_checkpoint(model, run_dir / "final"))}
    swa_report = None
    if swa_state.n_snapshots:
        swa_model = copy.deepcopy(model)
        swa_model.load_snapshot(swa_state.averaged)
        recalibrate_running_stats(swa_model, train, config.eval_batch_size)
        swa_report = _evaluate(swa_model, val, config.eval_batch_size)
        checkpoints["swa"] = str(save_checkpoint(swa_model, run_dir / "swa"))
    return RunArtifact(
        config=config.to_dict(),
        metrics=final,
        swa_metrics=swa_report,
        trace=trace,
        checkpoints=checkpoints,
        n_swa_snapshots=swa_state.n_snapshots,
    )


# --------------------------------------------------------------------------
# Reports


def _fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".10g")


def report_rows(artifacts: Sequence[RunArtifact]) -> List[dict]:
    """One row per artifact (final weights) plus ``<run_id>:swa`` for averaged weights."""
    ids = [a.run_id for a in artifacts]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise ValueError(f"duplicate run_id(s): {dup}")
    rows = []
    for a in artifacts:
        reports = [(a.run_id, a.metrics)]
        if a.swa_metrics is not None:
            reports.append((f"{a.run_id}:swa", a.swa_metrics))
        for rid, m in reports:
            m.check()
            rows.append({"run_id": rid, "val_acc": m.validation_accuracy, "bal_acc": m.balanced_accuracy,
                         "icv": m.icv, "recalls": list(m.per_class_recall)})
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    K = max(len(r["recalls"]) for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_id", "val_acc", "bal_acc", "icv"] + [f"recall_{j}" for j in range(K)])
    for r in rows:
        rec = list(r["recalls"]) + [None] * (K - len(r["recalls"]))
        w.writerow([r["run_id"], _fmt(r["val_acc"]), _fmt(r["bal_acc"]), _fmt(r["icv"])] + [_fmt(v) for v in rec])
    return buf.getvalue()


def csv_to_rows(text: str) -> List[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    K = len(header) - 4
    rows = []
    for rec in reader:
        num = [math.nan if v == "" else float(v) for v in rec[1:]]
        rows.append({"run_id": rec[0], "val_acc": num[0], "bal_acc": num[1], "icv": num[2], "recalls": num[3 : 3 + K]})
    return rows


def rows_to_markdown(rows: Sequence[dict]) -> str:
    K = max(len(r["recalls"]) for r in rows)
    head = ["run_id", "ValAcc", "BalAcc", "ICV"] + [f"Recall {j}" for j in range(K)]
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join(["---"] * len(head)) + "|"]
    for r in rows:
        vals = [r["val_acc"], r["bal_acc"], r["icv"]] + list(r["recalls"])
        lines.append("| " + " | ".join([r["run_id"]] + ["" if math.isnan(v) else f"{v:.4f}" for v in vals]) + " |")
    return "\n".join(lines) + "\n"


def emit_report(artifacts: Sequence[RunArtifact], out_dir: str | Path, plots: bool = False) -> Dict[str, Path]:
    """Write the results table (CSV + markdown) and the two scatter datasets."""
    if not artifacts:
        raise ValueError("need at least one artifact")
    rows = report_rows(artifacts)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "table_csv": out / "metrics.csv",
        "table_md": out / "metrics.md",
        "scatter_val_acc": out / "scatter_val_acc_icv.csv",
        "scatter_bal_acc": out / "scatter_bal_acc_icv.csv",
    }
    files["table_csv"].write_text(rows_to_csv(rows))
    files["table_md"].write_text(rows_to_markdown(rows))
    for key, col in (("scatter_val_acc", "val_acc"), ("scatter_bal_acc", "bal_acc")):
        lines = [f"run_id,{col},icv"] + [f"{r['run_id']},{_fmt(r[col])},{_fmt(r['icv'])}" for r in rows]
        files[key].write_text("\n".join(lines) + "\n")
    if plots:
        files.update(_plot_scatter(rows, out))
    return files


def _plot_scatter(rows, out: Path) -> Dict[str, Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = {}
    for col, label in (("val_acc", "Validation accuracy"), ("bal_acc", "Balanced validation accuracy")):
        fig, ax = plt.subplots(figsize=(7, 5))
        for r in rows:
            ax.scatter(r["icv"], r[col])
            ax.annotate(r["run_id"], (r["icv"], r[col]), fontsize=7)
        ax.set_xlabel("Intra-class variance")
        ax.set_ylabel(label)
        path = out / f"scatter_{col}_icv.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made[f"plot_{col}"] = path
    return made


def load_artifacts(runs_dir: str | Path) -> List[RunArtifact]:
    paths = sorted(Path(runs_dir).glob("*/artifact.json"))
    if not paths:
        raise FileNotFoundError(f"no */artifact.json under {runs_dir}")
    return [RunArtifact.read(p) for p in paths]


# --------------------------------------------------------------------------
# Published results

@dataclass(frozen=True)
class PublishedRow:
    label: str
    val_acc: float
    recalls: tuple
    bal_acc: float
    icv: float
    # bal_acc and icv printed in swapped columns
    transposed: bool = False


PUBLISHED_ROWS = (
    PublishedRow("resnet50-ce", 0.7465, (0.9102, 0.4198, 0.5511, 0.5682), 0.6123, 0.4510),
    PublishedRow("resnet50-sampler-ce", 0.7184, (0.8154, 0.5818, 0.5014, 0.6880), 0.6467, 0.2757),
    PublishedRow("resnet50-clr-sampler-ldam-drw", 0.7022, (0.7792, 0.5719, 0.5780, 0.6334), 0.2076, 0.6406, transposed=True),
    PublishedRow("effnetb4-ce", 0.7630, (0.9199, 0.4114, 0.5739, 0.6469), 0.6380, 0.4443),
    PublishedRow("effnetb4-clr-sampler-ldam-drw", 0.7196, (0.7867, 0.5900, 0.5648, 0.7699), 0.6779, 0.2185),
    PublishedRow("effnetb4-swa-clr-sampler-ldam-drw", 0.7292, (0.8098, 0.6017, 0.5409, 0.7436), 0.6740, 0.2417),
    PublishedRow("effnetb4-swa-clr-sampler-ldam-drw-652", 0.7441, (0.8156, 0.5941, 0.6138, 0.7584), 0.6955, 0.2115),
    PublishedRow("effnetb4-sampler-ce-gan", 0.67, (0.6815, 0.6619, 0.6258, 0.7521), 0.6803, 0.0942),
    PublishedRow("effnetb4-swa-clr-sampler-ldam-drw-gan", 0.70, (0.7459, 0.5842, 0.5540, 0.7436), 0.6569, 0.1967),
)


@dataclass
class TableCheck:
    label: str
    bal_acc: float
    icv: float
    printed_bal_acc: float
    printed_icv: float
    status: str  # "pass", "fail" or "transposed"

    def line(self) -> str:
        return (f"{self.status.upper():10s} {self.label:40s} bal_acc {self.bal_acc:.4f} (printed {self.printed_bal_acc:.4f})"
                f"  icv {self.icv:.4f} (printed {self.printed_icv:.4f})")


def verify_tables(rows: Sequence[PublishedRow] = PUBLISHED_ROWS, tol: float = 5e-4) -> List[TableCheck]:
    """Recompute balanced accuracy and ICV for each published row."""
    out = []
    for r in rows:
        m = MetricsReport.from_recalls(r.val_acc, r.recalls)
        direct = abs(m.balanced_accuracy - r.bal_acc) <= tol and abs(m.icv - r.icv) <= tol
        swapped = abs(m.balanced_accuracy - r.icv) <= tol and abs(m.icv - r.bal_acc) <= tol
        if direct:
            status = "pass"
        elif r.transposed and swapped:
            status = "transposed"
        else:
            status = "fail"
        out.append(TableCheck(r.label, m.balanced_accuracy, m.icv, r.bal_acc, r.icv, status))
    return out


def published_artifacts(rows: Sequence[PublishedRow] = PUBLISHED_ROWS) -> List[RunArtifact]:
    """Wrap published rows as artifacts so they flow through ``emit_report``."""
    return [
        RunArtifact(config={"run_id": r.label}, metrics=MetricsReport.from_recalls(r.val_acc, r.recalls))
        for r in rows
    ]
