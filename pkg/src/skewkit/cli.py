"""``skewkit`` command line."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import data as D
from . import gan as G
from . import harness as H

log = logging.getLogger("skewkit")


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


# -- dataset -----------------------------------------------------------------


def cmd_make_synthetic(args) -> int:
    priors = tuple(_floats(args.priors))
    common = dict(channels=args.channels, height=args.height, width=args.width, noise=args.noise, overlap=args.overlap)
    if args.val_size:
        splits = D.make_synthetic_splits(priors, args.size, args.val_size, seed=args.seed, **common)
    else:
        spec = D.SyntheticSpec(priors=priors, size=args.size, seed=args.seed, **common)
        splits = {"train": D.make_synthetic_imbalanced(spec)}
    path = D.save_dataset(splits, args.out)
    print(f"wrote {path}")
    return 0


def cmd_stats(args) -> int:
    manifest = D.read_manifest(args.dir)
    print(f"K = {manifest['K']}  bands = {','.join(manifest['band_ids'])}  image = {manifest['image_shape']}")
    for name, ds in D.load_splits(args.dir).items():
        hist = D.class_histogram(ds)
        frac = hist.counts / hist.total
        synth = int((ds.provenance != 0).sum())
        print(f"{name:12s} n={len(ds):7d}  counts={hist.tolist()}  fractions={np.round(frac, 4).tolist()}  gan-synthetic={synth}")
        if name == "train":
            st = D.compute_normalization(ds)
            print(f"{'':12s} mean={np.round(st.mean, 4).tolist()}")
            print(f"{'':12s} std ={np.round(st.std, 4).tolist()}")
    return 0


def cmd_compose(args) -> int:
    triple = D.BandTriple.parse(args.bands)
    splits = {k: D.compose_bands(v, triple) for k, v in D.load_splits(args.dir).items()}
    print(f"wrote {D.save_dataset(splits, args.out)}")
    return 0


# -- experiments ---------------------------------------------------------------


def _run_one(path: str, overrides: List[str], out: Optional[str], overwrite: bool) -> dict:
    cfg = H.load_config(path, overrides)
    art = H.run_experiment(cfg, out, overwrite=overwrite)
    return {"run_id": art.run_id, "metrics": art.metrics.to_json(),
            "swa_metrics": None if art.swa_metrics is None else art.swa_metrics.to_json()}


def _print_result(res: dict) -> None:
    for key in ("metrics", "swa_metrics"):
        m = res[key]
        if m is None:
            continue
        tag = res["run_id"] + (":swa" if key == "swa_metrics" else "")
        rec = ", ".join("-" if r is None else f"{r:.4f}" for r in m["per_class_recall"])
        print(f"{tag}: val_acc {m['validation_accuracy']:.4f}  bal_acc {m['balanced_accuracy']:.4f}  "
              f"icv {m['icv']:.4f}  recall [{rec}]")


def cmd_run(args) -> int:
    _print_result(_run_one(args.config, args.set or [], args.out, args.overwrite))
    return 0


def cmd_sweep(args) -> int:
    configs = sorted(p for p in Path(args.configs_dir).iterdir() if p.suffix in (".toml", ".json"))
    if not configs:
        print(f"no .toml/.json configs in {args.configs_dir}", file=sys.stderr)
        return 2
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, [str(c) for c in configs], [args.set or []] * len(configs),
                                    [args.out] * len(configs), [args.overwrite] * len(configs)))
    else:
        results = [_run_one(str(c), args.set or [], args.out, args.overwrite) for c in configs]
    for r in results:
        _print_result(r)
    return 0


def cmd_report(args) -> int:
    files = H.emit_report(H.load_artifacts(args.runs_dir), args.out, plots=args.plots)
    for p in files.values():
        print(f"wrote {p}")
    return 0


def cmd_verify(args) -> int:
    checks = H.verify_tables(tol=args.tol)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if c.status == "fail"]
    flagged = [c for c in checks if c.status == "transposed"]
    print(f"{len(checks) - len(failed) - len(flagged)} pass, {len(flagged)} transposed, {len(failed)} fail")
    return 1 if failed else 0


# -- gan -----------------------------------------------------------------------


def _gan_config(path: Optional[str], overrides: List[str]) -> G.GanConfig:
    obj = H.read_config_file(path) if path else {}
    obj = obj.get("gan", obj)
    obj = H.apply_overrides(obj, overrides)
    return G.GanConfig(**obj)


def cmd_gan_train(args) -> int:
    cfg = _gan_config(args.config, args.set or [])
    ds = D.load_dataset(args.dataset, args.split)
    if args.bands:
        ds = D.compose_bands(ds, args.bands)
    gen, glog = G.train_class_generator(ds, args.class_index, cfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    G.save_generator(gen, out / f"class_{args.class_index}", class_index=args.class_index)
    (out / f"train_log_class_{args.class_index}.json").write_text(json.dumps(
        {"generator_loss": glog.generator_loss, "discriminator_loss": glog.discriminator_loss,
         "discriminator_accuracy": glog.discriminator_accuracy,
         "iterations_per_epoch": glog.iterations_per_epoch}) + "\n")
    print(f"class {args.class_index}: {cfg.epochs} epochs x {glog.iterations_per_epoch} iterations, final G {glog.generator_loss[-1]:.4f} "
          f"D {glog.discriminator_loss[-1]:.4f}; wrote {out}")
    return 0


def cmd_gan_balance(args) -> int:
    splits = D.load_splits(args.dataset)
    gens = G.load_generators(args.generators)
    splits[args.split] = G.balance_with_gan(splits[args.split], gens, args.target, args.seed, args.truncate_majority)
    path = D.save_dataset(splits, args.out)
    print(f"{args.split}: counts {D.class_histogram(splits[args.split]).tolist()}; wrote {path}")
    return 0


def cmd_gan_grid(args) -> int:
    gen = G.load_generator(args.generator)
    print(f"wrote {G.export_sample_grid(gen, args.rows, args.cols, args.out, args.seed)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewkit", description="Imbalanced multi-spectral classification toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset").add_subparsers(dest="dataset_command", required=True)
    mk = ds.add_parser("make-synthetic")
    mk.add_argument("--priors", default="0.6,0.15,0.15,0.1")
    mk.add_argument("--size", type=int, required=True)
    mk.add_argument("--val-size", type=int, default=0, help="also write a validation split of this size")
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("--channels", type=int, default=10)
    mk.add_argument("--height", type=int, default=65)
    mk.add_argument("--width", type=int, default=65)
    mk.add_argument("--noise", type=float, default=1.0)
    mk.add_argument("--overlap", type=float, default=0.35)
    mk.add_argument("--out", required=True)
    mk.set_defaults(func=cmd_make_synthetic)
    st = ds.add_parser("stats")
    st.add_argument("dir")
    st.set_defaults(func=cmd_stats)
    co = ds.add_parser("compose")
    co.add_argument("--bands", required=True)
    co.add_argument("dir")
    co.add_argument("out")
    co.set_defaults(func=cmd_compose)

    def run_opts(sp):
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
        sp.add_argument("--out", help="output directory (default: config out_dir)")
        sp.add_argument("--overwrite", action="store_true")

    r = sub.add_parser("run")
    r.add_argument("config")
    run_opts(r)
    r.set_defaults(func=cmd_run)
    sw = sub.add_parser("sweep")
    sw.add_argument("configs_dir")
    sw.add_argument("--jobs", type=int, default=1)
    run_opts(sw)
    sw.set_defaults(func=cmd_sweep)
    rep = sub.add_parser("report")
    rep.add_argument("runs_dir")
    rep.add_argument("--out", required=True)
    rep.add_argument("--plots", action="store_true")
    rep.set_defaults(func=cmd_report)
    v = sub.add_parser("verify-tables")
    v.add_argument("--tol", type=float, default=5e-4)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gan").add_subparsers(dest="gan_command", required=True)
    gt = g.add_parser("train")
    gt.add_argument("--class", dest="class_index", type=int, required=True)
    gt.add_argument("--config")
    gt.add_argument("--set", action="append", metavar="KEY=VALUE")
    gt.add_argument("--dataset", required=True)
    gt.add_argument("--split", default="train")
    gt.add_argument("--bands", help="compose this triple first, e.g. 6,5,2")
    gt.add_argument("--seed", type=int, default=0)
    gt.add_argument("--out", required=True)
    gt.set_defaults(func=cmd_gan_train)
    gb = g.add_parser("balance")
    gb.add_argument("--target", type=int, required=True)
    gb.add_argument("--generators", required=True)
    gb.add_argument("--split", default="train")
    gb.add_argument("--truncate-majority", action="store_true")
    gb.add_argument("--seed", type=int, default=0)
    gb.add_argument("dataset")
    gb.add_argument("out")
    gb.set_defaults(func=cmd_gan_balance)
    gg = g.add_parser("grid")
    gg.add_argument("--rows", type=int, required=True)
    gg.add_argument("--cols", type=int, required=True)
    gg.add_argument("--generator", required=True)
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("out")
    gg.set_defaults(func=cmd_gan_grid)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, OSError, RuntimeError) as exc:
        print(f"skewkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
