"""``rgl`` command line: synthetic data, training, attacks, margin profiles, augmentation.

Every command writes ``manifest.json`` next to its outputs. Exit codes:
0 success, 2 usage or configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import BoxBounds, deepfool, perceptibility_bounds, sparsefool
from .errors import (ConfigError, DegenerateDirectionError, FormatError, ParameterError,
                     TrainingError)
from .io import atomic_write_bytes, load_idx, load_image, load_tensor, save_image, save_tensor
from .margins import margin_profile, records_csv, summary_csv
from .models import Classifier, load_model, save_model, train
from .prime import PRESETS, augment_dataset_offline, config_to_dict, parse_config
from .primitives import (additive_noise, color_transform, spatial_sigma_max, spatial_transform,
                         spectral_transform)
from .rng import RngStream
from .spectral import (band_filter, canonical_axis, dct_block_partition, dct_diagonal_subspaces,
                       freq_flip, orthogonal_complement, random_subspace, subspace_energy)
from .synthetic import gen_t1, gen_t2

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _write_manifest(out: Path, command: str, params: dict, seed, inputs, outputs, started):
    manifest = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    atomic_write_bytes(out / "manifest.json", (json.dumps(manifest, indent=2) + "\n").encode())


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_bytes(path, buf.getvalue().encode())


def _g(v):
    return format(float(v), ".9g")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_xy(args):
    """Flattened samples and labels from ``--data`` or an IDX pair."""
    if args.data:
        d = Path(args.data)
        x = load_tensor(d / "x.mrtk").astype(np.float64)
        y = load_tensor(d / "y.mrtk").astype(np.int64) if (d / "y.mrtk").exists() else None
        inputs = [d]
    elif getattr(args, "idx_images", None) and getattr(args, "idx_labels", None):
        x, y = load_idx(args.idx_images, args.idx_labels)
        inputs = [Path(args.idx_images), Path(args.idx_labels)]
    else:
        raise UsageError("give --data DIR or --idx-images/--idx-labels")
    return x, y, inputs


# -- gen-synth ------------------------------------------------------------------

def cmd_gen_synth(args):
    started = time.perf_counter()
    rng = RngStream(args.seed)
    if args.kind == "t1":
        ds = gen_t1(args.eps, args.sigma, args.n, args.dim, rng, gap=args.gap)
    else:
        if args.rho is None:
            raise UsageError("t2 requires --rho")
        ds = gen_t2(args.rho, args.eps, args.sigma, args.lattice, args.n, args.dim, rng,
                    gap=args.gap)
    out = _outdir(args.out)
    files = [out / "x.mrtk", out / "y.mrtk", out / "u.mrtk"]
    for path, arr in zip(files, (ds.x, ds.y, ds.rotation)):
        save_tensor(path, arr)
    _write_manifest(out, "gen-synth", {**ds.params, "n": args.n, "dim": args.dim}, args.seed,
                    [], files, started)


# -- train ----------------------------------------------------------------------

def cmd_train(args):
    started = time.perf_counter()
    x, y, inputs = _load_xy(args)
    if y is None:
        raise UsageError("training data needs labels (y.mrtk)")
    x = x.reshape(len(x), -1)
    if args.input_dim is not None and args.input_dim != x.shape[1]:
        raise UsageError(f"--input-dim {args.input_dim} does not match data dimension {x.shape[1]}")
    binary = set(np.unique(y).tolist()) <= {-1, 1}
    outputs = 1 if binary else int(y.max()) + 1
    rng = RngStream(args.seed)
    hidden = [] if args.arch == "logistic" else [args.width] * args.depth
    model = Classifier.mlp(x.shape[1], hidden, outputs, rng.split(0))
    report = train(model, x, y, rng.split(1), epochs=args.epochs, lr_max=args.lr,
                   batch_size=args.batch_size, standardize=args.standardize)
    out = _outdir(args.out)
    save_model(report.model, out / "model")
    _write_csv(out / "losses.csv", ["epoch", "loss"],
               ([e, _g(v)] for e, v in enumerate(report.epoch_losses)))
    params = {"arch": args.arch, "hidden": hidden, "epochs": args.epochs, "lr": args.lr,
              "batch_size": args.batch_size, "standardize": args.standardize,
              "train_accuracy": report.train_accuracy}
    _write_manifest(out, "train", params, args.seed, inputs, [out / "model", out / "losses.csv"],
                    started)


# -- attack ---------------------------------------------------------------------

def _model_and_data(args):
    model = load_model(args.model)
    x, _, inputs = _load_xy(args)
    x = x.reshape(len(x), -1)
    if x.shape[1] != model.input_dim:
        raise UsageError(f"model expects dimension {model.input_dim}, data has {x.shape[1]}")
    if args.limit is not None:
        x = x[:args.limit]
    return model, x, inputs + [Path(args.model)]


def cmd_attack(args):
    started = time.perf_counter()
    model, x, inputs = _model_and_data(args)
    out = _outdir(args.out)
    rows, deltas = [], []
    for i, xi in enumerate(x):
        if args.mode == "deepfool":
            res = deepfool(model, xi, args.max_iter, args.overshoot)
        else:
            if args.alpha is not None:
                bounds = perceptibility_bounds(xi, args.alpha, args.range_min, args.range_max)
            elif args.box:
                bounds = BoxBounds(np.full(xi.size, args.range_min), np.full(xi.size, args.range_max))
            else:
                bounds = None
            res = sparsefool(model, xi, args.lam, bounds, args.max_outer, max_iter=args.max_iter,
                             overshoot=args.overshoot)
        rows.append([i, int(res.success), res.l0, _g(res.l2), res.iterations])
        deltas.append(res.delta)
    files = [out / "results.csv"]
    _write_csv(files[0], ["sample", "success", "l0", "l2", "iterations"], rows)
    if args.save_perturbations:
        files.append(out / "perturbations.mrtk")
        save_tensor(files[-1], np.asarray(deltas))
    params = {k: getattr(args, k) for k in ("mode", "lam", "alpha", "range_min", "range_max", "box",
                                            "max_outer", "max_iter", "overshoot", "limit")}
    _write_manifest(out, "attack", params, None, inputs, files, started)


# -- profile --------------------------------------------------------------------

def _synthetic_family(args, dim):
    if not args.data or not (Path(args.data) / "u.mrtk").exists():
        raise UsageError("the synthetic family needs a --data directory holding u.mrtk")
    u = load_tensor(Path(args.data) / "u.mrtk").astype(np.float64)
    if u.shape != (dim, dim):
        raise UsageError(f"u.mrtk has shape {u.shape}, expected ({dim}, {dim})")
    u1 = u[:, 0]
    rng = RngStream(args.seed)
    return [canonical_axis(u1, "u1"), orthogonal_complement([u1], "span_u1_perp"),
            random_subspace(rng.split(0), dim, args.orth_dim, orthogonal_to=[u1], label="orth"),
            random_subspace(rng.split(1), dim, args.rand_dim, label="rand")]


def _image_shape(args, dim):
    if args.shape:
        shape = tuple(int(s) for s in args.shape.split(","))
    else:
        raise UsageError("--shape C,H,W is required for DCT families")
    if len(shape) != 3 or int(np.prod(shape)) != dim:
        raise UsageError(f"shape {shape} is incompatible with data dimension {dim}")
    return shape


def cmd_profile(args):
    started = time.perf_counter()
    out = _outdir(args.out)
    if args.family == "energy":
        if not args.perturbation:
            raise UsageError("energy mode needs --perturbation FILE")
        deltas = load_tensor(args.perturbation).astype(np.float64)
        deltas = deltas.reshape(-1, deltas.shape[-1]) if deltas.ndim <= 2 else deltas
        deltas = deltas.reshape(len(deltas), -1)
        c, h, w = _image_shape(args, deltas.shape[1])
        family = dct_block_partition(h, w, c, args.block)
        rows = []
        for i, d in enumerate(deltas):
            e = subspace_energy(d, family)
            rows += [[i, j, family[j].start_index, _g(v)] for j, v in enumerate(e)]
        files = [out / "energy.csv"]
        _write_csv(files[0], ["sample", "subspace_index", "start_index", "energy"], rows)
        _write_manifest(out, "profile", {"family": "energy", "block": args.block, "shape": [c, h, w]},
                        None, [Path(args.perturbation)], files, started)
        return
    model, x, inputs = _model_and_data(args)
    if args.family == "synthetic":
        family = _synthetic_family(args, x.shape[1])
    else:
        if args.window is None or args.step is None:
            raise UsageError("the diagonal family needs --window and --step")
        c, h, w = _image_shape(args, x.shape[1])
        if args.window > min(h, w):
            raise UsageError(f"--window {args.window} exceeds image side {min(h, w)}")
        family = dct_diagonal_subspaces(h, w, c, args.window, args.step)
    records, summaries = margin_profile(model, x, family, max_iter=args.max_iter,
                                        overshoot=args.overshoot, refine=not args.no_refine)
    files = [out / "summary.csv", out / "samples.csv"]
    atomic_write_bytes(files[0], summary_csv(summaries).encode())
    atomic_write_bytes(files[1], records_csv(records).encode())
    params = {"family": args.family, "subspaces": [s.label for s in family],
              "window": args.window, "step": args.step, "orth_dim": args.orth_dim,
              "rand_dim": args.rand_dim, "refine": not args.no_refine, "limit": args.limit}
    _write_manifest(out, "profile", params, args.seed, inputs, files, started)


# -- augment / transform -------------------------------------------------------------

def _load_config(args):
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise OSError(f"{path}: {exc.strerror}") from None
        try:
            return parse_config(text)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return PRESETS[args.preset]()


def cmd_augment(args):
    started = time.perf_counter()
    cfg = _load_config(args)
    src = Path(args.input)
    paths = sorted(src.glob("*.png")) if src.is_dir() else [src]
    if not paths:
        raise UsageError(f"no PNG files in {src}")
    images = [load_image(p) for p in paths]
    outputs = augment_dataset_offline(images, args.k, cfg, args.seed)
    out = _outdir(args.out)
    files = []
    per = args.k + 1
    for idx, path in enumerate(paths):
        for c in range(per):
            target = out / f"{path.stem}.aug{c}.png"
            save_image(target, outputs[idx * per + c])
            files.append(target.name)
    _write_manifest(out, "augment", {"k": args.k, "config": config_to_dict(cfg)}, args.seed,
                    paths, files, started)


def cmd_transform(args):
    started = time.perf_counter()
    src = Path(args.input)
    x = load_tensor(src).astype(np.float64) if src.suffix == ".mrtk" else load_image(src)
    rng = RngStream(args.seed)
    if args.op == "freq-flip":
        y = freq_flip(x)
    elif args.op in ("lowpass", "highpass"):
        y = band_filter(x, args.op, args.square)
    elif args.op == "spectral":
        y = spectral_transform(x, args.kernel_size, args.sigma, rng)
    elif args.op == "spatial":
        bound = spatial_sigma_max(args.cut_frequency)
        y = spatial_transform(x, args.cut_frequency, args.sigma, rng, max_sigma=bound)
    elif args.op == "color":
        y = color_transform(x, args.max_frequency, args.sigma, args.band, rng)
    else:
        y = additive_noise(x, args.sigma, rng, enabled=True)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.raw:
        save_tensor(out.with_suffix(".mrtk"), y)
    save_image(out, y)
    params = {k: getattr(args, k) for k in ("op", "square", "kernel_size", "cut_frequency",
                                            "max_frequency", "band", "sigma")}
    _write_manifest(out.parent, "transform", params, args.seed, [Path(args.input)], [out], started)


# -- argument parsing -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rgl", description="Synthetic data, training, attacks, "
                                "margin profiles and image augmentation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="generate a T1/T2 synthetic dataset")
    g.add_argument("--kind", choices=["t1", "t2"], required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--n", type=int, default=10000)
    g.add_argument("--dim", type=int, default=100)
    g.add_argument("--rho", type=float)
    g.add_argument("--lattice", type=int, default=3)
    g.add_argument("--gap", action="store_true",
                   help="read --eps as the distance between the class means")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_synth)

    def data_flags(q):
        q.add_argument("--data", help="directory with x.mrtk (and y.mrtk, u.mrtk)")
        q.add_argument("--idx-images")
        q.add_argument("--idx-labels")

    t = sub.add_parser("train", help="train a logistic model or MLP with SGD")
    data_flags(t)
    t.add_argument("--arch", choices=["logistic", "mlp"], default="logistic")
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--width", type=int, default=100)
    t.add_argument("--input-dim", type=int)
    t.add_argument("--epochs", type=int, default=500)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--batch-size", type=int, default=128)
    t.add_argument("--standardize", action="store_true")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    def attack_flags(q):
        q.add_argument("--model", required=True, help="checkpoint directory")
        data_flags(q)
        q.add_argument("--limit", type=int, help="only the first N samples")
        q.add_argument("--max-iter", type=int, default=50)
        q.add_argument("--overshoot", type=float, default=0.02)
        q.add_argument("--out", required=True)

    a = sub.add_parser("attack", help="DeepFool or SparseFool on every sample")
    a.add_argument("--mode", choices=["deepfool", "sparsefool"], required=True)
    attack_flags(a)
    a.add_argument("--lam", type=float, default=3.0)
    a.add_argument("--alpha", type=float, help="perceptibility half-width")
    a.add_argument("--box", action="store_true", help="clip to [--range-min, --range-max]")
    a.add_argument("--range-min", type=float, default=0.0)
    a.add_argument("--range-max", type=float, default=1.0)
    a.add_argument("--max-outer", type=int, default=50)
    a.add_argument("--save-perturbations", action="store_true")
    a.set_defaults(func=cmd_attack)

    r = sub.add_parser("profile", help="margin profile over a subspace family")
    r.add_argument("--family", choices=["synthetic", "diagonal", "energy"], required=True)
    r.add_argument("--model")
    data_flags(r)
    r.add_argument("--limit", type=int)
    r.add_argument("--shape", help="C,H,W of image data")
    r.add_argument("--window", type=int)
    r.add_argument("--step", type=int)
    r.add_argument("--block", type=int, default=8)
    r.add_argument("--orth-dim", type=int, default=3)
    r.add_argument("--rand-dim", type=int, default=3)
    r.add_argument("--perturbation")
    r.add_argument("--max-iter", type=int, default=50)
    r.add_argument("--overshoot", type=float, default=0.02)
    r.add_argument("--no-refine", action="store_true",
                   help="report raw DeepFool distances without bisection")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_profile)

    m = sub.add_parser("augment", help="offline PRIME augmentation of a PNG folder")
    m.add_argument("--input", required=True)
    m.add_argument("--config")
    m.add_argument("--preset", choices=sorted(PRESETS), default="small")
    m.add_argument("--k", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_augment)

    x = sub.add_parser("transform", help="apply one primitive or spectral tool to an image")
    x.add_argument("--input", required=True, help="PNG, or an MRTK tensor written by --raw")
    x.add_argument("--output", required=True)
    ops = x.add_mutually_exclusive_group(required=True)
    ops.add_argument("--freq-flip", dest="op", action="store_const", const="freq-flip")
    ops.add_argument("--lowpass", dest="square_low", type=int, metavar="SQUARE")
    ops.add_argument("--highpass", dest="square_high", type=int, metavar="SQUARE")
    for name in ("spectral", "spatial", "color", "additive"):
        ops.add_argument(f"--{name}", dest="op", action="store_const", const=name)
    x.add_argument("--kernel-size", type=int, default=3)
    x.add_argument("--cut-frequency", type=int, default=10)
    x.add_argument("--max-frequency", type=int, default=10)
    x.add_argument("--band", type=int)
    x.add_argument("--sigma", type=float, default=0.0)
    x.add_argument("--raw", action="store_true", help="also write the float result as MRTK")
    x.add_argument("--seed", type=int, default=0)
    x.set_defaults(func=cmd_transform, op=None, square=None)
    return p


def _normalize_transform(args):
    if args.command != "transform":
        return
    if args.square_low is not None:
        args.op, args.square = "lowpass", args.square_low
    elif args.square_high is not None:
        args.op, args.square = "highpass", args.square_high


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _normalize_transform(args)
    try:
        args.func(args)
    except (UsageError, ParameterError, ConfigError) as exc:
        print(f"rgl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, DegenerateDirectionError, FloatingPointError) as exc:
        print(f"rgl {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, OSError) as exc:
        print(f"rgl {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
