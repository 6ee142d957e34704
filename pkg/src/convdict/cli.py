"""Command-line front end.

Subcommands: split, ist-demo, neuron-demo, csc-verify, train, eval,
sweep.  Exit codes are a stable contract:

    0  success (including runs whose report rows carry failure flags)
    2  usage or configuration violations (bad flags, bad config keys,
       malformed input files)
    3  infeasible requests or empty corpora
    4  violated mathematical preconditions
    5  numerical failures (divergence, singular systems, equivalence or
       recovery violations)

Config files are JSON with a fixed key set per subcommand; unknown keys
are rejected and every path is resolved relative to the config file.
All CSV and manifest output is byte-deterministic for a fixed config
and seed, and --threads only changes wall time, never results.
"""

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .coherency import spatial_coherency
from .csc import synthesize_instance, verify_stability
from .errors import (
    DimensionError,
    FormatError,
    PreconditionError,
    SingularSystemError,
    SynthesisError,
    TrainingDiverged,
)
from .conv_algebra import learning_dictionary
from .neuron import gd_step, initial_state, soft_form_step, spectral_scaled
from .proximal import ist_solve, lasso_kkt_residual, soft_nn, spectral_norm
from .sr.data import make_sr_pairs
from .sr.experiment import depth_means, evaluate_net, saturation_depth, SweepCell
from .sr.metrics import welch_t
from .sr.net import (
    NetworkConfig,
    init_net,
    load_params,
    receptive_field,
    save_params,
    train,
)
from .sr.pgm import load_pgm


class ConfigError(ValueError):
    """Configuration file violates the schema."""


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if np.isnan(f):
        return "nan"
    if np.isinf(f):
        return "inf" if f > 0 else "-inf"
    return format(f, ".12g")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _print_table(header, rows, out=sys.stdout):
    print("  ".join(header), file=out)
    for row in rows:
        print("  ".join(_fmt(v) for v in row), file=out)


def _write_meta(out_dir, config_echo):
    meta = {
        "config": config_echo,
        "versions": {
            "convdict": __version__,
            "numpy": np.__version__,
            "kernel_backend": BACKEND,
        },
    }
    with open(os.path.join(out_dir, "run_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# config schemas: key -> (kind, required, default); kind in
# int/float/str/path/int_list; paths are resolved against the config dir
_NET_KEYS = {
    "depth": ("int", True, None),
    "width": ("int", True, None),
    "kernel": ("int", False, 3),
    "skip_mode": ("str", False, "none"),
    "learning_rate": ("float", False, 0.05),
    "epochs": ("int", False, 1),
    "init_scale": ("float", False, 1.0),
}
_DATA_KEYS = {
    "images": ("path", True, None),
    "crop": ("int", True, None),
    "stride": ("int", True, None),
    "scale": ("int", False, 2),
    "out_dir": ("path", True, None),
}
_TRAIN_SCHEMA = {**_NET_KEYS, **_DATA_KEYS, "seed": ("int", True, None)}
_EVAL_SCHEMA = {
    **_DATA_KEYS,
    "params": ("path", True, None),
    "baseline_params": ("path", False, None),
}
_SWEEP_SCHEMA = {
    k: v for k, v in _TRAIN_SCHEMA.items() if k not in ("depth", "seed", "images")
}
_SWEEP_SCHEMA.update(
    {
        "images_high": ("path", True, None),
        "images_low": ("path", True, None),
        "depths": ("int_list", True, None),
        "seeds": ("int_list", True, None),
        "holdout": ("bool", False, False),
    }
)


def _coerce(key, kind, value, base):
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"key {key!r} must be a boolean")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key {key!r} must be an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key {key!r} must be a number")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"key {key!r} must be a string")
        return value
    if kind == "path":
        if not isinstance(value, str):
            raise ConfigError(f"key {key!r} must be a path string")
        return value if os.path.isabs(value) else os.path.join(base, value)
    if kind == "int_list":
        if (
            not isinstance(value, list)
            or not value
            or any(isinstance(v, bool) or not isinstance(v, int) for v in value)
        ):
            raise ConfigError(f"key {key!r} must be a non-empty list of integers")
        return [int(v) for v in value]
    raise AssertionError(kind)


def _load_config(path, schema):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = os.path.dirname(os.path.abspath(path))
    cfg = {}
    for key, (kind, required, default) in schema.items():
        if key in raw:
            cfg[key] = _coerce(key, kind, raw[key], base)
        elif required:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            cfg[key] = default
    return cfg, raw


def _load_corpus(path):
    """Images from a directory of PGMs or a manifest file (first token per line)."""
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.endswith(".pgm"))
        files = [os.path.join(path, n) for n in names]
    else:
        base = os.path.dirname(os.path.abspath(path))
        try:
            with open(path) as fh:
                lines = [ln.strip() for ln in fh if ln.strip()]
        except OSError as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        files = [os.path.join(base, ln.split()[0]) for ln in lines]
    if not files:
        raise SynthesisError(f"no images found under {path}")
    return [load_pgm(f) for f in files]


def _net_config(cfg, depth=None, seed=None):
    return NetworkConfig(
        depth=cfg["depth"] if depth is None else depth,
        width=cfg["width"],
        kernel=cfg["kernel"],
        skip_mode=cfg["skip_mode"],
        seed=cfg["seed"] if seed is None else seed,
        learning_rate=cfg["learning_rate"],
        epochs=cfg["epochs"],
        init_scale=cfg["init_scale"],
    )


def cmd_split(args):
    names = sorted(n for n in os.listdir(args.input) if n.endswith(".pgm"))
    if not names:
        raise SynthesisError(f"no PGM images under {args.input}")
    scored = []
    for name in names:
        img = load_pgm(os.path.join(args.input, name))
        scored.append((name, spatial_coherency(img).mu))
    tau = float(np.median([s for _, s in scored])) if args.tau is None else args.tau
    os.makedirs(args.out, exist_ok=True)
    high = [(n, s) for n, s in scored if s >= tau]
    low = [(n, s) for n, s in scored if s < tau]
    for fname, rows in (("high.manifest", high), ("low.manifest", low)):
        with open(os.path.join(args.out, fname), "w") as fh:
            for name, score in rows:
                rel = os.path.relpath(os.path.join(args.input, name), args.out)
                fh.write(f"{rel} {_fmt(score)}\n")
    edges = np.linspace(0.0, 1.0, 21)
    counts, _ = np.histogram([s for _, s in scored], bins=edges)
    _write_csv(
        os.path.join(args.out, "scores.csv"),
        ["bin_low", "bin_high", "count"],
        [(edges[i], edges[i + 1], int(counts[i])) for i in range(len(counts))],
    )
    print(f"split {len(scored)} images at tau={_fmt(tau)}: {len(high)} high, {len(low)} low")
    return 0


def cmd_ist_demo(args):
    m, n = args.size
    if m < 1 or n < 1 or args.sparsity < 0 or args.sparsity > n:
        raise SynthesisError(f"infeasible instance size {m}x{n} sparsity {args.sparsity}")
    rng = np.random.default_rng(args.seed)
    if args.identity:
        if m != n:
            raise ConfigError("--identity needs a square size")
        mat = np.eye(n)
    else:
        mat = rng.normal(size=(m, n))
        if args.scale:
            mat = mat / spectral_norm(mat)
    t_true = np.zeros(n)
    sup = rng.choice(n, size=args.sparsity, replace=False)
    t_true[sup] = rng.uniform(0.5, 1.5, size=args.sparsity) * rng.choice([-1.0, 1.0], size=args.sparsity)
    g = mat @ t_true + 0.01 * rng.normal(size=m)
    report = ist_solve(mat, g, args.bias)
    stride = max(1, report.iterations // 10)
    rows = [
        (k + 1, report.objective_history[k], report.residual_history[k])
        for k in range(0, report.iterations, stride)
    ]
    _print_table(["iter", "objective", "step_residual"], rows)
    kkt = lasso_kkt_residual(mat, g, report.solution, args.bias)
    print(f"converged={int(report.converged)} iterations={report.iterations} kkt_residual={_fmt(kkt)}")
    return 0 if kkt < 1e-6 else 5


def cmd_neuron_demo(args):
    if args.filter > args.superpatch:
        raise SynthesisError(
            f"filter {args.filter} larger than superpatch {args.superpatch}"
        )
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(0.0, 1.0, size=(args.superpatch, args.superpatch))
    d = spectral_scaled(learning_dictionary(x, args.filter))
    f_true = rng.uniform(0.2, 1.0, size=args.filter * args.filter)
    t = soft_nn(d.data @ f_true, args.bias)
    f0 = np.zeros(args.filter * args.filter)
    raw = initial_state(f0, args.bias)
    soft = initial_state(f0, args.bias)
    worst = 0.0
    rows = []
    stride = max(1, args.iters // 10)
    for k in range(args.iters):
        raw = gd_step(raw, d, t)
        soft = soft_form_step(soft, d, t)
        gap = float(np.max(np.abs(raw.filter.coeffs - soft.filter.coeffs)))
        worst = max(worst, gap)
        if k % stride == 0 or k == args.iters - 1:
            rows.append((k + 1, raw.mse_history[-1], gap))
    _print_table(["iter", "mse", "divergence"], rows)
    print(f"max_divergence={_fmt(worst)}")
    return 0 if worst < 1e-10 else 5


def _csc_schema_args(args):
    dims = [int(v) for v in args.dims.split(",")]
    sparsities = [int(v) for v in args.sparsities.split(",")]
    return dims, sparsities


def cmd_csc_verify(args):
    dims, sparsities = _csc_schema_args(args)

    def one_seed(seed):
        inst = synthesize_instance(
            dims, sparsities, args.coherence, args.noise, seed=seed
        )
        return seed, verify_stability(inst, margin=args.margin)

    seeds = range(args.seed_base, args.seed_base + args.seeds)
    if args.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.threads) as ex:
            results = list(ex.map(one_seed, seeds))
    else:
        results = [one_seed(s) for s in seeds]
    header = [
        "seed",
        "layer",
        "coherence_max",
        "coherence_min",
        "sparsity",
        "condition_rhs",
        "condition_met",
        "bias",
        "error_bound",
        "error_norm",
        "support_recovered",
    ]
    rows = []
    ok = True
    for seed, layer_rows in results:
        for r in layer_rows:
            rows.append(
                (
                    seed,
                    r.layer,
                    r.coherence_max,
                    r.coherence_min,
                    r.sparsity,
                    r.condition_rhs,
                    r.condition_met,
                    r.bias,
                    r.error_bound,
                    r.error_norm,
                    r.support_recovered,
                )
            )
            if r.condition_met and not (
                r.support_recovered and r.error_norm <= r.error_bound
            ):
                ok = False
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(_fmt(v) for v in row))
    return 0 if ok else 5


def cmd_train(args):
    cfg, raw = _load_config(args.config, _TRAIN_SCHEMA)
    images = _load_corpus(cfg["images"])
    config = _net_config(cfg)
    net = init_net(config)
    pairs = make_sr_pairs(images, cfg["crop"], cfg["stride"], receptive_field(net), cfg["scale"])
    net, history = train(net, pairs, config)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    save_params(os.path.join(cfg["out_dir"], "params.bin"), net)
    _write_csv(
        os.path.join(cfg["out_dir"], "train_loss.csv"),
        ["step", "loss"],
        list(enumerate(history)),
    )
    with open(os.path.join(cfg["out_dir"], "config_echo.json"), "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_meta(cfg["out_dir"], raw)
    print(f"trained depth={config.depth} width={config.width} on {len(pairs)} pairs")
    return 0


def cmd_eval(args):
    cfg, raw = _load_config(args.config, _EVAL_SCHEMA)
    net = load_params(cfg["params"])
    images = _load_corpus(cfg["images"])
    pairs = make_sr_pairs(images, cfg["crop"], cfg["stride"], receptive_field(net), cfg["scale"])
    report = evaluate_net(net, pairs)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    _write_csv(
        os.path.join(cfg["out_dir"], "eval_patches.csv"),
        ["patch", "psnr"],
        list(enumerate(report.psnr_per_patch)),
    )
    _write_csv(
        os.path.join(cfg["out_dir"], "eval_layers.csv"),
        ["layer", "coherence_min_raw", "coherence_min_norm", "coherence_max_raw", "coherence_max_norm"],
        [(i + 1, *row) for i, row in enumerate(report.layer_coherence)],
    )
    summary = [("mean_psnr", report.mean_psnr), ("n_patches", len(pairs))]
    if cfg["baseline_params"]:
        base_net = load_params(cfg["baseline_params"])
        base_pairs = make_sr_pairs(
            images, cfg["crop"], cfg["stride"], receptive_field(base_net), cfg["scale"]
        )
        base_report = evaluate_net(base_net, base_pairs)
        summary.append(("baseline_mean_psnr", base_report.mean_psnr))
        summary.append(
            ("welch_t_vs_baseline", welch_t(report.psnr_per_patch, base_report.psnr_per_patch))
        )
    _write_csv(os.path.join(cfg["out_dir"], "eval_summary.csv"), ["key", "value"], summary)
    _write_meta(cfg["out_dir"], raw)
    print(f"evaluated {len(pairs)} patches, mean psnr {_fmt(report.mean_psnr)}")
    return 0


def cmd_sweep(args):
    cfg, raw = _load_config(args.config, _SWEEP_SCHEMA)
    corpora = [("high", cfg["images_high"]), ("low", cfg["images_low"])]
    jobs = []
    for corpus_name, path in corpora:
        images = _load_corpus(path)
        for depth in cfg["depths"]:
            for seed in cfg["seeds"]:
                jobs.append((corpus_name, images, depth, seed))

    def one_cell(job):
        corpus_name, images, depth, seed = job
        config = _net_config({**cfg, "seed": seed}, depth=depth, seed=seed)
        try:
            net = init_net(config)
            pairs = make_sr_pairs(
                images, cfg["crop"], cfg["stride"], receptive_field(net), cfg["scale"]
            )
            train_pairs = pairs[::2] if cfg["holdout"] else pairs
            eval_pairs = pairs[1::2] if cfg["holdout"] else pairs
            net, _ = train(net, train_pairs, config)
            report = evaluate_net(net, eval_pairs)
            return corpus_name, SweepCell(depth, seed, report.mean_psnr, "ok")
        except TrainingDiverged:
            return corpus_name, SweepCell(depth, seed, float("nan"), "diverged")

    if args.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.threads) as ex:
            results = list(ex.map(one_cell, jobs))
    else:
        results = [one_cell(j) for j in jobs]
    os.makedirs(cfg["out_dir"], exist_ok=True)
    _write_csv(
        os.path.join(cfg["out_dir"], "sweep.csv"),
        ["corpus", "depth", "seed", "mean_psnr", "status"],
        [(name, c.depth, c.seed, c.mean_psnr, c.status) for name, c in results],
    )
    mean_rows = []
    summary = []
    for corpus_name, _ in corpora:
        cells = [c for name, c in results if name == corpus_name]
        mean_rows.extend((corpus_name, d, m) for d, m in depth_means(cells))
        sat = saturation_depth(cells)
        summary.append((corpus_name, -1 if sat is None else sat))
    _write_csv(
        os.path.join(cfg["out_dir"], "sweep_means.csv"),
        ["corpus", "depth", "mean_psnr"],
        mean_rows,
    )
    _write_csv(
        os.path.join(cfg["out_dir"], "sweep_summary.csv"),
        ["corpus", "saturation_depth"],
        summary,
    )
    _write_meta(cfg["out_dir"], raw)
    print(f"swept {len(jobs)} cells")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="convdict",
        description="Convolution-dictionary workbench command line.",
    )
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results are thread-count invariant)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="split a PGM corpus by directional coherency")
    p.add_argument("--input", required=True, help="directory of PGM images")
    p.add_argument("--out", required=True, help="output directory for manifests")
    p.add_argument("--tau", type=float, default=None, help="threshold (default: median score)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("ist-demo", help="iterative soft thresholding on a random lasso instance")
    p.add_argument("--size", type=int, nargs=2, metavar=("M", "N"), default=(8, 16))
    p.add_argument("--sparsity", type=int, default=2)
    p.add_argument("--bias", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", action="store_true", help="rescale the operator to unit spectral norm")
    p.add_argument("--identity", action="store_true", help="use the identity operator")
    p.set_defaults(func=cmd_ist_demo)

    p = sub.add_parser("neuron-demo", help="raw descent vs soft-form trajectory on one neuron")
    p.add_argument("--superpatch", type=int, default=8)
    p.add_argument("--filter", type=int, default=3)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--bias", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_neuron_demo)

    p = sub.add_parser("csc-verify", help="layered sparse recovery Monte Carlo")
    p.add_argument("--dims", default="64,48,32", help="carrier dims, signal inward")
    p.add_argument("--sparsities", default="3,2")
    p.add_argument("--coherence", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.002)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.1)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_csc_verify)

    for name, fn, helptext in (
        ("train", cmd_train, "train a network per a JSON config"),
        ("eval", cmd_eval, "evaluate saved parameters per a JSON config"),
        ("sweep", cmd_sweep, "depth sweep over two corpora per a JSON config"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, FormatError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (SingularSystemError, TrainingDiverged) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 5


def run():
    sys.exit(main())
