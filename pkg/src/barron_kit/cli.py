"""Command-line interface: ``barron-kit <command> ...``.

Every command prints the seed it used. Validation problems exit with status 2
and a one-line reason on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import constructions as cons
from .calculus1d import (
    measure_to_profile,
    norm_1d,
    profile_from_json,
    profile_to_json,
    profile_to_measure,
    reconstruct,
)
from .evaluation import evaluate, read_points_csv, write_values_csv
from .measure import BarronFunction, measure_from_json, measure_to_json
from .meanfield import RiskSpec, bound_rhs, flow, init_he, init_small_uniform
from .sampling import DataDistribution, rate_experiment
from .singular import analyze, report_to_json, write_report_csv


class UsageError(Exception):
    """Input problem reported with exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# I/O helpers -------------------------------------------------------------------

def _read_json(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def _write_json(data, path):
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def _load_measure(path):
    try:
        return measure_from_json(_read_json(path))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_profile(path):
    try:
        return profile_from_json(_read_json(path))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _read_csv_points(path):
    if not Path(path).is_file():
        raise UsageError(f"{path}: no such file")
    try:
        return read_points_csv(path)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("widths must be positive")
    return vals


# commands ------------------------------------------------------------------------

def _cmd_construct(args):
    kind = args.kind
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    if kind == "euclidean-norm":
        if args.dim > 1 and args.nodes < 16:
            raise UsageError("--nodes must be at least 16")
        f, c_d = cons.euclidean_norm(args.dim, args.nodes, args.seed)
        print(f"c_d: {c_d!r}")
    elif kind == "partial-norm":
        if not 1 <= args.k <= args.dim:
            raise UsageError(f"--k must lie in [1, {args.dim}]")
        f = cons.partial_norm(args.dim, args.k, args.nodes, args.seed)
    elif kind == "square":
        if args.dim != 1:
            raise UsageError("square is one-dimensional (--dim 1)")
        if args.nodes < 2:
            raise UsageError("--nodes must be at least 2")
        f = cons.square_fn(args.nodes)
    elif kind == "gaussian-decay":
        f = cons.gaussian_decay(args.dim, args.radial, args.profile_nodes, args.dirs, args.seed)
    else:
        if args.basis < args.k + 3:
            raise UsageError(f"--basis must be at least k + 3 = {args.k + 3}")
        try:
            recipe = cons.solve_decay_kernel(args.k, args.basis)
        except cons.DecayRecipeError as exc:
            raise UsageError(f"decay kernel: {exc} (constraint {exc.index})") from None
        _, f = cons.higher_decay(recipe, args.dim, args.dirs, args.profile_nodes, args.seed)
        if args.kernel_out:
            _write_json(profile_to_json(recipe.h_profile), args.kernel_out)
    print(f"total_variation: {f.norm_upper_bound!r}")
    _write_json(measure_to_json(f.measure), args.out)


def _cmd_evaluate(args):
    mu = _load_measure(args.measure)
    x = _read_csv_points(args.points)
    if x.shape[1] != mu.dim:
        raise UsageError(f"{args.points}: points have {x.shape[1]} columns, measure has dim {mu.dim}")
    write_values_csv(args.out, x, evaluate(mu, x))


def _cmd_norm1d(args):
    if (args.profile is None) == (args.measure is None):
        raise UsageError("give exactly one of --profile and --measure")
    if args.profile:
        p = _load_profile(args.profile)
    else:
        mu = _load_measure(args.measure)
        if mu.dim != 1:
            raise UsageError("norm1d needs a measure with dim 1")
        p = measure_to_profile(mu)
    value = norm_1d(p, args.weight)
    print(f"norm_1d: {value!r}")
    if args.out:
        _write_json({"norm_1d": value, "weight": args.weight}, args.out)


def _cmd_analyze(args):
    mu = _load_measure(args.measure)
    report = analyze(mu, args.seed)
    n_active = len(report.active)
    print(f"strata: {len(report.strata)} ({n_active} with nonzero jump)")
    if report.smooth_density:
        print("density part: C^1")
    _write_json(report_to_json(report), args.out)
    if args.csv:
        write_report_csv(report, args.csv)


def _distribution(args, d):
    if args.dist == "gaussian":
        return DataDistribution.gaussian(d)
    if args.dist == "ball":
        if not args.radius > 0:
            raise UsageError("--radius must be positive")
        return DataDistribution.ball(d, args.radius)
    if not args.data:
        raise UsageError("--dist empirical needs --data")
    pts = _read_csv_points(args.data)
    if pts.shape[1] != d:
        raise UsageError(f"{args.data}: points have {pts.shape[1]} columns, measure has dim {d}")
    return DataDistribution.empirical(pts)


def _cmd_approx(args):
    mu = _load_measure(args.measure)
    if not mu.n_atoms + mu.n_nodes or not np.any(mu.weights):
        raise UsageError("cannot sample from the zero measure")
    if args.seeds < 1 or args.n_mc < 1:
        raise UsageError("--seeds and --n-mc must be positive")
    P = _distribution(args, mu.dim)
    seeds = [args.seed + i for i in range(args.seeds)]
    rows = rate_experiment(BarronFunction(mu), P, args.m, seeds, args.n_mc, mc_seed=args.seed)
    _write_rows(args.out, ["m", "seed", "l2_error", "bound", "path_norm"],
                [[r["m"], r["seed"], r["l2_error"], r["bound"], r["path_norm"]] for r in rows])
    for m in args.m:
        errs = [r["l2_error"] for r in rows if r["m"] == m]
        print(f"m={m}: median l2_error {float(np.median(errs))!r}")
    if args.plot:
        from .plotting import plot_rate

        plot_rate(rows, args.plot)


def _target(name):
    if name == "relu-x1":
        return lambda x: np.maximum(x[:, 0], 0.0)
    if name == "abs-x1":
        return lambda x: np.abs(x[:, 0])
    if name == "norm":
        return lambda x: np.linalg.norm(x, axis=1)
    raise UsageError(f"unknown target {name!r}")


def _cmd_train(args):
    if args.data:
        table = _read_csv_points(args.data)
        if table.shape[1] < 2:
            raise UsageError(f"{args.data}: need at least one x column and a y column")
        spec = RiskSpec(table[:, :-1], table[:, -1])
    else:
        if args.dim < 1 or args.n_data < 1:
            raise UsageError("--dim and --n-data must be positive")
        x = np.random.default_rng([args.seed, 1]).standard_normal((args.n_data, args.dim))
        spec = RiskSpec.from_function(x, _target(args.target))
    if args.dt <= 0 or args.steps < 0:
        raise UsageError("--dt must be positive and --steps nonnegative")
    if args.init == "small-uniform":
        if args.m < 2 or args.m % 2:
            raise UsageError("--m must be even for the paired small-uniform init")
        state = init_small_uniform(args.m, spec.dim, args.scale, args.seed)
    else:
        if args.m < 1:
            raise UsageError("--m must be positive")
        state = init_he(args.m, spec.dim, args.seed)
    final = flow(state, spec, args.dt, args.steps, args.rescale)
    h = np.array(final.history)
    rhs = bound_rhs(h[0, 3], h[0, 1], h[:, 0])
    rows = np.column_stack([h, rhs])
    _write_rows(args.out, ["t", "risk", "path_norm", "second_moment", "bound_rhs"],
                [[float(v) for v in r] for r in rows])
    print(f"risk: {float(h[0, 1])!r} -> {float(h[-1, 1])!r}")
    if args.plot:
        from .plotting import plot_history

        plot_history(rows, args.plot)


def _cmd_profile_roundtrip(args):
    p = _load_profile(args.profile)
    mu = profile_to_measure(p)
    back = measure_to_profile(mu)
    lo, hi = args.range
    x = np.linspace(lo, hi, args.points)
    err = float(np.max(np.abs(reconstruct(p, x) - reconstruct(back, x))))
    direct = float(np.max(np.abs(reconstruct(p, x) - evaluate(mu, x[:, None]))))
    print(f"max_profile_error: {err!r}")
    print(f"max_measure_error: {direct!r}")
    if args.out:
        _write_json(profile_to_json(back), args.out)
    if args.measure_out:
        _write_json(measure_to_json(mu), args.measure_out)


# parser ----------------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="barron-kit", description="Barron functions as measures on the sphere.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        return p

    p = add("construct", "build a canonical Barron function and write its measure")
    p.add_argument("kind", choices=["euclidean-norm", "partial-norm", "square", "gaussian-decay", "higher-decay"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--nodes", type=int, default=1000, help="sphere or profile nodes")
    p.add_argument("--k", type=int, default=1, help="partial-norm coordinates / decay order")
    p.add_argument("--radial", type=int, default=64, help="radial quadrature order (gaussian-decay)")
    p.add_argument("--profile-nodes", type=int, default=256, help="1D profile nodes (decay constructions)")
    p.add_argument("--dirs", type=int, default=None, help="sphere directions (decay constructions)")
    p.add_argument("--basis", type=int, default=12, help="hat basis size (higher-decay)")
    p.add_argument("--kernel-out", help="also write the decay kernel profile JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_construct)

    p = add("evaluate", "evaluate a measure at CSV points")
    p.add_argument("--measure", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = add("norm1d", "one-dimensional Barron norm of a profile or dim-1 measure")
    p.add_argument("--profile")
    p.add_argument("--measure")
    p.add_argument("--weight", choices=["real", "unit"], default="real")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_norm1d)

    p = add("analyze", "singular strata report")
    p.add_argument("--measure", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=_cmd_analyze)

    p = add("approx", "direct-approximation rate table")
    p.add_argument("--measure", required=True)
    p.add_argument("--dist", choices=["gaussian", "ball", "empirical"], default="gaussian")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--data", help="CSV points for --dist empirical")
    p.add_argument("--m", type=_int_list, default=[64, 256, 1024])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--n-mc", type=int, default=8192)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="optional figure path (needs matplotlib)")
    p.set_defaults(func=_cmd_approx)

    p = add("train", "mean-field gradient flow of a two-layer network")
    p.add_argument("--data", help="CSV with x columns followed by a y column")
    p.add_argument("--target", default="relu-x1", help="relu-x1, abs-x1 or norm (without --data)")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n-data", type=int, default=10)
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--init", choices=["small-uniform", "he"], default="small-uniform")
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--rescale", choices=["m", "none"], default="m")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="optional figure path (needs matplotlib)")
    p.set_defaults(func=_cmd_train)

    p = add("profile-roundtrip", "profile -> measure -> profile with error report")
    p.add_argument("--profile", required=True)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--range", type=float, nargs=2, default=(-2.0, 2.0), metavar=("LO", "HI"))
    p.add_argument("--out")
    p.add_argument("--measure-out")
    p.set_defaults(func=_cmd_profile_roundtrip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        print(f"seed: {args.seed}")
        args.func(args)
    except UsageError as exc:
        print(f"barron-kit: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"barron-kit: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
