"""Command line entry point.

    pmc-adapt run <config>
    pmc-adapt surface <config>
    pmc-adapt oracle <instance> [--alpha a1,a2,...]

Exit codes: 0 success, 1 runtime error, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import load_config
from .errors import ConfigError, PMCError
from .kullback import (
    MonteCarloEvaluator,
    divergence_at,
    divergence_surface,
    fixed_point_iterate,
    pair_log_target,
    sample_pairs,
    weighted_pairs_from_run,
)
from .oracle import load_instance, oracle_report
from .pmc import fmt, run, write_alphas_csv, write_diagnostics_csv
from .rng import RngStream

logger = logging.getLogger("pmc_adapt")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2
THREADS_ENV = "PMC_ADAPT_THREADS"


def _threads(args):
    if args.threads is not None:
        return args.threads
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _versions():
    return {"pmc_adapt": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _output_dir(exp, args):
    out = Path(args.out) if args.out else Path(exp.cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_final_weights(path, weights):
    """Weights sorted in decreasing order with cumulative weight and sample fraction."""
    w = np.sort(np.asarray(weights))[::-1]
    cum = np.cumsum(w)
    n = len(w)
    rows = [(r + 1, fmt(w[r]), fmt(cum[r]), fmt((r + 1) / n)) for r in range(n)]
    _write_csv(path, ["rank", "weight", "cumulative_weight", "sample_fraction"], rows)


def write_points(path, points, discrete):
    if discrete:
        _write_csv(path, ["state"], [[int(s)] for s in points])
    else:
        pts = np.asarray(points)
        _write_csv(path, [f"x{j + 1}" for j in range(pts.shape[1])], [[fmt(v) for v in row] for row in pts])


def cmd_run(args):
    exp = load_config(args.config)
    out = _output_dir(exp, args)
    meta = {"config": exp.echo(), "seed": exp.cfg.seed, "versions": _versions(), "estimate_names": exp.estimate_names}
    trace, error = None, None
    try:
        trace = run(exp.pmc_config(_threads(args)), exp.target, exp.family, exp.nu0, exp.test_functions, exp.estimate_names)
    except PMCError as exc:
        trace, error = getattr(exc, "partial_trace", None), exc
    if trace is not None:
        write_alphas_csv(trace, out / "alphas.csv")
        write_diagnostics_csv(trace, out / "diagnostics.csv")
    if trace is not None and trace.final is not None:
        write_final_weights(out / "weights_final.csv", trace.final.normalized_weights)
        write_points(out / "resampled_final.csv", trace.final.resampled, exp.target.is_discrete)
        meta["final_alpha"] = [float(a) for a in trace.alphas[-1]]
    meta["status"] = "ok" if error is None else f"error: {type(error).__name__}: {error}"
    _write_json(out / "run.json", meta)
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_RUNTIME
    logger.info("wrote %s", out)
    return EXIT_OK


def cmd_surface(args):
    exp = load_config(args.config)
    spec = exp.cfg.surface
    if spec is None:
        raise ConfigError(["surface: section required for the surface command"])
    if len(exp.family) != 3:
        raise ConfigError([f"kernels: the surface needs exactly 3 kernels, got {len(exp.family)}"])
    out = _output_dir(exp, args)
    rng = RngStream(exp.cfg.seed)
    if exp.target.sampler is not None:
        pairs = sample_pairs(exp.target, spec.pairs, rng)
        pair_source = "exact"
    else:
        trace = run(exp.pmc_config(_threads(args)), exp.target, exp.family, exp.nu0)
        pairs = weighted_pairs_from_run(trace.final.points, trace.final.log_weights, rng)
        pair_source = "weighted_pmc_sample"
    surface = divergence_surface(spec.grid_resolution, pairs, exp.family, exp.target)
    header = ["alpha1", "alpha2", "alpha3", "divergence"] + (["offset_unknown"] if surface.offset_unknown else [])
    rows = []
    for a, v in zip(surface.alphas, surface.divergence):
        rows.append([fmt(a[0]), fmt(a[1]), fmt(a[2]), fmt(v)] + (["true"] if surface.offset_unknown else []))
    _write_csv(out / "surface.csv", header, rows)

    ev = MonteCarloEvaluator(pairs, exp.family)
    log_target_y, _ = pair_log_target(pairs, exp.target)
    start = np.full(3, 1.0 / 3) if spec.start is None else np.asarray(spec.start, dtype=float)
    path = fixed_point_iterate(ev, start, spec.max_iter, spec.tol)
    path_divs = [divergence_at(ev, log_target_y, a) for a in path.alphas]
    _write_csv(
        out / "surface_path.csv",
        ["t", "alpha_1", "alpha_2", "alpha_3", "divergence"],
        [[t + 1, fmt(a[0]), fmt(a[1]), fmt(a[2]), fmt(v)] for t, (a, v) in enumerate(zip(path.alphas, path_divs))],
    )
    uniform = np.full(3, 1.0 / 3)
    _write_json(
        out / "surface.json",
        {
            "config": exp.echo(),
            "versions": _versions(),
            "pair_source": pair_source,
            "pairs": len(pairs),
            "grid_resolution": spec.grid_resolution,
            "offset_unknown": surface.offset_unknown,
            "grid_minimizer": surface.argmin().tolist(),
            "grid_min_divergence": float(surface.divergence.min()),
            "path_endpoint": path.alphas[-1].tolist(),
            "path_converged": path.converged,
            "path_iterations": len(path.alphas) - 1,
            "divergence_at_endpoint": path_divs[-1],
            "divergence_at_uniform": divergence_at(ev, log_target_y, uniform),
        },
    )
    return EXIT_OK


def _parse_alpha(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError([f"--alpha: cannot parse {text!r}"]) from None


def cmd_oracle(args):
    try:
        inst = load_instance(args.instance)
    except (OSError, ValueError) as exc:
        raise ConfigError([f"instance: {exc}"]) from None
    alpha = None
    if args.alpha is not None:
        alpha = _parse_alpha(args.alpha)
        if len(alpha) != inst.D or (alpha < 0).any() or abs(alpha.sum() - 1) > 1e-9:
            raise ConfigError([f"--alpha: need {inst.D} nonnegative weights summing to 1"])
    report = oracle_report(inst, alpha)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if not report["valid"]:
        for v in report["violations"]:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="pmc-adapt", description="Adaptive D-kernel population Monte Carlo")
    parser.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a PMC experiment and write CSV artifacts")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("surface", help="tabulate the divergence surface for D = 3")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("oracle", help="exact quantities for a finite-state instance")
    p.add_argument("instance")
    p.add_argument("--alpha", help="comma-separated mixture weights (default: uniform)")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"invalid: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except PMCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
