"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Statistical criteria use fixed seeds 1..20 (or replication seeds derived from
a fixed base), so every run of this module sees the same draws.
"""
import csv
import json
import time

import numpy as np
import pytest

from pmc_adapt.cli import main
from pmc_adapt.config import load_config
from pmc_adapt.kullback import fixed_point_iterate
from pmc_adapt.oracle import (
    ExactEvaluator,
    exact_entropy,
    exact_f,
    exact_sigma2,
    f_iterates,
    grid_alpha_max,
    variance_pi,
)
from pmc_adapt.pmc import pmc_init, rb_step, run
from pmc_adapt.poisson import poisson_table_mle
from pmc_adapt.rng import RngStream

from conftest import CONFIGS, VALID_FIXTURES, record_acceptance

SEEDS = range(1, 21)


def dirichlet_points(D, n, seed):
    e = -np.log(RngStream(seed).uniform(n, D))
    return e / e.sum(axis=1, keepdims=True)


def seeded_runs(config_name, **override):
    ex = load_config(CONFIGS / config_name)
    for seed in SEEDS:
        cfg = ex.pmc_config()
        cfg.seed = seed
        for k, v in override.items():
            setattr(cfg, k, v)
        yield ex, run(cfg, ex.target, ex.family, ex.nu0)


def test_criterion_1_exact_monotonicity(instance):
    t0 = time.perf_counter()
    worst = np.inf
    for i, name in enumerate(VALID_FIXTURES):
        inst = instance(name)
        for a in dirichlet_points(inst.D, 1000, 100 + i):
            worst = min(worst, exact_entropy(inst, exact_f(inst, a)) - exact_entropy(inst, a))
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-12 and elapsed < 5
    record_acceptance(1, ok, f"min E(F(a)) - E(a) = {worst:.3e} over 5 fixtures x 1000 alphas (>= -1e-12); {elapsed:.1f}s (< 5s)")
    assert ok


def test_criterion_2_fixed_point_convergence(instance):
    t0 = time.perf_counter()
    spread, grid_gap = 0.0, 0.0
    for i, name in enumerate(VALID_FIXTURES):
        inst = instance(name)
        ends = []
        for a0 in dirichlet_points(inst.D, 10, 200 + i):
            res = fixed_point_iterate(ExactEvaluator(inst), a0, max_iter=10**6, tol=1e-14)
            assert res.converged
            ends.append(res.alphas[-1])
        ends = np.array(ends)
        spread = max(spread, np.abs(ends - ends[0]).max())
        if inst.D <= 3:
            grid_gap = max(grid_gap, np.abs(ends[0] - grid_alpha_max(inst, 1e-3)).max())
    elapsed = time.perf_counter() - t0
    ok = spread <= 1e-8 and grid_gap <= 1e-3 + 1e-12 and elapsed < 30
    record_acceptance(2, ok, f"multi-start spread {spread:.2e} (<= 1e-8), grid gap {grid_gap:.2e} (<= 1e-3); {elapsed:.1f}s (< 30s)")
    assert ok


def test_criterion_3_basic_not_adaptive():
    t0 = time.perf_counter()
    devs = []
    for ex, tr in seeded_runs("discrete_basic.yaml"):
        assert ex.cfg.N == 50000 and ex.cfg.T == 5 and ex.cfg.variant == "basic"
        devs.append(max(np.abs(a - 0.5).max() for a in tr.alphas[1:]))
    elapsed = time.perf_counter() - t0
    good = sum(d <= 0.02 for d in devs)
    ok = good == 20 and elapsed < 60
    record_acceptance(3, ok, f"{good}/20 runs with max_t |alpha - 1/2| <= 0.02 (worst {max(devs):.4f}); {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_4_rb_tracks_f_iterates():
    t0 = time.perf_counter()
    devs = []
    for ex, tr in seeded_runs("discrete_rb.yaml"):
        assert ex.cfg.N == 100000 and ex.cfg.T == 5 and ex.cfg.variant == "rao_blackwell"
        exact = f_iterates(ex.instance, tr.alphas[0], ex.cfg.T)
        devs.append(max(np.abs(a - b).max() for a, b in zip(tr.alphas, exact)))
    elapsed = time.perf_counter() - t0
    good = sum(d <= 0.03 for d in devs)
    ok = good >= 18 and elapsed < 120
    record_acceptance(4, ok, f"{good}/20 runs within 0.03 of exact F iterates (worst {max(devs):.4f}); {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_5_clt_variance(instance):
    t0 = time.perf_counter()
    inst = instance("two_state_asymmetric")
    target, family, nu0 = inst.target(), inst.family(), inst.uniform_proposal()
    alpha = np.full(inst.D, 1.0 / inst.D)
    N, reps = 2000, 1000
    pi_h = float(inst.pi @ inst.h)
    weighted, resampled = np.empty(reps), np.empty(reps)
    for r in range(reps):
        rng = RngStream(50_000 + r)
        s1, _ = rb_step(pmc_init(target, nu0, N, rng), target, family, alpha, rng)
        weighted[r] = s1.normalized_weights @ inst.h[s1.points]
        resampled[r] = inst.h[s1.resampled].mean()
    v_w = N * np.mean((weighted - pi_h) ** 2)
    v_r = N * np.mean((resampled - pi_h) ** 2)
    sigma2 = exact_sigma2(inst, alpha)
    rel = v_w / sigma2 - 1
    elapsed = time.perf_counter() - t0
    ok = abs(rel) <= 0.15 and v_r > v_w and elapsed < 180
    record_acceptance(
        5,
        ok,
        f"N*var {v_w:.4f} vs sigma2 {sigma2:.4f} ({rel:+.1%}, within 15%); post-resampling {v_r:.4f} > {v_w:.4f} "
        f"(limit sigma2 + V(h) = {sigma2 + variance_pi(inst):.4f}); {elapsed:.1f}s (< 180s)",
    )
    assert ok


def test_criterion_6_example1_uniform_limit():
    t0 = time.perf_counter()
    devs = []
    for ex, tr in seeded_runs("example1.yaml"):
        assert ex.cfg.N == 10000 and ex.cfg.T == 20
        devs.append(np.abs(tr.alphas[-1] - 1 / 3).max())
    elapsed = time.perf_counter() - t0
    good = sum(d <= 0.05 for d in devs)
    ok = good >= 18 and elapsed < 120
    record_acceptance(6, ok, f"{good}/20 runs with final alpha within 0.05 of 1/3 (worst {max(devs):.4f}); {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_7_example2_surface(tmp_path):
    t0 = time.perf_counter()
    ex = load_config(CONFIGS / "example2.yaml")
    assert ex.cfg.surface.grid_resolution == 20 and ex.cfg.surface.pairs == 25000
    assert main(["surface", str(CONFIGS / "example2.yaml"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "surface.json").read_text())
    cell = 1.0 / rep["grid_resolution"]
    gap = np.abs(np.array(rep["path_endpoint"]) - rep["grid_minimizer"]).max()
    interior = min(rep["grid_minimizer"]) > 0
    elapsed = time.perf_counter() - t0
    ok = gap <= cell and rep["divergence_at_endpoint"] <= rep["divergence_at_uniform"] and elapsed < 300
    record_acceptance(
        7,
        ok,
        f"endpoint {np.round(rep['path_endpoint'], 3).tolist()} vs grid min {rep['grid_minimizer']} (gap {gap:.3f} <= {cell}), "
        f"divergence {rep['divergence_at_endpoint']:.4f} <= uniform {rep['divergence_at_uniform']:.4f}, interior={interior}; {elapsed:.1f}s (< 300s)",
    )
    assert ok


def test_criterion_8_example3_poisson(tmp_path):
    t0 = time.perf_counter()
    theta, _ = poisson_table_mle([60, 364, 36, 240])
    mle_gap = np.abs(theta - [-0.43, 4.06, 5.9]).max()
    ex = load_config(CONFIGS / "example3.yaml")
    assert ex.cfg.N == 50000 and ex.cfg.T == 5 and len(ex.family) == 10
    assert main(["run", str(CONFIGS / "example3.yaml"), "--out", str(tmp_path)]) == 0
    final = json.loads((tmp_path / "run.json").read_text())["final_alpha"]
    with open(tmp_path / "weights_final.csv") as f:
        rows = list(csv.DictReader(f))
    k = int(0.2 * len(rows))
    top20 = float(rows[k - 1]["cumulative_weight"])
    dominant = final[6] + final[7]
    extremes = max(final[0], final[9])
    elapsed = time.perf_counter() - t0
    ok = mle_gap <= 0.01 and dominant >= 0.9 and extremes <= 0.01 and top20 >= 0.9 and elapsed < 180
    record_acceptance(
        8,
        ok,
        f"MLE {np.round(theta, 4).tolist()} (gap {mle_gap:.4f} <= 0.01); kernels 7+8 carry {dominant:.4f} (>= 0.9) "
        f"as {final[6]:.3f} + {final[7]:.3f}; extreme kernels max {extremes:.2e} (<= 0.01); top 20% carry {top20:.5f} (>= 0.9); "
        f"{elapsed:.1f}s (< 180s)",
    )
    assert ok


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    jobs = [("run", "example1.yaml"), ("run", "discrete_rb.yaml"), ("run", "example3.yaml"), ("surface", "example2.yaml")]
    mismatches = []
    for command, name in jobs:
        dirs = []
        for tag, threads in [("a", "1"), ("b", "1"), ("c", "4")]:
            out = tmp_path / f"{name}_{tag}"
            assert main(["--threads", threads, command, str(CONFIGS / name), "--out", str(out)]) == 0
            dirs.append(out)
        for f in sorted(dirs[0].iterdir()):
            for other in dirs[1:]:
                if (other / f.name).read_bytes() != f.read_bytes():
                    mismatches.append(f"{name}:{other.name}/{f.name}")
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 60
    record_acceptance(9, ok, f"{len(jobs)} configs x (threads 1 twice, threads 4): {len(mismatches)} differing artifacts; {elapsed:.1f}s (< 60s)")
    assert ok, mismatches
