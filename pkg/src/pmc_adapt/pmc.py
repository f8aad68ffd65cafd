"""D-kernel population Monte Carlo, basic and Rao-Blackwellized.

Both variants share initialization (importance sample from ``nu0`` and
resample), kernel selection, proposal and resampling. They differ only in the
importance weight denominator: the selected kernel's density (basic) or the
full mixture ``sum_d alpha_d q_d`` (Rao-Blackwellized). The weight update is
the same for both: ``alpha_d <- sum of normalized weights of particles that
used kernel d``.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import AllWeightsZero, ConfigError, NoSampler
from .estimators import ess, multinomial_resample
from .kernels import IndependentKernel, KernelFamily
from .rng import RngStream, categorical_from_uniforms
from .targets import TargetDensity
from .weights import apply_floor, check_simplex, normalize_log_weights, uniform_simplex

logger = logging.getLogger(__name__)

VARIANTS = ("basic", "rao_blackwell")
CHUNK = 8192


@dataclass
class ParticleSystem:
    """State of one PMC iteration.

    ``ancestors`` are the resampled points the proposals were drawn from
    (``None`` at iteration 0), ``points`` the new proposals, ``resampled`` the
    multinomial resample of ``points`` that seeds the next iteration.
    """

    iteration: int
    ancestors: Optional[np.ndarray]
    points: np.ndarray
    kernel_indices: Optional[np.ndarray]
    log_weights: np.ndarray
    normalized_weights: np.ndarray
    resampled: np.ndarray
    log_sum: float = 0.0

    def __len__(self):
        return len(self.points)


@dataclass
class PmcConfig:
    N: int
    T: int
    variant: str = "rao_blackwell"
    alpha_floor: float = 0.0
    seed: int = 0
    alpha_init: Optional[Sequence[float]] = None
    threads: int = 1

    def __post_init__(self):
        errors = []
        if int(self.N) < 2:
            errors.append("N: must be at least 2")
        if int(self.T) < 1:
            errors.append("T: must be at least 1")
        if self.variant not in VARIANTS:
            errors.append(f"variant: must be one of {VARIANTS}")
        if not self.alpha_floor >= 0:
            errors.append("alpha_floor: must be nonnegative")
        if int(self.threads) < 1:
            errors.append("threads: must be at least 1")
        if errors:
            raise ConfigError(errors)

    def initial_alpha(self, D):
        if not 0 <= self.alpha_floor < 1.0 / D:
            raise ConfigError([f"alpha_floor: must be below 1/D = {1.0 / D}"])
        if self.alpha_init is None:
            return uniform_simplex(D)
        alpha = check_simplex(self.alpha_init, atol=1e-9)
        if len(alpha) != D:
            raise ConfigError([f"alpha_init: expected {D} weights, got {len(alpha)}"])
        return alpha / alpha.sum()


@dataclass
class IterationRecord:
    t: int
    ess: float
    estimates: list
    log_mean_weight: float


@dataclass
class PmcTrace:
    """Per-iteration diagnostics of a run.

    ``alphas[k]`` is the weight vector used at iteration ``k + 1``; the last
    entry is the update computed from the final iteration.
    """

    estimate_names: list
    alphas: list = field(default_factory=list)
    records: list = field(default_factory=list)
    final: Optional[ParticleSystem] = None
    snapshots: list = field(default_factory=list)


def _map_chunks(fn, n, threads):
    """Apply ``fn`` to consecutive index slices and concatenate in order."""
    slices = [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    if threads <= 1 or len(slices) == 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, slices))
    return tuple(np.concatenate(p) for p in zip(*parts))


def _proposal_density(nu0):
    if isinstance(nu0, IndependentKernel):
        nu0 = nu0.component
    if not isinstance(nu0, TargetDensity) or nu0.sampler is None or nu0.log_normalizer is None:
        raise NoSampler("nu0 needs an exact sampler and a known normalizer")
    return nu0


def _safe_log_ratio(log_num, log_den):
    with np.errstate(invalid="ignore"):
        out = log_num - log_den
    return np.where(np.isneginf(log_num), -np.inf, out)


def pmc_init(target: TargetDensity, nu0, N, rng: RngStream, threads=1):
    """Importance sample ``N`` points from ``nu0`` and resample them."""
    nu0 = _proposal_density(nu0)
    stream = rng.substream(0, "init")

    def chunk(s):
        idx = np.arange(s.start, s.stop)
        x = nu0.sample(stream, idx)
        return x, _safe_log_ratio(target.log_unnormalized(x), nu0.log_density(x))

    points, logw = _map_chunks(chunk, N, threads)
    w, log_sum = normalize_log_weights(logw)
    J = multinomial_resample(w, N, rng.substream(0, "resample"))
    return ParticleSystem(0, None, points, None, logw, w, points[J], log_sum)


def particle_log_weights(target, family: KernelFamily, alpha, ancestors, points, kernel_indices, rao_blackwell):
    """Unnormalized log importance weights of a proposed population."""
    log_target = target.log_unnormalized(points)
    if rao_blackwell:
        active = alpha > 0
        with np.errstate(divide="ignore"):
            log_alpha = np.log(alpha)
        L = family.log_density_matrix(ancestors, points, active)
        log_q = logsumexp(np.where(active, L + log_alpha, -np.inf), axis=1)
    else:
        log_q = np.empty(len(points))
        for d, kern in enumerate(family):
            sel = kernel_indices == d
            if sel.any():
                log_q[sel] = kern.log_density(ancestors[sel], points[sel])
    return _safe_log_ratio(log_target, log_q)


def _step(state, target, family, alpha, rng, rao_blackwell, alpha_floor=0.0, threads=1):
    alpha = check_simplex(alpha)
    D = len(family)
    N = len(state.resampled)
    t = state.iteration + 1
    ancestors = state.resampled
    K = categorical_from_uniforms(alpha, rng.substream(t, "select").uniform(N))
    stream = rng.substream(t, "propose")

    def chunk(s):
        idx = np.arange(s.start, s.stop)
        anc, k = ancestors[s], K[s]
        pts = np.empty_like(anc, dtype=float if not target.is_discrete else np.int64)
        for d, kern in enumerate(family):
            sel = k == d
            if sel.any():
                pts[sel] = kern.propose(anc[sel], stream, idx[sel])
        return pts, particle_log_weights(target, family, alpha, anc, pts, k, rao_blackwell)

    points, logw = _map_chunks(chunk, N, threads)
    w, log_sum = normalize_log_weights(logw)
    new_alpha = np.bincount(K, weights=w, minlength=D)
    new_alpha = apply_floor(new_alpha / new_alpha.sum(), alpha_floor)
    J = multinomial_resample(w, N, rng.substream(t, "resample"))
    return ParticleSystem(t, ancestors, points, K, logw, w, points[J], log_sum), new_alpha


def basic_step(state, target, family, alpha, rng, alpha_floor=0.0, threads=1):
    """One iteration of the basic D-kernel scheme (selected-kernel weights)."""
    return _step(state, target, family, alpha, rng, False, alpha_floor, threads)


def rb_step(state, target, family, alpha, rng, alpha_floor=0.0, threads=1):
    """One iteration of the Rao-Blackwellized scheme (full-mixture weights)."""
    return _step(state, target, family, alpha, rng, True, alpha_floor, threads)


def _record(state, test_functions):
    w = state.normalized_weights
    pos = w > 0
    estimates = []
    for h in test_functions:
        vals = np.broadcast_to(np.asarray(h(state.points[pos]), dtype=float), (pos.sum(),))
        estimates.append(float(np.dot(w[pos], vals)))
    return IterationRecord(state.iteration, ess(w), estimates, state.log_sum - np.log(len(w)))


def run(
    config: PmcConfig,
    target: TargetDensity,
    family: KernelFamily,
    nu0,
    test_functions: Sequence[Callable] = (),
    estimate_names: Optional[Sequence[str]] = None,
    keep_snapshots=False,
):
    """Initialize, then run ``config.T`` iterations of the configured variant.

    Estimates are self-normalized averages over each iteration's weighted
    sample, taken before resampling. On failure the exception carries the
    trace recorded so far as ``partial_trace``.
    """
    names = list(estimate_names) if estimate_names is not None else [f"estimate_{k + 1}" for k in range(len(test_functions))]
    trace = PmcTrace(names)
    rng = RngStream(config.seed)
    step = rb_step if config.variant == "rao_blackwell" else basic_step
    alpha = config.initial_alpha(len(family))
    try:
        state = pmc_init(target, nu0, config.N, rng, config.threads)
        trace.records.append(_record(state, test_functions))
        for _ in range(config.T):
            trace.alphas.append(alpha)
            state, alpha = step(state, target, family, alpha, rng, config.alpha_floor, config.threads)
            trace.records.append(_record(state, test_functions))
            if keep_snapshots:
                trace.snapshots.append(state)
            logger.debug("t=%d alpha=%s ess=%.1f", state.iteration, alpha, trace.records[-1].ess)
        trace.alphas.append(alpha)
        trace.final = state
    except AllWeightsZero as exc:
        exc.partial_trace = trace
        raise
    return trace


def fmt(x):
    return format(float(x), ".17g")


def write_alphas_csv(trace: PmcTrace, path):
    """Columns ``t, d, alpha``; ``d`` is 1-based, ``t`` runs from 1 to T+1."""
    with open(path, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["t", "d", "alpha"])
        for t, alpha in enumerate(trace.alphas, start=1):
            for d, a in enumerate(alpha, start=1):
                out.writerow([t, d, fmt(a)])


def write_diagnostics_csv(trace: PmcTrace, path):
    """Columns ``t, ess, log_mean_weight, estimate_1 .. estimate_k``."""
    with open(path, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["t", "ess", "log_mean_weight"] + [f"estimate_{k + 1}" for k in range(len(trace.estimate_names))])
        for r in trace.records:
            out.writerow([r.t, fmt(r.ess), fmt(r.log_mean_weight)] + [fmt(e) for e in r.estimates])
