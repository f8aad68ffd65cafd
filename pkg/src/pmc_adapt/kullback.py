"""Kullback criterion on the simplex of mixture weights.

For pairs ``(x, x')`` drawn from ``pi x pi`` the criterion is

    E(alpha) = mean over pairs of log sum_d alpha_d q_d(x, x')

and the averaged-EM map ``F`` sends ``alpha`` to the mean responsibilities
``alpha_d q_d / sum_j alpha_j q_j``. Iterating ``F`` increases ``E`` and
converges to its maximizer, the mixture closest to the target in Kullback
divergence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DegeneratePair, NonMonotone, WrongDimension
from .kernels import KernelFamily
from .oracle import simplex_grid
from .rng import RngStream
from .weights import check_simplex, normalize_log_weights

EXACT_TOL = 1e-10
MC_TOL = 1e-4


@dataclass(frozen=True)
class PairSample:
    """Pairs meant as draws from ``pi x pi``, optionally self-normalized weighted."""

    x: np.ndarray
    y: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.x) != len(self.y) or len(self.x) == 0:
            raise ValueError("pair sample needs matching, nonempty x and y")
        if self.weights is not None:
            check_simplex(self.weights, atol=1e-9)

    def __len__(self):
        return len(self.x)


def sample_pairs(target, M, rng: RngStream):
    """``M`` pairs of independent exact draws from ``target``."""
    return PairSample(target.sample(rng.substream(0, "pairs_x"), M), target.sample(rng.substream(0, "pairs_y"), M))


def pairs_from_weighted_sample(points, weights, rng: RngStream):
    """Pair a weighted sample with a random permutation of itself.

    Pair weights are products of the two point weights, renormalized. This is
    a biased stand-in for exact ``pi x pi`` draws, for targets without a
    sampler.
    """
    weights = np.asarray(weights, dtype=float)
    perm = np.argsort(rng.substream(0, "pair_perm").uniform(len(points)), kind="stable")
    w = weights * weights[perm]
    if w.sum() <= 0:
        raise DegeneratePair("no pair has positive weight")
    return PairSample(np.asarray(points), np.asarray(points)[perm], w / w.sum())


def pair_log_densities(pairs: PairSample, family: KernelFamily):
    return family.log_density_matrix(pairs.x, pairs.y)


def _mean(values, weights):
    if weights is None:
        return math.fsum(values) / len(values)
    return math.fsum(values * weights)


class MonteCarloEvaluator:
    """Criterion and F map estimated on a fixed pair sample.

    The ``(M, D)`` table of kernel log densities is computed once.
    """

    exact = False

    def __init__(self, pairs: PairSample, family: KernelFamily):
        self.pairs = pairs
        self.D = len(family)
        self.table = pair_log_densities(pairs, family)
        self.weights = pairs.weights
        if self.weights is not None:
            keep = self.weights > 0
            self.table, self.weights = self.table[keep], self.weights[keep]

    def log_mixture(self, alpha):
        alpha = check_simplex(alpha, atol=1e-9)
        active = alpha > 0
        with np.errstate(divide="ignore"):
            terms = self.table[:, active] + np.log(alpha[active])
        lse = logsumexp(terms, axis=1)
        if not np.isfinite(lse).all():
            raise DegeneratePair("a pair has zero mixture density")
        return lse, terms

    def entropy(self, alpha):
        lse, _ = self.log_mixture(alpha)
        return _mean(lse, self.weights)

    def f(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        lse, terms = self.log_mixture(alpha)
        resp = np.exp(terms - lse[:, None])
        out = np.zeros(self.D)
        out[alpha > 0] = [_mean(resp[:, j], self.weights) for j in range(resp.shape[1])]
        return out / out.sum()


def entropy_criterion(pairs: PairSample, family: KernelFamily, alpha):
    """Average of ``log sum_d alpha_d q_d(x, x')`` over the pairs."""
    return MonteCarloEvaluator(pairs, family).entropy(alpha)


def f_update(pairs: PairSample, family: KernelFamily, alpha):
    """One application of the averaged-EM map, renormalized onto the simplex."""
    return MonteCarloEvaluator(pairs, family).f(alpha)


class FixedPointResult(NamedTuple):
    alphas: list
    converged: bool
    entropies: list


def fixed_point_iterate(evaluator, alpha0, max_iter=1000, tol=None):
    """Iterate ``alpha <- F(alpha)`` until the sup-norm change is at most ``tol``.

    ``evaluator`` provides ``entropy(alpha)``, ``f(alpha)`` and a boolean
    ``exact``. With an exact evaluator a decrease of the criterion by more
    than 1e-12 raises :class:`NonMonotone`.
    """
    alpha = check_simplex(alpha0, atol=1e-9)
    if (alpha <= 0).any():
        raise ValueError("alpha0 must lie in the interior of the simplex")
    if tol is None:
        tol = EXACT_TOL if evaluator.exact else MC_TOL
    alphas = [alpha]
    entropies = [evaluator.entropy(alpha)]
    for _ in range(max_iter):
        new = np.asarray(evaluator.f(alphas[-1]), dtype=float)
        alphas.append(new)
        entropies.append(evaluator.entropy(new))
        if evaluator.exact and entropies[-1] < entropies[-2] - 1e-12:
            raise NonMonotone(f"criterion fell from {entropies[-2]!r} to {entropies[-1]!r}")
        if np.max(np.abs(new - alphas[-2])) <= tol:
            return FixedPointResult(alphas, True, entropies)
    return FixedPointResult(alphas, False, entropies)


@dataclass
class DivergenceSurface:
    """Divergence on a barycentric grid; rows ordered by ``(alpha1, alpha2)``."""

    alphas: np.ndarray  # (G, 3)
    divergence: np.ndarray  # (G,)
    offset_unknown: bool

    def argmin(self):
        return self.alphas[int(np.argmin(self.divergence))]


def pair_log_target(pairs: PairSample, target):
    """``log pi(x')`` at the second coordinate of each pair and whether it is normalized."""
    if target is None:
        return np.zeros(len(pairs)), False
    if target.log_normalizer is None:
        return np.asarray(target.log_unnormalized(pairs.y), dtype=float), False
    return np.asarray(target.log_density(pairs.y), dtype=float), True


def divergence_at(evaluator: MonteCarloEvaluator, log_target_y, alpha):
    lse, _ = evaluator.log_mixture(alpha)
    lt = log_target_y if evaluator.pairs.weights is None else log_target_y[evaluator.pairs.weights > 0]
    return _mean(lt - lse, evaluator.weights)


def divergence_surface(grid_resolution, pairs: PairSample, family: KernelFamily, target=None):
    """Tabulate ``E[log pi(X') - log sum_d alpha_d q_d(X, X')]`` over the 2-simplex.

    Grid points are ``(i, j, R - i - j) / R`` for ``R = grid_resolution``,
    boundary included. Without a normalized target the divergence is only
    known up to an additive constant (``offset_unknown``), which leaves the
    minimizer unchanged.
    """
    if len(family) != 3:
        raise WrongDimension(f"divergence surface needs D = 3 kernels, got {len(family)}")
    R = int(grid_resolution)
    if R < 1:
        raise ValueError("grid_resolution must be a positive integer")
    ev = MonteCarloEvaluator(pairs, family)
    log_target_y, normalized = pair_log_target(pairs, target)
    grid = simplex_grid(3, 1.0 / R)
    div = np.array([divergence_at(ev, log_target_y, a) for a in grid])
    return DivergenceSurface(grid, div, not normalized)


def weighted_pairs_from_run(final_points, final_log_weights, rng):
    """Pair fallback built from the final weighted sample of a PMC run."""
    w, _ = normalize_log_weights(final_log_weights)
    return pairs_from_weighted_sample(final_points, w, rng)
