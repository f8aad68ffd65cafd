"""Target densities: multivariate normal, normal mixture and finite-state.

Points of a continuous target of dimension ``n`` are rows of an ``(N, n)``
array; points of a finite-state target are integer state indices in an
``(N,)`` array. Every density function is vectorized over the leading axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp, ndtri

from .errors import LengthMismatch, NoSampler, NotSPD, UnknownNormalizer
from .rng import RngStream, categorical_from_uniforms
from .weights import check_simplex

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class TargetDensity:
    """An unnormalized log density, optionally with an exact sampler.

    ``log_unnormalized`` maps a batch of points to ``log pi~``. When
    ``log_normalizer`` is known, ``log pi = log_unnormalized - log_normalizer``.
    ``sampler`` maps an ``(N, n_uniforms)`` block of uniforms to ``N`` points,
    which keeps sampling inside the counter-based RNG contract.
    """

    log_unnormalized: Callable[[np.ndarray], np.ndarray]
    dim: Optional[int] = None
    n_states: Optional[int] = None
    log_normalizer: Optional[float] = None
    sampler: Optional[Callable[[np.ndarray], np.ndarray]] = None
    n_uniforms: int = 0
    name: str = "target"
    params: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def is_discrete(self):
        return self.n_states is not None

    @property
    def has_sampler(self):
        return self.sampler is not None

    def log_density(self, x):
        """Normalized log density; requires a known normalizer."""
        if self.log_normalizer is None:
            raise UnknownNormalizer(f"{self.name} has no known normalizer")
        return self.log_unnormalized(x) - self.log_normalizer

    def sample(self, stream: RngStream, index):
        """Exact draws for the given particle indices (or a count)."""
        if self.sampler is None:
            raise NoSampler(f"{self.name} has no exact sampler")
        return self.sampler(stream.uniform(index, self.n_uniforms))


def _cholesky(cov):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise NotSPD(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14 * np.abs(cov).max()):
        raise NotSPD("covariance is not symmetric")
    try:
        return cov, np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("covariance is not positive definite") from exc


class Gaussian:
    """Normal distribution with a cached Cholesky factor."""

    def __init__(self, mean, cov):
        self.cov, self.chol = _cholesky(cov)
        self.dim = self.cov.shape[0]
        self.mean = np.broadcast_to(np.asarray(mean, dtype=float), (self.dim,)).copy()
        self.half_log_det = float(np.log(np.diag(self.chol)).sum())

    def logpdf_centered(self, delta):
        """Log density of ``N(0, cov)`` at the rows of ``delta``."""
        z = solve_triangular(self.chol, delta.T, lower=True, check_finite=False)
        return -0.5 * np.einsum("ij,ij->j", z, z) - self.half_log_det - 0.5 * self.dim * LOG_2PI

    def logpdf(self, x):
        return self.logpdf_centered(as_points(x, self.dim) - self.mean)

    def from_uniforms(self, u):
        return self.mean + ndtri(u) @ self.chol.T


def as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and dim is not None and x.shape[0] == dim and dim != 1:
        return x[None, :]
    return x.reshape(-1, dim)


def make_mvn_target(mean, covariance):
    """Multivariate normal target with exact normalizer and sampler."""
    g = Gaussian(mean, covariance)
    return TargetDensity(
        log_unnormalized=g.logpdf,
        dim=g.dim,
        log_normalizer=0.0,
        sampler=g.from_uniforms,
        n_uniforms=g.dim,
        name="mvn",
        params={"mean": g.mean, "covariance": g.cov},
    )


def make_normal_mixture_target(weights, means, covariances):
    """Finite mixture of normals; the sampler picks a component, then a point."""
    if not (len(weights) == len(means) == len(covariances)) or len(weights) == 0:
        raise LengthMismatch("weights, means and covariances must have equal nonzero length")
    weights = check_simplex(weights)
    comps = [Gaussian(m, c) for m, c in zip(means, covariances)]
    dim = comps[0].dim
    if any(c.dim != dim for c in comps):
        raise LengthMismatch("mixture components have different dimensions")
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)

    def logpdf(x):
        x = as_points(x, dim)
        return logsumexp(np.stack([c.logpdf(x) for c in comps], axis=1) + log_w, axis=1)

    def sampler(u):
        k = categorical_from_uniforms(weights, u[:, 0])
        out = np.empty((u.shape[0], dim))
        for j, c in enumerate(comps):
            sel = k == j
            if sel.any():
                out[sel] = c.from_uniforms(u[sel, 1:])
        return out

    return TargetDensity(
        log_unnormalized=logpdf,
        dim=dim,
        log_normalizer=0.0,
        sampler=sampler,
        n_uniforms=dim + 1,
        name="normal_mixture",
        params={"weights": weights, "components": comps},
    )


def make_discrete_target(pi):
    """Finite-state target given as a probability vector."""
    pi = check_simplex(pi, atol=1e-14)
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)

    def logpmf(x):
        return log_pi[np.asarray(x, dtype=np.int64)]

    return TargetDensity(
        log_unnormalized=logpmf,
        n_states=len(pi),
        log_normalizer=0.0,
        sampler=lambda u: categorical_from_uniforms(pi, u[:, 0]),
        n_uniforms=1,
        name="discrete",
        params={"pi": pi},
    )
