"""Static importance sampling estimators: IS, self-normalized IS, SIR."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidWeights, UnknownNormalizer
from .rng import RngStream, categorical_from_uniforms
from .weights import normalize_log_weights


@dataclass(frozen=True)
class WeightedSample:
    """Points with their log importance weights ``log(pi~/nu)``.

    ``normalizer_known`` is true when the log weights are true ``pi/nu`` ratios
    (target normalizer known), which the plain IS estimator needs.
    """

    points: np.ndarray
    log_weights: np.ndarray
    normalizer_known: bool = False

    @classmethod
    def from_densities(cls, points, target, proposal_log_density):
        """Build a sample from a target and the proposal's log density at ``points``."""
        logw = target.log_unnormalized(points) - proposal_log_density
        known = target.log_normalizer is not None
        if known:
            logw = logw - target.log_normalizer
        return cls(np.asarray(points), np.asarray(logw, dtype=float), known)

    @property
    def normalized_weights(self):
        return normalize_log_weights(self.log_weights)[0]

    def __len__(self):
        return len(self.log_weights)


def _apply(h, points):
    return np.broadcast_to(np.asarray(h(points), dtype=float), (len(points),))


def is_estimate(sample: WeightedSample, h):
    """``N^-1 sum h(x_i) (pi/nu)(x_i)``."""
    if not sample.normalizer_known:
        raise UnknownNormalizer("plain IS needs the target normalizer")
    vals = _apply(h, sample.points)
    with np.errstate(invalid="ignore"):
        terms = np.where(np.isneginf(sample.log_weights), 0.0, vals * np.exp(sample.log_weights))
    return float(terms.mean())


def snis_estimate(sample: WeightedSample, h, weights: Optional[np.ndarray] = None):
    """``sum_i w_i h(x_i)`` with self-normalized weights."""
    w = sample.normalized_weights if weights is None else weights
    vals = _apply(h, sample.points)
    pos = w > 0
    return float(np.dot(w[pos], vals[pos]))


def multinomial_resample(weights, M, rng: RngStream):
    """Draw ``M`` i.i.d. indices from the categorical law ``weights``.

    Uniform ``l`` is addressed by draw index ``l`` in ``rng``; the uniforms are
    sorted before the inverse-CDF lookup and the result is returned in draw
    order.
    """
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or (w < 0).any() or not np.isfinite(w).all() or abs(w.sum() - 1.0) > 1e-9:
        raise InvalidWeights("resampling weights must lie on the simplex")
    if M < 1:
        raise ValueError("M must be at least 1")
    u = rng.uniform(int(M))
    order = np.argsort(u, kind="stable")
    idx = np.empty(M, dtype=np.int64)
    idx[order] = categorical_from_uniforms(w, u[order])
    return idx


def sir_estimate(sample: WeightedSample, M, h, rng: RngStream):
    idx = multinomial_resample(sample.normalized_weights, M, rng)
    return float(_apply(h, sample.points[idx]).mean())


def ess(weights):
    """Effective sample size ``1 / sum w_i^2`` of normalized weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.dot(w, w))


def snis_standard_error(sample: WeightedSample, h):
    """Delta-method standard error of the SNIS estimate."""
    w = sample.normalized_weights
    vals = _apply(h, sample.points)
    mu = np.dot(w, vals)
    return float(np.sqrt(np.sum(w**2 * (vals - mu) ** 2)))
