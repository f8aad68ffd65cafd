"""Log-space weight arithmetic and simplex helpers."""
from __future__ import annotations

import numpy as np

from .errors import AllWeightsZero, InvalidWeight, InvalidWeights

SIMPLEX_ATOL = 1e-12


def normalize_log_weights(logw):
    """Normalize log importance weights with the max-shift trick.

    Parameters
    ----------
    logw : (N,) array_like
        Unnormalized log weights. ``-inf`` entries (zero target density) are
        allowed and get weight exactly 0.

    Returns
    -------
    weights : (N,) np.ndarray
        Normalized weights summing to one.
    log_sum : float
        ``logsumexp(logw)``.
    """
    logw = np.asarray(logw, dtype=float).reshape(-1)
    if logw.size == 0:
        raise InvalidWeight("empty weight vector")
    if np.isnan(logw).any():
        raise InvalidWeight("NaN log weight")
    if np.isposinf(logw).any():
        raise InvalidWeight("+inf log weight")
    m = logw.max()
    if m == -np.inf:
        raise AllWeightsZero()
    w = np.exp(logw - m)
    s = w.sum()
    return w / s, float(m + np.log(s))


def uniform_simplex(D):
    return np.full(D, 1.0 / D)


def check_simplex(alpha, atol=SIMPLEX_ATOL):
    """Return ``alpha`` as a float array, raising if it is off the simplex."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.size == 0 or not np.isfinite(alpha).all():
        raise InvalidWeights("weights must be a nonempty finite vector")
    if (alpha < 0).any():
        raise InvalidWeights(f"negative weight in {alpha}")
    if abs(alpha.sum() - 1.0) > atol:
        raise InvalidWeights(f"weights sum to {alpha.sum()!r}, not 1")
    return alpha


def apply_floor(alpha, floor):
    """Clip every weight to at least ``floor`` and renormalize."""
    if floor <= 0:
        return alpha
    alpha = np.maximum(alpha, floor)
    return alpha / alpha.sum()
