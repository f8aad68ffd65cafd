"""Poisson log-linear model for a 2x2 contingency table.

Cell ``(i, j)`` has mean ``exp(a_i + b_j)`` with ``a_0 = 0``; the parameter is
``theta = (a_1, b_0, b_1)`` under a flat prior, so the target is the
likelihood with log-factorial constants dropped.
"""
import numpy as np

from .errors import Degenerate, InvalidParameter
from .targets import TargetDensity

# rows: cells (0,0), (0,1), (1,0), (1,1); columns: a_1, b_0, b_1
DESIGN = np.array(
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
    ]
)


def _counts(table):
    x = np.asarray(table, dtype=float).reshape(-1)
    if x.shape != (4,):
        raise InvalidParameter("table must have exactly four cells")
    if (x < 0).any() or not np.all(np.isfinite(x)) or np.any(x != np.round(x)):
        raise InvalidParameter("table entries must be nonnegative integers")
    return x


def poisson_table_loglik(table, theta):
    """Log likelihood at one or many parameter vectors (rows of ``theta``)."""
    x = _counts(table)
    theta = np.asarray(theta, dtype=float)
    eta = np.atleast_2d(theta) @ DESIGN.T
    with np.errstate(over="ignore", invalid="ignore"):
        ll = (eta * x).sum(axis=1) - np.exp(eta).sum(axis=1)
    ll = np.where(np.isnan(ll), -np.inf, ll)
    return ll if theta.ndim > 1 else float(ll[0])


def poisson_table_grad(table, theta):
    x = _counts(table)
    mu = np.exp(DESIGN @ np.asarray(theta, dtype=float))
    return DESIGN.T @ (x - mu)


def poisson_table_fisher(table, theta):
    _counts(table)
    mu = np.exp(DESIGN @ np.asarray(theta, dtype=float))
    return DESIGN.T @ (mu[:, None] * DESIGN)


def make_poisson_table_target(table):
    x = _counts(table)
    return TargetDensity(
        log_unnormalized=lambda theta: poisson_table_loglik(x, np.reshape(theta, (-1, 3))),
        dim=3,
        name="poisson_table",
        params={"table": x},
    )


def poisson_table_mle(table, tol=1e-10, max_iter=100):
    """Newton-Raphson MLE and the Fisher information at the optimum.

    Returns
    -------
    theta_hat : (3,) np.ndarray
    fisher_info : (3, 3) np.ndarray
        ``X^T diag(mu_hat) X``.
    """
    x = _counts(table)
    rows = x.reshape(2, 2).sum(axis=1)
    cols = x.reshape(2, 2).sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise Degenerate("a row or column total is zero; the MLE is at infinity")
    theta = np.array([np.log(rows[1] / rows[0]), np.log(cols[0] / 2), np.log(cols[1] / 2)])
    for _ in range(max_iter):
        grad = poisson_table_grad(x, theta)
        if np.linalg.norm(grad) <= tol:
            break
        theta = theta + np.linalg.solve(poisson_table_fisher(x, theta), grad)
    else:
        raise Degenerate("Newton iterations did not converge")
    return theta, poisson_table_fisher(x, theta)
