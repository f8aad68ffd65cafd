"""Exact computations on finite state spaces.

A :class:`DiscreteInstance` is a target ``pi`` on ``S`` states together with
``D`` row-stochastic kernel matrices. Every quantity here is a finite double
sum over state pairs, so it serves as ground truth for the Monte Carlo
machinery in :mod:`pmc_adapt.kullback` and :mod:`pmc_adapt.pmc`. This module
deliberately shares no numerical code with those.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .errors import AllKernelsIdentical, NotConverged
from .kernels import DiscreteKernel, KernelFamily
from .targets import make_discrete_target

TOL = 1e-14


@dataclass(frozen=True)
class DiscreteInstance:
    pi: np.ndarray
    kernels: np.ndarray  # (D, S, S)
    h: Optional[np.ndarray] = None
    name: str = "instance"

    @classmethod
    def from_lists(cls, pi, kernels, h=None, name="instance"):
        return cls(
            np.asarray(pi, dtype=float),
            np.asarray(kernels, dtype=float).reshape(len(kernels), len(pi), len(pi)),
            None if h is None else np.asarray(h, dtype=float),
            name,
        )

    @property
    def S(self):
        return len(self.pi)

    @property
    def D(self):
        return len(self.kernels)

    def support_pairs(self):
        """Pair weights ``pi_x pi_x'`` and kernel values on pairs with positive weight.

        Returns ``(omega, Q, xs, ys)`` with ``omega`` of shape ``(P,)`` and
        ``Q`` of shape ``(D, P)``.
        """
        xs, ys = np.nonzero(np.outer(self.pi, self.pi) > 0)
        omega = self.pi[xs] * self.pi[ys]
        return omega, self.kernels[:, xs, ys], xs, ys

    def target(self):
        return make_discrete_target(self.pi)

    def family(self):
        return KernelFamily([DiscreteKernel(q, name=f"q{d + 1}") for d, q in enumerate(self.kernels)])

    def uniform_proposal(self):
        return make_discrete_target(np.full(self.S, 1.0 / self.S))

    def to_dict(self):
        out = {
            "name": self.name,
            "states": self.S,
            "pi": self.pi.tolist(),
            "kernels": [q.tolist() for q in self.kernels],
        }
        if self.h is not None:
            out["h"] = self.h.tolist()
        return out


def load_instance(path):
    """Read an instance document with fields ``states``, ``pi``, ``kernels``, ``h``.

    ``kernels`` is a list of ``S x S`` matrices, each given either as nested
    rows or as one flat row-major list of ``S*S`` numbers.
    """
    with open(path) as f:
        doc = yaml.safe_load(f)
    return instance_from_dict(doc)


def instance_from_dict(doc):
    if not isinstance(doc, dict):
        raise ValueError("instance document must be a mapping")
    unknown = set(doc) - {"name", "states", "pi", "kernels", "h"}
    if unknown:
        raise ValueError(f"unknown instance fields: {sorted(unknown)}")
    for key in ("states", "pi", "kernels"):
        if key not in doc:
            raise ValueError(f"instance is missing field '{key}'")
    S = int(doc["states"])
    pi = np.asarray(doc["pi"], dtype=float)
    if pi.shape != (S,):
        raise ValueError(f"pi must have length states={S}")
    kernels = [np.asarray(q, dtype=float).reshape(S, S) for q in doc["kernels"]]
    if not kernels:
        raise ValueError("at least one kernel is required")
    h = doc.get("h")
    if h is not None and len(h) != S:
        raise ValueError(f"h must have length states={S}")
    return DiscreteInstance.from_lists(pi, kernels, h, str(doc.get("name", "instance")))


def validate_instance(inst: DiscreteInstance):
    """List every violated invariant; an empty list means the instance is valid."""
    problems = []
    pi, Q = inst.pi, inst.kernels
    if pi.ndim != 1 or pi.size == 0:
        return ["pi must be a nonempty vector"]
    if Q.ndim != 3 or Q.shape[1:] != (inst.S, inst.S) or Q.shape[0] < 1:
        return [f"kernels must have shape (D, {inst.S}, {inst.S})"]
    if not np.isfinite(pi).all() or (pi < 0).any():
        problems.append("pi has negative or non-finite entries")
    if abs(pi.sum() - 1.0) > TOL:
        problems.append(f"pi sums to {pi.sum()!r}, not 1")
    for d, q in enumerate(Q):
        if not np.isfinite(q).all() or (q < 0).any():
            problems.append(f"kernel {d + 1} has negative or non-finite entries")
        for x, s in enumerate(q.sum(axis=1)):
            if abs(s - 1.0) > TOL:
                problems.append(f"kernel {d + 1} row {x} sums to {s!r}, not 1")
    if inst.h is not None and (inst.h.shape != (inst.S,) or not np.isfinite(inst.h).all()):
        problems.append("h must be a finite vector with one entry per state")
    support = np.outer(pi, pi) > 0
    if (Q.max(axis=0)[support] <= 0).any():
        problems.append("(A1) violated: some pair with pi_x pi_x' > 0 has zero density under every kernel")
    for d, q in enumerate(Q):
        zeros = np.argwhere(support & (q <= 0))
        if len(zeros):
            x, y = zeros[0]
            problems.append(f"(A2) violated: kernel {d + 1} has q({x}, {y}) = 0 where pi_x pi_x' > 0")
    return problems


def _mixture(inst, alpha):
    omega, Q, _, _ = inst.support_pairs()
    alpha = np.asarray(alpha, dtype=float)
    return omega, Q, alpha @ Q


def exact_entropy(inst, alpha):
    """``sum_{x,x'} pi_x pi_x' log sum_d alpha_d q_d(x, x')``."""
    omega, Q, _ = _mixture(inst, alpha)
    with np.errstate(divide="ignore"):
        log_terms = np.log(np.asarray(alpha, dtype=float))[:, None] + np.log(Q)
    m = log_terms.max(axis=0)
    log_mix = m + np.log(np.exp(log_terms - m).sum(axis=0))
    return float(np.dot(omega, log_mix))


def exact_f(inst, alpha):
    """The averaged-EM map ``F_d = E[alpha_d q_d / sum_j alpha_j q_j]``."""
    omega, Q, mix = _mixture(inst, alpha)
    return np.asarray(alpha, dtype=float) * (Q @ (omega / mix))


def variance_pi(inst, h=None):
    h = inst.h if h is None else np.asarray(h, dtype=float)
    mean = np.dot(inst.pi, h)
    return float(np.dot(inst.pi, (h - mean) ** 2))


def exact_sigma2(inst, alpha, h=None):
    """Asymptotic variance of the Rao-Blackwellized weighted estimator of ``pi(h)``.

    ``sum_{x,x'} pi_x pi_x' (h(x') - pi(h))^2 pi_x' / sum_d alpha_d q_d(x, x')``.
    """
    h = inst.h if h is None else np.asarray(h, dtype=float)
    if h is None:
        raise ValueError("no test function given and the instance has none")
    omega, _, mix = _mixture(inst, alpha)
    _, _, xs, ys = inst.support_pairs()
    centered = h[ys] - np.dot(inst.pi, h)
    return float(np.sum(omega * centered**2 * inst.pi[ys] / mix))


def snis_asymptotic_variance(target, proposal, f):
    """``V_nu{(f - target(f)) target/nu}`` on a finite space, from first principles.

    All three arguments are arrays over the same finite space (any shape).
    """
    target, proposal, f = (np.asarray(a, dtype=float).reshape(-1) for a in (target, proposal, f))
    sup = proposal > 0
    ratio = np.zeros_like(target)
    ratio[sup] = target[sup] / proposal[sup]
    g = (f - np.dot(target, f)) * ratio
    mean = np.dot(proposal, g)
    return float(np.dot(proposal, (g - mean) ** 2))


def _check_not_identical(inst):
    _, Q, _, _ = inst.support_pairs()
    if np.all(np.abs(Q - Q[0]) <= 1e-15):
        raise AllKernelsIdentical("every simplex point is optimal when all kernels coincide")


def f_iterates(inst, alpha0, n):
    """``[alpha0, F(alpha0), ..., F^n(alpha0)]``."""
    out = [np.asarray(alpha0, dtype=float)]
    for _ in range(n):
        out.append(exact_f(inst, out[-1]))
    return out


def exact_alpha_max(inst, tol=1e-12, max_iter=10**6, alpha0=None):
    """Iterate the exact F map from ``alpha0`` (uniform by default) to a fixed point."""
    _check_not_identical(inst)
    omega, Q, _, _ = inst.support_pairs()
    alpha = np.full(inst.D, 1.0 / inst.D) if alpha0 is None else np.asarray(alpha0, dtype=float)
    for _ in range(max_iter):
        new = alpha * (Q @ (omega / (alpha @ Q)))
        new /= new.sum()
        if np.max(np.abs(new - alpha)) <= tol:
            return new
        alpha = new
    raise NotConverged(f"F iteration did not reach tol={tol} in {max_iter} steps")


def simplex_grid(D, step):
    """All points of the simplex lattice with spacing ``step`` (``1/step`` integer)."""
    R = int(round(1.0 / step))
    pts = [c for c in itertools.product(range(R + 1), repeat=D - 1) if sum(c) <= R]
    pts = np.array(pts, dtype=float).reshape(-1, D - 1)
    return np.column_stack([pts, R - pts.sum(axis=1)]) / R


def grid_alpha_max(inst, step=1e-3, chunk=20000):
    """Brute-force maximizer of the exact entropy over a simplex lattice (D <= 3)."""
    if inst.D > 3:
        raise ValueError("grid search is only supported for D <= 3")
    omega, Q, _, _ = inst.support_pairs()
    grid = simplex_grid(inst.D, step)
    best, best_val = None, -np.inf
    for i in range(0, len(grid), chunk):
        g = grid[i : i + chunk]
        with np.errstate(divide="ignore"):
            vals = np.log(g @ Q) @ omega
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best, best_val = g[j], vals[j]
    return best


class ExactEvaluator:
    """Entropy criterion and F map of an instance, for ``fixed_point_iterate``."""

    exact = True

    def __init__(self, inst):
        self.inst = inst

    def entropy(self, alpha):
        return exact_entropy(self.inst, alpha)

    def f(self, alpha):
        return exact_f(self.inst, alpha)


def oracle_report(inst, alpha=None):
    """Everything the ``oracle`` command prints, as a JSON-ready dict."""
    violations = validate_instance(inst)
    report = {"instance": inst.name, "valid": not violations, "violations": violations}
    if violations:
        return report
    alpha = np.full(inst.D, 1.0 / inst.D) if alpha is None else np.asarray(alpha, dtype=float)
    report["alpha"] = alpha.tolist()
    report["entropy"] = exact_entropy(inst, alpha)
    report["f"] = exact_f(inst, alpha).tolist()
    report["jensen_bound"] = float(np.dot(inst.pi[inst.pi > 0], np.log(inst.pi[inst.pi > 0])))
    try:
        amax = exact_alpha_max(inst)
        report["alpha_max"] = amax.tolist()
        report["entropy_at_alpha_max"] = exact_entropy(inst, amax)
    except AllKernelsIdentical:
        report["alpha_max"] = None
    if inst.h is not None:
        report["pi_h"] = float(np.dot(inst.pi, inst.h))
        report["variance_pi_h"] = variance_pi(inst)
        report["sigma2"] = exact_sigma2(inst, alpha)
    return report
