"""Markov transition kernels used as mixture components."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.special import gammaln, stdtrit

from .errors import InvalidParameter, LengthMismatch, NoSampler
from .rng import RngStream
from .targets import Gaussian, TargetDensity, as_points


class TransitionKernel:
    """A proposal ``q(x, .)``: draw ``x'`` given ``x`` and evaluate ``log q(x, x')``.

    Subclasses implement ``_from_uniforms(x, u)`` and ``log_density(x, y)``,
    both vectorized over the leading axis. ``n_uniforms`` is how many uniforms
    one proposal consumes.
    """

    n_uniforms = 1
    name = "kernel"

    def propose(self, x, stream: RngStream, index=None):
        x = self._points(x)
        if index is None:
            index = np.arange(len(x))
        return self._from_uniforms(x, stream.uniform(index, self.n_uniforms))

    def _points(self, x):
        return x

    def _from_uniforms(self, x, u):
        raise NotImplementedError

    def log_density(self, x, y):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class RandomWalkNormal(TransitionKernel):
    def __init__(self, covariance, name="rw_normal"):
        self.gauss = Gaussian(0.0, covariance)
        self.dim = self.gauss.dim
        self.n_uniforms = self.dim
        self.name = name

    def _points(self, x):
        return as_points(x, self.dim)

    def _from_uniforms(self, x, u):
        return x + self.gauss.from_uniforms(u)

    def log_density(self, x, y):
        return self.gauss.logpdf_centered(as_points(y, self.dim) - as_points(x, self.dim))


class RandomWalkStudent(TransitionKernel):
    """Independent scaled Student-t increments, one per coordinate."""

    def __init__(self, dof, scales, name="rw_student"):
        scales = np.atleast_1d(np.asarray(scales, dtype=float))
        if not dof > 0 or not np.isfinite(dof):
            raise InvalidParameter("dof must be a positive finite number")
        if scales.ndim != 1 or (scales <= 0).any() or not np.isfinite(scales).all():
            raise InvalidParameter("scales must be positive and finite")
        self.dof = float(dof)
        self.scales = scales
        self.dim = len(scales)
        self.n_uniforms = self.dim
        self.name = name
        nu = self.dof
        self._const = self.dim * (gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)) - np.log(scales).sum()

    def _points(self, x):
        return as_points(x, self.dim)

    def _from_uniforms(self, x, u):
        return x + self.scales * stdtrit(self.dof, u)

    def log_density(self, x, y):
        z = (as_points(y, self.dim) - as_points(x, self.dim)) / self.scales
        return self._const - 0.5 * (self.dof + 1) * np.log1p(z * z / self.dof).sum(axis=1)


class IndependentKernel(TransitionKernel):
    """``q(x, x') = g(x')`` for a fixed, exactly samplable, normalized ``g``."""

    def __init__(self, component: TargetDensity, name="independent"):
        if component.sampler is None or component.log_normalizer is None:
            raise NoSampler("independent kernel needs an exact sampler and a known normalizer")
        self.component = component
        self.n_uniforms = component.n_uniforms
        self.name = name

    def _from_uniforms(self, x, u):
        return self.component.sampler(u)

    def log_density(self, x, y):
        return self.component.log_density(y)


class DiscreteKernel(TransitionKernel):
    """Row-stochastic matrix kernel on ``{0, ..., S-1}``."""

    def __init__(self, matrix, name="discrete"):
        q = np.asarray(matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InvalidParameter("kernel matrix must be square")
        if (q < 0).any() or not np.allclose(q.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise InvalidParameter("kernel matrix must be row-stochastic")
        self.matrix = q
        with np.errstate(divide="ignore"):
            self.log_matrix = np.log(q)
        self._cdf = np.cumsum(q, axis=1)
        self._cdf /= self._cdf[:, -1:]
        self._cdf[:, -1] = 1.0
        self.name = name

    def _from_uniforms(self, x, u):
        x = np.asarray(x, dtype=np.int64)
        return (self._cdf[x] < u).sum(axis=1)

    def log_density(self, x, y):
        return self.log_matrix[np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)]


def make_rw_normal_kernel(covariance):
    return RandomWalkNormal(covariance)


def make_rw_student_product_kernel(dof, scales):
    return RandomWalkStudent(dof, scales)


def make_independent_kernel(component_target):
    return IndependentKernel(component_target)


class KernelFamily(Sequence):
    """An ordered, immutable list of ``D >= 1`` kernels on a common space."""

    def __init__(self, kernels):
        self.kernels = tuple(kernels)
        if not self.kernels:
            raise LengthMismatch("a kernel family needs at least one kernel")

    def __getitem__(self, i):
        return self.kernels[i]

    def __len__(self):
        return len(self.kernels)

    @property
    def D(self):
        return len(self.kernels)

    def log_density_matrix(self, x, y, active=None):
        """``(N, D)`` matrix of ``log q_d(x_i, y_i)``.

        Columns for kernels not in ``active`` (a boolean mask) are left at
        ``-inf`` without being evaluated.
        """
        n = len(x)
        out = np.full((n, self.D), -np.inf)
        for d, k in enumerate(self.kernels):
            if active is None or active[d]:
                out[:, d] = k.log_density(x, y)
        return out
