"""Counter-based random substreams.

Every uniform draw is a pure function of ``(seed, t, purpose, i, j)``: the
run seed, the iteration, a short tag naming what the randomness is for, the
particle index and the draw index within that particle. Nothing is consumed
from a shared generator state, so results do not depend on evaluation order,
chunking or thread count.

The stream key is derived with BLAKE2b; individual draws use the SplitMix64
finalizer applied to ``key + counter * gamma``, vectorized over uint64 arrays.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MAX_DRAWS = 1 << 16


def _splitmix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_key(seed, t, purpose):
    payload = f"{int(seed)}|{int(t)}|{purpose}".encode()
    return np.uint64(int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little"))


@dataclass(frozen=True)
class RngStream:
    """Deterministic source of uniforms for one ``(seed, t, purpose)`` triple.

    Draws are addressed by particle index, so ``stream.uniform([5], 2)`` returns
    the same two numbers whether it is called alone or as part of a larger
    batch.
    """

    seed: int
    t: int = 0
    purpose: str = "root"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def substream(self, t, purpose):
        return RngStream(self.seed, int(t), str(purpose))

    def uniform(self, index, k=None):
        """Uniforms in the open interval (0, 1).

        Parameters
        ----------
        index : int or array of int
            Particle indices (or a count ``n``, meaning ``range(n)``).
        k : int, optional
            Number of draws per particle. If omitted the result is 1-D.
        """
        idx = np.arange(index) if np.isscalar(index) else np.asarray(index)
        idx = idx.astype(np.uint64).reshape(-1)
        kk = 1 if k is None else int(k)
        if kk >= _MAX_DRAWS:
            raise ValueError("too many draws per particle")
        counters = (idx[:, None] << np.uint64(16)) | np.arange(kk, dtype=np.uint64)[None, :]
        z = _splitmix(_stream_key(self.seed, self.t, self.purpose) + (counters + np.uint64(1)) * _GAMMA)
        u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return u[:, 0] if k is None else u

    def normal(self, index, k=None):
        return ndtri(self.uniform(index, k))


def categorical_from_uniforms(probs, u):
    """Inverse-CDF categorical draws; zero-probability categories are never hit."""
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    out = np.searchsorted(cdf, np.asarray(u), side="right")
    return np.minimum(out, len(probs) - 1)
