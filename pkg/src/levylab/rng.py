"""Counter-based random streams and uniform-driven variate generation.

Reproducibility contract: a stream is a Philox4x64 counter keyed by two
64-bit words derived from ``(seed, stream_id)`` with splitmix64 (see
:func:`stream_key`).  Uniform doubles are the only primitive drawn from the
counter; every other variate is produced from uniforms by the documented
algorithms below, so identical ``(seed, stream_id)`` and call sequence
reproduce byte-identical output, and distinct pairs give independent
streams.

Variate algorithms (all consume uniforms in a fixed, vectorized order):

* exponential -- inversion, ``-log1p(-u)``;
* normal -- Box-Muller pairs;
* gamma(k>=1) -- Marsaglia-Tsang squeeze rejection with Box-Muller normals;
* gamma(k<1)  -- Marsaglia-Tsang at k+1 boosted by ``u**(1/k)``;
* beta(a,b)   -- ratio of two gammas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One output of the splitmix64 mixer for a 64-bit input."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def hash64(seed: int, stream_id: int) -> int:
    """The documented (seed, stream_id) -> 64-bit key hash."""
    return splitmix64(splitmix64(seed & _MASK64) ^ (stream_id & _MASK64))


def stream_key(seed: int, stream_id: int) -> np.ndarray:
    """Two Philox key words; the second word re-mixes the first."""
    k0 = hash64(seed, stream_id)
    k1 = splitmix64(k0 ^ splitmix64(stream_id & _MASK64))
    return np.array([k0, k1], dtype=np.uint64)


def label_id(label: str, index: int = 0) -> int:
    """Map a textual label plus an index to a 64-bit stream id (FNV-1a)."""
    h = 0xCBF29CE484222325
    for b in label.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return splitmix64(h ^ (index & _MASK64))


@dataclass
class RandomStream:
    """A seekable-free, forward-only random stream.

    Two streams with distinct ``(seed, stream_id)`` are statistically
    independent; identical pairs replay byte-identical draws.
    """

    seed: int
    stream_id: int = 0
    _gen: Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._gen = Generator(Philox(key=stream_key(self.seed, self.stream_id)))

    def substream(self, index: int, label: str = "") -> "RandomStream":
        """Independent child stream; deterministic in (label, index)."""
        return RandomStream(self.seed, label_id(label, index) ^ self.stream_id)

    # -- primitive ---------------------------------------------------------

    def uniform(self, size=None) -> np.ndarray:
        """Uniform doubles in [0, 1): the stream primitive."""
        return self._gen.random(size)

    # -- derived variates ---------------------------------------------------

    def exponential(self, size=None) -> np.ndarray:
        return -np.log1p(-self._gen.random(size))

    def normal(self, size: int) -> np.ndarray:
        """Standard normals via Box-Muller; consumes 2*ceil(size/2) uniforms."""
        half = (int(size) + 1) // 2
        u1 = self._gen.random(half)
        u2 = self._gen.random(half)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        ang = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(ang), r * np.sin(ang)])
        return z[: int(size)]

    def gamma(self, shape, size=None) -> np.ndarray:
        """Gamma(shape, 1) variates, Marsaglia-Tsang from uniforms.

        ``shape`` may be an array and is broadcast against ``size``.
        """
        shape = np.asarray(shape, dtype=float)
        if size is None:
            size = shape.shape
        k = np.broadcast_to(shape, size).reshape(-1).copy()
        if k.size and k.min() <= 0:
            raise ValueError("gamma shape must be positive")
        boost = k < 1.0
        d = np.where(boost, k + 1.0, k) - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty(k.size)
        pending = np.arange(k.size)
        while pending.size:
            x = self.normal(pending.size)
            u = self._gen.random(pending.size)
            v = (1.0 + c[pending] * x) ** 3
            with np.errstate(divide="ignore", invalid="ignore"):
                accept = (v > 0) & (
                    np.log(u)
                    < 0.5 * x * x + d[pending] * (1.0 - v + np.log(np.where(v > 0, v, 1.0)))
                )
            hit = pending[accept]
            out[hit] = d[hit] * v[accept]
            pending = pending[~accept]
        if boost.any():
            u = self._gen.random(int(boost.sum()))
            out[boost] *= u ** (1.0 / k[boost])
        return out.reshape(size)

    def beta(self, a, b, size=None) -> np.ndarray:
        """Beta(a, b) as a gamma ratio; a, b broadcast against size."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if size is None:
            size = np.broadcast_shapes(a.shape, b.shape)
        x = self.gamma(np.broadcast_to(a, size), size)
        y = self.gamma(np.broadcast_to(b, size), size)
        return x / (x + y)

    def beta_one(self, theta: float, size=None) -> np.ndarray:
        """Beta(1, theta) by CDF inversion: 1 - (1-u)^(1/theta)."""
        u = self._gen.random(size)
        return 1.0 - np.exp(np.log1p(-u) / theta)
