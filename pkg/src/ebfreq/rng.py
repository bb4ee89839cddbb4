"""Per-marker random streams with a fixed, documented algorithm.

Each marker ``i`` owns an independent SplitMix64 stream whose starting state
is derived from ``(seed, tag, i)``.  Draws for one marker never depend on how
many other markers are generated or in what batch order, so simulations are
reproducible bit for bit and can be produced in any chunking.

Samplers built on the raw 64-bit outputs:

* uniform -- ``((raw >> 11) + 0.5) * 2**-53``, strictly inside (0, 1);
* normal -- Box-Muller, cosine branch only (two raws per draw);
* gamma -- Marsaglia-Tsang squeeze/rejection for shape >= 1; shape < 1 uses
  ``G(shape + 1) * U**(1/shape)`` evaluated in log space;
* beta -- ``Ga / (Ga + Gb)`` from two gamma draws, computed as a logistic of
  the log-gamma difference;
* binomial -- sum of Bernoulli trials, each an integer comparison of a 53-bit
  draw against ``p * 2**53``;
* hypergeometric -- sequential draws without replacement using ``raw mod
  remaining`` (integers only).
"""

from __future__ import annotations

import zlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_TWO53 = float(2**53)


def _mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class MarkerStreams:
    """``n`` independent SplitMix64 streams keyed by ``(seed, tag, index)``."""

    def __init__(self, seed: int, tag: str, n: int):
        seed_arr = np.array([int(seed) & _MASK64], dtype=np.uint64)
        tag_arr = np.array([zlib.crc32(tag.encode("utf-8"))], dtype=np.uint64)
        key = _mix64(_mix64(seed_arr + _GOLDEN) ^ tag_arr)
        index = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        self.state = _mix64(key ^ _mix64(index))
        self.n = n

    def raw(self, rows=None) -> np.ndarray:
        """Next 64-bit output of each selected stream (advances only those)."""
        if rows is None:
            self.state = self.state + _GOLDEN
            return _mix64(self.state)
        self.state[rows] = self.state[rows] + _GOLDEN
        return _mix64(self.state[rows])

    def uniform(self, rows=None) -> np.ndarray:
        return ((self.raw(rows) >> np.uint64(11)).astype(float) + 0.5) / _TWO53

    def normal(self, rows=None) -> np.ndarray:
        u1 = self.uniform(rows)
        u2 = self.uniform(rows)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def log_gamma_variate(self, shape) -> np.ndarray:
        """Log of one Gamma(shape, 1) draw per stream."""
        shape = np.broadcast_to(np.asarray(shape, dtype=float), (self.n,))
        if np.any(~(shape > 0)):
            raise ValueError("gamma shape must be positive")
        boosted = shape < 1.0
        alpha = np.where(boosted, shape + 1.0, shape)
        d = alpha - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty(self.n)
        pending = np.arange(self.n)
        while pending.size:
            x = self.normal(pending)
            u = self.uniform(pending)
            dp, cp = d[pending], c[pending]
            v = 1.0 + cp * x
            ok = v > 0
            v3 = np.where(ok, v, 1.0) ** 3
            accept = ok & (np.log(u) < 0.5 * x * x + dp - dp * v3 + dp * np.log(v3))
            out[pending[accept]] = np.log(dp[accept]) + np.log(v3[accept])
            pending = pending[~accept]
        rows = np.flatnonzero(boosted)
        if rows.size:
            out[rows] += np.log(self.uniform(rows)) / shape[rows]
        return out

    def beta(self, a, b) -> np.ndarray:
        la = self.log_gamma_variate(a)
        lb = self.log_gamma_variate(b)
        # exp overflow gives inf and the exact limit 0.
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(lb - la))

    def binomial(self, n, p) -> np.ndarray:
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), (self.n,))
        threshold = np.broadcast_to(np.asarray(p, dtype=float), (self.n,)) * _TWO53
        out = np.zeros(self.n, dtype=np.int64)
        for t in range(int(n.max()) if self.n else 0):
            rows = np.flatnonzero(n > t)
            draw = (self.raw(rows) >> np.uint64(11)).astype(float)
            out[rows] += draw < threshold[rows]
        return out

    def hypergeometric(self, n_good, n_total, n_draw) -> np.ndarray:
        """Successes among ``n_draw`` items taken without replacement."""
        good = np.array(np.broadcast_to(np.asarray(n_good, dtype=np.int64), (self.n,)))
        total = np.broadcast_to(np.asarray(n_total, dtype=np.int64), (self.n,))
        n_draw = np.broadcast_to(np.asarray(n_draw, dtype=np.int64), (self.n,))
        out = np.zeros(self.n, dtype=np.int64)
        for t in range(int(n_draw.max()) if self.n else 0):
            rows = np.flatnonzero(n_draw > t)
            remaining = (total[rows] - t).astype(np.uint64)
            pick = (self.raw(rows) % remaining).astype(np.int64)
            hit = pick < good[rows]
            out[rows] += hit
            good[rows] -= hit
        return out
