"""Beta-binomial and Beta-posterior arithmetic.

Everything here works in log space (``gammaln`` plus a log-Beta routine with
Stirling corrections for large arguments) so that products over tens of thousands of markers never
overflow.  The scalar entry points validate their inputs; the ``*_array``
helpers skip validation and are what the fitting code calls in its inner
loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln

__all__ = [
    "BetaParams",
    "CountPair",
    "PARAM_FLOOR",
    "log_beta",
    "log_betabinom_pmf",
    "betabinom_logpmf_array",
    "betabinom_grad_array",
    "posterior_update",
    "posterior_mean",
    "posterior_variance_proxy",
]

# Lower bound on a, b used inside optimisation transforms.
PARAM_FLOOR = 1e-8


@dataclass(frozen=True)
class BetaParams:
    """A Beta(a, b) distribution, used both as a prior and a posterior."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (a > 0.0 and b > 0.0) or not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"Beta parameters must be finite and positive, got a={self.a!r}, b={self.b!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def nu(self) -> float:
        """Total pseudo-count ``a + b`` (the local affinity)."""
        return self.a + self.b

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        mu = self.mean
        return mu * (1.0 - mu) / (self.nu + 1.0)


@dataclass(frozen=True)
class CountPair:
    """Observed count of allele A (``successes``) out of ``trials`` alleles."""

    successes: int
    trials: int

    def __post_init__(self):
        s, t = _as_int(self.successes, "successes"), _as_int(self.trials, "trials")
        if t <= 0:
            raise ValueError(f"trials must be positive, got {t}")
        if not 0 <= s <= t:
            raise ValueError(f"successes must lie in [0, {t}], got {s}")
        object.__setattr__(self, "successes", s)
        object.__setattr__(self, "trials", t)

    @property
    def frequency(self) -> float:
        return self.successes / self.trials


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling-series coefficients B_2k / (2k (2k - 1)), k = 1..8.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def _lgamma_correction(x):
    """lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], valid for x >= 10."""
    x = np.asarray(x, dtype=float)
    inv = 1.0 / x
    inv2 = inv * inv
    acc = np.zeros_like(x)
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc * inv


def betaln(a, b):
    """Vectorised log Beta function.

    Splits on the smaller and larger argument so that neither a tiny nor a
    huge argument costs digits: both large uses the Stirling corrections
    directly, one large uses ``lgamma(p)`` plus a ``log1p`` tail, both small
    falls back to plain ``lgamma`` sums.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.minimum(a, b)
    q = np.maximum(a, b)
    s = p + q
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        frac = p / s
        log1m_frac = np.log1p(-frac)
        big_q = np.maximum(q, 10.0)
        big_p = np.maximum(p, 10.0)
        corr_q = _lgamma_correction(big_q) - _lgamma_correction(np.maximum(s, 10.0))
        both_large = (
            -0.5 * np.log(q)
            + _HALF_LOG_2PI
            + _lgamma_correction(big_p)
            + corr_q
            + (p - 0.5) * np.log(frac)
            + q * log1m_frac
        )
        one_large = gammaln(p) + corr_q + p - p * np.log(s) + (q - 0.5) * log1m_frac
        both_small = gammaln(p) + gammaln(q) - gammaln(s)
    out = np.where(p >= 10.0, both_large, np.where(q >= 10.0, one_large, both_small))
    return out[()] if out.ndim == 0 else out


def _as_int(value, name):
    if isinstance(value, (bool, np.bool_)):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return int(value)
    raise TypeError(f"{name} must be an integer, got {value!r}")


def log_beta(a: float, b: float) -> float:
    """Natural log of the Beta function B(a, b)."""
    a, b = float(a), float(b)
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"log_beta requires a > 0 and b > 0, got ({a}, {b})")
    return float(betaln(a, b))


# Endpoint log probabilities above this are recomputed by a cancellation-free sum.
_NEAR_ZERO = -1e-3


def betabinom_logpmf_array(y, n, a, b):
    """Vectorised beta-binomial log pmf; no input checks.

    The binomial coefficient is formed as ``lgamma(n+1) - (lgamma(y+1) +
    lgamma(n-y+1))`` so that swapping ``y`` and ``n - y`` gives a bit-identical
    result.
    """
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    log_choose = gammaln(n + 1.0) - (gammaln(y + 1.0) + gammaln(n - y + 1.0))
    out = betaln(a + y, b + (n - y)) - betaln(a, b) + log_choose
    return _refine_endpoints(out, y, n, a, b)


def _refine_endpoints(out, y, n, a, b):
    """Recompute near-zero endpoint log probabilities without cancellation.

    At ``y = n`` the log pmf is ``sum_i log1p(-b / (a + b + i))`` (mirrored at
    ``y = 0``); every term has the same sign, so relative accuracy holds even
    when the difference of log-beta values would cancel.
    """
    out, y, n, a, b = np.broadcast_arrays(out, y, n, np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    pick = ((y == 0) | (y == n)) & (out > _NEAR_ZERO)
    if not pick.any():
        return out[()] if out.ndim == 0 else out
    out = out.copy()
    yy, nn, aa, bb = y[pick], n[pick], a[pick], b[pick]
    other = np.where(yy == nn, bb, aa)
    total = aa + bb
    acc = np.zeros(yy.size)
    for i in range(int(nn.max())):
        live = i < nn
        acc[live] += np.log1p(-other[live] / (total[live] + i))
    out[pick] = acc
    return out[()] if out.ndim == 0 else out


def betabinom_grad_array(y, n, a, b):
    """Partial derivatives of the beta-binomial log pmf w.r.t. ``a`` and ``b``."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    common = digamma(a + b) - digamma(a + b + n)
    da = digamma(a + y) - digamma(a) + common
    db = digamma(b + (n - y)) - digamma(b) + common
    return da, db


def log_betabinom_pmf(n: int, params: BetaParams, x: int) -> float:
    """Log of the beta-binomial probability of ``x`` successes in ``n`` trials.

    >>> round(math.exp(log_betabinom_pmf(2, BetaParams(1, 1), 1)), 12)
    0.333333333333
    """
    n = _as_int(n, "n")
    x = _as_int(x, "x")
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if not 0 <= x <= n:
        raise ValueError(f"x must lie in [0, {n}], got {x}")
    if not isinstance(params, BetaParams):
        params = BetaParams(*params)
    return float(betabinom_logpmf_array(x, n, params.a, params.b))


def posterior_update(prior: BetaParams, obs: CountPair) -> BetaParams:
    """Conjugate update of a Beta prior with binomial counts."""
    return BetaParams(prior.a + obs.successes, prior.b + obs.trials - obs.successes)


def posterior_mean(post: BetaParams) -> float:
    return post.a / (post.a + post.b)


def posterior_variance_proxy(post: BetaParams) -> float:
    """``mu (1 - mu) / (nu + 1)`` of the given Beta distribution.

    Applied to a posterior, this is the plug-in squared-error estimate that
    ignores uncertainty in the fitted prior parameters.
    """
    mu = post.a / (post.a + post.b)
    return mu * (1.0 - mu) / (post.a + post.b + 1.0)
