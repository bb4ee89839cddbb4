"""Conditional Beta priors for target frequencies given booster frequencies.

Four families map a booster profile ``(p_1, ..., p_K)`` to Beta parameters
``(a, b)``:

* :class:`WindowedPrior` -- one fitted Beta per bin of booster frequency (K = 1).
* :class:`EB1Prior` -- ``a = beta0 + sum_k beta_k p_k``, ``b = beta0 + sum_k beta_k (1 - p_k)``.
* :class:`EB2Prior` -- EB1 with extra pseudo-counts at ``p = 0`` and ``p = 1`` (K = 1).
* :class:`SplinePrior` -- cubic B-spline expansion of ``a`` and ``b`` per booster.

Every model exposes ``evaluate(freqs)`` on an ``(m, K)`` array and returns
the ``(a, b)`` arrays; the module-level helpers wrap single profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BetaParams
from .bspline import basis_integrals, bspline_basis, clamped_knots

MODEL_FORMAT = "ebfreq-model"
MODEL_FORMAT_VERSION = 1

# Booster frequencies within this distance of a bin edge still hit the bin.
_BIN_TOL = 1e-12


class PriorEvaluationError(ValueError):
    """A prior could not be evaluated at some rows; ``rows`` holds their positions."""

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(int(r) for r in rows)


def as_freqs(profile, K: int) -> np.ndarray:
    """Coerce a profile or stack of profiles to an ``(m, K)`` float array."""
    arr = np.asarray(profile, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if K > 1 or arr.size == 1 else arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != K:
        raise ValueError(f"booster profile has dimension {arr.shape[-1]}, model expects K={K}")
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("booster frequencies must lie in [0, 1]")
    return arr


def _check_positive(a, b, what):
    bad = ~((a > 0.0) & (b > 0.0) & np.isfinite(a) & np.isfinite(b))
    if np.any(bad):
        rows = np.flatnonzero(bad)
        raise PriorEvaluationError(
            f"{what} gives nonpositive Beta parameters at {rows.size} profile(s)", rows
        )
    return a, b


@dataclass(frozen=True)
class WindowBin:
    lo: float
    hi: float
    a: float
    b: float
    n_markers: int = 0
    flagged: bool = False


@dataclass(frozen=True)
class WindowedPrior:
    """Piecewise-constant prior: one Beta per contiguous range of booster frequency."""

    bins: tuple
    delta: float = 0.0
    variant: str = field(default="windowed", init=False)

    def __post_init__(self):
        bins = tuple(b if isinstance(b, WindowBin) else WindowBin(**b) for b in self.bins)
        if not bins:
            raise ValueError("windowed prior needs at least one bin")
        for prev, cur in zip(bins, bins[1:]):
            if not cur.lo > prev.hi:
                raise ValueError("windowed bins must be ordered and disjoint")
        for b in bins:
            if not (b.lo <= b.hi and b.a > 0 and b.b > 0):
                raise ValueError(f"invalid bin {b}")
        object.__setattr__(self, "bins", bins)

    @property
    def K(self) -> int:
        return 1

    def bin_index(self, p) -> np.ndarray:
        """Index of the bin holding each frequency, or -1 on a miss."""
        p = np.asarray(p, dtype=float)
        lo = np.array([b.lo for b in self.bins])
        hi = np.array([b.hi for b in self.bins])
        idx = np.searchsorted(lo - _BIN_TOL, p, side="right") - 1
        safe = np.clip(idx, 0, len(self.bins) - 1)
        hit = (idx >= 0) & (p <= hi[safe] + _BIN_TOL)
        return np.where(hit, safe, -1)

    def evaluate(self, freqs):
        p = as_freqs(freqs, 1)[:, 0]
        idx = self.bin_index(p)
        if np.any(idx < 0):
            rows = np.flatnonzero(idx < 0)
            raise PriorEvaluationError(
                f"booster frequency {p[rows[0]]!r} falls outside every fitted window", rows
            )
        a = np.array([b.a for b in self.bins])[idx]
        b = np.array([b.b for b in self.bins])[idx]
        return a, b

    def affinity(self) -> float:
        return float(np.median([b.a + b.b for b in self.bins]))

    @property
    def affinity_definition(self) -> str:
        return "standard"

    def coefficients(self) -> dict:
        return {
            "delta": self.delta,
            "bins": [
                {"lo": b.lo, "hi": b.hi, "a": b.a, "b": b.b, "n_markers": b.n_markers, "flagged": b.flagged}
                for b in self.bins
            ],
        }


@dataclass(frozen=True)
class EB1Prior:
    """Linear prior; ``2 beta0 + sum(betas)`` pseudo-counts in total."""

    beta0: float
    betas: tuple
    variant: str = field(default="eb1", init=False)

    def __post_init__(self):
        betas = tuple(float(v) for v in np.atleast_1d(self.betas))
        if not betas:
            raise ValueError("EB1 needs at least one booster coefficient")
        if self.beta0 < 0 or min(betas) < 0 or not all(map(math.isfinite, (self.beta0, *betas))):
            raise ValueError("EB1 coefficients must be finite and nonnegative")
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "betas", betas)

    @property
    def K(self) -> int:
        return len(self.betas)

    def evaluate(self, freqs):
        p = as_freqs(freqs, self.K)
        a = np.full(p.shape[0], self.beta0)
        b = np.full(p.shape[0], self.beta0)
        for k, beta in enumerate(self.betas):
            a = a + beta * p[:, k]
            b = b + beta * (1.0 - p[:, k])
        return _check_positive(a, b, "EB1 prior")

    def affinity(self) -> float:
        return 2.0 * self.beta0 + sum(self.betas)

    @property
    def affinity_definition(self) -> str:
        return "standard" if self.K == 1 else "extended"

    def coefficients(self) -> dict:
        return {"beta0": self.beta0, "betas": list(self.betas)}


@dataclass(frozen=True)
class EB2Prior:
    """EB1 plus symmetric indicator terms for monomorphic boosters.

    ``beta2`` and ``beta3`` may be negative as long as the endpoint parameters
    ``beta0 + beta2`` and ``beta0 + beta1 + beta3`` stay positive.
    """

    beta0: float
    beta1: float
    beta2: float
    beta3: float
    variant: str = field(default="eb2", init=False)

    def __post_init__(self):
        vals = [float(v) for v in (self.beta0, self.beta1, self.beta2, self.beta3)]
        if not all(map(math.isfinite, vals)):
            raise ValueError("EB2 coefficients must be finite")
        b0, b1, b2, b3 = vals
        if b0 < 0 or b0 + b1 <= 0:
            raise ValueError("EB2 interior parameters must satisfy beta0 >= 0 and beta0 + beta1 > 0")
        if b0 + b2 <= 0 or b0 + b1 + b3 <= 0:
            raise ValueError("EB2 endpoint parameters beta0+beta2 and beta0+beta1+beta3 must be positive")
        for name, v in zip(("beta0", "beta1", "beta2", "beta3"), vals):
            object.__setattr__(self, name, v)

    @property
    def K(self) -> int:
        return 1

    def evaluate(self, freqs):
        p = as_freqs(freqs, 1)[:, 0]
        at0 = (p == 0.0).astype(float)
        at1 = (p == 1.0).astype(float)
        a = self.beta0 + self.beta1 * p + self.beta2 * at0 + self.beta3 * at1
        b = self.beta0 + self.beta1 * (1.0 - p) + self.beta2 * at1 + self.beta3 * at0
        return _check_positive(a, b, "EB2 prior")

    def affinity(self) -> float:
        # Interior pseudo-count total; the indicator terms only act at p in {0, 1}.
        return 2.0 * self.beta0 + self.beta1

    @property
    def affinity_definition(self) -> str:
        return "extended"

    def coefficients(self) -> dict:
        return {"beta0": self.beta0, "beta1": self.beta1, "beta2": self.beta2, "beta3": self.beta3}


@dataclass(frozen=True)
class SplinePrior:
    """B-spline prior, one coefficient vector per booster.

    With ``gamma`` unset the model is symmetric: ``a`` uses ``N_j(p)`` and ``b``
    uses ``N_j(1 - p)`` with the same coefficients, so ``a(p) = b(1 - p)``.
    """

    theta: tuple
    gamma: tuple | None = None
    variant: str = field(default="spline", init=False)

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if theta.shape[1] < 4:
            raise ValueError("spline prior needs at least 4 basis functions")
        if not np.all(np.isfinite(theta)) or theta.min() <= 0:
            raise ValueError("spline coefficients must be finite and positive")
        object.__setattr__(self, "theta", tuple(tuple(row) for row in theta))
        if self.gamma is not None:
            gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
            if gamma.shape != theta.shape:
                raise ValueError("gamma must have the same shape as theta")
            if not np.all(np.isfinite(gamma)) or gamma.min() <= 0:
                raise ValueError("spline coefficients must be finite and positive")
            object.__setattr__(self, "gamma", tuple(tuple(row) for row in gamma))

    @property
    def K(self) -> int:
        return len(self.theta)

    @property
    def n_basis(self) -> int:
        return len(self.theta[0])

    @property
    def symmetric(self) -> bool:
        return self.gamma is None

    def _parts(self, p):
        """Per-booster contributions to ``a`` and ``b``, each of shape ``(K, m)``."""
        theta = np.asarray(self.theta)
        gamma = theta if self.gamma is None else np.asarray(self.gamma)
        a_parts, b_parts = [], []
        for k in range(self.K):
            a_parts.append(np.sum(bspline_basis(self.n_basis, p[:, k]) * theta[k], axis=1))
            b_parts.append(np.sum(bspline_basis(self.n_basis, 1.0 - p[:, k]) * gamma[k], axis=1))
        return np.array(a_parts), np.array(b_parts)

    def evaluate(self, freqs):
        p = as_freqs(freqs, self.K)
        a_parts, b_parts = self._parts(p)
        a = np.zeros(p.shape[0])
        b = np.zeros(p.shape[0])
        for k in range(self.K):
            a = a + a_parts[k]
            b = b + b_parts[k]
        return _check_positive(a, b, "spline prior")

    def affinity(self, n_points: int = 1024) -> float:
        """Integral of ``a(p) + b(p)`` over [0, 1], summed over boosters.

        Composite Gauss-Legendre on a grid that contains every knot, so the
        rule is exact for the piecewise cubic integrand up to rounding.
        """
        knots = np.unique(clamped_knots(self.n_basis))
        spans = knots.size - 1
        per_span = max(1, math.ceil(n_points / (4 * spans)))
        edges = np.concatenate(
            [np.linspace(lo, hi, per_span + 1)[:-1] for lo, hi in zip(knots[:-1], knots[1:])] + [[1.0]]
        )
        nodes, weights = np.polynomial.legendre.leggauss(4)
        left, right = edges[:-1, None], edges[1:, None]
        x = (0.5 * (right - left) * nodes + 0.5 * (right + left)).ravel()
        w = (0.5 * (right - left) * weights).ravel()
        total = 0.0
        for k in range(self.K):
            # Booster k alone, as if its profile entry were the only one.
            p = np.zeros((x.size, self.K))
            p[:, k] = x
            a_parts, b_parts = self._parts(p)
            total += math.fsum(w * (a_parts[k] + b_parts[k]))
        return total

    def exact_affinity(self) -> float:
        """Closed-form counterpart of :meth:`affinity` via basis integrals."""
        ints = basis_integrals(self.n_basis)
        theta = np.asarray(self.theta)
        gamma = theta if self.gamma is None else np.asarray(self.gamma)
        return float(np.sum(theta @ ints) + np.sum(gamma @ ints))

    @property
    def affinity_definition(self) -> str:
        return "standard" if self.K == 1 else "extended"

    def coefficients(self) -> dict:
        return {
            "theta": [list(row) for row in self.theta],
            "gamma": None if self.gamma is None else [list(row) for row in self.gamma],
        }


def eval_prior(model, profile):
    """Beta prior for a single booster profile."""
    p = as_freqs(profile, model.K)
    if p.shape[0] != 1:
        raise ValueError("eval_prior takes a single profile; use model.evaluate for many")
    a, b = model.evaluate(p)
    return BetaParams(a[0], b[0])


def affinity(model) -> float:
    """Effective booster sample size of a fitted model."""
    return float(model.affinity())


def local_affinity(model, profile):
    """``a(p) + b(p)`` at one profile (scalar) or many (array)."""
    p = np.asarray(profile, dtype=float)
    a, b = model.evaluate(p)
    nu = a + b
    single = p.ndim == 0 or (p.ndim == 1 and model.K > 1) or (p.ndim == 1 and p.size == 1)
    return float(nu[0]) if single else nu


def to_document(model, fit: dict | None = None) -> dict:
    """Self-describing JSON-ready dict for ``model`` (see README for the schema)."""
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "variant": model.variant,
        "K": model.K,
        "coefficients": model.coefficients(),
        "affinity": model.affinity(),
        "affinity_definition": model.affinity_definition,
    }
    if isinstance(model, SplinePrior):
        doc["knots"] = {
            "degree": 3,
            "n_basis": model.n_basis,
            "placement": "clamped-uniform",
            "vector": clamped_knots(model.n_basis).tolist(),
        }
    if fit is not None:
        doc["fit"] = dict(fit)
    return doc


def from_document(doc: dict):
    """Inverse of :func:`to_document`."""
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model document (format={doc.get('format')!r})")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    variant = doc.get("variant")
    coef = doc["coefficients"]
    if variant == "windowed":
        model = WindowedPrior(bins=tuple(WindowBin(**b) for b in coef["bins"]), delta=coef.get("delta", 0.0))
    elif variant == "eb1":
        model = EB1Prior(coef["beta0"], tuple(coef["betas"]))
    elif variant == "eb2":
        model = EB2Prior(coef["beta0"], coef["beta1"], coef["beta2"], coef["beta3"])
    elif variant == "spline":
        model = SplinePrior(coef["theta"], coef.get("gamma"))
    else:
        raise ValueError(f"unknown prior variant {variant!r}")
    if model.K != doc.get("K", model.K):
        raise ValueError(f"model document declares K={doc['K']} but coefficients imply K={model.K}")
    return model
