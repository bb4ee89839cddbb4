"""Maximum-likelihood fitting of the conditional priors.

EB1, EB2 and the spline family are all linear in their coefficients once the
coefficients are made positive: ``a = A @ s`` and ``b = B @ s`` with design
matrices ``A``, ``B`` that depend only on the booster frequencies.  One
objective class therefore serves all three; it works on the unconstrained
coordinates ``u`` with ``s = softplus(u) + PARAM_FLOOR``.

Markers that share the same booster counts and target counts contribute
identical terms, so the objective is evaluated once per distinct row with a
multiplicity weight.  Value sums use ``math.fsum`` and gradient sums use
numpy's pairwise reduction over contiguous rows, so results do not depend on
BLAS threading.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .bspline import bspline_basis, greville_abscissae
from .core import PARAM_FLOOR, betabinom_grad_array, betabinom_logpmf_array
from .data import DataError, MarkerDataset
from .priors import EB1Prior, EB2Prior, PriorEvaluationError, SplinePrior, WindowBin, WindowedPrior

log = logging.getLogger(__name__)

GTOL = 1e-6
FTOL = 1e-10
MAX_ITER = 2000
DEFAULT_MIN_BIN = 50
DEFAULT_N_BASIS = 8
# BFGS runs until its line search stalls; GTOL/FTOL are then checked at the end.
_INNER_GTOL = 1e-11
_BOUNDARY = 1e-6


@dataclass(frozen=True)
class FitResult:
    model: object
    neg_log_lik: float
    iterations: int
    converged: bool
    gradient_norm: float | None = None
    n_markers: int = 0
    info: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        """Fit summary suitable for embedding in a model document."""
        out = {
            "neg_log_lik": self.neg_log_lik,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
            "n_markers": self.n_markers,
        }
        out.update(self.info)
        return out


def neg_log_likelihood(model, data: MarkerDataset) -> float:
    """Negative beta-binomial log likelihood of the target counts under ``model``."""
    if len(data) == 0:
        return 0.0
    if data.K != model.K:
        raise ValueError(f"model expects K={model.K} boosters, dataset has K={data.K}")
    try:
        a, b = model.evaluate(data.booster_freqs)
    except PriorEvaluationError as exc:
        ids = ", ".join(repr(data.ids[r]) for r in exc.rows[:5])
        raise DataError(f"{exc} (markers {ids})") from exc
    return -math.fsum(betabinom_logpmf_array(data.y, data.n_y, a, b))


def softplus(u):
    return np.logaddexp(0.0, u)


def softplus_inv(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(s > 30.0, s, np.log(np.expm1(np.minimum(s, 30.0))))


def _unique_rows(*columns):
    """Distinct rows of the stacked integer columns, with multiplicities."""
    stacked = np.column_stack(columns)
    rows, counts = np.unique(stacked, axis=0, return_counts=True)
    return rows, counts


class LinearObjective:
    """Mean negative log likelihood as a function of unconstrained coordinates.

    Parameters
    ----------
    A, B : (R, P) arrays
        Design matrices: ``a = A @ s``, ``b = B @ s`` for positive ``s``.
    y, n : (R,) arrays
        Target successes and trials of each distinct row.
    weight : (R,) array
        Number of markers sharing the row.
    transform : {"softplus", "exp"}
        Map from ``u`` to ``s - PARAM_FLOOR``.
    """

    def __init__(self, A, B, y, n, weight, transform="softplus"):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.B = np.ascontiguousarray(B, dtype=float)
        self.At = np.ascontiguousarray(self.A.T)
        self.Bt = np.ascontiguousarray(self.B.T)
        self.y = np.asarray(y, dtype=float)
        self.n = np.asarray(n, dtype=float)
        self.weight = np.asarray(weight, dtype=float)
        self.total = float(self.weight.sum())
        if transform not in ("softplus", "exp"):
            raise ValueError(f"unknown transform {transform!r}")
        self.transform = transform

    @property
    def n_params(self) -> int:
        return self.A.shape[1]

    def to_positive(self, u):
        u = np.asarray(u, dtype=float)
        base = np.exp(u) if self.transform == "exp" else softplus(u)
        return base + PARAM_FLOOR

    def from_positive(self, s):
        s = np.maximum(np.asarray(s, dtype=float) - PARAM_FLOOR, PARAM_FLOOR)
        return np.log(s) if self.transform == "exp" else softplus_inv(s)

    def _ab(self, s):
        return np.sum(self.A * s, axis=1), np.sum(self.B * s, axis=1)

    def value(self, u) -> float:
        a, b = self._ab(self.to_positive(u))
        ll = betabinom_logpmf_array(self.y, self.n, a, b)
        return -math.fsum(self.weight * ll) / self.total

    def _value_grad_s(self, s):
        a, b = self._ab(s)
        ll = betabinom_logpmf_array(self.y, self.n, a, b)
        da, db = betabinom_grad_array(self.y, self.n, a, b)
        grad_s = -(np.sum(self.At * (self.weight * da), axis=1) + np.sum(self.Bt * (self.weight * db), axis=1))
        return -math.fsum(self.weight * ll) / self.total, grad_s / self.total

    def grad_positive(self, s):
        """Gradient of the mean objective with respect to the positive parameters."""
        return self._value_grad_s(np.asarray(s, dtype=float))[1]

    def value_and_grad(self, u):
        u = np.asarray(u, dtype=float)
        value, grad_s = self._value_grad_s(self.to_positive(u))
        ds_du = np.exp(u) if self.transform == "exp" else expit(u)
        return value, grad_s * ds_du


@dataclass
class _Run:
    u: np.ndarray
    value: float
    iterations: int
    gradient_norm: float
    converged: bool
    history: list


def _minimize(objective: LinearObjective, u0, gtol=GTOL, ftol=FTOL, max_iter=MAX_ITER) -> _Run:
    """BFGS on ``objective`` with the convergence rule used throughout the package.

    Converged means the final gradient 2-norm is below ``gtol`` and the last
    accepted step changed the objective by less than ``ftol`` relative.
    """
    cache = {}

    def fun(u):
        key = u.tobytes()
        if key not in cache:
            cache[key] = objective.value_and_grad(u)
        return cache[key]

    u0 = np.asarray(u0, dtype=float)
    history = [fun(u0)[0]]

    def callback(xk):
        history.append(fun(np.asarray(xk, dtype=float))[0])

    res = minimize(
        fun, u0, jac=True, method="BFGS", callback=callback,
        options={"gtol": _INNER_GTOL, "norm": 2, "maxiter": max_iter},
    )
    u = np.asarray(res.x, dtype=float)
    value, grad = fun(u)
    gnorm = float(np.linalg.norm(grad))
    if len(history) >= 2:
        prev, last = history[-2], history[-1]
        rel_change = abs(prev - last) / max(abs(prev), abs(last), 1.0)
    else:
        rel_change = 0.0
    # A parameter pinned near its floor is only optimal if the objective rises
    # when it moves up; the softplus slope hides this from the u-gradient.
    s = objective.to_positive(u)
    at_floor = s < _BOUNDARY
    kkt = not at_floor.any() or bool(np.all(objective.grad_positive(s)[at_floor] >= -gtol))
    converged = bool(np.isfinite(value) and gnorm <= gtol and rel_change < ftol and kkt)
    return _Run(u, value, int(res.nit), gnorm, converged, history)


def _best(runs):
    """Lowest objective; ties broken by the lexicographically smallest ``u``."""
    return min(runs, key=lambda r: (r.value, tuple(r.u)))


def _mean_trials(data):
    return data.n_x.mean(axis=0)


# --- parametric families ------------------------------------------------------


def _eb1_design(freqs):
    m, K = freqs.shape
    ones = np.ones((m, 1))
    return np.hstack([ones, freqs]), np.hstack([ones, 1.0 - freqs])


def _eb2_design(p):
    p = p[:, 0]
    at0 = p == 0.0
    at1 = p == 1.0
    inner = ~(at0 | at1)
    A = np.zeros((p.size, 4))
    B = np.zeros((p.size, 4))
    A[inner, 0] = B[inner, 0] = 1.0
    A[inner, 1] = p[inner]
    B[inner, 1] = 1.0 - p[inner]
    # At p = 0: a = beta0 + beta2 (coordinate 2), b = beta0 + beta1 + beta3 (coordinate 3).
    A[at0, 2] = 1.0
    B[at0, 3] = 1.0
    A[at1, 3] = 1.0
    B[at1, 2] = 1.0
    return A, B


def _spline_design(freqs, n_basis, symmetric):
    m, K = freqs.shape
    Na = [bspline_basis(n_basis, freqs[:, k]) for k in range(K)]
    Nb = [bspline_basis(n_basis, 1.0 - freqs[:, k]) for k in range(K)]
    if symmetric:
        return np.hstack(Na), np.hstack(Nb)
    zeros = np.zeros((m, K * n_basis))
    return np.hstack(Na + [zeros]), np.hstack([zeros] + Nb)


def build_objective(data: MarkerDataset, family: str, n_basis: int = DEFAULT_N_BASIS, symmetric: bool = True):
    """Likelihood objective for ``family`` in {"eb1", "eb2", "spline"} on ``data``."""
    if len(data) == 0:
        raise DataError("cannot fit a prior to an empty dataset")
    if data.K < 1:
        raise DataError("fitting needs at least one booster sample")
    if family == "eb2" and data.K != 1:
        raise DataError("EB2 is defined for a single booster only")
    K = data.K
    rows, counts = _unique_rows(data.x, data.n_x, data.y, data.n_y)
    x, n_x = rows[:, :K], rows[:, K : 2 * K]
    y, n_y = rows[:, 2 * K], rows[:, 2 * K + 1]
    freqs = x / n_x
    if family == "eb1":
        A, B = _eb1_design(freqs)
    elif family == "eb2":
        A, B = _eb2_design(freqs)
    elif family == "spline":
        A, B = _spline_design(freqs, n_basis, symmetric)
    else:
        raise ValueError(f"unknown family {family!r}")
    return LinearObjective(A, B, y, n_y, counts)


def _eb1_from_positive(s):
    return EB1Prior(float(s[0]), tuple(float(v) for v in s[1:]))


def _eb2_from_positive(s):
    s0, s1, s2, s3 = (float(v) for v in s)
    return EB2Prior(s0, s1, s2 - s0, s3 - s0 - s1)


def _eb1_starts(data):
    K = data.K
    nbar = _mean_trials(data)
    return [
        np.r_[0.5, 0.5 * nbar / K],
        np.r_[0.1, nbar / K],
        np.r_[2.0, 0.1 * nbar / K],
    ]


def _eb2_starts(data):
    nbar = float(_mean_trials(data)[0])
    starts = []
    for b0, b1 in ((0.5, 0.5 * nbar), (0.1, nbar), (2.0, 0.1 * nbar)):
        # Endpoint coordinates start at their EB1 values.
        starts.append(np.array([b0, b1, b0, b0 + b1]))
    return starts


def _finish(objective, runs, to_model, data, extra=None):
    best = _best(runs)
    model = to_model(objective.to_positive(best.u))
    info = {"n_starts": len(runs), "dataset_sha256": data.content_hash()}
    if extra:
        info.update(extra)
    return FitResult(
        model=model,
        neg_log_lik=neg_log_likelihood(model, data),
        iterations=best.iterations,
        converged=best.converged,
        gradient_norm=best.gradient_norm,
        n_markers=len(data),
        info=info,
    )


def fit_parametric(data: MarkerDataset, family: str = "eb1", starts=None) -> FitResult:
    """Fit EB1 (any K) or EB2 (K = 1) by maximum likelihood.

    Each deterministic start is run to convergence and the best is kept.
    """
    family = family.lower()
    if family not in ("eb1", "eb2"):
        raise ValueError(f"family must be 'eb1' or 'eb2', got {family!r}")
    objective = build_objective(data, family)
    if starts is None:
        if family == "eb1":
            starts = _eb1_starts(data)
        else:
            # EB2 nests EB1, so the EB1 optimum is a start EB2 can only improve on.
            eb1 = fit_parametric(data, "eb1").model
            starts = [np.array([eb1.beta0, eb1.betas[0], eb1.beta0, eb1.beta0 + eb1.betas[0]]), *_eb2_starts(data)]
    runs = [_minimize(objective, objective.from_positive(s)) for s in starts]
    to_model = _eb1_from_positive if family == "eb1" else _eb2_from_positive
    result = _finish(objective, runs, to_model, data)
    if not result.converged:
        log.warning("%s fit did not converge (gradient norm %.3g)", family, result.gradient_norm)
    return result


def project_eb1(model: EB1Prior, n_basis: int) -> np.ndarray:
    """Spline coefficients ``(K, n_basis)`` reproducing an EB1 prior exactly.

    A linear function is reproduced by its values at the Greville abscissae, so
    ``theta_j^k = beta0 / K + beta_k * xi_j``.
    """
    xi = greville_abscissae(n_basis)
    K = model.K
    return np.array([model.beta0 / K + beta * xi for beta in model.betas])


def fit_spline(
    data: MarkerDataset,
    n_basis: int = DEFAULT_N_BASIS,
    symmetric: bool = True,
    init: EB1Prior | None = None,
) -> FitResult:
    """Fit the B-spline prior, starting from the projection of an EB1 fit."""
    if init is None:
        init = fit_parametric(data, "eb1").model
    objective = build_objective(data, "spline", n_basis=n_basis, symmetric=symmetric)
    theta0 = np.maximum(project_eb1(init, n_basis), 10 * PARAM_FLOOR)
    base = theta0.ravel() if symmetric else np.r_[theta0.ravel(), theta0.ravel()]
    starts = [base, 0.5 * base + 0.05, 2.0 * base]
    runs = [_minimize(objective, objective.from_positive(s)) for s in starts]
    K = data.K

    def to_model(s):
        if symmetric:
            return SplinePrior(s.reshape(K, n_basis))
        half = K * n_basis
        return SplinePrior(s[:half].reshape(K, n_basis), s[half:].reshape(K, n_basis))

    result = _finish(objective, runs, to_model, data, {"n_basis": n_basis, "symmetric": symmetric})
    if not result.converged:
        log.warning("spline fit did not converge (gradient norm %.3g)", result.gradient_norm)
    return result


# --- windowed -----------------------------------------------------------------


def _group_keys(keys, delta):
    """Split sorted distinct frequencies into windows of width ``2 * delta``."""
    groups = [[keys[0]]]
    for k in keys[1:]:
        if delta > 0 and k - groups[-1][0] < 2 * delta:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def _merge_small(groups, sizes, min_bin):
    """Merge undersized groups into their nearest neighbour until all reach ``min_bin``.

    The smallest group is merged first (lowest position on ties); its partner
    is the neighbour with the smaller frequency gap, the left one on ties.
    """
    groups = [list(g) for g in groups]
    sizes = list(sizes)
    while len(groups) > 1 and min(sizes) < min_bin:
        i = min(range(len(groups)), key=lambda j: (sizes[j], j))
        left_gap = groups[i][0] - groups[i - 1][-1] if i > 0 else math.inf
        right_gap = groups[i + 1][0] - groups[i][-1] if i + 1 < len(groups) else math.inf
        j = i - 1 if left_gap <= right_gap else i + 1
        lo, hi = min(i, j), max(i, j)
        groups[lo] = groups[lo] + groups[hi]
        sizes[lo] = sizes[lo] + sizes[hi]
        del groups[hi], sizes[hi]
    return groups, sizes


def _moment_start(y, n, w):
    f = y / n
    mean = np.average(f, weights=w)
    var = np.average((f - mean) ** 2, weights=w)
    mean = min(max(mean, 1e-3), 1 - 1e-3)
    nbar = np.average(n, weights=w)
    # Var(y/n) = mu(1-mu)/n * (1 + (n-1)/(nu+1)) for a beta-binomial.
    excess = var / (mean * (1 - mean)) - 1.0 / nbar
    nu = (1.0 - 1.0 / nbar) / excess - 1.0 if excess > 0 else 1e3
    nu = float(np.clip(nu, 0.1, 1e4))
    return np.array([mean * nu, (1 - mean) * nu])


def fit_windowed(data: MarkerDataset, min_bin: int = DEFAULT_MIN_BIN, delta: float = 0.0) -> FitResult:
    """Fit an independent Beta prior in each booster-frequency bin.

    Bins are keyed by the exact observed booster frequency (``delta = 0``) or
    by windows of width ``2 * delta``; bins with fewer than ``min_bin``
    markers are merged into a neighbour first.
    """
    if data.K != 1:
        raise DataError("the windowed prior supports exactly one booster")
    if len(data) == 0:
        raise DataError("cannot fit a prior to an empty dataset")
    p = data.booster_freqs[:, 0]
    keys, key_counts = np.unique(p, return_counts=True)
    groups = _group_keys(list(keys), delta)
    count_of = dict(zip(keys.tolist(), key_counts.tolist()))
    sizes = [sum(count_of[k] for k in g) for g in groups]
    groups, sizes = _merge_small(groups, sizes, min_bin)

    bins, all_ok, total_iter = [], True, 0
    for g, size in zip(groups, sizes):
        lo, hi = g[0], g[-1]
        mask = (p >= lo) & (p <= hi)
        rows, counts = _unique_rows(data.y[mask], data.n_y[mask])
        objective = LinearObjective(np.array([[1.0, 0.0]] * len(rows)), np.array([[0.0, 1.0]] * len(rows)),
                                    rows[:, 0], rows[:, 1], counts, transform="exp")
        run = _minimize(objective, objective.from_positive(_moment_start(rows[:, 0], rows[:, 1], counts)))
        a, b = objective.to_positive(run.u)
        degenerate = bool(np.all(rows[:, 0] == 0) or np.all(rows[:, 0] == rows[:, 1]))
        flagged = degenerate or not run.converged
        if flagged:
            log.info("window [%g, %g] flagged (degenerate=%s, converged=%s)", lo, hi, degenerate, run.converged)
        all_ok &= run.converged
        total_iter += run.iterations
        bins.append(WindowBin(float(lo), float(hi), float(a), float(b), int(size), flagged))

    model = WindowedPrior(tuple(bins), delta=float(delta))
    return FitResult(
        model=model,
        neg_log_lik=neg_log_likelihood(model, data),
        iterations=total_iter,
        converged=bool(all_ok),
        gradient_norm=None,
        n_markers=len(data),
        info={"n_bins": len(bins), "min_bin": min_bin, "dataset_sha256": data.content_hash()},
    )


def fit(data: MarkerDataset, model: str = "eb1", **kwargs) -> FitResult:
    """Dispatch on the model name used by the command line."""
    model = model.lower()
    if model == "windowed":
        return fit_windowed(data, **kwargs)
    if model in ("eb1", "eb2"):
        return fit_parametric(data, model, **kwargs)
    if model == "spline":
        return fit_spline(data, **kwargs)
    raise ValueError(f"unknown model {model!r}")
