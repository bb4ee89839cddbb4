"""Scoring estimates against simulated truth or an independent validation sample.

Against a validation sample the naive MSE is inflated by the validation
sample's own binomial noise; :func:`mse_vs_validation` subtracts an unbiased
estimate of that inflation, ``mean(qv (1 - qv) / (n_val - 1))``.  The
corrected value is not floored at zero.

Variance in the bias/variance profile uses the population convention
(divide by the number of replicates R), under which ``mse = bias_sq +
variance`` holds exactly in every bin.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .data import MarkerDataset

DEFAULT_BINS = 20
ESTIMATOR_COLUMNS = ("q_eb", "q_mle", "q_pooled")


@dataclass(frozen=True)
class ProfileBin:
    center: float
    mse: float | None
    bias_sq: float | None
    variance: float | None
    count: int


@dataclass(frozen=True)
class EvalReport:
    n_markers: int
    mse_raw: float
    mse_corrected: float
    correction_term: float
    mode: str
    estimator: str = "q_eb"
    profile: list = field(default_factory=list)


def _ids_and_values(table, column):
    """Marker ids (or None) and values from a list of estimate records or an array."""
    if isinstance(table, Mapping):
        return list(table["id"]), np.asarray(table[column], dtype=float)
    if isinstance(table, np.ndarray):
        return None, table.astype(float)
    rows = list(table)
    if rows and hasattr(rows[0], column):
        return [r.id for r in rows], np.array([getattr(r, column) for r in rows], dtype=float)
    return None, np.asarray(rows, dtype=float)


def _align(ids, truth):
    """Truth values ordered like ``ids``; mappings are matched by marker id."""
    if isinstance(truth, Mapping):
        if ids is None:
            raise ValueError("truth given by id but estimates carry no ids")
        missing = [i for i in ids if i not in truth]
        if missing:
            raise ValueError(f"no truth value for marker {missing[0]!r} ({len(missing)} missing)")
        if len(truth) != len(ids):
            extra = next(k for k in truth if k not in set(ids))
            raise ValueError(f"truth has marker {extra!r} with no estimate")
        return np.array([truth[i] for i in ids], dtype=float)
    values = np.asarray(truth, dtype=float)
    if ids is not None and values.shape[0] != len(ids):
        raise ValueError(f"{len(ids)} estimates but {values.shape[0]} truth values")
    return values


def _bin_index(q, n_bins):
    return np.minimum((np.asarray(q) * n_bins).astype(int), n_bins - 1)


def _mse_profile(err, q, n_bins):
    idx = _bin_index(q, n_bins)
    out = []
    for j in range(n_bins):
        e = err[idx == j]
        mse = float(np.mean(e * e)) if e.size else None
        out.append(ProfileBin((j + 0.5) / n_bins, mse, None, None, int(e.size)))
    return out


def mse_vs_truth(estimates, truth, column: str = "q_eb", n_bins: int = DEFAULT_BINS) -> EvalReport:
    """MSE of ``column`` against true target frequencies.

    ``truth`` is a sequence aligned with ``estimates`` or a mapping from
    marker id to frequency.  The profile bins markers by true frequency.
    """
    ids, est = _ids_and_values(estimates, column)
    q = _align(ids, truth)
    if est.shape != q.shape:
        raise ValueError(f"{est.size} estimates but {q.size} truth values")
    err = est - q
    mse = float(np.mean(err * err)) if err.size else math.nan
    return EvalReport(len(est), mse, mse, 0.0, "truth", column, _mse_profile(err, q, n_bins))


def _validation_counts(ids, validation):
    if isinstance(validation, MarkerDataset):
        if ids is not None and list(validation.ids) != list(ids):
            pos = {m: i for i, m in enumerate(validation.ids)}
            missing = [i for i in ids if i not in pos]
            if missing or len(pos) != len(ids):
                bad = missing[0] if missing else next(m for m in validation.ids if m not in set(ids))
                raise ValueError(f"validation and estimates disagree on marker {bad!r}")
            order = np.array([pos[i] for i in ids])
            return validation.y[order].astype(float), validation.n_y[order].astype(float), validation.ids
        return validation.y.astype(float), validation.n_y.astype(float), validation.ids
    pairs = list(validation)
    s = np.array([c.successes for c in pairs], dtype=float)
    n = np.array([c.trials for c in pairs], dtype=float)
    return s, n, None


def mse_vs_validation(estimates, validation, column: str = "q_eb", n_bins: int = DEFAULT_BINS) -> EvalReport:
    """MSE against held-out counts, with the validation-noise correction.

    ``validation`` is a sequence of :class:`~ebfreq.core.CountPair` aligned with
    the estimates, or a :class:`MarkerDataset` matched by marker id.  Every
    validation sample needs at least two alleles.
    """
    ids, est = _ids_and_values(estimates, column)
    s, n, vids = _validation_counts(ids, validation)
    if s.shape != est.shape:
        raise ValueError(f"{est.size} estimates but {s.size} validation counts")
    small = np.flatnonzero(n < 2)
    if small.size:
        i = int(small[0])
        who = repr((ids or vids)[i]) if (ids or vids) else f"#{i + 1}"
        raise ValueError(f"validation sample for marker {who} has {int(n[i])} allele(s); at least 2 are needed")
    qv = s / n
    err = est - qv
    mse_raw = float(np.mean(err * err))
    correction = float(np.mean(qv * (1.0 - qv) / (n - 1.0)))
    return EvalReport(len(est), mse_raw, mse_raw - correction, correction, "validation", column,
                      _mse_profile(err, qv, n_bins))


def bias_variance_profile(replicates, truth, n_bins: int = DEFAULT_BINS, column: str = "q_eb",
                          decomposition: str = "marker") -> list:
    """Binned MSE = bias^2 + variance over replicated estimates of one truth.

    Markers are binned by true frequency into ``n_bins`` equal-width bins.

    ``decomposition="marker"``
        per marker, bias is the replicate mean of ``q_hat - q`` and variance
        the replicate variance; both are then averaged within the bin.  This
        is the conditional bias of the estimator at each true frequency.
    ``decomposition="bin"``
        bias is the mean error over every marker and replicate in the bin and
        variance the spread of those errors around it -- the decomposition
        available from a single simulated dataset.

    Empty bins are reported with ``count == 0`` and ``None`` statistics.
    """
    if decomposition not in ("marker", "bin"):
        raise ValueError(f"decomposition must be 'marker' or 'bin', got {decomposition!r}")
    tables = list(replicates)
    if len(tables) < 2:
        raise ValueError("a bias/variance profile needs at least 2 replicates")
    ids0, _ = _ids_and_values(tables[0], column)
    est = []
    for t in tables:
        ids, v = _ids_and_values(t, column)
        if ids is not None and ids0 is not None and ids != ids0:
            raise ValueError("replicate estimate tables list different markers")
        est.append(v)
    est = np.array(est)
    q = _align(ids0, truth)
    if est.shape[1] != q.size:
        raise ValueError(f"{est.shape[1]} estimates per replicate but {q.size} truth values")
    err = est - q
    idx = _bin_index(q, n_bins)
    out = []
    for j in range(n_bins):
        e = err[:, idx == j]
        if e.shape[1] == 0:
            out.append(ProfileBin((j + 0.5) / n_bins, None, None, None, 0))
            continue
        mse = float(np.mean(e * e))
        if decomposition == "marker":
            mean = e.mean(axis=0)
            bias_sq = float(np.mean(mean * mean))
            variance = float(np.mean(np.mean((e - mean) ** 2, axis=0)))
        else:
            mean = float(e.mean())
            bias_sq = mean * mean
            variance = float(np.mean((e - mean) ** 2))
        out.append(ProfileBin((j + 0.5) / n_bins, mse, bias_sq, variance, int(e.shape[1])))
    return out


def _fmt(v, digits):
    return "NA" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.{digits}g}"


def format_report(reports, digits: int = 4) -> str:
    """Human-readable summary table of one or more reports."""
    reports = [reports] if isinstance(reports, EvalReport) else list(reports)
    lines = [f"{'estimator':<10} {'mode':<10} {'markers':>8} {'mse_raw':>11} {'correction':>11} {'mse_corr':>11}"]
    for r in reports:
        lines.append(
            f"{r.estimator:<10} {r.mode:<10} {r.n_markers:>8d} {_fmt(r.mse_raw, digits):>11} "
            f"{_fmt(r.correction_term, digits):>11} {_fmt(r.mse_corrected, digits):>11}"
        )
    return "\n".join(lines)


def format_profile(profile, digits: int = 4) -> str:
    lines = [f"{'center':>7} {'count':>7} {'mse':>11} {'bias_sq':>11} {'variance':>11}"]
    for b in profile:
        lines.append(
            f"{b.center:>7.3f} {b.count:>7d} {_fmt(b.mse, digits):>11} {_fmt(b.bias_sq, digits):>11} {_fmt(b.variance, digits):>11}"
        )
    return "\n".join(lines)
