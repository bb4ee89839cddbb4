"""Per-marker frequency estimates: posterior mean under a fitted prior, plus baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BetaParams
from .data import DataError, MarkerDataset, MarkerRecord
from .priors import PriorEvaluationError

ESTIMATE_COLUMNS = ("id", "q_mle", "q_pooled", "q_eb", "var_eb", "prior_a", "prior_b", "local_affinity")


@dataclass(frozen=True)
class EstimateRecord:
    id: str
    q_eb: float
    var_eb: float
    prior: BetaParams
    q_mle: float
    q_pooled: float

    @property
    def local_affinity(self) -> float:
        return self.prior.a + self.prior.b


def estimate_mle(record: MarkerRecord) -> float:
    return record.target.successes / record.target.trials


def estimate_pooled(record: MarkerRecord) -> float:
    """MLE after treating target and every booster as one population."""
    if not record.boosters:
        raise ValueError(f"marker {record.id!r} has no booster samples to pool")
    s = record.target.successes + sum(c.successes for c in record.boosters)
    n = record.target.trials + sum(c.trials for c in record.boosters)
    return s / n


def estimate_arrays(model, data: MarkerDataset) -> dict:
    """Column arrays for every marker, in input order.

    Raises :class:`DataError` listing the markers whose prior cannot be formed.
    """
    if data.K != model.K:
        raise DataError(f"model expects K={model.K} boosters, dataset has K={data.K}")
    try:
        a, b = model.evaluate(data.booster_freqs)
    except PriorEvaluationError as exc:
        ids = [data.ids[r] for r in exc.rows]
        shown = ", ".join(repr(i) for i in ids[:10])
        more = f" and {len(ids) - 10} more" if len(ids) > 10 else ""
        raise DataError(f"{exc}: markers {shown}{more}") from exc
    y = data.y.astype(float)
    n = data.n_y.astype(float)
    post_a = a + y
    post_b = b + (n - y)
    q_eb = post_a / (post_a + post_b)
    var_eb = q_eb * (1.0 - q_eb) / (post_a + post_b + 1.0)
    pooled = (y + data.x.sum(axis=1)) / (n + data.n_x.sum(axis=1)) if data.K else np.full(len(data), np.nan)
    return {
        "id": list(data.ids),
        "q_mle": y / n,
        "q_pooled": pooled,
        "q_eb": q_eb,
        "var_eb": var_eb,
        "prior_a": a,
        "prior_b": b,
        "local_affinity": a + b,
    }


def _records(cols) -> list:
    return [
        EstimateRecord(
            id=cols["id"][i],
            q_eb=float(cols["q_eb"][i]),
            var_eb=float(cols["var_eb"][i]),
            prior=BetaParams(cols["prior_a"][i], cols["prior_b"][i]),
            q_mle=float(cols["q_mle"][i]),
            q_pooled=float(cols["q_pooled"][i]),
        )
        for i in range(len(cols["id"]))
    ]


def estimate_eb(model, record: MarkerRecord) -> EstimateRecord:
    """Posterior-mean estimate for one marker."""
    return _records(estimate_arrays(model, MarkerDataset.from_records([record])))[0]


def estimate_all(model, data: MarkerDataset) -> list:
    return _records(estimate_arrays(model, data))
