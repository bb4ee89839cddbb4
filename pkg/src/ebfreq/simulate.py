"""Synthetic marker data with known true frequencies.

Booster frequencies ``p`` are drawn from a Beta marginal; target frequencies
``q`` follow the chosen mode:

``conditional``  ``q ~ Beta(a(p), b(p))`` under a prior model,
``identical``    ``q = p`` (target and boosters sample one population),
``independent``  ``q`` drawn from the marginal, unrelated to ``p``.

Counts are binomial given the frequencies.  All randomness comes from
:class:`ebfreq.rng.MarkerStreams`, one stream per marker and purpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BetaParams
from .data import DataError, MarkerDataset
from .priors import EB1Prior, from_document, to_document
from .rng import MarkerStreams

SIMCONFIG_FORMAT = "ebfreq-simconfig"
SIMCONFIG_FORMAT_VERSION = 1
MODES = ("conditional", "identical", "independent")

# Stand-in conditional model: the EB1 fit reported for Chinese -> Japanese.
STAND_IN_CONDITIONAL = EB1Prior(0.038, (36.88,))
DEFAULT_MARGINAL = BetaParams(0.198, 0.198)


def _default_conditional():
    return STAND_IN_CONDITIONAL


@dataclass(frozen=True)
class SimConfig:
    n_markers: int = 55_000
    booster_marginal: BetaParams = DEFAULT_MARGINAL
    conditional: object = field(default_factory=_default_conditional)
    n_x: int | tuple = 90
    n_y: int = 30
    seed: int = 0
    mode: str = "conditional"

    def __post_init__(self):
        if int(self.n_markers) < 1:
            raise ValueError("n_markers must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.booster_marginal, BetaParams):
            object.__setattr__(self, "booster_marginal", BetaParams(*self.booster_marginal))
        n_x = tuple(int(v) for v in np.atleast_1d(self.n_x))
        if self.mode == "conditional" and len(n_x) == 1 and self.conditional.K > 1:
            n_x = n_x * self.conditional.K
        if self.mode == "conditional" and len(n_x) != self.conditional.K:
            raise ValueError(f"n_x lists {len(n_x)} boosters but the conditional model has K={self.conditional.K}")
        if min(n_x) < 1 or int(self.n_y) < 1:
            raise ValueError("allele counts n_x and n_y must be positive")
        object.__setattr__(self, "n_x", n_x)
        object.__setattr__(self, "n_markers", int(self.n_markers))
        object.__setattr__(self, "n_y", int(self.n_y))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def K(self) -> int:
        return len(self.n_x)

    def to_dict(self) -> dict:
        return {
            "format": SIMCONFIG_FORMAT,
            "format_version": SIMCONFIG_FORMAT_VERSION,
            "n_markers": self.n_markers,
            "booster_marginal": [self.booster_marginal.a, self.booster_marginal.b],
            "conditional": to_document(self.conditional),
            "n_x": list(self.n_x),
            "n_y": self.n_y,
            "seed": self.seed,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        if doc.get("format", SIMCONFIG_FORMAT) != SIMCONFIG_FORMAT:
            raise ValueError(f"not a simulation config (format={doc.get('format')!r})")
        if doc.get("format_version", SIMCONFIG_FORMAT_VERSION) != SIMCONFIG_FORMAT_VERSION:
            raise ValueError(f"unsupported simconfig format_version {doc.get('format_version')!r}")
        kwargs = {k: doc[k] for k in ("n_markers", "n_x", "n_y", "seed", "mode") if k in doc}
        if "booster_marginal" in doc:
            kwargs["booster_marginal"] = BetaParams(*doc["booster_marginal"])
        if doc.get("conditional") is not None:
            kwargs["conditional"] = from_document(doc["conditional"])
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class SimTruth:
    """True booster frequencies ``p`` (m, K) and target frequencies ``q`` (m,)."""

    ids: tuple
    p: np.ndarray
    q: np.ndarray

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(zip(self.p, self.q))


def marker_ids(n: int, prefix: str = "sim") -> tuple:
    width = len(str(n))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(1, n + 1))


def draw_truth(config: SimConfig) -> SimTruth:
    m, K = config.n_markers, config.K
    marg = config.booster_marginal
    p = np.empty((m, K))
    if config.mode == "identical":
        q = MarkerStreams(config.seed, "p0", m).beta(marg.a, marg.b)
        p[:] = q[:, None]
    else:
        for k in range(K):
            p[:, k] = MarkerStreams(config.seed, f"p{k}", m).beta(marg.a, marg.b)
        if config.mode == "independent":
            q = MarkerStreams(config.seed, "q", m).beta(marg.a, marg.b)
        else:
            a, b = config.conditional.evaluate(p)
            q = MarkerStreams(config.seed, "q", m).beta(a, b)
    return SimTruth(marker_ids(m), p, q)


def sample_counts(truth: SimTruth, n_x, n_y: int, seed: int, replicate: int = 0) -> MarkerDataset:
    """Binomial booster and target counts given the true frequencies.

    Different ``replicate`` values give independent count draws over the same
    truth, which is what the bias/variance profile needs.
    """
    m, K = truth.p.shape
    n_x = tuple(int(v) for v in np.atleast_1d(n_x))
    if len(n_x) == 1 and K > 1:
        n_x = n_x * K
    if len(n_x) != K:
        raise ValueError(f"n_x lists {len(n_x)} boosters but truth has K={K}")
    x = np.empty((m, K), dtype=np.int64)
    for k in range(K):
        x[:, k] = MarkerStreams(seed, f"x{k}/r{replicate}", m).binomial(n_x[k], truth.p[:, k])
    y = MarkerStreams(seed, f"y/r{replicate}", m).binomial(n_y, truth.q)
    n_x_arr = np.broadcast_to(np.array(n_x, dtype=np.int64), (m, K))
    names = ("target", *(f"booster{k + 1}" for k in range(K)))
    return MarkerDataset(truth.ids, y, np.full(m, n_y), x, n_x_arr, source="simulation", sample_names=names)


def sample_validation(truth: SimTruth, n_val: int, seed: int, replicate: int = 0) -> MarkerDataset:
    """Independent held-out target counts (a K = 0 dataset) for imperfect-gold-standard scoring."""
    m = len(truth)
    y = MarkerStreams(seed, f"val/r{replicate}", m).binomial(n_val, truth.q)
    return MarkerDataset(
        truth.ids, y, np.full(m, n_val), np.zeros((m, 0), dtype=np.int64), np.zeros((m, 0), dtype=np.int64),
        source="simulation-validation", sample_names=("validation",),
    )


def simulate_dataset(config: SimConfig):
    """Draw truth and counts; returns ``(dataset, truth)``."""
    truth = draw_truth(config)
    return sample_counts(truth, config.n_x, config.n_y, config.seed), truth


def split_dataset(data: MarkerDataset, fraction: float, seed: int):
    """Split each marker's target alleles into two disjoint parts.

    Part one receives ``floor(fraction * n_y + 1/2)`` alleles with successes
    drawn hypergeometrically; part two keeps the remainder.  Boosters are
    copied unchanged into both parts.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n_a = np.floor(fraction * data.n_y + 0.5).astype(np.int64)
    bad = np.flatnonzero((n_a == 0) | (n_a == data.n_y))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"marker {data.ids[i]!r}: splitting {int(data.n_y[i])} alleles with fraction {fraction} leaves an empty part"
        )
    y_a = MarkerStreams(seed, "split", len(data)).hypergeometric(data.y, data.n_y, n_a)
    meta = dict(source=data.source, orientation=data.orientation, sample_names=data.sample_names)
    part_a = MarkerDataset(data.ids, y_a, n_a, data.x, data.n_x, **meta)
    part_b = MarkerDataset(data.ids, data.y - y_a, data.n_y - n_a, data.x, data.n_x, **meta)
    return part_a, part_b
