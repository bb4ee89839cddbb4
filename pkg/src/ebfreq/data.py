"""Marker records and the array-backed dataset used by every fitting routine."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core import CountPair


class DataError(ValueError):
    """Invalid marker data; the message names the offending marker or line."""


@dataclass(frozen=True)
class MarkerRecord:
    id: str
    target: CountPair
    boosters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "boosters", tuple(self.boosters))

    @property
    def booster_freqs(self) -> np.ndarray:
        return np.array([c.successes / c.trials for c in self.boosters])


@dataclass(frozen=True, eq=False)
class MarkerDataset:
    """Target counts ``y / n_y`` and booster counts ``x / n_x`` for ``m`` markers.

    ``x`` and ``n_x`` have shape ``(m, K)``.  Arrays are made read-only on
    construction so a dataset can be shared freely.
    """

    ids: tuple
    y: np.ndarray
    n_y: np.ndarray
    x: np.ndarray
    n_x: np.ndarray
    source: str = ""
    orientation: str = ""
    sample_names: tuple = field(default=())

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        m = len(ids)
        y = np.asarray(self.y, dtype=np.int64).reshape(m)
        n_y = np.asarray(self.n_y, dtype=np.int64).reshape(m)
        x = np.asarray(self.x, dtype=np.int64)
        n_x = np.asarray(self.n_x, dtype=np.int64)
        if x.ndim == 1:
            x = x.reshape(m, -1) if m else x.reshape(0, 0)
        if n_x.ndim == 1:
            n_x = n_x.reshape(m, -1) if m else n_x.reshape(0, 0)
        if x.shape != n_x.shape or x.shape[0] != m:
            raise DataError(f"booster arrays have shapes {x.shape} and {n_x.shape} for {m} markers")
        if len(set(ids)) != m:
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise DataError(f"duplicate marker id {dup!r}")
        _check_counts(ids, y, n_y, "target")
        for k in range(x.shape[1]):
            _check_counts(ids, x[:, k], n_x[:, k], f"booster {k + 1}")
        for arr in (y, n_y, x, n_x):
            arr.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n_y", n_y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n_x", n_x)
        object.__setattr__(self, "sample_names", tuple(self.sample_names))

    @classmethod
    def from_records(cls, records, **meta) -> "MarkerDataset":
        records = list(records)
        K = len(records[0].boosters) if records else 0
        for r in records:
            if len(r.boosters) != K:
                raise DataError(f"marker {r.id!r} has {len(r.boosters)} boosters, expected {K}")
        return cls(
            ids=[r.id for r in records],
            y=[r.target.successes for r in records],
            n_y=[r.target.trials for r in records],
            x=np.array([[c.successes for c in r.boosters] for r in records], dtype=np.int64).reshape(len(records), K),
            n_x=np.array([[c.trials for c in r.boosters] for r in records], dtype=np.int64).reshape(len(records), K),
            **meta,
        )

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def K(self) -> int:
        return self.x.shape[1]

    @property
    def booster_freqs(self) -> np.ndarray:
        """``(m, K)`` observed booster frequencies ``x / n_x``."""
        return self.x / self.n_x

    def record(self, i: int) -> MarkerRecord:
        return MarkerRecord(
            self.ids[i],
            CountPair(int(self.y[i]), int(self.n_y[i])),
            tuple(CountPair(int(a), int(n)) for a, n in zip(self.x[i], self.n_x[i])),
        )

    @property
    def records(self) -> list:
        return [self.record(i) for i in range(len(self))]

    def subset(self, rows) -> "MarkerDataset":
        rows = np.asarray(rows)
        return MarkerDataset(
            ids=[self.ids[i] for i in np.arange(len(self))[rows]],
            y=self.y[rows], n_y=self.n_y[rows], x=self.x[rows], n_x=self.n_x[rows],
            source=self.source, orientation=self.orientation, sample_names=self.sample_names,
        )

    def select_boosters(self, columns) -> "MarkerDataset":
        """Dataset restricted to the given booster columns (0-based)."""
        columns = list(columns)
        names = self.sample_names
        if names:
            names = (names[0], *(names[1 + c] for c in columns))
        return MarkerDataset(
            ids=self.ids, y=self.y, n_y=self.n_y, x=self.x[:, columns], n_x=self.n_x[:, columns],
            source=self.source, orientation=self.orientation, sample_names=names,
        )

    def content_hash(self) -> str:
        """SHA-256 over ids and counts, independent of metadata."""
        h = hashlib.sha256()
        h.update(f"K={self.K};m={len(self)}\n".encode())
        for i, mid in enumerate(self.ids):
            cols = [self.y[i], self.n_y[i], *np.ravel(np.column_stack([self.x[i], self.n_x[i]]))]
            h.update((mid + "\t" + "\t".join(str(int(c)) for c in cols) + "\n").encode())
        return h.hexdigest()


def _check_counts(ids, s, n, what):
    bad = np.flatnonzero((n <= 0) | (s < 0) | (s > n))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"marker {ids[i]!r}: {what} count {int(s[i])} of {int(n[i])} is invalid "
            "(need 0 <= successes <= trials and trials > 0)"
        )
