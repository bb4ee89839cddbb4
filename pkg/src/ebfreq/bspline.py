"""Cubic B-spline basis on [0, 1] with a clamped, uniformly spaced knot vector."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline

DEGREE = 3


def clamped_knots(n_basis: int) -> np.ndarray:
    """Knot vector for ``n_basis`` cubic B-splines on [0, 1].

    Four-fold knots at each end and ``n_basis - 4`` equally spaced interior
    knots, so ``len(knots) == n_basis + 4``.
    """
    if int(n_basis) != n_basis or n_basis < DEGREE + 1:
        raise ValueError(f"n_basis must be an integer >= {DEGREE + 1}, got {n_basis!r}")
    n_basis = int(n_basis)
    interior = np.arange(1, n_basis - DEGREE) / (n_basis - DEGREE)
    return np.concatenate([np.zeros(DEGREE + 1), interior, np.ones(DEGREE + 1)])


def bspline_basis(n_basis: int, p) -> np.ndarray:
    """Evaluate all ``n_basis`` basis functions at ``p``.

    Scalar ``p`` gives a vector of length ``n_basis``; an array of shape
    ``(m,)`` gives an ``(m, n_basis)`` matrix.  Rows sum to one.
    """
    knots = clamped_knots(n_basis)
    x = np.asarray(p, dtype=float)
    flat = np.atleast_1d(x).ravel()
    if flat.size and (not np.all(np.isfinite(flat)) or flat.min() < 0.0 or flat.max() > 1.0):
        raise ValueError("B-spline basis is only defined on [0, 1]")
    if flat.size == 0:
        out = np.zeros((0, int(n_basis)))
    else:
        out = BSpline.design_matrix(flat, knots, DEGREE).toarray()
    return out[0] if x.ndim == 0 else out


def greville_abscissae(n_basis: int) -> np.ndarray:
    """Knot averages; interpolating a linear function there reproduces it exactly."""
    t = clamped_knots(n_basis)
    return np.array([t[j + 1 : j + DEGREE + 1].mean() for j in range(int(n_basis))])


def basis_integrals(n_basis: int) -> np.ndarray:
    """Exact integrals of each basis function over [0, 1]: ``(t[j+4] - t[j]) / 4``."""
    t = clamped_knots(n_basis)
    return (t[DEGREE + 1 :] - t[: -(DEGREE + 1)]) / (DEGREE + 1)
