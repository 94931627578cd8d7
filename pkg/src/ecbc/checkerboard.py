"""Exact evaluation of the empirical checkerboard copula in dimensions 2 and 3.

Each observation spreads mass 1/n uniformly over its rank cell
``prod_j [(R_ij - 1)/n, R_ij/n]``, giving the multilinear extension

    C#(u) = (1/n) sum_i prod_j clamp(n*u_j - R_ij + 1, 0, 1).

The plain empirical copula ``C_n(u) = (1/n) #{i: R_ij/n <= u_j for all j}``
is provided as well; the two differ by at most 3/n in sup norm, which the
test suite checks on a lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError

__all__ = [
    "CheckerboardFit",
    "checkerboard_cdf",
    "checkerboard_cdf_grid",
    "empirical_copula_cdf",
    "empirical_copula_cdf_grid",
]


@dataclass(frozen=True)
class CheckerboardFit:
    """Rank matrix defining an empirical checkerboard copula.

    `ranks` has one row per observation and one column per variable, with
    entries in {1..n} for tie-free data. Average ranks (half-integers
    etc.) are permitted under ties; mass cells then use the rounded-up
    rank, an approximation documented in the package README.
    """

    ranks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.ranks, dtype=float)
        if arr.ndim != 2:
            raise ValidationError(f"ranks must be 2-d (n, d), got shape {arr.shape}")
        n, d = arr.shape
        if d not in (2, 3):
            raise ValidationError(f"dimension must be 2 or 3, got {d}")
        if n < 1:
            raise ValidationError("need at least one observation")
        if not np.isfinite(arr).all() or (arr < 1).any() or (arr > n).any():
            raise ValidationError("ranks must be finite and lie in [1, n]")
        object.__setattr__(self, "ranks", arr)

    @classmethod
    def from_columns(cls, *columns) -> "CheckerboardFit":
        """Rank raw (or pseudo) observations column by column, averaging ties."""
        cols = [np.asarray(c, dtype=float) for c in columns]
        n = cols[0].shape[0]
        if any(c.shape != (n,) for c in cols):
            raise ValidationError("all columns must be 1-d of equal length")
        ranks = np.column_stack([rankdata(c, method="average") for c in cols])
        return cls(ranks=ranks)

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def d(self) -> int:
        return self.ranks.shape[1]

    def cell_ranks(self) -> np.ndarray:
        """Integer ranks used for mass cells (average ranks rounded up)."""
        return np.ceil(self.ranks)


def _check_unit_point(u, d: int) -> np.ndarray:
    pt = np.asarray(u, dtype=float).reshape(-1)
    if pt.shape[0] != d:
        raise ValidationError(f"point has {pt.shape[0]} coordinates, fit has {d}")
    if not np.isfinite(pt).all() or (pt < 0).any() or (pt > 1).any():
        raise ValidationError(f"point must lie in the unit cube, got {pt}")
    return pt


def _axis_weights(fit: CheckerboardFit, axis: int, u: np.ndarray) -> np.ndarray:
    """Per-observation multilinear factor along one axis, shape (n, len(u))."""
    r = fit.cell_ranks()[:, axis]
    return np.clip(fit.n * u[None, :] - r[:, None] + 1.0, 0.0, 1.0)


def checkerboard_cdf(fit: CheckerboardFit, u) -> float:
    """Checkerboard copula C#(u) at a single point of the unit cube."""
    pt = _check_unit_point(u, fit.d)
    prod = np.ones(fit.n)
    for j in range(fit.d):
        prod *= _axis_weights(fit, j, pt[j : j + 1])[:, 0]
    return float(prod.sum() / fit.n)


def checkerboard_cdf_grid(fit: CheckerboardFit, axes) -> np.ndarray:
    """Checkerboard copula on a tensor grid.

    `axes` is one 1-d array of coordinates per dimension; the result has
    shape ``(len(axes[0]), ..., len(axes[d-1]))``. This is the workhorse
    for coefficient extraction: cost O(n * prod(grid sizes)).
    """
    if len(axes) != fit.d:
        raise ValidationError(f"need {fit.d} axes, got {len(axes)}")
    mats = []
    for j, ax in enumerate(axes):
        ax = np.asarray(ax, dtype=float).reshape(-1)
        if not np.isfinite(ax).all() or (ax < 0).any() or (ax > 1).any():
            raise ValidationError(f"axis {j} grid must lie in [0, 1]")
        mats.append(_axis_weights(fit, j, ax))
    if fit.d == 2:
        out = np.einsum("ia,ib->ab", mats[0], mats[1], optimize=True)
    else:
        out = np.einsum("ia,ib,ic->abc", mats[0], mats[1], mats[2], optimize=True)
    return out / fit.n


def empirical_copula_cdf(fit: CheckerboardFit, u) -> float:
    """Empirical copula C_n(u) = (1/n) #{i: R_ij/n <= u_j for all j}."""
    pt = _check_unit_point(u, fit.d)
    r = fit.cell_ranks()
    inside = (r / fit.n <= pt[None, :]).all(axis=1)
    return float(inside.sum() / fit.n)


def empirical_copula_cdf_grid(fit: CheckerboardFit, axes) -> np.ndarray:
    """Empirical copula on a tensor grid (same convention as the checkerboard)."""
    if len(axes) != fit.d:
        raise ValidationError(f"need {fit.d} axes, got {len(axes)}")
    r = fit.cell_ranks()
    mats = []
    for j, ax in enumerate(axes):
        ax = np.asarray(ax, dtype=float).reshape(-1)
        if not np.isfinite(ax).all() or (ax < 0).any() or (ax > 1).any():
            raise ValidationError(f"axis {j} grid must lie in [0, 1]")
        mats.append((r[:, j : j + 1] / fit.n <= ax[None, :]).astype(float))
    if fit.d == 2:
        out = np.einsum("ia,ib->ab", mats[0], mats[1], optimize=True)
    else:
        out = np.einsum("ia,ib,ic->abc", mats[0], mats[1], mats[2], optimize=True)
    return out / fit.n
