"""Rank-based pseudo-observations and raw data ingestion.

All downstream estimation is rank-based: raw samples are converted to
pseudo-observations ``rank/(n+1)``, which live strictly inside (0, 1) and
are invariant under strictly increasing transforms of the input.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import TiesWarning, ValidationError

__all__ = [
    "Dataset",
    "PseudoSample",
    "pseudo_observations",
    "empirical_cdf_at",
    "empirical_quantile",
    "count_tie_groups",
    "load_dataset",
]


def _as_finite_1d(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"non-finite value in {name} at index {idx}: {arr[idx]}")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Raw observations of two responses and one covariate, all length n >= 2."""

    y1: np.ndarray
    y2: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        for name in ("y1", "y2", "x"):
            object.__setattr__(self, name, _as_finite_1d(getattr(self, name), name))
        n = self.y1.shape[0]
        if self.y2.shape[0] != n or self.x.shape[0] != n:
            raise ValidationError(
                f"column lengths differ: y1={n}, y2={self.y2.shape[0]}, x={self.x.shape[0]}"
            )
        if n < 2:
            raise ValidationError(f"need at least 2 observations, got {n}")

    @property
    def n(self) -> int:
        return self.y1.shape[0]

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y1, self.y2, self.x


@dataclass(frozen=True)
class PseudoSample:
    """Columns of values in (0, 1), one row per observation.

    For tie-free input each column is a permutation of
    ``{1/(n+1), ..., n/(n+1)}``; under ties average ranks are used, so
    values may repeat.
    """

    values: np.ndarray
    roles: tuple[str, ...] = field(default=("response-1", "response-2", "covariate"))

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValidationError(f"values must be 2-d (n, d), got shape {arr.shape}")
        if arr.shape[1] != len(self.roles):
            raise ValidationError(
                f"{arr.shape[1]} columns but {len(self.roles)} role labels"
            )
        if not np.isfinite(arr).all() or (arr <= 0).any() or (arr >= 1).any():
            raise ValidationError("pseudo-observations must lie strictly in (0, 1)")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


def count_tie_groups(values) -> int:
    """Number of groups of equal values with group size >= 2."""
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size < 2:
        return 0
    _, counts = np.unique(arr, return_counts=True)
    return int(np.sum(counts >= 2))


def pseudo_observations(values) -> np.ndarray:
    """Map a sample to ranks scaled by 1/(n+1).

    Output values lie strictly inside (0, 1); the i-th order statistic maps
    to ``i/(n+1)``. Ties receive the average rank of the group and a
    :class:`TiesWarning` is emitted counting the tie groups.
    """
    arr = _as_finite_1d(values)
    n = arr.shape[0]
    if n < 2:
        raise ValidationError(f"need at least 2 values, got {n}")
    groups = count_tie_groups(arr)
    if groups:
        warnings.warn(
            f"input contains {groups} tie group(s); average ranks used",
            TiesWarning,
            stacklevel=2,
        )
    return rankdata(arr, method="average") / (n + 1)


def empirical_cdf_at(values, q) -> float | np.ndarray:
    """Modified empirical CDF ``#{i: values_i <= q} / (n+1)``.

    Right-continuous step function with range ``[0, n/(n+1)]``. `q` may be
    a scalar or an array.
    """
    arr = _as_finite_1d(values)
    q_arr = np.asarray(q, dtype=float)
    if not np.isfinite(q_arr).all():
        raise ValidationError("query point must be finite")
    sorted_vals = np.sort(arr)
    counts = np.searchsorted(sorted_vals, q_arr, side="right")
    out = counts / (arr.shape[0] + 1)
    return float(out) if np.isscalar(q) or q_arr.ndim == 0 else out


def empirical_quantile(values, v) -> float | np.ndarray:
    """Generalized inverse of :func:`empirical_cdf_at`.

    Returns the smallest sample value whose modified ECDF reaches `v`,
    clipped to the sample range (the modified ECDF never reaches 1).
    """
    arr = _as_finite_1d(values)
    v_arr = np.asarray(v, dtype=float)
    if ((v_arr < 0) | (v_arr > 1)).any():
        raise ValidationError("quantile level must lie in [0, 1]")
    n = arr.shape[0]
    sorted_vals = np.sort(arr)
    idx = np.clip(np.ceil(v_arr * (n + 1)).astype(int) - 1, 0, n - 1)
    out = sorted_vals[idx]
    return float(out) if np.isscalar(v) or v_arr.ndim == 0 else out


def load_dataset(
    path,
    columns: tuple[str, str, str] | list[str],
    log10_columns: tuple[str, ...] | list[str] = (),
    delimiter: str = ",",
) -> tuple[Dataset, int]:
    """Read a delimited text file into a :class:`Dataset`.

    `columns` names the (y1, y2, x) columns in the header. Columns listed
    in `log10_columns` are log10-transformed after parsing. Rows with any
    non-parsable or non-finite field (before or after transform) are
    dropped; the count of dropped rows is returned alongside the dataset.
    """
    columns = tuple(columns)
    if len(columns) != 3:
        raise ValidationError(f"expected 3 column names (y1, y2, x), got {columns!r}")
    for col in log10_columns:
        if col not in columns:
            raise ValidationError(f"log10 column {col!r} is not one of {columns!r}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"empty file: {path}") from None
        header = [name.strip() for name in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise ValidationError(f"missing column(s) {missing!r} in {path}")
        pos = [header.index(c) for c in columns]
        take_log = [c in log10_columns for c in columns]

        rows: list[tuple[float, float, float]] = []
        dropped = 0
        for raw in reader:
            if not raw or all(not cell.strip() for cell in raw):
                continue
            parsed = []
            ok = True
            for p, lg in zip(pos, take_log):
                try:
                    val = float(raw[p])
                except (ValueError, IndexError):
                    ok = False
                    break
                if lg:
                    val = math.log10(val) if val > 0 else math.nan
                if not math.isfinite(val):
                    ok = False
                    break
                parsed.append(val)
            if ok:
                rows.append(tuple(parsed))
            else:
                dropped += 1

    if not rows:
        raise ValidationError(f"no usable data rows in {path}")
    data = np.asarray(rows, dtype=float)
    return Dataset(y1=data[:, 0], y2=data[:, 1], x=data[:, 2]), dropped
