"""Pairwise views of a dataset.

An experiment with n units induces n·(n-1) ordered pairs (i, j), each
carrying an observed contrast ``w_ij = w(y_i, y_j)`` and a covariate
difference ``x_ij = x_i - x_j``.  This module exposes the pair stream
(:func:`stream_ordered_pairs`), the per-unit opposite-arm averages that
the averaged regression family consumes (:func:`per_unit_averages`),
and :class:`PairCache`, the shared vectorized representation used by
the estimator and variance kernels so the n² pair rows are never
materialized as an explicit design matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .contrasts import Contrast
from .data import ObservedDataset

__all__ = [
    "PairTerm",
    "PairCache",
    "AveragedDataset",
    "stream_ordered_pairs",
    "per_unit_averages",
]


@dataclass(frozen=True)
class PairTerm:
    """One ordered pair (i, j), i != j."""

    i: int
    j: int
    w: float          # w(y_i, y_j)
    x: np.ndarray     # x_i - x_j
    a_i: int
    a_j: int

    @property
    def discordant(self) -> bool:
        return self.a_i != self.a_j


class PairCache:
    """Precomputed pairwise quantities for one (dataset, contrast) pair.

    Holds the full n×n observed contrast matrix ``w_mat`` (2 MB at
    n = 500) plus arm masks; per-pair design rows are derived from it
    in row blocks, never all at once.  The diagonal of ``w_mat`` is
    well defined (w(y_i, y_i)) but excluded from every pair sum.
    """

    #: float budget for cached per-pair scratch cubes (64 MB of float64)
    CUBE_BUDGET = 8_000_000

    def __init__(self, ds: ObservedDataset, spec: Contrast):
        if spec.dim != ds.n_outcomes:
            raise ValueError(
                f"contrast consumes {spec.dim} outcome component(s), "
                f"dataset has {ds.n_outcomes}"
            )
        self.ds = ds
        self.spec = spec
        self.w_mat = spec.matrix(ds.y, ds.y)
        self.treated = (ds.treat == 1).astype(float)
        self.control = 1.0 - self.treated
        self.x = ds.x
        self._x_diff = None

    @property
    def n(self) -> int:
        return self.ds.n

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    def x_diff_block(self, rows: slice) -> np.ndarray:
        """Covariate differences x_i - x_j for i in ``rows``, all j: (b, n, d)."""
        d = self.n_covariates
        if d and self.n * self.n * d <= self.CUBE_BUDGET:
            if self._x_diff is None:
                self._x_diff = self.x[:, None, :] - self.x[None, :, :]
            return self._x_diff[rows]
        return self.x[rows][:, None, :] - self.x[None, :, :]

    def row_blocks(self, width: int = None) -> Iterator[slice]:
        """Row slices sized so a (b, n, width) scratch stays in budget."""
        n = self.n
        if width is None:
            width = max(self.n_covariates + 2, 4)
        block = max(1, min(n, int(self.CUBE_BUDGET / max(n * width, 1))))
        for start in range(0, n, block):
            yield slice(start, min(start + block, n))


def stream_ordered_pairs(
    ds: ObservedDataset, spec: Contrast, which: str = "all"
) -> Iterator[PairTerm]:
    """Yield ordered pairs lazily in row-major (i, j) order.

    ``which="all"`` yields all n·(n-1) ordered pairs; ``"discordant"``
    only pairs with opposite treatment arms (2·n1·n0 of them).
    """
    if which not in ("all", "discordant"):
        raise ValueError(f"which must be 'all' or 'discordant', got {which!r}")
    cache = PairCache(ds, spec)
    w = cache.w_mat
    x = ds.x
    a = ds.treat
    for i in range(ds.n):
        for j in range(ds.n):
            if i == j:
                continue
            if which == "discordant" and a[i] == a[j]:
                continue
            yield PairTerm(
                i=i, j=j, w=float(w[i, j]), x=x[i] - x[j],
                a_i=int(a[i]), a_j=int(a[j]),
            )


class AveragedDataset:
    """Per-unit opposite-arm pair averages.

    For unit i with opposite arm of size m = n_{1-a_i}:

    * ``w_row[i]``: mean of w_ij over the m units j in the other arm,
    * ``w_col[i]``: mean of w_ji over the same j,
    * ``x_row[i]``: mean of x_i - x_j over the same j,
    * ``x_col[i]``: mean of x_j - x_i, exactly ``-x_row[i]``.
    """

    def __init__(self, w_row, w_col, x_row, treat):
        self.w_row = np.asarray(w_row, dtype=float)
        self.w_col = np.asarray(w_col, dtype=float)
        self.x_row = np.asarray(x_row, dtype=float)
        self.x_col = -self.x_row
        self.treat = np.asarray(treat, dtype=np.int8)

    @property
    def n(self) -> int:
        return self.treat.shape[0]


def per_unit_averages(ds: ObservedDataset, spec: Contrast, cache: PairCache = None) -> AveragedDataset:
    """Opposite-arm pair averages for every unit, in one vectorized pass."""
    if cache is None:
        cache = PairCache(ds, spec)
    w = cache.w_mat
    t, c = cache.treated, cache.control
    n1, n0 = ds.n1, ds.n0
    # row/column sums of w against each arm; unit i's own arm is never
    # the opposite arm, so the diagonal drops out automatically
    sum_row_t = w @ t
    sum_row_c = w @ c
    sum_col_t = w.T @ t
    sum_col_c = w.T @ c
    is_t = t.astype(bool)
    w_row = np.where(is_t, sum_row_c / n0, sum_row_t / n1)
    w_col = np.where(is_t, sum_col_c / n0, sum_col_t / n1)
    if ds.n_covariates:
        mean_x_t = ds.x.T @ t / n1
        mean_x_c = ds.x.T @ c / n0
        opp_mean = np.where(is_t[:, None], mean_x_c[None, :], mean_x_t[None, :])
        x_row = ds.x - opp_mean
    else:
        x_row = np.empty((ds.n, 0))
    return AveragedDataset(w_row=w_row, w_col=w_col, x_row=x_row, treat=ds.treat)
