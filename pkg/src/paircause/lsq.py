"""Streaming ordinary least squares via normal-equation accumulation.

Rows arrive one at a time or in blocks; only the p×p Gram matrix and
the length-p moment vector are kept, so fits over n² pair rows use
O(p²) memory.  Accumulators merge associatively, which makes parallel
reduction safe up to floating-point reassociation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

__all__ = ["GramAccumulator", "Coefficients", "RankDeficiencyError"]

_RCOND_MIN = 1e-12


class RankDeficiencyError(ValueError):
    """Design matrix is numerically rank deficient.

    A dropped column would silently change which coefficient holds the
    estimand, so deficiency is an error rather than a fallback.
    """

    def __init__(self, columns: Sequence[str], rcond: float):
        self.columns = list(columns)
        self.rcond = rcond
        super().__init__(
            "rank-deficient design (reciprocal condition "
            f"{rcond:.2e}); columns in the near-null space: {self.columns}"
        )


@dataclass
class Coefficients:
    """Solved regression coefficients with their column labels."""

    beta: np.ndarray
    labels: List[str]

    def __getitem__(self, label: str) -> float:
        return float(self.beta[self.labels.index(label)])


class GramAccumulator:
    """Accumulates sum(z zᵀ) and sum(z w) over streamed design rows."""

    def __init__(self, labels: Sequence[str]):
        self.labels = list(labels)
        p = len(self.labels)
        if p < 1:
            raise ValueError("need at least one design column")
        self.gram = np.zeros((p, p))
        self.moment = np.zeros(p)
        self.row_count = 0

    @property
    def p(self) -> int:
        return len(self.labels)

    def accumulate(self, z, w: float) -> "GramAccumulator":
        """Add one row; all-zero rows change nothing but the count."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.p,):
            raise ValueError(f"row has shape {z.shape}, expected ({self.p},)")
        if not (np.all(np.isfinite(z)) and np.isfinite(w)):
            raise ValueError("non-finite design row or response")
        self.gram += np.outer(z, z)
        self.moment += z * w
        self.row_count += 1
        return self

    def accumulate_block(self, z: np.ndarray, w: np.ndarray) -> "GramAccumulator":
        """Add a (rows, p) block at once; equivalent to row-wise accumulate."""
        z = np.asarray(z, dtype=float)
        w = np.asarray(w, dtype=float).ravel()
        if z.ndim != 2 or z.shape[1] != self.p or z.shape[0] != w.shape[0]:
            raise ValueError(f"block shapes {z.shape} / {w.shape} do not match p={self.p}")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite design block or responses")
        self.gram += z.T @ z
        self.moment += z.T @ w
        self.row_count += z.shape[0]
        return self

    def merge(self, other: "GramAccumulator") -> "GramAccumulator":
        if other.labels != self.labels:
            raise ValueError("cannot merge accumulators with different columns")
        self.gram += other.gram
        self.moment += other.moment
        self.row_count += other.row_count
        return self

    def rcond(self) -> float:
        """Reciprocal condition number of the (symmetric PSD) Gram matrix."""
        eig = np.linalg.eigvalsh(0.5 * (self.gram + self.gram.T))
        top = eig[-1]
        if top <= 0:
            return 0.0
        return max(eig[0], 0.0) / top

    def solve(self, rcond_min: float = _RCOND_MIN) -> Coefficients:
        """Solve gram · beta = moment via a symmetric factorization.

        Raises
        ------
        RankDeficiencyError
            When the reciprocal condition number falls below
            ``rcond_min``; the message names the offending columns.
        """
        rc = self.rcond()
        if rc < rcond_min:
            raise RankDeficiencyError(self._null_space_columns(), rc)
        sym = 0.5 * (self.gram + self.gram.T)
        try:
            cho = scipy.linalg.cho_factor(sym, check_finite=False)
            beta = scipy.linalg.cho_solve(cho, self.moment, check_finite=False)
        except scipy.linalg.LinAlgError:
            # PSD but not strictly PD at machine precision
            raise RankDeficiencyError(self._null_space_columns(), rc)
        return Coefficients(beta=beta, labels=list(self.labels))

    def inverse(self, rcond_min: float = _RCOND_MIN) -> np.ndarray:
        """Inverse of the Gram matrix (the sandwich 'bread')."""
        rc = self.rcond()
        if rc < rcond_min:
            raise RankDeficiencyError(self._null_space_columns(), rc)
        sym = 0.5 * (self.gram + self.gram.T)
        cho = scipy.linalg.cho_factor(sym, check_finite=False)
        return scipy.linalg.cho_solve(cho, np.eye(self.p), check_finite=False)

    def _null_space_columns(self) -> List[str]:
        sym = 0.5 * (self.gram + self.gram.T)
        vals, vecs = np.linalg.eigh(sym)
        v = np.abs(vecs[:, 0])
        involved = v > 0.1 * v.max() if v.max() > 0 else np.ones_like(v, dtype=bool)
        return [lab for lab, flag in zip(self.labels, involved) if flag]
