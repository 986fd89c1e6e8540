"""Experimental data containers.

:class:`ObservedDataset` holds the realized data of one completely
randomized experiment: a binary treatment, a Q-dimensional outcome and
covariates per unit.  :class:`PotentialPopulation` holds both potential
outcome arms per unit and is the input to the finite-population oracle
and the simulator; revealing it under an assignment yields an
:class:`ObservedDataset`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["UnitRecord", "ObservedDataset", "PotentialPopulation"]


@dataclass(frozen=True)
class UnitRecord:
    """One experimental unit: id, treatment arm, outcome vector, covariates."""

    id: object
    treatment: int
    outcome: tuple
    covariates: tuple = ()


def _as_2d(arr, n: int, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n:
        raise ValueError(f"{name} must have shape ({n}, k), got {a.shape}")
    return a


class ObservedDataset:
    """Realized data of a two-arm randomized experiment.

    Parameters
    ----------
    treat : array of 0/1, shape (n,)
    y : array, shape (n,) or (n, q)
        Outcomes; ordinal outcomes integer-encoded, continuous raw.
    x : array, shape (n, d) or None
        Pre-treatment covariates (d may be 0).
    ids : sequence, optional
        Unique unit identifiers; defaults to 0..n-1.
    """

    def __init__(self, treat, y, x=None, ids=None):
        treat = np.asarray(treat)
        if treat.ndim != 1:
            raise ValueError("treat must be one-dimensional")
        n = treat.shape[0]
        if n < 4:
            raise ValueError(f"need at least 4 units, got {n}")
        vals = np.unique(treat)
        if not np.all(np.isin(vals, (0, 1))):
            raise ValueError(f"treatment must be coded 0/1, found values {vals}")
        self.treat = treat.astype(np.int8)
        self.y = _as_2d(y, n, "y")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("outcomes contain non-finite values")
        if x is None:
            x = np.empty((n, 0))
        self.x = _as_2d(x, n, "x")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("covariates contain non-finite values")
        if ids is None:
            ids = np.arange(n)
        ids = np.asarray(ids, dtype=object)
        if ids.shape[0] != n:
            raise ValueError("ids length must match number of units")
        if len(set(ids.tolist())) != n:
            raise ValueError("unit ids must be unique")
        self.ids = ids
        self.n1 = int(self.treat.sum())
        self.n0 = n - self.n1
        if self.n0 == 0 or self.n1 == 0:
            raise ValueError("both treatment arms must be occupied")

    @classmethod
    def from_units(cls, units: Sequence[UnitRecord]) -> "ObservedDataset":
        if not units:
            raise ValueError("empty unit list")
        d = len(units[0].covariates)
        q = len(units[0].outcome)
        for u in units:
            if len(u.covariates) != d:
                raise ValueError(f"unit {u.id!r}: covariate length differs")
            if len(u.outcome) != q:
                raise ValueError(f"unit {u.id!r}: outcome length differs")
        return cls(
            treat=[u.treatment for u in units],
            y=[u.outcome for u in units],
            x=[u.covariates for u in units] if d else None,
            ids=[u.id for u in units],
        )

    @property
    def n(self) -> int:
        return self.treat.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    @property
    def pi1(self) -> float:
        return self.n1 / self.n

    @property
    def pi0(self) -> float:
        return self.n0 / self.n

    def units(self):
        """Units as :class:`UnitRecord` rows (mainly for round-trip tests)."""
        return [
            UnitRecord(
                id=self.ids[i],
                treatment=int(self.treat[i]),
                outcome=tuple(self.y[i]),
                covariates=tuple(self.x[i]),
            )
            for i in range(self.n)
        ]

    def __repr__(self):
        return (
            f"ObservedDataset(n={self.n}, n1={self.n1}, n0={self.n0}, "
            f"q={self.n_outcomes}, d={self.n_covariates})"
        )


class PotentialPopulation:
    """Both potential outcome arms for every unit in a finite population.

    Parameters
    ----------
    y_treated, y_control : arrays, shape (n,) or (n, q)
        Potential outcomes under treatment and control.
    x : array, shape (n, d), optional
        Covariates handed to estimators.
    oracle_x : array, optional
        The outcome-generating covariates, when they differ from the
        analysis covariates ``x`` (e.g. unrelated or noise-corrupted
        analysis covariates).  Defaults to ``x``.
    """

    def __init__(self, y_treated, y_control, x=None, oracle_x=None):
        y1 = np.asarray(y_treated, dtype=float)
        n = y1.shape[0]
        self.y_treated = _as_2d(y_treated, n, "y_treated")
        self.y_control = _as_2d(y_control, n, "y_control")
        if self.y_control.shape != self.y_treated.shape:
            raise ValueError("potential outcome arms must have the same shape")
        if x is None:
            x = np.empty((n, 0))
        self.x = _as_2d(x, n, "x")
        self.oracle_x = self.x if oracle_x is None else _as_2d(oracle_x, n, "oracle_x")
        for name, arr in (("y_treated", self.y_treated),
                          ("y_control", self.y_control),
                          ("x", self.x), ("oracle_x", self.oracle_x)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def n(self) -> int:
        return self.y_treated.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.y_treated.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    def potential(self, arm: int) -> np.ndarray:
        """Potential outcome matrix of one arm, shape (n, q)."""
        if arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1, got {arm}")
        return self.y_treated if arm == 1 else self.y_control

    def reveal(self, treat) -> ObservedDataset:
        """Observed dataset under an assignment vector (SUTVA reveal)."""
        treat = np.asarray(treat)
        if treat.shape != (self.n,):
            raise ValueError("assignment length must match population size")
        mask = treat.astype(bool)
        y = np.where(mask[:, None], self.y_treated, self.y_control)
        return ObservedDataset(treat=treat, y=y, x=self.x)

    def __repr__(self):
        return (
            f"PotentialPopulation(n={self.n}, q={self.n_outcomes}, "
            f"d={self.n_covariates})"
        )
