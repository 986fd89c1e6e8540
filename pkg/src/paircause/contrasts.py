"""Contrast functions scoring one outcome vector against another.

A contrast maps two outcome vectors to a real number, e.g. the plain
difference for continuous endpoints, win indicators (with or without
half credit for ties) for ordinal endpoints, a lexicographic rule for
prioritized composites, and weighted averages of per-component
contrasts for non-prioritized composites.

A contrast is *anti-symmetric* when ``w(y1, y2) == C - w(y2, y1)`` for
a fixed constant ``C`` (0 for the difference, 1 for half-tie wins).
Several downstream identities only hold for anti-symmetric contrasts,
so each contrast reports its constant when one is structurally
guaranteed, and ``None`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Contrast",
    "Difference",
    "WinHalfTie",
    "WinStrict",
    "Lexicographic",
    "WeightedAggregate",
    "CustomContrast",
    "eval_contrast",
    "antisymmetry_constant",
]

_WEIGHT_TOL = 1e-12


def _as_outcome(y, dim: int, name: str) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.ndim != 1 or y.shape[0] != dim:
        raise ValueError(
            f"{name} has dimension {y.shape}, contrast expects {dim} component(s)"
        )
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite components: {y}")
    return y


def _as_outcome_block(y, dim: int, name: str) -> np.ndarray:
    """Coerce to an (n, dim) block of outcome vectors."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[1] != dim:
        raise ValueError(
            f"{name} has shape {y.shape}, contrast expects (n, {dim})"
        )
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite components")
    return y


class Contrast:
    """Base class for contrast functions.

    Subclasses implement :meth:`_matrix` on validated blocks and expose

    * ``dim`` -- number of outcome components consumed,
    * ``structural_constant`` -- anti-symmetry constant guaranteed by
      construction, or ``None``.

    Instances are immutable and safe to share across workers.
    """

    #: optional user-declared anti-symmetry constant (overrides structural)
    declared_constant: Optional[float] = None

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def structural_constant(self) -> Optional[float]:
        return None

    @property
    def antisymmetry_constant(self) -> Optional[float]:
        """Anti-symmetry constant ``C``, or ``None`` when not guaranteed."""
        if self.declared_constant is not None:
            return float(self.declared_constant)
        return self.structural_constant

    def __call__(self, y_left, y_right) -> float:
        yl = _as_outcome(y_left, self.dim, "y_left")
        yr = _as_outcome(y_right, self.dim, "y_right")
        return float(self._matrix(yl[None, :], yr[None, :])[0, 0])

    def matrix(self, y_left, y_right) -> np.ndarray:
        """Pairwise evaluation: entry (i, j) is ``w(y_left[i], y_right[j])``."""
        yl = _as_outcome_block(y_left, self.dim, "y_left")
        yr = _as_outcome_block(y_right, self.dim, "y_right")
        return self._matrix(yl, yr)

    def _matrix(self, yl: np.ndarray, yr: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Difference(Contrast):
    """``w(y1, y2) = y1 - y2`` for a single outcome. Anti-symmetric, C = 0."""

    declared_constant: Optional[float] = None

    @property
    def dim(self) -> int:
        return 1

    @property
    def structural_constant(self) -> Optional[float]:
        return 0.0

    def _matrix(self, yl, yr):
        return yl[:, 0][:, None] - yr[:, 0][None, :]


@dataclass(frozen=True)
class WinHalfTie(Contrast):
    """Win indicator with half credit for ties. Anti-symmetric, C = 1."""

    declared_constant: Optional[float] = None

    @property
    def dim(self) -> int:
        return 1

    @property
    def structural_constant(self) -> Optional[float]:
        return 1.0

    def _matrix(self, yl, yr):
        a = yl[:, 0][:, None]
        b = yr[:, 0][None, :]
        return (a > b) + 0.5 * (a == b)


@dataclass(frozen=True)
class WinStrict(Contrast):
    """Strict win indicator ``1(y1 > y2)``.

    Ties score 0 in both orders, so no anti-symmetry constant is
    guaranteed (tie-free data behaves as if C = 1).
    """

    declared_constant: Optional[float] = None

    @property
    def dim(self) -> int:
        return 1

    def _matrix(self, yl, yr):
        return (yl[:, 0][:, None] > yr[:, 0][None, :]).astype(float)


@dataclass(frozen=True)
class Lexicographic(Contrast):
    """Prioritized comparison: the first component that differs decides.

    Parameters
    ----------
    directions : sequence of {"higher", "lower"}
        Per component, whether larger or smaller values win.  Order
        encodes priority (first component is most important).
    ties : {"half", "literal"}
        Score for an exact full-vector tie.  ``"half"`` (default)
        scores 0.5, keeping win/loss scores symmetric around ties.
        ``"literal"`` scores 1, i.e. the plain indicator that the left
        vector is lexicographically greater-or-equal, which assigns 1
        to both orders of identical vectors.

    Tie detection uses exact component equality, so ordinal outcomes
    must be integer-encoded.
    """

    directions: Tuple[str, ...]
    ties: str = "half"
    declared_constant: Optional[float] = None

    def __post_init__(self):
        if len(self.directions) < 1:
            raise ValueError("lexicographic contrast needs at least one component")
        bad = [s for s in self.directions if s not in ("higher", "lower")]
        if bad:
            raise ValueError(f"directions must be 'higher' or 'lower', got {bad}")
        if self.ties not in ("half", "literal"):
            raise ValueError(f"ties must be 'half' or 'literal', got {self.ties!r}")
        object.__setattr__(self, "directions", tuple(self.directions))

    @property
    def dim(self) -> int:
        return len(self.directions)

    def _matrix(self, yl, yr):
        n_l, n_r = yl.shape[0], yr.shape[0]
        out = np.empty((n_l, n_r))
        tie_score = 0.5 if self.ties == "half" else 1.0
        out.fill(tie_score)
        undecided = np.ones((n_l, n_r), dtype=bool)
        for q, direction in enumerate(self.directions):
            a = yl[:, q][:, None]
            b = yr[:, q][None, :]
            gt = a > b if direction == "higher" else a < b
            lt = a < b if direction == "higher" else a > b
            out[undecided & gt] = 1.0
            out[undecided & lt] = 0.0
            undecided &= a == b
            if not undecided.any():
                break
        return out


@dataclass(frozen=True)
class WeightedAggregate(Contrast):
    """Weighted average of per-component contrasts.

    ``w(y1, y2) = sum_q weights[q] * components[q](y1[q], y2[q])`` with
    non-negative weights summing to one.  Each component contrast must
    consume a single outcome component.
    """

    weights: Tuple[float, ...]
    components: Tuple[Contrast, ...]
    declared_constant: Optional[float] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components):
            raise ValueError("need one weight per component contrast")
        if len(w) < 1:
            raise ValueError("weighted aggregate needs at least one component")
        if np.any(w < 0):
            raise ValueError(f"weights must be non-negative, got {w}")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got sum {w.sum()!r}")
        for k, sub in enumerate(self.components):
            if sub.dim != 1:
                raise ValueError(
                    f"component contrast {k} consumes {sub.dim} outcomes; "
                    "aggregate components must be univariate"
                )
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def structural_constant(self) -> Optional[float]:
        total = 0.0
        for wq, sub in zip(self.weights, self.components):
            c = sub.antisymmetry_constant
            if c is None:
                return None
            total += wq * c
        return total

    def _matrix(self, yl, yr):
        out = np.zeros((yl.shape[0], yr.shape[0]))
        for q, (wq, sub) in enumerate(zip(self.weights, self.components)):
            if wq == 0.0:
                continue
            out += wq * sub._matrix(yl[:, q : q + 1], yr[:, q : q + 1])
        return out


@dataclass(frozen=True)
class CustomContrast(Contrast):
    """User-supplied contrast.

    Parameters
    ----------
    fn : callable
        ``fn(y1, y2) -> float`` on two 1-d outcome vectors of length
        ``ndim``.  Must be deterministic.
    ndim : int
        Number of outcome components consumed.
    declared_constant : float, optional
        Anti-symmetry constant the caller guarantees, if any.
    label : str
        Name used in error messages and reports.
    """

    fn: Callable[[np.ndarray, np.ndarray], float] = field(repr=False)
    ndim: int = 1
    declared_constant: Optional[float] = None
    label: str = "custom"

    def __post_init__(self):
        if self.ndim < 1:
            raise ValueError("custom contrast dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.ndim

    def _matrix(self, yl, yr):
        out = np.empty((yl.shape[0], yr.shape[0]))
        for i in range(yl.shape[0]):
            for j in range(yr.shape[0]):
                out[i, j] = self.fn(yl[i], yr[j])
        if not np.all(np.isfinite(out)):
            raise ValueError(f"contrast {self.label!r} produced non-finite values")
        return out


def eval_contrast(spec: Contrast, y_left, y_right) -> float:
    """Evaluate ``spec`` on a single ordered pair of outcome vectors."""
    return spec(y_left, y_right)


def antisymmetry_constant(spec: Contrast) -> Optional[float]:
    """Anti-symmetry constant of ``spec``, or ``None`` when not guaranteed."""
    return spec.antisymmetry_constant
