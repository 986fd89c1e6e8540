"""Regression estimators of pairwise-contrast effects.

Three families, all fitted by ordinary least squares:

* ``pairs`` / ``pairs_ancova`` / ``pairs_interacted`` regress the
  observed pair contrast w_ij on treatment-pair indicators, optionally
  with covariate differences (ANCOVA) or indicator-covariate
  interactions, over the ordered pair stream.
* ``avg_row_*`` / ``avg_col_*`` regress each unit's opposite-arm pair
  average on its own arm indicators and averaged covariate
  differences; row and col refer to which side of the pair the unit
  sits on (two submodels whose coefficients differ once covariates
  enter).
* ``pim`` / ``pim_ancova`` / ``pim_interacted`` / ``pim_full`` regress
  w_ij on the arm difference d_ij = a_i - a_j (plus covariate terms);
  twice the d_ij slope estimates the net benefit directly.

Every fit reports the treated-vs-control contrast mean
(``contrast_tc``, the coefficient estimating the average of
w(y_i(1), y_j(0)) over ordered pairs), its reverse ``contrast_ct``,
and the net benefit ``contrast_tc - contrast_ct`` (or twice the slope
for the pim family).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .contrasts import Contrast
from .data import ObservedDataset
from .lsq import Coefficients, GramAccumulator
from .pairs import AveragedDataset, PairCache, per_unit_averages

__all__ = [
    "FitResult",
    "PairDesign",
    "estimate_individual",
    "estimate_averaged",
    "estimate_pim",
    "net_benefit",
    "select_submodel",
    "averaged_designs",
    "PAIR_FAMILIES",
    "PIM_FAMILIES",
    "ADJUSTMENTS",
]

ADJUSTMENTS = ("none", "ancova", "interacted")
PAIR_FAMILIES = {"pairs": "none", "pairs_ancova": "ancova", "pairs_interacted": "interacted"}
PIM_FAMILIES = ("pim", "pim_ancova", "pim_interacted", "pim_full")

_SELECT_TIE_TOL = 1e-15


class PairDesign:
    """Design-row builder for one pair-regression family.

    Rows for the ordered pair (i, j) are produced in blocks indexed by
    i.  Diagonal entries (i == i) build all-zero rows, so block sums
    over the full n×n grid equal sums over ordered pairs.  The reverse
    transform maps the row of (i, j) to the row of (j, i) through a
    signed column permutation, which the complete two-way variance
    correction relies on.
    """

    def __init__(self, family: str, cache: PairCache):
        self.family = family
        self.cache = cache
        d = cache.n_covariates
        xlabels = [f"xdiff{k+1}" for k in range(d)]
        if family in PAIR_FAMILIES:
            base = ["treat_vs_ctrl", "ctrl_vs_treat"]
            adjustment = PAIR_FAMILIES[family]
            if adjustment == "none":
                labels = base
                perm = [1, 0]
                sign = [1.0, 1.0]
            elif adjustment == "ancova":
                labels = base + xlabels
                perm = [1, 0] + list(range(2, 2 + d))
                sign = [1.0, 1.0] + [-1.0] * d
            else:  # interacted
                labels = (base
                          + [f"treat_vs_ctrl:{x}" for x in xlabels]
                          + [f"ctrl_vs_treat:{x}" for x in xlabels])
                perm = [1, 0] + list(range(2 + d, 2 + 2 * d)) + list(range(2, 2 + d))
                sign = [1.0, 1.0] + [-1.0] * (2 * d)
        elif family in PIM_FAMILIES:
            if family == "pim":
                labels = ["arm_diff"]
                perm, sign = [0], [-1.0]
            elif family == "pim_ancova":
                labels = ["arm_diff"] + xlabels
                perm = list(range(1 + d))
                sign = [-1.0] * (1 + d)
            elif family == "pim_interacted":
                labels = ["arm_diff"] + [f"arm_diff:{x}" for x in xlabels]
                perm = list(range(1 + d))
                sign = [-1.0] + [1.0] * d
            else:  # pim_full
                labels = ["arm_diff"] + xlabels + [f"arm_diff:{x}" for x in xlabels]
                perm = list(range(1 + 2 * d))
                sign = [-1.0] + [-1.0] * d + [1.0] * d
        else:
            raise ValueError(f"unknown pair family {family!r}")
        self.labels = labels
        self.p = len(labels)
        self.reverse_perm = np.asarray(perm, dtype=np.intp)
        self.reverse_sign = np.asarray(sign, dtype=float)
        self._full: Optional[np.ndarray] = None

    def cache_full(self) -> None:
        """Build and keep the complete (n, n, p) cube when within budget
        (the fit pass builds it; the variance pass then reuses it)."""
        n = self.cache.n
        if self._full is None and n * n * self.p <= PairCache.CUBE_BUDGET:
            self._full = self._build(slice(0, n))

    def block(self, rows: slice) -> np.ndarray:
        """Design rows for pairs (i, j), i in ``rows``, all j: (b, n, p)."""
        if self._full is not None:
            return self._full[rows]
        return self._build(rows)

    def _build(self, rows: slice) -> np.ndarray:
        cache = self.cache
        n = cache.n
        d = cache.n_covariates
        b = len(range(*rows.indices(n)))
        z = np.empty((b, n, self.p))
        if self.family in PAIR_FAMILIES:
            u1 = np.outer(cache.treated[rows], cache.control)
            u2 = np.outer(cache.control[rows], cache.treated)
            z[:, :, 0] = u1
            z[:, :, 1] = u2
            adjustment = PAIR_FAMILIES[self.family]
            if adjustment == "ancova":
                z[:, :, 2:] = cache.x_diff_block(rows)
            elif adjustment == "interacted":
                xd = cache.x_diff_block(rows)
                z[:, :, 2:2 + d] = u1[:, :, None] * xd
                z[:, :, 2 + d:] = u2[:, :, None] * xd
        else:
            a = cache.treated
            dmat = a[rows][:, None] - a[None, :]
            z[:, :, 0] = dmat
            if self.family == "pim_ancova":
                z[:, :, 1:] = cache.x_diff_block(rows)
            elif self.family == "pim_interacted":
                z[:, :, 1:] = dmat[:, :, None] * cache.x_diff_block(rows)
            elif self.family == "pim_full":
                xd = cache.x_diff_block(rows)
                z[:, :, 1:1 + d] = xd
                z[:, :, 1 + d:] = dmat[:, :, None] * xd
        return z

    def reverse_block(self, z: np.ndarray) -> np.ndarray:
        """Rows of the reversed pairs (j, i) from the rows of (i, j)."""
        return z[..., self.reverse_perm] * self.reverse_sign

    def row(self, i: int, j: int) -> np.ndarray:
        return self.block(slice(i, i + 1))[0, j].copy()


@dataclass
class FitResult:
    """One fitted regression family with its estimand mapping.

    ``estimate_positions`` maps estimand keys ("contrast_tc",
    "contrast_ct", "pim_slope") to coefficient positions.  ``gamma``
    holds the fitted covariate-coefficient blocks keyed by which
    estimand they attach to ("tc", "ct", "common", "interaction").
    """

    family: str
    kind: str                # "pair" | "pim" | "avg"
    adjustment: str
    submodel: Optional[int]
    coef: Coefficients
    estimate_positions: Dict[str, int]
    gamma: Dict[str, np.ndarray] = field(default_factory=dict)
    cache: Optional[PairCache] = field(default=None, repr=False)
    design: Optional[PairDesign] = field(default=None, repr=False)
    averaged: Optional[AveragedDataset] = field(default=None, repr=False)
    gram: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def contrast_tc(self) -> float:
        """Estimated mean contrast of treated outcomes over control."""
        if "contrast_tc" not in self.estimate_positions:
            raise ValueError(f"family {self.family!r} does not estimate contrast_tc")
        return float(self.coef.beta[self.estimate_positions["contrast_tc"]])

    @property
    def contrast_ct(self) -> float:
        if "contrast_ct" not in self.estimate_positions:
            raise ValueError(f"family {self.family!r} does not estimate contrast_ct")
        return float(self.coef.beta[self.estimate_positions["contrast_ct"]])

    @property
    def net_benefit(self) -> float:
        """Net benefit of treatment: contrast_tc - contrast_ct (or 2·slope)."""
        if "pim_slope" in self.estimate_positions:
            return 2.0 * float(self.coef.beta[self.estimate_positions["pim_slope"]])
        return self.contrast_tc - self.contrast_ct

    def estimates(self) -> Dict[str, float]:
        out = {}
        if "contrast_tc" in self.estimate_positions:
            out["contrast_tc"] = self.contrast_tc
            out["contrast_ct"] = self.contrast_ct
        out["net_benefit"] = self.net_benefit
        return out

    def residual(self, i: int, j: int) -> float:
        """Fitted residual of the ordered pair (i, j); pair families only."""
        if self.design is None:
            raise ValueError("per-pair residuals exist only for pair/pim fits")
        z = self.design.row(i, j)
        return float(self.cache.w_mat[i, j] - z @ self.coef.beta)


def _require_covariates(ds: ObservedDataset, what: str):
    if ds.n_covariates < 1:
        raise ValueError(f"{what} requires at least one covariate")


def _fit_pair_family(family: str, ds: ObservedDataset, spec: Contrast,
                     cache: Optional[PairCache]) -> FitResult:
    if cache is None:
        cache = PairCache(ds, spec)
    design = PairDesign(family, cache)
    design.cache_full()
    acc = GramAccumulator(design.labels)
    w = cache.w_mat
    for rows in cache.row_blocks(width=design.p):
        zb = design.block(rows)
        acc.accumulate_block(zb.reshape(-1, design.p), w[rows].ravel())
    coef = acc.solve()
    d = cache.n_covariates
    gamma: Dict[str, np.ndarray] = {}
    if family == "pairs_ancova":
        gamma["common"] = coef.beta[2:].copy()
    elif family == "pairs_interacted":
        gamma["tc"] = coef.beta[2:2 + d].copy()
        gamma["ct"] = coef.beta[2 + d:].copy()
    elif family == "pim_ancova":
        gamma["common"] = coef.beta[1:].copy()
    elif family == "pim_interacted":
        gamma["interaction"] = coef.beta[1:].copy()
    elif family == "pim_full":
        gamma["common"] = coef.beta[1:1 + d].copy()
        gamma["interaction"] = coef.beta[1 + d:].copy()
    if family in PAIR_FAMILIES:
        kind = "pair"
        positions = {"contrast_tc": 0, "contrast_ct": 1}
        adjustment = PAIR_FAMILIES[family]
    else:
        kind = "pim"
        positions = {"pim_slope": 0}
        adjustment = {"pim": "none", "pim_ancova": "ancova",
                      "pim_interacted": "interacted", "pim_full": "full"}[family]
    return FitResult(
        family=family, kind=kind, adjustment=adjustment, submodel=None,
        coef=coef, estimate_positions=positions, gamma=gamma,
        cache=cache, design=design, gram=acc.gram.copy(),
    )


def estimate_individual(ds: ObservedDataset, spec: Contrast,
                        adjustment: str = "none",
                        cache: Optional[PairCache] = None) -> FitResult:
    """Fit the pair-level regression with the given adjustment.

    ``"none"`` regresses w_ij on the two treatment-pair indicators
    (coefficients are the arm-pair means of w); ``"ancova"`` adds the
    covariate difference x_i - x_j, which makes concordant (same-arm)
    pairs informative; ``"interacted"`` adds indicator-by-covariate
    interactions instead.
    """
    if adjustment not in ADJUSTMENTS:
        raise ValueError(f"adjustment must be one of {ADJUSTMENTS}, got {adjustment!r}")
    if adjustment != "none":
        _require_covariates(ds, f"adjustment {adjustment!r}")
    family = {v: k for k, v in PAIR_FAMILIES.items()}[adjustment]
    return _fit_pair_family(family, ds, spec, cache)


def estimate_pim(ds: ObservedDataset, spec: Contrast, model: str = "pim",
                 cache: Optional[PairCache] = None) -> FitResult:
    """Fit a linear probabilistic-index regression over all ordered pairs."""
    if model not in PIM_FAMILIES:
        raise ValueError(f"model must be one of {PIM_FAMILIES}, got {model!r}")
    if model != "pim":
        _require_covariates(ds, f"pim model {model!r}")
    return _fit_pair_family(model, ds, spec, cache)


def averaged_designs(avg: AveragedDataset, adjustment: str, submodel: int):
    """Design matrices for one averaged submodel and its opposite side.

    Returns ``(z_own, w_own, z_opp, w_opp)`` where ``z_own`` is the
    fitted submodel's (n, p) design and ``z_opp`` is the design of the
    opposite orientation laid out so that coefficient positions align
    by estimand: column 0 always carries the treated-vs-control
    contrast, column 1 the reverse, and covariate blocks follow in the
    same estimand order.
    """
    t = (avg.treat == 1).astype(float)
    c = 1.0 - t
    if submodel == 1:
        ind_own, x_own = (t, c), avg.x_row
        ind_opp, x_opp = (c, t), avg.x_col
        w_own, w_opp = avg.w_row, avg.w_col
    elif submodel == 2:
        ind_own, x_own = (c, t), avg.x_col
        ind_opp, x_opp = (t, c), avg.x_row
        w_own, w_opp = avg.w_col, avg.w_row
    else:
        raise ValueError(f"submodel must be 1 or 2, got {submodel}")

    def build(ind, x):
        cols = [ind[0], ind[1]]
        if adjustment == "ancova":
            cols.append(x)
        elif adjustment == "interacted":
            cols.append(ind[0][:, None] * x)
            cols.append(ind[1][:, None] * x)
        return np.column_stack(cols)

    return build(ind_own, x_own), w_own, build(ind_opp, x_opp), w_opp


def estimate_averaged(ds: ObservedDataset, spec: Contrast,
                      adjustment: str = "none", submodel: int = 1,
                      cache: Optional[PairCache] = None,
                      averaged: Optional[AveragedDataset] = None) -> FitResult:
    """Fit one per-unit-average regression submodel.

    Submodel 1 regresses each unit's row average (its own contrasts
    against the opposite arm); submodel 2 regresses the column average
    (the opposite arm's contrasts against it).  Without covariates the
    two submodels coincide with the unadjusted pair regression; with
    covariates their coefficients differ and the one with the smaller
    estimated variance is the recommended final estimator
    (:func:`select_submodel`).
    """
    if adjustment not in ADJUSTMENTS:
        raise ValueError(f"adjustment must be one of {ADJUSTMENTS}, got {adjustment!r}")
    if submodel not in (1, 2):
        raise ValueError(f"submodel must be 1 or 2, got {submodel}")
    if adjustment != "none":
        _require_covariates(ds, f"adjustment {adjustment!r}")
    if min(ds.n0, ds.n1) < 2:
        raise ValueError("averaged estimators need at least 2 units per arm")
    if averaged is None:
        averaged = per_unit_averages(ds, spec, cache=cache)
    z_own, w_own, _, _ = averaged_designs(averaged, adjustment, submodel)
    d = ds.n_covariates
    side = "row" if submodel == 1 else "col"
    base = ["treat_ind", "ctrl_ind"] if submodel == 1 else ["ctrl_ind", "treat_ind"]
    xlabels = [f"xavg_{side}{k+1}" for k in range(d)]
    if adjustment == "none":
        labels = base
    elif adjustment == "ancova":
        labels = base + xlabels
    else:
        labels = base + [f"{base[0]}:{x}" for x in xlabels] + [f"{base[1]}:{x}" for x in xlabels]
    acc = GramAccumulator(labels).accumulate_block(z_own, w_own)
    coef = acc.solve()
    gamma: Dict[str, np.ndarray] = {}
    if adjustment == "ancova":
        gamma["common"] = coef.beta[2:].copy()
    elif adjustment == "interacted":
        gamma["tc"] = coef.beta[2:2 + d].copy()
        gamma["ct"] = coef.beta[2 + d:].copy()
    family = {"none": "avg", "ancova": "avg_ancova", "interacted": "avg_interacted"}[adjustment]
    family = f"{family}_{side}" if adjustment != "none" else f"avg_{side}"
    return FitResult(
        family=family, kind="avg", adjustment=adjustment, submodel=submodel,
        coef=coef, estimate_positions={"contrast_tc": 0, "contrast_ct": 1},
        gamma=gamma, averaged=averaged, gram=acc.gram.copy(),
    )


def net_benefit(fit: FitResult) -> float:
    """Net benefit of treatment implied by a fit (``tau(0) = -tau(1)``)."""
    return fit.net_benefit


def select_submodel(fit1: FitResult, report1, fit2: FitResult, report2,
                    estimand: str = "net_benefit") -> Tuple[FitResult, object]:
    """Pick the averaged submodel with the smaller estimated variance.

    ``report1``/``report2`` are the :class:`~paircause.variance.VarianceReport`
    objects of the two submodels (same family, submodels 1 and 2).
    Ties within 1e-15 go to submodel 1.
    """
    if report1 is None or report2 is None:
        raise ValueError("both submodels need a variance report to select between")
    key = {"contrast_tc": "se2_tc", "contrast_ct": "se2_ct",
           "net_benefit": "se2_net"}.get(estimand)
    if key is None:
        raise ValueError(f"unknown estimand {estimand!r}")
    v1 = getattr(report1, key)
    v2 = getattr(report2, key)
    if v1 is None or v2 is None:
        raise ValueError(f"variance reports do not carry {key}")
    if v2 < v1 - _SELECT_TIE_TOL:
        return fit2, report2
    return fit1, report1
