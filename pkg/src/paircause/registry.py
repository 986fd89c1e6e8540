"""Named estimator registry shared by the simulator and the CLI.

Names encode family and adjustment:

==================  ================================================
name                construction
==================  ================================================
pairs               pair regression, treatment indicators only
pairs_ancova        + covariate differences
pairs_interacted    + indicator-by-covariate-difference interactions
avg_row / avg_col   per-unit average regressions, no covariates
                    (both algebraically equal ``pairs``)
avg_row_ancova      row-average regression + averaged covariates
avg_col_ancova      col-average counterpart
avg_row_interacted  row-average regression, interacted covariates
avg_col_interacted  col-average counterpart
pim                 arm-difference slope regression
pim_ancova          + covariate differences
pim_interacted      + slope-by-covariate interactions
pim_full            + both covariate blocks
==================  ================================================

``pim*`` estimators report only the net benefit; the others also
report both contrast means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .contrasts import Contrast
from .data import ObservedDataset
from .estimators import (FitResult, estimate_averaged, estimate_individual,
                         estimate_pim)
from .pairs import AveragedDataset, PairCache
from .variance import AVG_METHODS, PAIR_METHODS

__all__ = ["EstimatorDef", "ESTIMATORS", "TABLE_ESTIMATORS", "fit_estimator",
           "valid_methods", "estimands_of"]


@dataclass(frozen=True)
class EstimatorDef:
    name: str
    kind: str                  # "pair" | "pim" | "avg"
    adjustment: str
    submodel: Optional[int] = None


def _defs():
    out = {}
    for name, adj in (("pairs", "none"), ("pairs_ancova", "ancova"),
                      ("pairs_interacted", "interacted")):
        out[name] = EstimatorDef(name, "pair", adj)
    for side, sub in (("row", 1), ("col", 2)):
        out[f"avg_{side}"] = EstimatorDef(f"avg_{side}", "avg", "none", sub)
        out[f"avg_{side}_ancova"] = EstimatorDef(f"avg_{side}_ancova", "avg", "ancova", sub)
        out[f"avg_{side}_interacted"] = EstimatorDef(
            f"avg_{side}_interacted", "avg", "interacted", sub)
    for name in ("pim", "pim_ancova", "pim_interacted", "pim_full"):
        out[name] = EstimatorDef(name, "pim", name)
    return out


ESTIMATORS = _defs()

#: the full comparison sweep used by the simulation studies
TABLE_ESTIMATORS: Tuple[str, ...] = (
    "pairs", "pairs_interacted", "pairs_ancova",
    "avg_row_interacted", "avg_col_interacted",
    "avg_row_ancova", "avg_col_ancova",
    "pim", "pim_ancova", "pim_interacted", "pim_full",
)


def fit_estimator(name: str, ds: ObservedDataset, spec: Contrast,
                  cache: Optional[PairCache] = None,
                  averaged: Optional[AveragedDataset] = None) -> FitResult:
    """Fit a registry estimator, reusing shared pairwise caches."""
    if name not in ESTIMATORS:
        raise ValueError(f"unknown estimator {name!r}; known: {sorted(ESTIMATORS)}")
    edef = ESTIMATORS[name]
    if edef.kind == "pair":
        return estimate_individual(ds, spec, adjustment=edef.adjustment, cache=cache)
    if edef.kind == "pim":
        return estimate_pim(ds, spec, model=name, cache=cache)
    return estimate_averaged(ds, spec, adjustment=edef.adjustment,
                             submodel=edef.submodel, cache=cache, averaged=averaged)


def valid_methods(name: str) -> Tuple[str, ...]:
    """Variance methods defined for an estimator (may be empty)."""
    edef = ESTIMATORS[name]
    if edef.kind in ("pair", "pim"):
        return PAIR_METHODS
    if edef.adjustment == "none":
        return ()
    return AVG_METHODS


def estimands_of(name: str) -> Tuple[str, ...]:
    if ESTIMATORS[name].kind == "pim":
        return ("net_benefit",)
    return ("contrast_tc", "contrast_ct", "net_benefit")
