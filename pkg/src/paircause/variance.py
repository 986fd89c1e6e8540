"""Design-based sandwich variance estimators and confidence intervals.

Pair regressions induce two-way dependence: every unit appears in many
pairs on both sides, and each unordered pair contributes two reversed
rows.  Four sandwich middle matrices are supported:

* ``hr``  -- heteroskedasticity-robust, sum of per-row outer products;
  ignores all between-row correlation (badly anti-conservative here).
* ``cr``  -- one-way cluster-robust, clustering on the first pair
  index; ignores half the correlation and all reversals.
* ``tw``  -- two-way cluster-robust (first index + second index
  clusters minus the row-level intersection); consistent for the
  marginal contrast variances but missing the reversed-pair
  covariance, hence unreliable for the net benefit.
* ``ctw`` -- complete two-way: adds the reversed-pair cross products
  and subtracts the per-pair overcount, consistent for variances and
  covariances of all supported estimators.

Per-unit-average fits get their own two-piece sandwich built from the
fitted submodel's residuals plus the manually formed residuals of the
opposite orientation evaluated at the same coefficients.  ``hr`` on
those fits is the plain per-unit sandwich of the fitted submodel only;
``cr``/``tw`` are undefined for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.stats

from .estimators import FitResult, averaged_designs

__all__ = [
    "VarianceReport",
    "variance_reports",
    "ctw_pairs",
    "ctw_pim",
    "ctw_averaged",
    "baseline_variance",
    "confidence_interval",
    "PAIR_METHODS",
    "AVG_METHODS",
]

PAIR_METHODS = ("hr", "cr", "tw", "ctw")
AVG_METHODS = ("hr", "ctw")


@dataclass
class VarianceReport:
    """Estimated variances of one fit under one sandwich method.

    ``se2_tc``/``se2_ct`` are the variance estimates of the two
    contrast-mean estimates, ``cov_tc_ct`` their covariance and
    ``se2_net`` the implied net-benefit variance.  Probabilistic-index
    fits only estimate the net benefit, so the contrast-level entries
    are ``None`` there.  Negative diagonal estimates (possible in
    small samples because the complete two-way middle matrix subtracts
    correction terms) are clipped to zero and recorded in ``clipped``;
    ``raw`` keeps the unclipped values, and the net-benefit
    combination always uses them.
    """

    method: str
    se2_tc: Optional[float]
    se2_ct: Optional[float]
    cov_tc_ct: Optional[float]
    se2_net: float
    clipped: Tuple[str, ...] = ()
    raw: Dict[str, float] = field(default_factory=dict)

    @property
    def se_tc(self) -> Optional[float]:
        return None if self.se2_tc is None else float(np.sqrt(self.se2_tc))

    @property
    def se_ct(self) -> Optional[float]:
        return None if self.se2_ct is None else float(np.sqrt(self.se2_ct))

    @property
    def se_net(self) -> float:
        return float(np.sqrt(self.se2_net))

    def se2(self, estimand: str) -> Optional[float]:
        return {"contrast_tc": self.se2_tc, "contrast_ct": self.se2_ct,
                "net_benefit": self.se2_net}[estimand]


def _inv_sym(m: np.ndarray) -> np.ndarray:
    sym = 0.5 * (m + m.T)
    cho = scipy.linalg.cho_factor(sym, check_finite=False)
    return scipy.linalg.cho_solve(cho, np.eye(m.shape[0]), check_finite=False)


def _pair_score_pass(fit: FitResult):
    """One streamed pass: per-unit score sums and per-pair corrections.

    Returns (s_row, s_col, cross, diag) where for each unit i,
    ``s_row[i] = sum_j z_ij r_ij`` and ``s_col[i] = sum_j z_ji r_ji``,
    and ``cross = sum_{i!=j} z_ij z_ji^T r_ij r_ji``,
    ``diag = sum_{i!=j} z_ij z_ij^T r_ij^2``.
    """
    cache, design = fit.cache, fit.design
    beta = fit.coef.beta
    n, p = cache.n, design.p
    w = cache.w_mat
    design.cache_full()
    # residuals of every ordered pair; the reversed pair's residual is
    # the transposed entry
    resid = np.empty((n, n))
    for rows in cache.row_blocks(width=p):
        resid[rows] = w[rows] - design.block(rows) @ beta
    resid_t = resid.T
    s_row = np.empty((n, p))
    s_col = np.zeros((n, p))
    g_cross = np.zeros((p, p))
    diag = np.zeros((p, p))
    for rows in cache.row_blocks(width=p):
        zb = design.block(rows)
        rb = resid[rows]
        scores = zb * rb[:, :, None]
        s_row[rows] = scores.sum(axis=1)
        s_col += scores.sum(axis=0)
        sf = scores.reshape(-1, p)
        diag += sf.T @ sf
        g_cross += sf.T @ (zb * resid_t[rows][:, :, None]).reshape(-1, p)
    # z_ji is a signed column permutation of z_ij, so the reversed-pair
    # cross sum is that permutation of the r_ij*r_ji-weighted gram
    cross = g_cross[:, design.reverse_perm] * design.reverse_sign
    return s_row, s_col, cross, diag


def _clip(value: float, name: str, clipped: list) -> float:
    if value < 0.0:
        clipped.append(name)
        return 0.0
    return value


def _report_from_sandwich(method: str, sand: np.ndarray, kind: str) -> VarianceReport:
    clipped: list = []
    if kind == "pim":
        raw_net = 4.0 * float(sand[0, 0])
        return VarianceReport(
            method=method, se2_tc=None, se2_ct=None, cov_tc_ct=None,
            se2_net=_clip(raw_net, "se2_net", clipped),
            clipped=tuple(clipped), raw={"se2_net": raw_net},
        )
    raw_tc = float(sand[0, 0])
    raw_ct = float(sand[1, 1])
    raw_cov = float(sand[0, 1])
    raw_net = raw_tc + raw_ct - 2.0 * raw_cov
    return VarianceReport(
        method=method,
        se2_tc=_clip(raw_tc, "se2_tc", clipped),
        se2_ct=_clip(raw_ct, "se2_ct", clipped),
        cov_tc_ct=raw_cov,
        se2_net=_clip(raw_net, "se2_net", clipped),
        clipped=tuple(clipped),
        raw={"se2_tc": raw_tc, "se2_ct": raw_ct, "cov_tc_ct": raw_cov,
             "se2_net": raw_net},
    )


def _pair_reports(fit: FitResult, methods: Iterable[str]) -> Dict[str, VarianceReport]:
    bad = [m for m in methods if m not in PAIR_METHODS]
    if bad:
        raise ValueError(f"unknown variance method(s) {bad} for pair fits")
    s_row, s_col, cross, diag = _pair_score_pass(fit)
    bread = _inv_sym(fit.gram)
    row_outer = s_row.T @ s_row
    col_outer = s_col.T @ s_col
    reports = {}
    for method in methods:
        if method == "hr":
            middle = diag
        elif method == "cr":
            middle = row_outer
        elif method == "tw":
            middle = row_outer + col_outer - diag
        else:
            middle = (row_outer + col_outer + s_row.T @ s_col + s_col.T @ s_row
                      - cross - diag)
        sand = bread @ middle @ bread
        reports[method] = _report_from_sandwich(method, sand, fit.kind)
    return reports


_LITERAL_SWAP_CACHE: Dict[Tuple[str, int], np.ndarray] = {}


def _literal_perm(adjustment: str, d: int) -> np.ndarray:
    """Column permutation mapping the aligned opposite design to the
    literal indicator attachment (swap which arm each estimand block
    multiplies)."""
    if adjustment == "ancova":
        return np.asarray([1, 0] + list(range(2, 2 + d)), dtype=np.intp)
    return np.asarray(
        [1, 0] + list(range(2 + d, 2 + 2 * d)) + list(range(2, 2 + d)),
        dtype=np.intp,
    )


def _avg_reports(fit: FitResult, methods: Iterable[str],
                 missing_residuals: str = "arm") -> Dict[str, VarianceReport]:
    bad = [m for m in methods if m not in AVG_METHODS]
    if bad:
        raise ValueError(
            f"method(s) {bad} are undefined for per-unit-average fits "
            "(only 'hr' and 'ctw' apply)"
        )
    if fit.adjustment == "none":
        raise ValueError(
            "variance for the unadjusted averaged fit is not defined; "
            "it equals the unadjusted pair fit, use that instead"
        )
    if missing_residuals not in ("arm", "literal"):
        raise ValueError(f"missing_residuals must be 'arm' or 'literal', got {missing_residuals!r}")
    avg = fit.averaged
    beta = fit.coef.beta
    z_own, w_own, z_opp, w_opp = averaged_designs(avg, fit.adjustment, fit.submodel)
    r_own = w_own - z_own @ beta
    if missing_residuals == "arm":
        fitted_opp = z_opp @ beta
    else:
        perm = _literal_perm(fit.adjustment, avg.x_row.shape[1])
        fitted_opp = z_opp[:, perm] @ beta
    r_opp = w_opp - fitted_opp
    bread_own = _inv_sym(z_own.T @ z_own)
    bread_opp = _inv_sym(z_opp.T @ z_opp)
    sand_own = bread_own @ (z_own.T @ (z_own * (r_own ** 2)[:, None])) @ bread_own
    reports = {}
    for method in methods:
        clipped: list = []
        if method == "hr":
            raw_tc = float(sand_own[0, 0])
            raw_ct = float(sand_own[1, 1])
            raw_cov = float(sand_own[0, 1])
        else:
            sand_opp = bread_opp @ (z_opp.T @ (z_opp * (r_opp ** 2)[:, None])) @ bread_opp
            rr = (r_own * r_opp)[:, None]
            cov_a = bread_own @ (z_own.T @ (z_opp * rr)) @ bread_opp
            cov_b = bread_opp @ (z_opp.T @ (z_own * rr)) @ bread_own
            raw_tc = float(sand_own[0, 0] + sand_opp[0, 0])
            raw_ct = float(sand_own[1, 1] + sand_opp[1, 1])
            raw_cov = float(cov_a[0, 1] + cov_b[0, 1])
        raw_net = raw_tc + raw_ct - 2.0 * raw_cov
        reports[method] = VarianceReport(
            method=method,
            se2_tc=_clip(raw_tc, "se2_tc", clipped),
            se2_ct=_clip(raw_ct, "se2_ct", clipped),
            cov_tc_ct=raw_cov,
            se2_net=_clip(raw_net, "se2_net", clipped),
            clipped=tuple(clipped),
            raw={"se2_tc": raw_tc, "se2_ct": raw_ct, "cov_tc_ct": raw_cov,
                 "se2_net": raw_net},
        )
    return reports


def variance_reports(fit: FitResult, methods: Iterable[str] = ("ctw",),
                     missing_residuals: str = "arm") -> Dict[str, VarianceReport]:
    """Variance reports for a fit under one or more methods.

    All requested methods share a single residual pass.  Raises for
    method/family combinations that are undefined (``cr``/``tw`` on
    per-unit-average fits).
    """
    methods = tuple(methods)
    if fit.kind in ("pair", "pim"):
        return _pair_reports(fit, methods)
    return _avg_reports(fit, methods, missing_residuals=missing_residuals)


def ctw_pairs(fit: FitResult) -> VarianceReport:
    """Complete two-way variance report for a pair-regression fit."""
    if fit.kind != "pair":
        raise ValueError(f"ctw_pairs expects a pair-family fit, got {fit.family!r}")
    return _pair_reports(fit, ("ctw",))["ctw"]


def ctw_pim(fit: FitResult) -> VarianceReport:
    """Complete two-way variance report for a probabilistic-index fit.

    The sandwich (1,1) entry estimates the slope variance; the report
    scales it by 4 because the net benefit is twice the slope.
    """
    if fit.kind != "pim":
        raise ValueError(f"ctw_pim expects a pim-family fit, got {fit.family!r}")
    return _pair_reports(fit, ("ctw",))["ctw"]


def ctw_averaged(fit: FitResult, missing_residuals: str = "arm") -> VarianceReport:
    """Complete two-way variance report for a per-unit-average fit.

    ``missing_residuals`` selects how the opposite-orientation fitted
    values are formed: ``"arm"`` (default) applies each coefficient
    block to the units whose average measures that block's estimand;
    ``"literal"`` applies the swapped attachment.
    """
    if fit.kind != "avg":
        raise ValueError(f"ctw_averaged expects an averaged fit, got {fit.family!r}")
    return _avg_reports(fit, ("ctw",), missing_residuals=missing_residuals)["ctw"]


def baseline_variance(fit: FitResult, method: str) -> VarianceReport:
    """HR / CR / TW baseline report (inconsistent benchmarks).

    ``cr`` and ``tw`` are undefined for per-unit-average fits and
    raise; ``hr`` on those fits is the plain per-unit sandwich.
    """
    if method not in ("hr", "cr", "tw"):
        raise ValueError(f"baseline method must be hr/cr/tw, got {method!r}")
    return variance_reports(fit, (method,))[method]


def confidence_interval(est: float, se: float, level: float = 0.95) -> Tuple[float, float]:
    """Normal-quantile confidence interval ``est ± z·se``."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if se < 0:
        raise ValueError(f"standard error must be >= 0, got {se}")
    z = scipy.stats.norm.ppf(0.5 * (1.0 + level))
    return (est - z * se, est + z * se)
