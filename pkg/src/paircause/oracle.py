"""Finite-population ground truth for pairwise-contrast estimands.

Everything here treats the potential outcomes and covariates as fixed
and known: the target estimands (pair averages of contrasts across
counterfactual arms), the centered per-unit scores and their
theoretical covariate-regression residuals, the variance/covariance
functionals that drive the estimators' randomization distributions,
and exact randomization distributions by exhaustive enumeration of
complete-randomization assignments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .contrasts import Contrast
from .data import ObservedDataset, PotentialPopulation
from .lsq import RankDeficiencyError

__all__ = [
    "pairwise_potential",
    "true_contrast_mean",
    "true_net_benefit",
    "ScorePairs",
    "population_scores",
    "theoretical_gamma",
    "NeymanFunctionals",
    "neyman_functionals",
    "EnumerationResult",
    "enumerate_assignments",
    "SCORE_KINDS",
]

SCORE_KINDS = (
    "centered",
    "pair_ancova",
    "pair_interacted",
    "avg_ancova_row",
    "avg_ancova_col",
    "avg_interacted_row",
    "avg_interacted_col",
)


def pairwise_potential(pop: PotentialPopulation, spec: Contrast,
                       left_arm: int, right_arm: int) -> np.ndarray:
    """Matrix of w(y_i(left_arm), y_j(right_arm)) over all (i, j)."""
    return spec.matrix(pop.potential(left_arm), pop.potential(right_arm))


def true_contrast_mean(pop: PotentialPopulation, spec: Contrast,
                       arm: int = 1, form: str = "u") -> float:
    """Population mean contrast of arm ``arm`` against the other arm.

    ``form="u"`` averages over the n(n-1) distinct ordered pairs;
    ``form="v"`` includes the n same-unit diagonal terms and divides
    by n².  The two differ by O(1/n).
    """
    if form not in ("u", "v"):
        raise ValueError(f"form must be 'u' or 'v', got {form!r}")
    m = pairwise_potential(pop, spec, arm, 1 - arm)
    n = pop.n
    if form == "v":
        return float(m.sum() / (n * n))
    return float((m.sum() - np.trace(m)) / (n * (n - 1)))


def true_net_benefit(pop: PotentialPopulation, spec: Contrast,
                     arm: int = 1, form: str = "u") -> float:
    """Net benefit of ``arm``: its contrast mean minus the reverse."""
    return (true_contrast_mean(pop, spec, arm, form)
            - true_contrast_mean(pop, spec, 1 - arm, form))


@dataclass
class ScorePairs:
    """Centered per-unit row/col scores for both contrast orientations.

    ``row_tc[i]`` is unit i's centered mean contrast against all
    others with i's outcome taken from arm 1 (the treated-vs-control
    orientation); ``col_tc[i]`` is the centered mean of others' arm-1
    outcomes against unit i's arm-0 outcome.  ``*_ct`` hold the
    reverse orientation.  Each vector sums to zero by construction.
    """

    row_tc: np.ndarray
    col_tc: np.ndarray
    row_ct: np.ndarray
    col_ct: np.ndarray
    kind: str = "centered"

    def orientation(self, orient: str) -> Tuple[np.ndarray, np.ndarray]:
        if orient == "tc":
            return self.row_tc, self.col_tc
        if orient == "ct":
            return self.row_ct, self.col_ct
        raise ValueError(f"orientation must be 'tc' or 'ct', got {orient!r}")


def _centered_means(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    n = m.shape[0]
    diag = np.diag(m)
    row = (m.sum(axis=1) - diag) / (n - 1)
    col = (m.sum(axis=0) - diag) / (n - 1)
    grand = (m.sum() - diag.sum()) / (n * (n - 1))
    return row - grand, col - grand, grand


def _unit_x_averages(pop: PotentialPopulation) -> np.ndarray:
    """Per-unit mean covariate difference against all other units."""
    n = pop.n
    return (pop.x - pop.x.mean(axis=0)) * (n / (n - 1))


def _solve_gram(gram: np.ndarray, rhs: np.ndarray, labels) -> np.ndarray:
    eig = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    if eig[-1] <= 0 or eig[0] / eig[-1] < 1e-12:
        raise RankDeficiencyError(labels, 0.0 if eig[-1] <= 0 else eig[0] / eig[-1])
    return np.linalg.solve(gram, rhs)


def _pair_gamma(pop: PotentialPopulation, m: np.ndarray) -> np.ndarray:
    """Least-squares slope of the pair response m[i, j] on x_i - x_j."""
    x = pop.x
    n = pop.n
    sx = x.sum(axis=0)
    sxx = 2.0 * n * (x.T @ x) - 2.0 * np.outer(sx, sx)
    diag = np.diag(m)
    row = m.sum(axis=1) - diag
    col = m.sum(axis=0) - diag
    sxw = x.T @ (row - col)
    labels = [f"x{k+1}" for k in range(x.shape[1])]
    return _solve_gram(sxx, sxw, labels)


def _unit_gamma(x_avg: np.ndarray, response: np.ndarray) -> np.ndarray:
    labels = [f"x{k+1}" for k in range(x_avg.shape[1])]
    return _solve_gram(x_avg.T @ x_avg, x_avg.T @ response, labels)


def theoretical_gamma(pop: PotentialPopulation, spec: Contrast, kind: str,
                      pi_treated: float = 0.5) -> Dict[str, np.ndarray]:
    """Finite-population covariate coefficients targeted by each family.

    Returns ``{"tc": ..., "ct": ...}`` for interacted kinds (one slope
    per orientation) and ``{"common": ...}`` for ANCOVA kinds (a
    single pooled slope).
    """
    if kind not in SCORE_KINDS or kind == "centered":
        raise ValueError(f"kind must be a covariate-adjusted score kind, got {kind!r}")
    if pop.n_covariates < 1:
        raise ValueError("population has no covariates to regress on")
    if not 0.0 < pi_treated < 1.0:
        raise ValueError(f"pi_treated must be in (0,1), got {pi_treated}")
    pi1, pi0 = pi_treated, 1.0 - pi_treated
    m10 = pairwise_potential(pop, spec, 1, 0)
    m01 = pairwise_potential(pop, spec, 0, 1)
    if kind == "pair_interacted":
        return {"tc": _pair_gamma(pop, m10), "ct": _pair_gamma(pop, m01)}
    if kind == "pair_ancova":
        # pi-weighted target over all four arm combinations, including
        # the same-arm contrasts that estimators never touch
        m11 = pairwise_potential(pop, spec, 1, 1)
        m00 = pairwise_potential(pop, spec, 0, 0)
        target = pi1 * pi1 * m11 + pi1 * pi0 * m10 + pi0 * pi1 * m01 + pi0 * pi0 * m00
        return {"common": _pair_gamma(pop, target)}
    eps_row_tc, eps_col_tc, _ = _centered_means(m10)
    eps_row_ct, eps_col_ct, _ = _centered_means(m01)
    xr = _unit_x_averages(pop)
    xc = -xr
    if kind in ("avg_interacted_row", "avg_ancova_row"):
        g_tc = _unit_gamma(xr, eps_row_tc)
        g_ct = _unit_gamma(xr, eps_row_ct)
    else:
        g_tc = _unit_gamma(xc, eps_col_tc)
        g_ct = _unit_gamma(xc, eps_col_ct)
    if kind.startswith("avg_interacted"):
        return {"tc": g_tc, "ct": g_ct}
    return {"common": pi1 * g_tc + pi0 * g_ct}


def population_scores(pop: PotentialPopulation, spec: Contrast,
                      kind: str = "centered",
                      pi_treated: float = 0.5) -> ScorePairs:
    """Centered row/col scores, optionally covariate-residualized.

    ``kind`` selects which theoretical regression's residuals to form:
    ``"centered"`` is the raw centered score; the other kinds subtract
    x-average times the matching :func:`theoretical_gamma`.
    """
    if kind not in SCORE_KINDS:
        raise ValueError(f"kind must be one of {SCORE_KINDS}, got {kind!r}")
    m10 = pairwise_potential(pop, spec, 1, 0)
    m01 = pairwise_potential(pop, spec, 0, 1)
    eps_row_tc, eps_col_tc, _ = _centered_means(m10)
    eps_row_ct, eps_col_ct, _ = _centered_means(m01)
    if kind == "centered":
        return ScorePairs(eps_row_tc, eps_col_tc, eps_row_ct, eps_col_ct, kind)
    gamma = theoretical_gamma(pop, spec, kind, pi_treated)
    g_tc = gamma.get("tc", gamma.get("common"))
    g_ct = gamma.get("ct", gamma.get("common"))
    xr = _unit_x_averages(pop)
    xc = -xr
    return ScorePairs(
        row_tc=eps_row_tc - xr @ g_tc,
        col_tc=eps_col_tc - xc @ g_tc,
        row_ct=eps_row_ct - xr @ g_ct,
        col_ct=eps_col_ct - xc @ g_ct,
        kind=kind,
    )


@dataclass
class NeymanFunctionals:
    """Finite-population variance functionals of a set of scores.

    For the requested orientation, ``var_uncentered`` is the
    inverse-proportion-weighted sum of squared row and col scores and
    ``var_leading`` subtracts the unit-total centering term; it is the
    leading term of the estimator's randomization variance (times n).
    ``cov_leading`` couples the two orientations, and the ``net_*``
    fields are the analogous functionals of the net-benefit scores.
    """

    orientation: str
    pi_treated: float
    var_uncentered: float
    var_leading: float
    cov_leading: float
    net_var_uncentered: float
    net_var_leading: float


def neyman_functionals(scores: ScorePairs, pi_treated: float,
                       orientation: str = "tc") -> NeymanFunctionals:
    """Evaluate the variance/covariance functionals of centered scores."""
    if not 0.0 < pi_treated < 1.0:
        raise ValueError(f"pi_treated must be in (0,1), got {pi_treated}")
    row_a, col_a = scores.orientation(orientation)
    other = "ct" if orientation == "tc" else "tc"
    row_b, col_b = scores.orientation(other)
    n = row_a.shape[0]
    pi_a = pi_treated if orientation == "tc" else 1.0 - pi_treated
    pi_b = 1.0 - pi_a
    vc = (row_a @ row_a) / (pi_a * n) + (col_a @ col_a) / (pi_b * n)
    v = vc - ((row_a + col_a) ** 2).sum() / n
    cv = ((row_a @ col_b) / (pi_a * n) + (row_b @ col_a) / (pi_b * n)
          - ((row_a + col_a) * (row_b + col_b)).sum() / n)
    # net-benefit scores: units in arm a carry row_a - col_b, units in
    # the other arm carry col_a - row_b; the centering term applies to
    # their per-unit sum (this is also var + var - 2 cov of the
    # marginal functionals, and makes the net variance exactly 4x the
    # marginal one under anti-symmetric contrasts)
    net_a = row_a - col_b
    net_b = col_a - row_b
    vc_net = (net_a @ net_a) / (pi_a * n) + (net_b @ net_b) / (pi_b * n)
    v_net = vc_net - ((net_a + net_b) ** 2).sum() / n
    return NeymanFunctionals(
        orientation=orientation, pi_treated=pi_treated,
        var_uncentered=float(vc), var_leading=float(v), cov_leading=float(cv),
        net_var_uncentered=float(vc_net), net_var_leading=float(v_net),
    )


@dataclass
class EnumerationResult:
    """Exact randomization distribution of a statistic.

    ``values[k]`` is the statistic under the k-th assignment (all
    equally likely); ``mean`` and ``variance`` are exact moments over
    the assignment distribution, accumulated with compensated sums.
    """

    values: np.ndarray
    n_assignments: int
    mean: float
    variance: float

    @property
    def probability(self) -> float:
        return 1.0 / self.n_assignments

    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct statistic values with their exact probabilities."""
        vals, counts = np.unique(self.values, return_counts=True)
        return vals, counts / self.n_assignments


def enumerate_assignments(pop: PotentialPopulation, n_treated: int,
                          statistic: Callable[[ObservedDataset], float],
                          max_assignments: int = 1_000_000) -> EnumerationResult:
    """Evaluate a statistic under every complete-randomization assignment.

    ``statistic`` maps an :class:`ObservedDataset` to a float.  Guarded
    by ``max_assignments`` on C(n, n_treated).
    """
    n = pop.n
    if not 1 <= n_treated <= n - 1:
        raise ValueError(f"n_treated must be in [1, {n - 1}], got {n_treated}")
    total = math.comb(n, n_treated)
    if total > max_assignments:
        raise ValueError(
            f"C({n},{n_treated}) = {total} assignments exceeds the "
            f"guard of {max_assignments}"
        )
    values = np.empty(total)
    treat = np.zeros(n, dtype=np.int8)
    for k, chosen in enumerate(itertools.combinations(range(n), n_treated)):
        treat[:] = 0
        treat[list(chosen)] = 1
        values[k] = statistic(pop.reveal(treat))
    mean = math.fsum(values) / total
    variance = math.fsum((v - mean) ** 2 for v in values) / total
    return EnumerationResult(values=values, n_assignments=total,
                             mean=mean, variance=variance)
