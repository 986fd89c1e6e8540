"""Self-contained correctness suites.

Each suite generates random instances, checks an exact identity or an
independent reference, and reports pass/fail.  The CLI ``validate``
command runs all of them; the test suite reuses them as acceptance
checks.

Suites:

* equivalence -- algebraic identities between estimator families
  (averaged == pair regression without covariates; the
  probabilistic-index net benefit == the pair-regression net benefit).
* enumeration -- exact finite-sample unbiasedness of the unadjusted
  pair estimator under complete randomization, by exhausting all
  assignments.
* propositions -- anti-symmetry identities of the oracle functionals
  (coefficient equality across orientations, covariance = -variance,
  net-benefit variance = 4x marginal, cross-submodel equalities at
  balanced assignment).
* dense reference -- streamed variance estimators against literal
  dense-matrix transcriptions of the defining formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import densecheck
from .contrasts import Contrast, Difference, WinHalfTie
from .data import ObservedDataset, PotentialPopulation
from .estimators import estimate_averaged, estimate_individual, estimate_pim
from .oracle import (enumerate_assignments, neyman_functionals,
                     population_scores, theoretical_gamma, true_contrast_mean)
from .pairs import PairCache
from .registry import fit_estimator, valid_methods
from .variance import variance_reports

__all__ = [
    "SuiteResult",
    "equivalence_suite",
    "enumeration_suite",
    "proposition_suite",
    "dense_reference_suite",
    "run_all_suites",
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] {self.name}: {self.checks} checks"
        if self.detail:
            msg += f" ({self.detail})"
        return msg


class _Checker:
    def __init__(self):
        self.checks = 0
        self.failures: List[str] = []

    def close(self, a: float, b: float, tol: float, what: str,
              relative: bool = False):
        self.checks += 1
        scale = max(abs(a), abs(b), 1e-12) if relative else 1.0
        if not np.isfinite(a) or not np.isfinite(b) or abs(a - b) > tol * scale:
            self.failures.append(f"{what}: {a!r} vs {b!r}")

    def close_vec(self, a, b, tol: float, what: str, relative: bool = False):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        self.checks += 1
        scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-12) \
            if relative else 1.0
        if a.shape != b.shape or not np.all(np.isfinite(a)) \
                or not np.all(np.isfinite(b)) or np.abs(a - b).max() > tol * scale:
            self.failures.append(f"{what}: {a!r} vs {b!r}")

    def result(self, name: str) -> SuiteResult:
        detail = "; ".join(self.failures[:3])
        if len(self.failures) > 3:
            detail += f"; +{len(self.failures) - 3} more"
        return SuiteResult(name=name, passed=not self.failures,
                           checks=self.checks, detail=detail)


def _random_treat(rng: np.random.Generator, n: int, min_arm: int = 2) -> np.ndarray:
    """Random assignment with at least ``min_arm`` units per arm."""
    while True:
        treat = (rng.random(n) < rng.uniform(0.3, 0.7)).astype(int)
        s = treat.sum()
        if min_arm <= s <= n - min_arm:
            return treat


def random_dataset(rng: np.random.Generator, n_range=(6, 40),
                   d_choices=(0, 1, 3), min_arm: int = 2
                   ) -> Tuple[ObservedDataset, Contrast]:
    """A random small dataset with a random anti-symmetric contrast.

    ``min_arm`` must exceed the covariate count for the interacted
    averaged design to have full rank.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    d = int(rng.choice(d_choices))
    if rng.random() < 0.5:
        spec: Contrast = WinHalfTie()
        y = rng.integers(0, 5, size=n).astype(float)   # ties occur
    else:
        spec = Difference()
        y = rng.normal(size=n)
    x = rng.normal(size=(n, d)) if d else None
    ds = ObservedDataset(treat=_random_treat(rng, n, min_arm), y=y, x=x)
    return ds, spec


def random_population(rng: np.random.Generator, n_range=(10, 24),
                      d_choices=(1, 2, 3), spec: Optional[Contrast] = None
                      ) -> Tuple[PotentialPopulation, Contrast]:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    d = int(rng.choice(d_choices))
    if spec is None:
        spec = WinHalfTie() if rng.random() < 0.5 else Difference()
    if isinstance(spec, WinHalfTie):
        y1 = rng.integers(0, 5, size=n).astype(float)
        y0 = rng.integers(0, 5, size=n).astype(float)
    else:
        y1 = rng.normal(size=n) + 0.5
        y0 = rng.normal(size=n)
    x = rng.normal(size=(n, d))
    return PotentialPopulation(y1, y0, x=x), spec


def equivalence_suite(n_datasets: int = 100, seed: int = 902101) -> SuiteResult:
    """Averaged == pair regression; pim net benefit == pair net benefit."""
    rng = np.random.default_rng(seed)
    chk = _Checker()
    for k in range(n_datasets):
        ds, spec = random_dataset(rng)
        cache = PairCache(ds, spec)
        base = estimate_individual(ds, spec, "none", cache=cache)
        for submodel in (1, 2):
            avg = estimate_averaged(ds, spec, "none", submodel, cache=cache)
            chk.close(avg.contrast_tc, base.contrast_tc, 1e-10,
                      f"ds{k} avg{submodel} tc")
            chk.close(avg.contrast_ct, base.contrast_ct, 1e-10,
                      f"ds{k} avg{submodel} ct")
        pim = estimate_pim(ds, spec, "pim", cache=cache)
        chk.close(pim.net_benefit, base.net_benefit, 1e-10, f"ds{k} pim net")
    return chk.result("equivalence")


def enumeration_suite(n_populations: int = 20, seed: int = 902102) -> SuiteResult:
    """Exact unbiasedness of the unadjusted pair estimator (n=8, 4 treated)."""
    rng = np.random.default_rng(seed)
    chk = _Checker()
    for k in range(n_populations):
        pop, spec = random_population(rng, n_range=(8, 8), d_choices=(1,))

        def stat(ds):
            return estimate_individual(ds, spec, "none").contrast_tc

        result = enumerate_assignments(pop, n_treated=4, statistic=stat)
        chk.close(result.mean, true_contrast_mean(pop, spec, arm=1), 1e-12,
                  f"pop{k} enumeration mean")
    return chk.result("enumeration")


def proposition_suite(n_populations: int = 12, seed: int = 902103) -> SuiteResult:
    """Anti-symmetry identities of the oracle functionals, tol 1e-8."""
    rng = np.random.default_rng(seed)
    chk = _Checker()
    tol = 1e-8
    for k in range(n_populations):
        pop, spec = random_population(rng)
        pi = float(rng.uniform(0.3, 0.7))
        # (i) interacted pair coefficients agree across orientations
        g = theoretical_gamma(pop, spec, "pair_interacted", pi)
        chk.close_vec(g["tc"], g["ct"], tol, f"pop{k} pair gamma", relative=True)
        # (ii)/(iii): variance equality across orientations, cov = -var,
        # and net variance = 4x marginal, for all three pair score kinds
        for kind in ("centered", "pair_interacted", "pair_ancova"):
            scores = population_scores(pop, spec, kind, pi)
            f_tc = neyman_functionals(scores, pi, "tc")
            f_ct = neyman_functionals(scores, pi, "ct")
            chk.close(f_tc.var_leading, f_ct.var_leading, tol,
                      f"pop{k} {kind} V orient", relative=True)
            chk.close(f_tc.cov_leading, -f_tc.var_leading, tol,
                      f"pop{k} {kind} CV=-V", relative=True)
            chk.close(f_tc.net_var_leading, 4.0 * f_tc.var_leading, tol,
                      f"pop{k} {kind} net=4V", relative=True)
        # cross-submodel identities for the averaged family
        g_row = theoretical_gamma(pop, spec, "avg_interacted_row", pi)
        g_col = theoretical_gamma(pop, spec, "avg_interacted_col", pi)
        chk.close_vec(g_row["tc"], g_col["ct"], tol,
                      f"pop{k} avg gamma cross", relative=True)
        s_row = population_scores(pop, spec, "avg_interacted_row", pi)
        s_col = population_scores(pop, spec, "avg_interacted_col", pi)
        f_row = neyman_functionals(s_row, pi, "tc")
        f_col = neyman_functionals(s_col, pi, "ct")
        chk.close(f_row.var_leading, f_col.var_leading, tol,
                  f"pop{k} avg V cross", relative=True)
        chk.close(f_row.cov_leading, f_col.cov_leading, tol,
                  f"pop{k} avg CV cross", relative=True)
        chk.close(neyman_functionals(s_row, pi, "tc").net_var_leading,
                  neyman_functionals(s_col, pi, "tc").net_var_leading, tol,
                  f"pop{k} avg net cross", relative=True)
        # balanced-assignment ANCOVA equalities
        ga_row = theoretical_gamma(pop, spec, "avg_ancova_row", 0.5)
        ga_col = theoretical_gamma(pop, spec, "avg_ancova_col", 0.5)
        chk.close_vec(ga_row["common"], ga_col["common"], tol,
                      f"pop{k} acv gamma half", relative=True)
        sa_row = population_scores(pop, spec, "avg_ancova_row", 0.5)
        sa_col = population_scores(pop, spec, "avg_ancova_col", 0.5)
        chk.close(neyman_functionals(sa_row, 0.5, "tc").var_leading,
                  neyman_functionals(sa_col, 0.5, "ct").var_leading, tol,
                  f"pop{k} acv V half", relative=True)
        chk.close(neyman_functionals(sa_row, 0.5, "tc").cov_leading,
                  neyman_functionals(sa_col, 0.5, "tc").cov_leading, tol,
                  f"pop{k} acv CV half", relative=True)
    return chk.result("propositions")


_DENSE_FAMILIES = ("pairs", "pairs_ancova", "pairs_interacted",
                   "pim", "pim_ancova", "pim_interacted", "pim_full")
_DENSE_AVG = (("ancova", 1), ("ancova", 2), ("interacted", 1), ("interacted", 2))


def dense_reference_suite(n_datasets: int = 50, seed: int = 902104) -> SuiteResult:
    """Streamed estimates and variances vs dense-matrix references, 1e-8."""
    rng = np.random.default_rng(seed)
    chk = _Checker()
    tol = 1e-8
    for k in range(n_datasets):
        ds, spec = random_dataset(rng, n_range=(9, 12), d_choices=(1, 2),
                                  min_arm=4)
        cache = PairCache(ds, spec)
        for family in _DENSE_FAMILIES:
            fit = fit_estimator(family, ds, spec, cache=cache)
            ref_beta = densecheck.dense_pair_fit(ds, spec, family)
            chk.close_vec(fit.coef.beta, ref_beta, tol,
                          f"ds{k} {family} beta", relative=True)
            reports = variance_reports(fit, ("hr", "cr", "tw", "ctw"))
            for method, rep in reports.items():
                sand = densecheck.dense_pair_sandwich(ds, spec, family, method)
                if fit.kind == "pim":
                    chk.close(rep.raw["se2_net"], 4.0 * sand[0, 0], tol,
                              f"ds{k} {family} {method} net", relative=True)
                else:
                    chk.close(rep.raw["se2_tc"], sand[0, 0], tol,
                              f"ds{k} {family} {method} tc", relative=True)
                    chk.close(rep.raw["se2_ct"], sand[1, 1], tol,
                              f"ds{k} {family} {method} ct", relative=True)
                    chk.close(rep.raw["cov_tc_ct"], sand[0, 1], tol,
                              f"ds{k} {family} {method} cov", relative=True)
        for adjustment, submodel in _DENSE_AVG:
            fit = estimate_averaged(ds, spec, adjustment, submodel, cache=cache)
            ref_beta = densecheck.dense_avg_fit(ds, spec, adjustment, submodel)
            chk.close_vec(fit.coef.beta, ref_beta, tol,
                          f"ds{k} avg{submodel} {adjustment} beta", relative=True)
            for convention in ("arm", "literal"):
                reports = variance_reports(fit, ("hr", "ctw"),
                                           missing_residuals=convention)
                for method, rep in reports.items():
                    ref = densecheck.dense_avg_sandwich(
                        ds, spec, adjustment, submodel, method,
                        missing_residuals=convention)
                    chk.close(rep.raw["se2_tc"], ref[0], tol,
                              f"ds{k} avg{submodel} {adjustment} {method} tc "
                              f"({convention})", relative=True)
                    chk.close(rep.raw["se2_ct"], ref[1], tol,
                              f"ds{k} avg{submodel} {adjustment} {method} ct "
                              f"({convention})", relative=True)
                    chk.close(rep.raw["cov_tc_ct"], ref[2], tol,
                              f"ds{k} avg{submodel} {adjustment} {method} cov "
                              f"({convention})", relative=True)
    return chk.result("dense-reference")


def run_all_suites(log: Callable[[str], None] = print) -> List[SuiteResult]:
    """Run every suite, log one line each, return the results."""
    results = [
        equivalence_suite(),
        enumeration_suite(),
        proposition_suite(),
        dense_reference_suite(),
    ]
    for res in results:
        log(res.line())
    return results
