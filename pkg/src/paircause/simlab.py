"""Monte Carlo harness: data-generating processes, assignment, replication.

Six study settings are built in.  Studies I and III share a univariate
continuous-outcome process (III hands the estimators unrelated
covariates); studies II and IV share a bivariate ordinal + continuous
composite process (IV hands the estimators noise-corrupted
covariates); V-I and V-II rerun I and II with the full set of variance
methods to compare their calibration.

Replicates are independent: each derives its own counter-based RNG
streams from (master seed, replicate index), so results are identical
for any worker count and any execution order.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.special
import scipy.stats
from threadpoolctl import threadpool_limits

from .contrasts import Contrast, WeightedAggregate, WinHalfTie, WinStrict
from .data import ObservedDataset, PotentialPopulation
from .oracle import true_contrast_mean
from .pairs import PairCache, per_unit_averages
from .registry import TABLE_ESTIMATORS, estimands_of, fit_estimator, valid_methods
from .rngstreams import stream
from .variance import variance_reports

__all__ = [
    "STUDIES",
    "AssignmentSpec",
    "ScenarioSpec",
    "MonteCarloSummary",
    "study_contrast",
    "generate_population",
    "assign",
    "run_monte_carlo",
]

STUDIES = ("I", "II", "III", "IV", "V-I", "V-II")

_BASE_STUDY = {"I": "I", "II": "II", "III": "III", "IV": "IV",
               "V-I": "I", "V-II": "II"}


def study_contrast(study: str) -> Contrast:
    """The contrast each study analyzes."""
    base = _BASE_STUDY[_check_study(study)]
    if base in ("I", "III"):
        return WinStrict()
    return WeightedAggregate(weights=(0.5, 0.5),
                             components=(WinHalfTie(), WinStrict()))


def _check_study(study: str) -> str:
    if study not in STUDIES:
        raise ValueError(f"study must be one of {STUDIES}, got {study!r}")
    return study


def _centered_gamma(rng: np.random.Generator, n: int) -> np.ndarray:
    # Gamma(1,1) shifted to mean 0 (variance 1, right-skewed)
    return rng.gamma(shape=1.0, scale=1.0, size=n) - 1.0


def _univariate_population(n: int, rng: np.random.Generator,
                           unrelated_covariates: bool) -> PotentialPopulation:
    x1 = rng.integers(0, 2, size=n).astype(float)
    x2 = rng.normal(size=n)
    noise_treated = _centered_gamma(rng, n)
    noise_control = _centered_gamma(rng, n)
    y1 = 0.4 + x1 + np.sin(x2) + noise_treated
    y0 = x1 + np.cos(x2) + noise_control
    true_x = np.column_stack([x1, x2])
    if unrelated_covariates:
        analysis_x = rng.normal(size=(n, 2))
        return PotentialPopulation(y1, y0, x=analysis_x, oracle_x=true_x)
    return PotentialPopulation(y1, y0, x=true_x)


def _composite_population(n: int, rng: np.random.Generator,
                          noisy_covariates: bool) -> PotentialPopulation:
    x1 = rng.integers(0, 2, size=n).astype(float)
    x_rest = rng.normal(size=(n, 3))
    x = np.column_stack([x1, x_rest])
    frailty = rng.gamma(shape=1.0, scale=1.0, size=n)
    linpred = x1 + np.sin(x[:, 1]) + x[:, 2] + x[:, 3] + frailty
    # cumulative-logit cutoffs per arm; one shared latent uniform per
    # unit drives the inverse-CDF draw in both arms
    latent = rng.random(size=n)

    def ordinal(cut1, cut2):
        p_le_1 = scipy.special.expit(cut1 + linpred)
        p_le_2 = scipy.special.expit(cut2 + linpred)
        return 1.0 + (latent > p_le_1) + (latent > p_le_2)

    ord_treated = ordinal(0.0, 2.0)
    ord_control = ordinal(0.0, 1.5)
    noise = _centered_gamma(rng, n)
    cont_treated = 0.4 + x1 + np.sin(x[:, 1]) + x[:, 2] + x[:, 3] + frailty + noise
    cont_control = x1 + np.cos(x[:, 1]) + x[:, 2] + x[:, 3] + frailty + noise
    y1 = np.column_stack([ord_treated, cont_treated])
    y0 = np.column_stack([ord_control, cont_control])
    if noisy_covariates:
        analysis_x = x + rng.normal(scale=5.0, size=x.shape)
        return PotentialPopulation(y1, y0, x=analysis_x, oracle_x=x)
    return PotentialPopulation(y1, y0, x=x)


def generate_population(study: str, n: int, rng: np.random.Generator) -> PotentialPopulation:
    """Draw one finite population for a study setting."""
    base = _BASE_STUDY[_check_study(study)]
    if base == "I":
        return _univariate_population(n, rng, unrelated_covariates=False)
    if base == "III":
        return _univariate_population(n, rng, unrelated_covariates=True)
    if base == "II":
        return _composite_population(n, rng, noisy_covariates=False)
    return _composite_population(n, rng, noisy_covariates=True)


@dataclass(frozen=True)
class AssignmentSpec:
    """Treatment assignment mechanism.

    ``bernoulli``: independent arm draws with probability ``p``
    (redrawn, with a count, in the measure-zero event of an empty
    arm).  ``complete``: exactly ``n_treated`` units treated, uniform
    over subsets.
    """

    kind: str
    p: Optional[float] = None
    n_treated: Optional[int] = None

    def __post_init__(self):
        if self.kind == "bernoulli":
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ValueError(f"bernoulli assignment needs p in (0,1), got {self.p}")
        elif self.kind == "complete":
            if self.n_treated is None or self.n_treated < 1:
                raise ValueError("complete assignment needs n_treated >= 1")
        else:
            raise ValueError(f"assignment kind must be bernoulli/complete, got {self.kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "AssignmentSpec":
        return cls(kind=d["kind"], p=d.get("p"), n_treated=d.get("n_treated"))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.p is not None:
            out["p"] = self.p
        if self.n_treated is not None:
            out["n_treated"] = self.n_treated
        return out


def assign(pop: PotentialPopulation, mechanism: AssignmentSpec,
           rng: np.random.Generator) -> Tuple[ObservedDataset, int]:
    """Assign treatment and reveal observed outcomes.

    Returns the observed dataset and the number of rejected empty-arm
    Bernoulli draws (always 0 for complete randomization).
    """
    n = pop.n
    redraws = 0
    if mechanism.kind == "complete":
        if mechanism.n_treated > n - 1:
            raise ValueError(f"n_treated={mechanism.n_treated} leaves control arm empty")
        treat = np.zeros(n, dtype=np.int8)
        order = rng.permutation(n)
        treat[order[: mechanism.n_treated]] = 1
    else:
        while True:
            treat = (rng.random(n) < mechanism.p).astype(np.int8)
            s = int(treat.sum())
            if 0 < s < n:
                break
            redraws += 1
    return pop.reveal(treat), redraws


@dataclass(frozen=True)
class ScenarioSpec:
    """One Monte Carlo run: study, size, replication and analysis plan."""

    study: str
    n_units: int
    replicates: int
    seed: int
    assignment: AssignmentSpec
    estimators: Tuple[str, ...] = TABLE_ESTIMATORS
    variance_methods: Tuple[str, ...] = ("ctw",)
    ci_level: float = 0.95
    keep_replicates: bool = False

    def __post_init__(self):
        _check_study(self.study)
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.n_units < 10:
            raise ValueError(f"n_units must be >= 10, got {self.n_units}")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"ci_level must be in (0,1), got {self.ci_level}")
        if self.assignment.kind == "complete" and self.assignment.n_treated > self.n_units - 1:
            raise ValueError("n_treated must leave both arms occupied")
        from .registry import ESTIMATORS
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValueError(f"unknown estimator(s) {unknown}")
        if not self.estimators:
            raise ValueError("need at least one estimator")
        bad = [m for m in self.variance_methods if m not in ("hr", "cr", "tw", "ctw")]
        if bad:
            raise ValueError(f"unknown variance method(s) {bad}")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "variance_methods", tuple(self.variance_methods))

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        assignment = d.get("assignment", {"kind": "bernoulli", "p": 0.5})
        return cls(
            study=d["study"],
            n_units=int(d["n_units"]),
            replicates=int(d["replicates"]),
            seed=int(d.get("seed", 0)),
            assignment=AssignmentSpec.from_dict(assignment),
            estimators=tuple(d.get("estimators", TABLE_ESTIMATORS)),
            variance_methods=tuple(d.get("variance_methods", ("ctw",))),
            ci_level=float(d.get("ci_level", 0.95)),
            keep_replicates=bool(d.get("keep_replicates", False)),
        )

    def to_dict(self) -> dict:
        return {
            "study": self.study, "n_units": self.n_units,
            "replicates": self.replicates, "seed": self.seed,
            "assignment": self.assignment.to_dict(),
            "estimators": list(self.estimators),
            "variance_methods": list(self.variance_methods),
            "ci_level": self.ci_level,
            "keep_replicates": self.keep_replicates,
        }

    def rows(self) -> List[Tuple[str, str]]:
        """(estimand, estimator) rows this scenario reports, in order."""
        out = []
        for est in self.estimators:
            for estimand in estimands_of(est):
                out.append((estimand, est))
        return out


def _replicate_batch(scenario: ScenarioSpec, indices: Sequence[int]):
    """Run a batch of replicates; returns per-replicate arrays.

    BLAS threading is pinned to 1 here: the per-replicate matrix ops
    are too small to gain from it, worker processes already use every
    core, and a fixed reduction order keeps results identical across
    worker counts.
    """
    with threadpool_limits(limits=1):
        return _replicate_batch_inner(scenario, indices)


def _replicate_batch_inner(scenario: ScenarioSpec, indices: Sequence[int]):
    spec = study_contrast(scenario.study)
    rows = scenario.rows()
    methods = scenario.variance_methods
    needs_avg = any(e.startswith("avg") for e in scenario.estimators)
    out = []
    for rep in indices:
        pop = generate_population(scenario.study, scenario.n_units,
                                  stream(scenario.seed, "population", rep))
        truth_tc = true_contrast_mean(pop, spec, arm=1)
        truth_ct = true_contrast_mean(pop, spec, arm=0)
        truths = {"contrast_tc": truth_tc, "contrast_ct": truth_ct,
                  "net_benefit": truth_tc - truth_ct}
        ds, redraws = assign(pop, scenario.assignment,
                             stream(scenario.seed, "assignment", rep))
        cache = PairCache(ds, spec)
        averaged = per_unit_averages(ds, spec, cache=cache) if needs_avg else None
        estimates = np.full(len(rows), np.nan)
        ses = np.full((len(rows), len(methods)), np.nan)
        failures = []
        fits: Dict[str, object] = {}
        for name in scenario.estimators:
            try:
                fit = fit_estimator(name, ds, spec, cache=cache, averaged=averaged)
                wanted = [m for m in methods if m in valid_methods(name)]
                reports = variance_reports(fit, wanted) if wanted else {}
                fits[name] = (fit, reports)
            except Exception as exc:  # recorded, not raised: one bad draw
                failures.append((rep, name, f"{type(exc).__name__}: {exc}"))
                fits[name] = None
        for r, (estimand, name) in enumerate(rows):
            entry = fits[name]
            if entry is None:
                continue
            fit, reports = entry
            estimates[r] = fit.estimates()[estimand]
            for mi, m in enumerate(methods):
                if m in reports:
                    se2 = reports[m].se2(estimand)
                    if se2 is not None:
                        ses[r, mi] = np.sqrt(se2)
        truth_arr = np.array([truths[e] for e, _ in rows])
        out.append((rep, estimates, ses, truth_arr, redraws, failures))
    return out


@dataclass
class MonteCarloSummary:
    """Aggregated Monte Carlo results.

    One row per (estimand, estimator) with bias and empirical SE over
    replicates, plus average estimated SE and empirical coverage per
    variance method.  Coverage is against each replicate's own
    finite-population truth.
    """

    scenario: ScenarioSpec
    row_keys: List[Tuple[str, str]]
    bias: np.ndarray                 # (rows,)
    ese: np.ndarray                  # (rows,)
    truth_mean: np.ndarray           # (rows,)
    ase: np.ndarray                  # (rows, methods)
    ecp: np.ndarray                  # (rows, methods)
    failure_count: int
    failures: List[Tuple[int, str, str]]
    redraw_count: int
    wall_time_s: float
    replicate_estimates: Optional[np.ndarray] = None   # (reps, rows)
    replicate_ses: Optional[np.ndarray] = None         # (reps, rows, methods)
    replicate_truths: Optional[np.ndarray] = None      # (reps, rows)

    @property
    def methods(self) -> Tuple[str, ...]:
        return self.scenario.variance_methods

    def _row_index(self, estimand: str, estimator: str) -> int:
        try:
            return self.row_keys.index((estimand, estimator))
        except ValueError:
            raise KeyError(f"no row for estimand={estimand!r}, estimator={estimator!r}")

    def cell(self, estimand: str, estimator: str, method: Optional[str] = None) -> dict:
        """One summary row (or one method's calibration entries)."""
        r = self._row_index(estimand, estimator)
        out = {"bias": float(self.bias[r]), "ese": float(self.ese[r]),
               "truth_mean": float(self.truth_mean[r])}
        if method is not None:
            mi = self.methods.index(method)
            out["ase"] = float(self.ase[r, mi])
            out["ecp"] = float(self.ecp[r, mi])
        return out

    def to_dict(self) -> dict:
        rows = []
        for r, (estimand, estimator) in enumerate(self.row_keys):
            row = {
                "estimand": estimand,
                "estimator": estimator,
                "truth_mean": float(self.truth_mean[r]),
                "bias": float(self.bias[r]),
                "ese": float(self.ese[r]),
                "methods": {},
            }
            for mi, m in enumerate(self.methods):
                if np.isfinite(self.ase[r, mi]):
                    row["methods"][m] = {"ase": float(self.ase[r, mi]),
                                         "ecp": float(self.ecp[r, mi])}
            rows.append(row)
        return {
            "scenario": self.scenario.to_dict(),
            "rows": rows,
            "replicates": self.scenario.replicates,
            "failure_count": self.failure_count,
            "failures": [list(f) for f in self.failures[:100]],
            "assignment_redraws": self.redraw_count,
            "wall_time_s": self.wall_time_s,
        }

    def to_table(self) -> str:
        """Delimited summary table (one line per estimand × estimator)."""
        cols = ["estimand", "estimator", "bias", "ese"]
        for m in self.methods:
            cols += [f"ase_{m}", f"ecp_{m}"]
        lines = [",".join(cols)]
        for r, (estimand, estimator) in enumerate(self.row_keys):
            vals = [estimand, estimator, _fmt(self.bias[r]), _fmt(self.ese[r])]
            for mi in range(len(self.methods)):
                vals += [_fmt(self.ase[r, mi]), _fmt(self.ecp[r, mi])]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        return ""
    return repr(float(x))


def _batches(n_reps: int, workers: int) -> List[np.ndarray]:
    n_chunks = min(n_reps, max(workers * 4, 1))
    return [chunk for chunk in np.array_split(np.arange(n_reps), n_chunks)
            if len(chunk)]


def run_monte_carlo(scenario: ScenarioSpec, threads: int = 1) -> MonteCarloSummary:
    """Run every replicate of a scenario and aggregate.

    ``threads`` counts worker processes; results are bit-identical for
    any value because each replicate's randomness is addressed by its
    index and the reduction is ordered by replicate index.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    t0 = time.perf_counter()
    rows = scenario.rows()
    methods = scenario.variance_methods
    reps = scenario.replicates
    estimates = np.full((reps, len(rows)), np.nan)
    ses = np.full((reps, len(rows), len(methods)), np.nan)
    truths = np.full((reps, len(rows)), np.nan)
    redraws = 0
    failures: List[Tuple[int, str, str]] = []
    if threads == 1:
        results = _replicate_batch(scenario, range(reps))
    else:
        results = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_replicate_batch, scenario, batch.tolist())
                    for batch in _batches(reps, threads)]
            for fut in concurrent.futures.as_completed(futs):
                results.extend(fut.result())
    for rep, est, se, truth, nred, fail in results:
        estimates[rep] = est
        ses[rep] = se
        truths[rep] = truth
        redraws += nred
        failures.extend(fail)
    failures.sort()
    with np.errstate(invalid="ignore"):
        bias = np.nanmean(estimates - truths, axis=0)
        ese = np.nanstd(estimates, axis=0, ddof=1)
        truth_mean = np.nanmean(truths, axis=0)
    z = scipy.stats.norm.ppf(0.5 * (1.0 + scenario.ci_level))
    abs_err = np.abs(estimates - truths)[:, :, None]
    with np.errstate(invalid="ignore"):
        cover = abs_err <= z * ses
        cover = np.where(np.isnan(ses), np.nan, cover.astype(float))
        ase = np.nanmean(ses, axis=0)
        ecp = np.nanmean(cover, axis=0)
    wall = time.perf_counter() - t0
    return MonteCarloSummary(
        scenario=scenario, row_keys=rows, bias=bias, ese=ese,
        truth_mean=truth_mean, ase=ase, ecp=ecp,
        failure_count=len(failures), failures=failures,
        redraw_count=redraws, wall_time_s=wall,
        replicate_estimates=estimates if scenario.keep_replicates else None,
        replicate_ses=ses if scenario.keep_replicates else None,
        replicate_truths=truths if scenario.keep_replicates else None,
    )
