"""paircause: design-based inference for pairwise-contrast treatment effects.

Estimates generalized pairwise-comparison effects (win probabilities,
net benefit, mean differences and user-defined contrasts) in two-arm
completely randomized experiments, with regression adjustment and
complete two-way cluster-robust variance estimation, a
finite-population oracle, and a reproducible Monte Carlo harness.
"""

from .contrasts import (Contrast, CustomContrast, Difference, Lexicographic,
                        WeightedAggregate, WinHalfTie, WinStrict,
                        antisymmetry_constant, eval_contrast)
from .data import ObservedDataset, PotentialPopulation, UnitRecord
from .estimators import (FitResult, estimate_averaged, estimate_individual,
                         estimate_pim, net_benefit, select_submodel)
from .lsq import Coefficients, GramAccumulator, RankDeficiencyError
from .oracle import (EnumerationResult, NeymanFunctionals, ScorePairs,
                     enumerate_assignments, neyman_functionals,
                     population_scores, theoretical_gamma, true_contrast_mean,
                     true_net_benefit)
from .pairs import (AveragedDataset, PairCache, PairTerm, per_unit_averages,
                    stream_ordered_pairs)
from .registry import ESTIMATORS, TABLE_ESTIMATORS, fit_estimator, valid_methods
from .simlab import (AssignmentSpec, MonteCarloSummary, ScenarioSpec, assign,
                     generate_population, run_monte_carlo, study_contrast)
from .variance import (VarianceReport, baseline_variance, confidence_interval,
                       ctw_averaged, ctw_pairs, ctw_pim, variance_reports)

__version__ = "0.1.0"

__all__ = [
    "Contrast", "CustomContrast", "Difference", "Lexicographic",
    "WeightedAggregate", "WinHalfTie", "WinStrict",
    "antisymmetry_constant", "eval_contrast",
    "ObservedDataset", "PotentialPopulation", "UnitRecord",
    "FitResult", "estimate_averaged", "estimate_individual", "estimate_pim",
    "net_benefit", "select_submodel",
    "Coefficients", "GramAccumulator", "RankDeficiencyError",
    "EnumerationResult", "NeymanFunctionals", "ScorePairs",
    "enumerate_assignments", "neyman_functionals", "population_scores",
    "theoretical_gamma", "true_contrast_mean", "true_net_benefit",
    "AveragedDataset", "PairCache", "PairTerm", "per_unit_averages",
    "stream_ordered_pairs",
    "ESTIMATORS", "TABLE_ESTIMATORS", "fit_estimator", "valid_methods",
    "AssignmentSpec", "MonteCarloSummary", "ScenarioSpec", "assign",
    "generate_population", "run_monte_carlo", "study_contrast",
    "VarianceReport", "baseline_variance", "confidence_interval",
    "ctw_averaged", "ctw_pairs", "ctw_pim", "variance_reports",
]
