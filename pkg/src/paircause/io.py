"""CSV ingestion, analysis configuration, and report writing.

The trial CSV schema is strict: a header row; one id column, one 0/1
treatment column, outcome columns and covariate columns, all numeric,
UTF-8, ``.`` decimal, no missing cells.  Canonical column names are
``id``, ``a``, ``y1..yQ``, ``x1..xd``; a configuration may point at
different names.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .contrasts import (Contrast, Difference, Lexicographic, WeightedAggregate,
                        WinHalfTie, WinStrict)
from .data import ObservedDataset

__all__ = [
    "read_dataset_csv",
    "write_dataset_csv",
    "contrast_from_config",
    "contrast_to_config",
    "AnalysisConfig",
    "config_hash",
]

_CONTRAST_KINDS = ("difference", "win_half_tie", "win_strict",
                   "lexicographic", "weighted")


def contrast_from_config(tree: dict) -> Contrast:
    """Build a contrast from its declarative configuration tree."""
    if not isinstance(tree, dict) or "kind" not in tree:
        raise ValueError(f"contrast config must be a dict with a 'kind', got {tree!r}")
    kind = tree["kind"]
    declared = tree.get("antisymmetry_constant")
    if kind == "difference":
        return Difference(declared_constant=declared)
    if kind == "win_half_tie":
        return WinHalfTie(declared_constant=declared)
    if kind == "win_strict":
        return WinStrict(declared_constant=declared)
    if kind == "lexicographic":
        return Lexicographic(
            directions=tuple(tree["directions"]),
            ties=tree.get("ties", "half"),
            declared_constant=declared,
        )
    if kind == "weighted":
        return WeightedAggregate(
            weights=tuple(tree["weights"]),
            components=tuple(contrast_from_config(c) for c in tree["components"]),
            declared_constant=declared,
        )
    raise ValueError(f"unknown contrast kind {kind!r}; known: {_CONTRAST_KINDS}")


def contrast_to_config(spec: Contrast) -> dict:
    """Inverse of :func:`contrast_from_config` for built-in contrasts."""
    out: dict = {}
    if isinstance(spec, Difference):
        out["kind"] = "difference"
    elif isinstance(spec, WinHalfTie):
        out["kind"] = "win_half_tie"
    elif isinstance(spec, WinStrict):
        out["kind"] = "win_strict"
    elif isinstance(spec, Lexicographic):
        out.update(kind="lexicographic", directions=list(spec.directions),
                   ties=spec.ties)
    elif isinstance(spec, WeightedAggregate):
        out.update(kind="weighted", weights=list(spec.weights),
                   components=[contrast_to_config(c) for c in spec.components])
    else:
        raise ValueError(f"contrast {spec!r} has no config representation")
    if spec.declared_constant is not None:
        out["antisymmetry_constant"] = spec.declared_constant
    return out


@dataclass
class AnalysisConfig:
    """Configuration of one CSV analysis run."""

    contrast: Contrast
    outcomes: Tuple[str, ...]
    treatment: str = "a"
    covariates: Tuple[str, ...] = ()
    id_column: str = "id"
    estimators: Tuple[str, ...] = ("pairs",)
    variance_methods: Tuple[str, ...] = ("ctw",)
    ci_level: float = 0.95
    seed: int = 0
    missing_residuals: str = "arm"
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.estimators:
            raise ValueError("config needs at least one estimator")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"ci_level must be in (0,1), got {self.ci_level}")
        if len(self.outcomes) != self.contrast.dim:
            raise ValueError(
                f"contrast consumes {self.contrast.dim} outcome(s) but config "
                f"lists {len(self.outcomes)} outcome column(s)"
            )
        if self.missing_residuals not in ("arm", "literal"):
            raise ValueError("missing_residuals must be 'arm' or 'literal'")

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        return cls(
            contrast=contrast_from_config(d["contrast"]),
            outcomes=tuple(d["outcomes"]),
            treatment=d.get("treatment", "a"),
            covariates=tuple(d.get("covariates", ())),
            id_column=d.get("id", "id"),
            estimators=tuple(d.get("estimators", ("pairs",))),
            variance_methods=tuple(d.get("variance_methods", ("ctw",))),
            ci_level=float(d.get("ci_level", 0.95)),
            seed=int(d.get("seed", 0)),
            missing_residuals=d.get("missing_residuals", "arm"),
            raw=dict(d),
        )

    @classmethod
    def load(cls, path) -> "AnalysisConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def canonical_dict(self) -> dict:
        return {
            "contrast": contrast_to_config(self.contrast),
            "outcomes": list(self.outcomes),
            "treatment": self.treatment,
            "covariates": list(self.covariates),
            "id": self.id_column,
            "estimators": list(self.estimators),
            "variance_methods": list(self.variance_methods),
            "ci_level": self.ci_level,
            "seed": self.seed,
            "missing_residuals": self.missing_residuals,
        }


def config_hash(d: dict) -> str:
    """sha256 of the canonical JSON encoding (provenance for reports)."""
    blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    if text == "":
        raise ValueError(f"missing value at data row {row}, column {column!r}")
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"non-numeric value {text!r} at data row {row}, column {column!r}"
        ) from None


def read_dataset_csv(path, treatment: str = "a",
                     outcomes: Optional[Sequence[str]] = None,
                     covariates: Optional[Sequence[str]] = None,
                     id_column: str = "id") -> ObservedDataset:
    """Read a trial dataset from CSV under the strict schema.

    ``outcomes``/``covariates`` default to every ``y<k>`` / ``x<k>``
    column found in the header, in numeric order.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    index = {name: k for k, name in enumerate(header)}
    if len(index) != len(header):
        raise ValueError(f"{path}: duplicate column names in header {header}")

    def _auto(prefix: str) -> List[str]:
        found = []
        for name in header:
            if name.startswith(prefix) and name[len(prefix):].isdigit():
                found.append((int(name[len(prefix):]), name))
        return [name for _, name in sorted(found)]

    if outcomes is None:
        outcomes = _auto("y")
        if not outcomes:
            raise ValueError(f"{path}: no outcome columns (y1..yQ) found")
    if covariates is None:
        covariates = _auto("x")
    for col in [treatment, *outcomes, *covariates]:
        if col not in index:
            raise ValueError(f"{path}: unknown column {col!r}; header has {header}")
    has_id = id_column in index
    n = len(rows)
    ids = []
    treat = np.empty(n)
    y = np.empty((n, len(outcomes)))
    x = np.empty((n, len(covariates)))
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ValueError(f"{path}: data row {r} has {len(row)} cells, header has {len(header)}")
        ids.append(row[index[id_column]].strip() if has_id else str(r))
        treat[r - 1] = _parse_cell(row[index[treatment]], r, treatment)
        for q, col in enumerate(outcomes):
            y[r - 1, q] = _parse_cell(row[index[col]], r, col)
        for k, col in enumerate(covariates):
            x[r - 1, k] = _parse_cell(row[index[col]], r, col)
    if not np.all(np.isin(treat, (0.0, 1.0))):
        bad = int(np.flatnonzero(~np.isin(treat, (0.0, 1.0)))[0]) + 1
        raise ValueError(f"{path}: treatment column {treatment!r} must be 0/1 "
                         f"(first offending data row: {bad})")
    return ObservedDataset(treat=treat.astype(int), y=y,
                           x=x if len(covariates) else None, ids=ids)


def write_dataset_csv(ds: ObservedDataset, path) -> None:
    """Write a dataset under the canonical schema (round-trips exactly)."""
    header = (["id", "a"]
              + [f"y{q+1}" for q in range(ds.n_outcomes)]
              + [f"x{k+1}" for k in range(ds.n_covariates)])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(ds.n):
            row = [str(ds.ids[i]), str(int(ds.treat[i]))]
            row += [repr(float(v)) for v in ds.y[i]]
            row += [repr(float(v)) for v in ds.x[i]]
            writer.writerow(row)
