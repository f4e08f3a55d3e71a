"""Squared-error and multicalibration metrics, plus the constructive link
between residual correlations on a level set and squared-error improvements.

The per-level violation of a model f against a function h is
e_v = E[h(x) * (y - v) | f(x) = v]; with level masses p_v the aggregate
norms are K2 = sum p_v * e_v^2, K1 = sum p_v * |e_v|, and
Kinf = max p_v * |e_v|. Calibration is the h == 1 special case and K2 is
the mean squared calibration error (MSCE).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Grid, LevelSetModel, WeakHypothesis
from .errors import ContractError, DataError, UsageError
from .learners import OracleSpec, fit

__all__ = [
    "LevelStat",
    "CalibrationReport",
    "MulticalibrationReport",
    "ImproverResult",
    "ViolationResult",
    "WeakLearningAudit",
    "mse",
    "calibration_error",
    "multicalibration_error",
    "calibration_from_indices",
    "calibration_from_values",
    "msce_from_indices",
    "build_improver",
    "violation_from_improvement",
    "check_weak_learning",
    "sup_sq_bound",
]


def mse(predictions, labels) -> float:
    """Mean squared difference between two equal-length vectors."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.ndim != 1 or y.ndim != 1:
        raise DataError("mse expects 1-d vectors")
    if p.shape[0] != y.shape[0] or p.shape[0] < 1:
        raise DataError(f"length mismatch: {p.shape[0]} predictions vs {y.shape[0]} labels")
    if not (np.isfinite(p).all() and np.isfinite(y).all()):
        raise DataError("mse inputs must be finite")
    r = p - y
    return float(np.mean(r * r))


@dataclass(frozen=True)
class LevelStat:
    """One non-empty level set: its grid index/value, probability mass, and
    conditional violation E[h(x) * (y - v) | level]."""

    index: int
    value: float
    mass: float
    violation: float


@dataclass(frozen=True)
class CalibrationReport:
    m: int
    levels: tuple
    k2: float
    k1: float
    kinf: float

    @property
    def msce(self) -> float:
        return self.k2


def calibration_from_indices(
    level_idx: np.ndarray, labels: np.ndarray, grid: Grid, h_values: np.ndarray | None = None
) -> CalibrationReport:
    """Aggregate per-level violations over non-empty levels. h defaults to
    the constant 1, which measures calibration."""
    level_idx = np.asarray(level_idx, dtype=np.int64)
    y = np.asarray(labels, dtype=np.float64)
    if level_idx.shape != y.shape:
        raise DataError("level indices and labels must have equal length")
    weighted = y - grid.values[level_idx]
    if h_values is not None:
        h = np.asarray(h_values, dtype=np.float64)
        if h.shape != y.shape:
            raise DataError("h values must have one entry per row")
        if not np.isfinite(h).all():
            raise DataError("h values must be finite")
        weighted = h * weighted
    n = y.shape[0]
    counts = np.bincount(level_idx, minlength=grid.m + 1)
    sums = np.bincount(level_idx, weights=weighted, minlength=grid.m + 1)
    present = np.flatnonzero(counts)
    masses = counts[present] / n
    violations = sums[present] / counts[present]
    stats = tuple(
        LevelStat(int(i), float(grid.values[i]), float(p), float(e))
        for i, p, e in zip(present, masses, violations)
    )
    k2 = float(np.sum(masses * violations**2))
    k1 = float(np.sum(masses * np.abs(violations)))
    kinf = float(np.max(masses * np.abs(violations)))
    return CalibrationReport(m=grid.m, levels=stats, k2=k2, k1=k1, kinf=kinf)


def msce_from_indices(level_idx: np.ndarray, labels: np.ndarray, grid: Grid) -> float:
    return calibration_from_indices(level_idx, labels, grid).k2


def calibration_from_values(
    values: np.ndarray, labels: np.ndarray, grid: Grid, h_values: np.ndarray | None = None
) -> CalibrationReport:
    """Bin arbitrary real predictions onto the grid, then aggregate as usual.
    Lets continuous predictors share a calibration scale with grid models."""
    return calibration_from_indices(grid.round_indices(values), labels, grid, h_values)


def calibration_error(model: LevelSetModel, data: Dataset) -> CalibrationReport:
    """K2/K1/Kinf of the model's own residuals per level (h == 1)."""
    return calibration_from_indices(model.predict_indices(data.features), data.labels, model.grid)


@dataclass(frozen=True)
class MulticalibrationReport:
    reports: tuple
    worst_function: int
    worst_level: int
    worst_contribution: float


def _h_values_for(fn, data: Dataset) -> np.ndarray:
    if isinstance(fn, WeakHypothesis):
        vals = fn.evaluate(data.features)
    else:
        vals = np.asarray(fn, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] != data.n:
            raise DataError(
                f"tabulated h must be a length-{data.n} column, got shape {vals.shape}"
            )
    if not np.isfinite(vals).all():
        raise DataError("h takes non-finite values on this data")
    return vals


def multicalibration_error(
    model: LevelSetModel, data: Dataset, functions
) -> MulticalibrationReport:
    """Per-function violation reports, plus the worst (function, level)
    witness by its K2 contribution mass * violation^2.

    functions is a sequence of WeakHypothesis or length-n tabulated values.
    """
    if len(functions) == 0:
        raise DataError("multicalibration_error needs at least one function")
    idx = model.predict_indices(data.features)
    reports = []
    worst = (-1.0, 0, 0)
    for pos, fn in enumerate(functions):
        rep = calibration_from_indices(idx, data.labels, model.grid, _h_values_for(fn, data))
        reports.append(rep)
        for stat in rep.levels:
            contribution = stat.mass * stat.violation**2
            if contribution > worst[0]:
                worst = (contribution, pos, stat.index)
    return MulticalibrationReport(
        reports=tuple(reports),
        worst_function=worst[1],
        worst_level=worst[2],
        worst_contribution=worst[0],
    )


@dataclass(frozen=True)
class ImproverResult:
    """The affine update h'(x) = v + eta * h(x) and its guaranteed gain."""

    h_prime: object
    predicted_gain: float
    eta: float
    violation: float


def _subset_arrays(data: Dataset, rows) -> tuple[np.ndarray, np.ndarray]:
    if rows is None:
        return data.features, data.labels
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise DataError("row subset is empty")
    return data.features[rows], data.labels[rows]


def _h_on_subset(h, X: np.ndarray) -> np.ndarray:
    if isinstance(h, WeakHypothesis):
        vals = h.evaluate(X)
    else:
        vals = np.asarray(h, dtype=np.float64)
        if vals.shape != (X.shape[0],):
            raise DataError(
                f"tabulated h must have one value per subset row ({X.shape[0]}), "
                f"got shape {vals.shape}"
            )
    if not np.isfinite(vals).all():
        raise DataError("h takes non-finite values on this subset")
    return vals


def build_improver(h, v: float, data: Dataset, rows=None) -> ImproverResult:
    """Turn a positive residual correlation of h on the level set of v into a
    concrete predictor beating the constant v.

    With violation a = E[h * (y - v)] and second moment s = E[h^2] over the
    level set, the update h' = v + (a/s) * h improves squared error by exactly
    a^2 / s when measured on the same sample.
    """
    X, y = _subset_arrays(data, rows)
    hv = _h_on_subset(h, X)
    second = float(np.mean(hv * hv))
    if second <= 0.0:
        raise DataError("h has zero second moment on the level set")
    violation = float(np.mean(hv * (y - v)))
    if violation <= 0.0:
        raise DataError(
            f"h has non-positive violation {violation} on the level set; "
            "an improvement step needs a positive residual correlation"
        )
    eta = violation / second
    if isinstance(h, WeakHypothesis):
        h_prime = h.scale_shift(eta, float(v))
    else:
        h_prime = float(v) + eta * hv
    return ImproverResult(
        h_prime=h_prime,
        predicted_gain=violation * violation / second,
        eta=eta,
        violation=violation,
    )


@dataclass(frozen=True)
class ViolationResult:
    """Residual correlation certified from a measured improvement."""

    correlation: float
    improvement: float
    level_mean: float

    @property
    def bound(self) -> float:
        return self.improvement / 2.0


def violation_from_improvement(h, data: Dataset, rows=None) -> ViolationResult:
    """Measure how much h improves on the level's own mean, and return the
    residual correlation E[h * (y - mean)], which is at least half that
    improvement whenever the improvement is positive."""
    X, y = _subset_arrays(data, rows)
    hv = _h_on_subset(h, X)
    level_mean = float(np.mean(y))
    improvement = mse(np.full(y.shape[0], level_mean), y) - mse(hv, y)
    correlation = float(np.mean(hv * (y - level_mean)))
    if improvement > 0.0 and correlation < improvement / 2.0 - 1e-12:
        # improvement = 2*corr - E[(h - mean)^2] <= 2*corr, an identity that
        # only floating-point breakage could violate.
        raise ContractError(
            f"correlation {correlation} fell below improvement/2 = {improvement / 2.0}"
        )
    return ViolationResult(
        correlation=correlation, improvement=improvement, level_mean=level_mean
    )


@dataclass(frozen=True)
class WeakLearningAudit:
    subset_size: int
    mass: float
    const_err: float
    benchmark_err: float
    oracle_err: float
    gamma: float
    premise: bool
    conclusion: bool

    @property
    def satisfied(self) -> bool:
        return (not self.premise) or self.conclusion


def _empirical_bayes_err(X: np.ndarray, y: np.ndarray) -> float:
    """Squared error of the per-distinct-row label mean: the best possible
    predictor measured on this sample. Zero when all rows are distinct."""
    _, inverse = np.unique(X, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    sums = np.bincount(inverse, weights=y)
    counts = np.bincount(inverse)
    return mse(sums[inverse] / counts[inverse], y)


def check_weak_learning(
    data: Dataset,
    subset,
    oracle: OracleSpec,
    gamma: float,
    comparison: OracleSpec | None = None,
) -> WeakLearningAudit:
    """Audit one subset: whenever the benchmark beats the constant fit by more
    than gamma, the oracle must too.

    With no comparison class the benchmark is the per-distinct-row label mean
    (error 0 when the subset's rows are all distinct); otherwise it is the
    comparison oracle's fitted error.
    """
    if not (np.isfinite(gamma) and gamma >= 0.0):
        raise UsageError(f"gamma must be a finite non-negative real, got {gamma}")
    rows = None if subset is None else np.asarray(subset, dtype=np.int64)
    X, y = _subset_arrays(data, rows)
    const_err = mse(np.full(y.shape[0], float(np.mean(y))), y)
    if comparison is None:
        benchmark_err = _empirical_bayes_err(X, y)
    else:
        benchmark_err = mse(fit(comparison, data, rows).evaluate(X), y)
    oracle_err = mse(fit(oracle, data, rows).evaluate(X), y)
    return WeakLearningAudit(
        subset_size=int(y.shape[0]),
        mass=float(y.shape[0]) / data.n,
        const_err=const_err,
        benchmark_err=benchmark_err,
        oracle_err=oracle_err,
        gamma=float(gamma),
        premise=benchmark_err < const_err - gamma,
        conclusion=oracle_err < const_err - gamma,
    )


def sup_sq_bound(h, data: Dataset, rows=None) -> float:
    """Largest h(x)^2 over the given rows: the empirical class-norm bound."""
    X, _ = _subset_arrays(data, rows)
    vals = _h_on_subset(h, X)
    return float(np.max(vals * vals))
