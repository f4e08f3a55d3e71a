"""Level-set boosting: repeatedly run the regression oracle on each level
set of the current model, substitute the fitted hypotheses, and round back
onto the grid, until one full round fails to cut the squared error by at
least alpha / (2 * B).

The returned model is the one from before that final insufficient round,
so every recorded transition satisfies the improvement threshold.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (
    ConstantHypothesis,
    Dataset,
    Grid,
    LevelSetModel,
    RoundRecord,
    TrainReport,
    WeakHypothesis,
)
from .errors import ContractError, UsageError
from .learners import OracleSpec, _fit_arrays
from .metrics import msce_from_indices

__all__ = ["TrainConfig", "train", "probe_round"]


@dataclass(frozen=True)
class TrainConfig:
    """Training parameters.

    Exactly one of alpha / levels_m is required; giving both is accepted only
    when they agree exactly (alpha == 2 * bound_B / levels_m), since the grid
    resolution and the halting threshold must stay coupled. With alpha alone,
    m = ceil(2 * bound_B / alpha); with levels_m alone, alpha = 2 * bound_B / m.
    """

    oracle: OracleSpec
    alpha: float | None = None
    bound_B: float = 1.0
    levels_m: int | None = None
    min_level_size: int = 1
    max_rounds: int | None = None
    thread_count: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.bound_B) and self.bound_B > 0):
            raise UsageError(f"bound_B must be a positive real, got {self.bound_B}")
        if self.alpha is None and self.levels_m is None:
            raise UsageError("one of alpha or levels_m is required")
        if self.alpha is not None and not (0.0 < self.alpha < 1.0):
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.levels_m is not None and self.levels_m < 1:
            raise UsageError(f"levels_m must be a positive integer, got {self.levels_m}")
        if self.alpha is not None and self.levels_m is not None:
            implied = 2.0 * self.bound_B / self.levels_m
            if self.alpha != implied:
                raise UsageError(
                    f"alpha={self.alpha} and levels_m={self.levels_m} disagree: "
                    f"levels_m implies alpha={implied}"
                )
        if self.min_level_size < 0:
            raise UsageError(f"min_level_size must be >= 0, got {self.min_level_size}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise UsageError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.thread_count < 1:
            raise UsageError(f"thread_count must be >= 1, got {self.thread_count}")

    @cached_property
    def m(self) -> int:
        if self.levels_m is not None:
            return int(self.levels_m)
        return max(1, math.ceil(2.0 * self.bound_B / self.alpha))

    @cached_property
    def effective_alpha(self) -> float:
        if self.levels_m is not None:
            return 2.0 * self.bound_B / self.levels_m
        return float(self.alpha)

    @cached_property
    def threshold(self) -> float:
        """Per-round improvement required to continue: alpha / (2 * B)."""
        return self.effective_alpha / (2.0 * self.bound_B)

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.m)

    @cached_property
    def effective_max_rounds(self) -> int:
        if self.max_rounds is not None:
            return int(self.max_rounds)
        return math.ceil(2.0 * self.bound_B / self.effective_alpha) + 1


def _group_by_level(idx: np.ndarray) -> list[tuple[int, np.ndarray]]:
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    boundaries = np.flatnonzero(np.diff(sorted_idx)) + 1
    # g holds original row positions, so the group's level is idx[g[0]].
    return [(int(idx[g[0]]), g) for g in np.split(order, boundaries)]


def _fit_level(spec: OracleSpec, X: np.ndarray, y: np.ndarray, rows: np.ndarray,
               level: int, m: int) -> WeakHypothesis:
    try:
        return _fit_arrays(spec, X[rows], y[rows], None)
    except Exception as exc:
        raise ContractError(
            f"oracle '{spec.kind}' failed on level {level} (value {level / m}): {exc}"
        ) from exc


def _run_round(
    X: np.ndarray, y: np.ndarray, idx: np.ndarray, config: TrainConfig
) -> tuple[dict[int, WeakHypothesis], np.ndarray, np.ndarray]:
    """One boosting round from the level indices idx. Returns the fitted
    per-level hypotheses, the unrounded substituted values, and the new
    (rounded) level indices. Pure: does not modify idx."""
    grid = config.grid
    min_size = max(1, config.min_level_size)
    groups = [(lvl, rows) for lvl, rows in _group_by_level(idx) if rows.size >= min_size]
    fits: dict[int, WeakHypothesis] = {}
    if config.thread_count > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=config.thread_count) as pool:
            futures = [
                (lvl, pool.submit(_fit_level, config.oracle, X, y, rows, lvl, grid.m))
                for lvl, rows in groups
            ]
            # Collection is keyed by level, so scheduling order cannot leak
            # into the result.
            for lvl, fut in futures:
                fits[lvl] = fut.result()
    else:
        for lvl, rows in groups:
            fits[lvl] = _fit_level(config.oracle, X, y, rows, lvl, grid.m)
    substituted = grid.values[idx].copy()
    for lvl, rows in groups:
        substituted[rows] = fits[lvl].evaluate(X[rows])
    new_idx = grid.round_indices(substituted)
    return fits, substituted, new_idx


def _mse_of(values: np.ndarray, y: np.ndarray) -> float:
    r = values - y
    return float(np.mean(r * r))


def _max_penalty(rounded: np.ndarray, raw: np.ndarray, y: np.ndarray) -> float:
    # Pointwise excess of the rounded model's squared error over the
    # unrounded one; bounded by 1/m.
    return float(np.max((rounded - y) ** 2 - (raw - y) ** 2))


def train(
    data: Dataset, config: TrainConfig, initial: WeakHypothesis | None = None
) -> tuple[LevelSetModel, TrainReport]:
    """Run the boosting loop on the dataset.

    initial defaults to the constant label mean. Returns the trained model
    together with the per-round report; the report's last record always
    describes the returned model.
    """
    grid = config.grid
    threshold = config.threshold
    X = data.features
    y = data.labels

    started = time.perf_counter()
    if initial is None:
        initial = ConstantHypothesis(float(np.mean(y)))
    raw0 = initial.evaluate(X)
    if raw0.shape != y.shape or not np.isfinite(raw0).all():
        raise ContractError("initial hypothesis produced invalid predictions")
    idx = grid.round_indices(raw0)
    values = grid.values[idx]
    err = _mse_of(values, y)

    report = TrainReport(
        threshold=threshold, alpha=config.effective_alpha, bound=config.bound_B
    )
    report.records.append(
        RoundRecord(
            round_index=0,
            mse=err,
            msce=msce_from_indices(idx, y, grid),
            nonempty_levels=int(np.unique(idx).size),
            oracle_calls=0,
            millis=(time.perf_counter() - started) * 1000.0,
            max_rounding_penalty=_max_penalty(values, raw0, y),
        )
    )

    rounds: list[dict[int, WeakHypothesis]] = []
    t = 0
    while True:
        t += 1
        if t > config.effective_max_rounds:
            raise ContractError(
                f"halting rule not reached within {config.effective_max_rounds} rounds "
                f"(every kept round must cut MSE by at least {config.threshold})"
            )
        round_started = time.perf_counter()
        fits, substituted, new_idx = _run_round(X, y, idx, config)
        new_values = grid.values[new_idx]
        new_err = _mse_of(new_values, y)
        penalty = _max_penalty(new_values, substituted, y)
        improvement = err - new_err
        if improvement >= threshold:
            rounds.append(fits)
            idx = new_idx
            err = new_err
            report.records.append(
                RoundRecord(
                    round_index=t,
                    mse=new_err,
                    msce=msce_from_indices(new_idx, y, grid),
                    nonempty_levels=int(np.unique(new_idx).size),
                    oracle_calls=len(fits),
                    millis=(time.perf_counter() - round_started) * 1000.0,
                    max_rounding_penalty=penalty,
                )
            )
            continue
        report.executed_rounds = t
        report.final_improvement = improvement
        report.discarded_max_rounding_penalty = penalty
        report.halting_reason = "converged"
        break

    model = LevelSetModel(
        grid=grid, initial=initial, rounds=tuple(rounds), n_features=data.d
    )
    return model, report


def probe_round(model: LevelSetModel, data: Dataset, config: TrainConfig) -> float:
    """Run one hypothetical boosting round on the model and return the squared
    error improvement it would achieve. Does not mutate the model. For a model
    returned by train with the same config and data, this is < the halting
    threshold."""
    if config.grid.m != model.grid.m:
        raise UsageError(
            f"config grid m={config.grid.m} does not match model grid m={model.grid.m}"
        )
    X = data.features
    y = data.labels
    idx = model.predict_indices(X)
    err = _mse_of(model.grid.values[idx], y)
    _, _, new_idx = _run_round(X, y, idx, config)
    new_err = _mse_of(model.grid.values[new_idx], y)
    return err - new_err
