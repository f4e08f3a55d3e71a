"""Core domain types: datasets, prediction grids, weak hypotheses, and
level-set models.

A level-set model keeps an initial predictor plus a sequence of rounds;
each round maps a level index to the hypothesis that replaces predictions
on that level. Prediction is iterated apply-and-round, so model outputs
always lie on the grid {0, 1/m, ..., 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, UsageError

__all__ = [
    "Dataset",
    "Grid",
    "WeakHypothesis",
    "ConstantHypothesis",
    "AffineHypothesis",
    "TreeLeaf",
    "TreeSplit",
    "TreeHypothesis",
    "LevelSetModel",
    "RoundRecord",
    "TrainReport",
    "round_to_grid",
    "predict",
    "predict_batch",
    "partition_by_level",
    "hypothesis_from_descriptor",
]


def _as_float_matrix(features) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"features must be a 2-d matrix, got ndim={arr.ndim}")
    return arr


class Dataset:
    """Immutable table of n feature rows with labels in [0, 1]."""

    __slots__ = ("features", "labels")

    def __init__(self, features, labels):
        features = _as_float_matrix(features)
        labels = np.asarray(labels, dtype=np.float64)
        if labels.ndim != 1:
            raise DataError(f"labels must be a 1-d vector, got ndim={labels.ndim}")
        n, d = features.shape
        if n < 1 or d < 1:
            raise DataError(f"dataset needs n >= 1 rows and d >= 1 columns, got {features.shape}")
        if labels.shape[0] != n:
            raise DataError(f"{n} feature rows but {labels.shape[0]} labels")
        if not np.isfinite(features).all():
            raise DataError("features contain NaN or infinity")
        if not np.isfinite(labels).all():
            raise DataError("labels contain NaN or infinity")
        if labels.min() < 0.0 or labels.max() > 1.0:
            raise DataError(
                f"labels must lie in [0, 1], got range [{labels.min()}, {labels.max()}]"
            )
        features = features.copy()
        labels = labels.copy()
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d})"


@dataclass(frozen=True)
class Grid:
    """The discretized prediction range {0, 1/m, ..., 1}."""

    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or isinstance(self.m, bool):
            raise UsageError(f"grid resolution m must be an integer, got {self.m!r}")
        if self.m < 1:
            raise UsageError(f"grid resolution m must be positive, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @cached_property
    def values(self) -> np.ndarray:
        vals = np.arange(self.m + 1, dtype=np.float64) / self.m
        vals.setflags(write=False)
        return vals

    def round_indices(self, values: np.ndarray) -> np.ndarray:
        """Nearest grid index for each value; ties break toward the smaller
        grid value, and values outside [0, 1] clamp to the ends."""
        arr = np.asarray(values, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise DataError("cannot round non-finite values onto the grid")
        clipped = np.clip(arr, 0.0, 1.0)
        # ceil(m*x - 1/2) picks the nearest index and resolves exact midpoints
        # downward; after clipping the result is already within {0..m}.
        return np.ceil(self.m * clipped - 0.5).astype(np.int64)

    def round_values(self, values: np.ndarray) -> np.ndarray:
        return self.values[self.round_indices(values)]


def round_to_grid(value: float, grid: Grid) -> float:
    """Round one real number to the nearest grid value."""
    if not np.isfinite(value):
        raise DataError(f"cannot round non-finite value {value!r}")
    return float(grid.round_values(np.asarray([value]))[0])


class WeakHypothesis:
    """An evaluable real-valued function of a feature row."""

    kind: str = ""

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an (n, d) matrix; returns length-n values."""
        raise NotImplementedError

    def evaluate_row(self, row) -> float:
        return float(self.evaluate(np.asarray(row, dtype=np.float64).reshape(1, -1))[0])

    def scale_shift(self, scale: float, shift: float) -> "WeakHypothesis":
        """Return the hypothesis x -> scale * h(x) + shift (same kind)."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        """JSON-serializable description, parseable by hypothesis_from_descriptor."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantHypothesis(WeakHypothesis):
    value: float

    kind = "constant"

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        features = _as_float_matrix(features)
        return np.full(features.shape[0], self.value, dtype=np.float64)

    def scale_shift(self, scale: float, shift: float) -> "ConstantHypothesis":
        return ConstantHypothesis(scale * self.value + shift)

    def descriptor(self) -> dict:
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class AffineHypothesis(WeakHypothesis):
    intercept: float
    coefficients: np.ndarray

    kind = "affine"

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        if coeffs.ndim != 1:
            raise DataError("affine coefficients must be a 1-d vector")
        coeffs = coeffs.copy()
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        features = _as_float_matrix(features)
        if features.shape[1] != self.coefficients.shape[0]:
            raise DataError(
                f"affine hypothesis expects {self.coefficients.shape[0]} features, "
                f"got {features.shape[1]}"
            )
        return features @ self.coefficients + self.intercept

    def scale_shift(self, scale: float, shift: float) -> "AffineHypothesis":
        return AffineHypothesis(scale * self.intercept + shift, scale * self.coefficients)

    def descriptor(self) -> dict:
        return {
            "kind": "affine",
            "intercept": float(self.intercept),
            "coefficients": [float(c) for c in self.coefficients],
        }


@dataclass(frozen=True)
class TreeLeaf:
    value: float


@dataclass(frozen=True)
class TreeSplit:
    feature: int
    threshold: float
    left: "TreeLeaf | TreeSplit"
    right: "TreeLeaf | TreeSplit"


def _node_depth(node) -> int:
    if isinstance(node, TreeLeaf):
        return 0
    return 1 + max(_node_depth(node.left), _node_depth(node.right))


def _node_scale_shift(node, scale: float, shift: float):
    if isinstance(node, TreeLeaf):
        return TreeLeaf(scale * node.value + shift)
    return TreeSplit(
        node.feature,
        node.threshold,
        _node_scale_shift(node.left, scale, shift),
        _node_scale_shift(node.right, scale, shift),
    )


def _node_descriptor(node) -> dict:
    if isinstance(node, TreeLeaf):
        return {"leaf": float(node.value)}
    return {
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "left": _node_descriptor(node.left),
        "right": _node_descriptor(node.right),
    }


def _node_eval(node, features: np.ndarray, out: np.ndarray, rows: np.ndarray) -> None:
    if rows.size == 0:
        return
    if isinstance(node, TreeLeaf):
        out[rows] = node.value
        return
    if node.feature >= features.shape[1]:
        raise DataError(
            f"tree splits on feature {node.feature} but input has {features.shape[1]} columns"
        )
    goes_left = features[rows, node.feature] <= node.threshold
    _node_eval(node.left, features, out, rows[goes_left])
    _node_eval(node.right, features, out, rows[~goes_left])


@dataclass(frozen=True)
class TreeHypothesis(WeakHypothesis):
    """Axis-aligned binary regression tree; rows with x[feature] <= threshold
    go left."""

    root: TreeLeaf | TreeSplit

    kind = "tree"

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        features = _as_float_matrix(features)
        out = np.empty(features.shape[0], dtype=np.float64)
        _node_eval(self.root, features, out, np.arange(features.shape[0]))
        return out

    def scale_shift(self, scale: float, shift: float) -> "TreeHypothesis":
        return TreeHypothesis(_node_scale_shift(self.root, scale, shift))

    def descriptor(self) -> dict:
        return {"kind": "tree", "root": _node_descriptor(self.root)}

    @property
    def depth(self) -> int:
        return _node_depth(self.root)


def _expect_keys(obj: dict, required: tuple, context: str) -> None:
    if not isinstance(obj, dict):
        raise DataError(f"{context}: expected an object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise DataError(f"{context}: missing keys {missing}")
    unknown = [k for k in obj if k not in required]
    if unknown:
        raise DataError(f"{context}: unknown keys {unknown}")


def _node_from_descriptor(obj) -> TreeLeaf | TreeSplit:
    if isinstance(obj, dict) and set(obj) == {"leaf"}:
        return TreeLeaf(float(obj["leaf"]))
    _expect_keys(obj, ("feature", "threshold", "left", "right"), "tree node")
    return TreeSplit(
        int(obj["feature"]),
        float(obj["threshold"]),
        _node_from_descriptor(obj["left"]),
        _node_from_descriptor(obj["right"]),
    )


def hypothesis_from_descriptor(obj: dict) -> WeakHypothesis:
    """Parse a hypothesis descriptor produced by WeakHypothesis.descriptor.

    Unknown kinds and unknown keys are rejected.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DataError("hypothesis descriptor must be an object with a 'kind' key")
    kind = obj["kind"]
    if kind == "constant":
        _expect_keys(obj, ("kind", "value"), "constant hypothesis")
        return ConstantHypothesis(float(obj["value"]))
    if kind == "affine":
        _expect_keys(obj, ("kind", "intercept", "coefficients"), "affine hypothesis")
        return AffineHypothesis(float(obj["intercept"]), np.asarray(obj["coefficients"]))
    if kind == "tree":
        _expect_keys(obj, ("kind", "root"), "tree hypothesis")
        return TreeHypothesis(_node_from_descriptor(obj["root"]))
    raise DataError(f"unknown hypothesis kind {kind!r}")


@dataclass(frozen=True)
class LevelSetModel:
    """Initial predictor plus per-round partial maps level index -> hypothesis.

    A level index absent from a round's map keeps its value (identity).
    """

    grid: Grid
    initial: WeakHypothesis
    rounds: tuple
    n_features: int | None = None

    def __post_init__(self):
        rounds = tuple(dict(r) for r in self.rounds)
        for r in rounds:
            for level in r:
                if not (0 <= level <= self.grid.m):
                    raise DataError(
                        f"round references level index {level} outside 0..{self.grid.m}"
                    )
        object.__setattr__(self, "rounds", rounds)

    def _check_dim(self, features: np.ndarray) -> None:
        if self.n_features is not None and features.shape[1] != self.n_features:
            raise DataError(
                f"model expects {self.n_features} features, got {features.shape[1]}"
            )

    def predict_indices(self, features: np.ndarray) -> np.ndarray:
        """Grid index of the prediction for each row."""
        features = _as_float_matrix(features)
        self._check_dim(features)
        idx = self.grid.round_indices(self.initial.evaluate(features))
        for round_map in self.rounds:
            # Substitutions within one round all read the pre-round indices, so
            # a row can move at most once per round.
            new_idx = idx.copy()
            for level in sorted(round_map):
                mask = idx == level
                if mask.any():
                    h = round_map[level]
                    new_idx[mask] = self.grid.round_indices(h.evaluate(features[mask]))
            idx = new_idx
        return idx

    def predict_values(self, features: np.ndarray) -> np.ndarray:
        return self.grid.values[self.predict_indices(features)]


def predict(model: LevelSetModel, row) -> float:
    """Predict one feature row; the result is always a grid value."""
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"predict expects a single feature row, got ndim={arr.ndim}")
    return float(model.predict_values(arr.reshape(1, -1))[0])


def predict_batch(model: LevelSetModel, features) -> np.ndarray:
    return model.predict_values(np.asarray(features, dtype=np.float64))


def partition_by_level(model: LevelSetModel, data: Dataset) -> dict[int, np.ndarray]:
    """Row indices grouped by predicted level index; a disjoint cover of 0..n-1."""
    idx = model.predict_indices(data.features)
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    boundaries = np.flatnonzero(np.diff(sorted_idx)) + 1
    groups = np.split(order, boundaries)
    # g holds original row positions, so the group's level is idx[g[0]].
    return {int(idx[g[0]]): np.sort(g) for g in groups}


@dataclass(frozen=True)
class RoundRecord:
    """Per-round training statistics for the model kept after the round."""

    round_index: int
    mse: float
    msce: float
    nonempty_levels: int
    oracle_calls: int
    millis: float
    max_rounding_penalty: float


@dataclass
class TrainReport:
    """Training trace: one record per kept round (round 0 is the initial
    model), plus how the loop ended.

    The last executed round never satisfies the improvement threshold; its
    model is discarded, so it appears only through executed_rounds,
    final_improvement, and discarded_max_rounding_penalty.
    """

    records: list = field(default_factory=list)
    executed_rounds: int = 0
    halting_reason: str = ""
    final_improvement: float = float("nan")
    discarded_max_rounding_penalty: float = 0.0
    threshold: float = float("nan")
    alpha: float = float("nan")
    bound: float = float("nan")

    @property
    def max_rounding_penalty(self) -> float:
        worst = self.discarded_max_rounding_penalty
        for rec in self.records:
            worst = max(worst, rec.max_rounding_penalty)
        return worst

    def mse_sequence(self) -> list[float]:
        return [rec.mse for rec in self.records]
