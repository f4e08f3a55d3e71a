"""Squared-error regression oracles: constant, linear, stump, and tree fits.

Each learner returns the empirical-risk minimizer over a class that is
closed under affine transformations, so the constant fit is always
available as a floor: no learner may return a hypothesis whose squared
error on the fitted subset exceeds the constant fit's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AffineHypothesis,
    ConstantHypothesis,
    Dataset,
    TreeHypothesis,
    TreeLeaf,
    TreeSplit,
    WeakHypothesis,
)
from .errors import DataError, UsageError

__all__ = ["OracleSpec", "fit", "residual_fit"]

_KINDS = ("constant", "linear", "stump", "tree")


@dataclass(frozen=True)
class OracleSpec:
    """Which learner to run and its knobs.

    depth applies to trees (a stump is a depth-1 tree with exhaustive split
    search), min_leaf to stumps/trees, ridge only to the linear solver.
    """

    kind: str
    depth: int = 1
    min_leaf: int = 1
    ridge: float = 1e-10

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UsageError(f"unknown oracle kind {self.kind!r}, expected one of {_KINDS}")
        if self.depth < 1:
            raise UsageError(f"tree depth must be >= 1, got {self.depth}")
        if self.min_leaf < 1:
            raise UsageError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not (np.isfinite(self.ridge) and self.ridge >= 0.0):
            raise UsageError(f"ridge must be a finite non-negative real, got {self.ridge}")

    @property
    def effective_depth(self) -> int:
        return 1 if self.kind == "stump" else self.depth


def _weighted_mean(y: np.ndarray, w: np.ndarray | None) -> float:
    if w is None:
        return float(np.mean(y))
    return float(np.dot(w, y) / np.sum(w))


def _sse(pred: np.ndarray, y: np.ndarray, w: np.ndarray | None) -> float:
    r = pred - y
    if w is None:
        return float(np.dot(r, r))
    return float(np.dot(w, r * r))


def _fit_constant(y: np.ndarray, w: np.ndarray | None) -> ConstantHypothesis:
    return ConstantHypothesis(_weighted_mean(y, w))


def _fit_affine(
    X: np.ndarray, y: np.ndarray, w: np.ndarray | None, ridge: float
) -> WeakHypothesis:
    n, d = X.shape
    design = np.hstack([np.ones((n, 1)), X])
    if w is None:
        gram = design.T @ design
        rhs = design.T @ y
    else:
        weighted = design * w[:, None]
        gram = design.T @ weighted
        rhs = weighted.T @ y
    gram = gram + ridge * np.eye(d + 1)
    constant = _fit_constant(y, w)
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return constant
    if not np.isfinite(beta).all():
        return constant
    affine = AffineHypothesis(float(beta[0]), beta[1:])
    # Floating-point guard: an ill-conditioned solve must not beat the floor.
    if _sse(affine.evaluate(X), y, w) > _sse(constant.evaluate(X), y, w):
        return constant
    return affine


def _best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray | None, min_leaf: int
) -> tuple[int, float] | None:
    """Exhaustive search over (feature, midpoint-between-consecutive-distinct-
    values) splits. Returns the SSE-minimizing split or None when no split is
    strictly better than the constant fit. Ties break toward the lower feature
    index, then the lower threshold."""
    n, d = X.shape
    if w is None:
        w = np.ones(n, dtype=np.float64)
    const_sse = _sse(np.full(n, _weighted_mean(y, w)), y, w)
    best_sse = const_sse
    best: tuple[int, float] | None = None
    wy = w * y
    wyy = wy * y
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cw = np.cumsum(w[order])
        cwy = np.cumsum(wy[order])
        cwyy = np.cumsum(wyy[order])
        distinct = xs[1:] != xs[:-1]
        if not distinct.any():
            continue
        left_n = np.arange(1, n)
        usable = distinct & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not usable.any():
            continue
        # Right-side stats come from a true suffix cumsum, not total-minus-
        # prefix: the subtraction picks up rounding noise that turns exact
        # SSE ties (e.g. two features both fitting perfectly) into spurious
        # strict orderings, breaking the documented tie-break.
        sw = np.cumsum(w[order][::-1])[::-1]
        swy = np.cumsum(wy[order][::-1])[::-1]
        swyy = np.cumsum(wyy[order][::-1])[::-1]
        lw, lwy, lwyy = cw[:-1], cwy[:-1], cwyy[:-1]
        rw, rwy, rwyy = sw[1:], swy[1:], swyy[1:]
        usable &= (lw > 0) & (rw > 0)
        if not usable.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            split_sse = (lwyy - lwy * lwy / lw) + (rwyy - rwy * rwy / rw)
        split_sse[~usable] = np.inf
        pos = int(np.argmin(split_sse))
        # argmin returns the first minimum, i.e. the lowest threshold; the
        # feature loop runs in ascending index order, and strict < below keeps
        # the earliest winner.
        if split_sse[pos] < best_sse:
            best_sse = float(split_sse[pos])
            best = (j, 0.5 * (xs[pos] + xs[pos + 1]))
    return best


def _fit_tree_node(
    X: np.ndarray, y: np.ndarray, w: np.ndarray | None, depth: int, min_leaf: int
) -> TreeLeaf | TreeSplit:
    if depth == 0 or len(y) < 2 * min_leaf:
        return TreeLeaf(_weighted_mean(y, w))
    split = _best_split(X, y, w, min_leaf)
    if split is None:
        return TreeLeaf(_weighted_mean(y, w))
    j, threshold = split
    goes_left = X[:, j] <= threshold
    wl = w[goes_left] if w is not None else None
    wr = w[~goes_left] if w is not None else None
    return TreeSplit(
        j,
        threshold,
        _fit_tree_node(X[goes_left], y[goes_left], wl, depth - 1, min_leaf),
        _fit_tree_node(X[~goes_left], y[~goes_left], wr, depth - 1, min_leaf),
    )


def _fit_arrays(
    spec: OracleSpec, X: np.ndarray, y: np.ndarray, w: np.ndarray | None
) -> WeakHypothesis:
    """Fitting kernel on raw arrays; callers guarantee a non-empty subset."""
    if spec.kind == "constant":
        return _fit_constant(y, w)
    if spec.kind == "linear":
        return _fit_affine(X, y, w, spec.ridge)
    root = _fit_tree_node(X, y, w, spec.effective_depth, spec.min_leaf)
    if isinstance(root, TreeLeaf):
        # A split-free tree is just the constant fit.
        return ConstantHypothesis(root.value)
    return TreeHypothesis(root)


def _resolve_subset(
    data: Dataset, rows, weights, targets=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    X = data.features
    y = data.labels
    if rows is not None:
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            raise DataError("cannot fit on an empty row subset")
        if rows.min() < 0 or rows.max() >= data.n:
            raise DataError(f"row subset references indices outside 0..{data.n - 1}")
        X = X[rows]
        y = y[rows]
    if targets is not None:
        # Targets align with the fitted subset, not the full table.
        y = np.asarray(targets, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(
                f"targets must be a length-{X.shape[0]} vector, got shape {y.shape}"
            )
        if not np.isfinite(y).all():
            raise DataError("targets contain NaN or infinity")
    w = None
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] != X.shape[0]:
            raise DataError(
                f"weights must match the subset length {X.shape[0]}, got shape {w.shape}"
            )
        if not np.isfinite(w).all() or (w < 0).any():
            raise DataError("weights must be finite and non-negative")
        if not (w > 0).any():
            raise DataError("weights must not all be zero")
    return X, y, w


def fit(
    spec: OracleSpec,
    data: Dataset,
    rows=None,
    weights=None,
) -> WeakHypothesis:
    """Fit the oracle on the dataset, optionally restricted to a row subset
    with optional non-negative per-row weights.

    The returned hypothesis's (weighted) squared error on the fitted subset
    never exceeds the constant fit's.
    """
    X, y, w = _resolve_subset(data, rows, weights)
    return _fit_arrays(spec, X, y, w)


def residual_fit(
    spec: OracleSpec,
    data: Dataset,
    residuals,
    rows=None,
    weights=None,
) -> WeakHypothesis:
    """Same fitting logic as fit, but against arbitrary finite real targets
    (residuals are not constrained to [0, 1])."""
    X, y, w = _resolve_subset(data, rows, weights, targets=residuals)
    return _fit_arrays(spec, X, y, w)
