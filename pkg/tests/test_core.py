import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsboost import (
    AffineHypothesis,
    ConstantHypothesis,
    DataError,
    Dataset,
    Grid,
    LevelSetModel,
    TreeHypothesis,
    TreeLeaf,
    TreeSplit,
    UsageError,
    hypothesis_from_descriptor,
    partition_by_level,
    predict,
    predict_batch,
    round_to_grid,
)

from conftest import rng_for


# ---------------------------------------------------------------------------
# rounding


def test_round_nearest():
    assert round_to_grid(0.30, Grid(4)) == 0.25
    assert round_to_grid(1.2, Grid(4)) == 1.0
    assert round_to_grid(-0.3, Grid(4)) == 0.0


def test_round_tie_breaks_toward_smaller():
    # 0.375 sits exactly between 0.25 and 0.5 (binary-exact midpoint)
    assert round_to_grid(0.375, Grid(4)) == 0.25
    assert round_to_grid(0.125, Grid(4)) == 0.0
    assert round_to_grid(0.625, Grid(4)) == 0.5


def test_round_rejects_non_finite():
    with pytest.raises(DataError):
        round_to_grid(float("nan"), Grid(4))
    with pytest.raises(DataError):
        Grid(4).round_indices(np.array([0.5, float("inf")]))


@given(st.floats(0.0, 1.0), st.integers(1, 200))
def test_round_idempotent_and_close(v, m):
    grid = Grid(m)
    r = round_to_grid(v, grid)
    assert round_to_grid(r, grid) == r
    assert abs(r - v) <= 1.0 / (2 * m) + 1e-15
    assert r in grid.values


def test_grid_validation():
    with pytest.raises(UsageError):
        Grid(0)
    with pytest.raises(UsageError):
        Grid(-3)
    assert Grid(4).values.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]


# ---------------------------------------------------------------------------
# dataset


def test_dataset_validation():
    X = np.zeros((3, 2))
    with pytest.raises(DataError):
        Dataset(X, np.array([0.0, 0.5, 1.5]))  # label above 1
    with pytest.raises(DataError):
        Dataset(X, np.array([0.0, 0.5]))  # length mismatch
    with pytest.raises(DataError):
        Dataset(np.zeros((0, 2)), np.zeros(0))  # empty
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan, 0.0]]), np.array([0.5]))


def test_dataset_is_read_only():
    data = Dataset(np.zeros((2, 1)), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        data.features[0, 0] = 3.0
    with pytest.raises(ValueError):
        data.labels[0] = 0.5


# ---------------------------------------------------------------------------
# hypotheses


def test_constant_and_affine_evaluate():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(ConstantHypothesis(0.3).evaluate(X), [0.3, 0.3])
    h = AffineHypothesis(1.0, np.array([2.0, -1.0]))
    assert np.array_equal(h.evaluate(X), [1.0 + 2.0 - 2.0, 1.0 + 6.0 - 4.0])
    with pytest.raises(DataError):
        h.evaluate(np.zeros((2, 3)))


def test_tree_evaluate():
    root = TreeSplit(0, 0.5, TreeLeaf(0.0), TreeSplit(1, 1.5, TreeLeaf(0.5), TreeLeaf(1.0)))
    h = TreeHypothesis(root)
    X = np.array([[0.0, 9.0], [1.0, 1.0], [1.0, 2.0]])
    assert h.evaluate(X).tolist() == [0.0, 0.5, 1.0]
    assert h.depth == 2


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_scale_shift_is_pointwise_affine(a, b):
    X = np.linspace(-1, 1, 7).reshape(-1, 1)
    for h in (
        ConstantHypothesis(0.4),
        AffineHypothesis(0.1, np.array([0.7])),
        TreeHypothesis(TreeSplit(0, 0.0, TreeLeaf(0.2), TreeLeaf(0.9))),
    ):
        g = h.scale_shift(a, b)
        np.testing.assert_allclose(g.evaluate(X), a * h.evaluate(X) + b, rtol=0, atol=1e-12)


def test_descriptor_round_trip():
    hs = [
        ConstantHypothesis(0.25),
        AffineHypothesis(-0.5, np.array([1.5, 0.0, 2.25])),
        TreeHypothesis(TreeSplit(1, 0.75, TreeLeaf(0.1), TreeSplit(0, -2.0, TreeLeaf(0.9), TreeLeaf(0.3)))),
    ]
    for h in hs:
        back = hypothesis_from_descriptor(h.descriptor())
        assert back.descriptor() == h.descriptor()


def test_descriptor_rejects_unknown():
    with pytest.raises(DataError):
        hypothesis_from_descriptor({"kind": "sigmoid", "value": 1.0})
    with pytest.raises(DataError):
        hypothesis_from_descriptor({"kind": "constant", "value": 1.0, "extra": 2})
    with pytest.raises(DataError):
        hypothesis_from_descriptor({"kind": "constant"})


# ---------------------------------------------------------------------------
# model prediction


def test_predict_initial_only():
    model = LevelSetModel(Grid(4), ConstantHypothesis(0.4), ())
    assert predict(model, np.array([3.0])) == 0.5  # 0.4 rounds up to 0.5


def test_predict_one_round():
    # level index 2 is the value 0.5; its hypothesis outputs 0.9, rounded to 1.0
    model = LevelSetModel(Grid(4), ConstantHypothesis(0.5), ({2: ConstantHypothesis(0.9)},))
    assert predict(model, np.array([0.0])) == 1.0


def test_predict_missing_level_is_identity():
    model = LevelSetModel(Grid(4), ConstantHypothesis(0.5), ({3: ConstantHypothesis(0.9)},))
    assert predict(model, np.array([0.0])) == 0.5


def test_predict_applies_at_most_one_hypothesis_per_round():
    # The round maps level 2 -> 0.5 (level 5) and level 5 -> 0.9. A point
    # starting at level 2 must land on 0.5 and stop; level 5's hypothesis
    # belongs to points that were at level 5 BEFORE the round.
    rounds = ({2: ConstantHypothesis(0.5), 5: ConstantHypothesis(0.9)},)
    model = LevelSetModel(Grid(10), ConstantHypothesis(0.2), rounds)
    assert predict(model, np.array([0.0])) == 0.5
    # a second round does move it onward
    two = LevelSetModel(Grid(10), ConstantHypothesis(0.2),
                        rounds + ({5: ConstantHypothesis(0.9)},))
    assert predict(two, np.array([0.0])) == 0.9


def test_predict_dimension_check():
    model = LevelSetModel(Grid(4), ConstantHypothesis(0.5), (), n_features=2)
    with pytest.raises(DataError):
        predict(model, np.array([1.0]))
    with pytest.raises(DataError):
        predict_batch(model, np.zeros((3, 1)))


def test_level_key_validation():
    with pytest.raises(DataError):
        LevelSetModel(Grid(4), ConstantHypothesis(0.5), ({5: ConstantHypothesis(0.1)},))
    with pytest.raises(DataError):
        LevelSetModel(Grid(4), ConstantHypothesis(0.5), ({-1: ConstantHypothesis(0.1)},))


@given(st.integers(0, 10_000))
def test_predict_lands_on_grid(seed):
    rng = rng_for(seed)
    m = int(rng.integers(1, 30))
    rounds = tuple(
        {int(lvl): ConstantHypothesis(float(rng.uniform(-0.2, 1.2)))
         for lvl in rng.integers(0, m + 1, size=rng.integers(0, 4))}
        for _ in range(int(rng.integers(0, 3)))
    )
    model = LevelSetModel(Grid(m), AffineHypothesis(float(rng.normal()), rng.normal(size=2)), rounds)
    X = rng.normal(size=(5, 2))
    out = predict_batch(model, X)
    assert all(v in Grid(m).values for v in out)
    # batch equals per-row evaluation
    assert out.tolist() == [predict(model, x) for x in X]


# ---------------------------------------------------------------------------
# partition


def test_partition_constant_model():
    data = Dataset(np.arange(6, dtype=float).reshape(-1, 1), np.linspace(0, 1, 6))
    model = LevelSetModel(Grid(4), ConstantHypothesis(0.5), ())
    part = partition_by_level(model, data)
    assert list(part) == [2]
    assert part[2].tolist() == [0, 1, 2, 3, 4, 5]


def test_partition_two_point_stump_model(two_point):
    split = TreeHypothesis(TreeSplit(0, 0.5, TreeLeaf(0.0), TreeLeaf(1.0)))
    model = LevelSetModel(Grid(4), split, ())
    part = partition_by_level(model, two_point)
    assert {lvl: rows.tolist() for lvl, rows in part.items()} == {0: [0], 4: [1]}


def test_partition_levels_match_predictions():
    # regression guard: group labels must come from the rows' own level,
    # not from a position in the sorted order
    rng = rng_for(3)
    data = Dataset(rng.uniform(-2, 2, size=(40, 1)), rng.uniform(0, 1, 40))
    model = LevelSetModel(Grid(10), AffineHypothesis(0.5, np.array([0.25])), ())
    part = partition_by_level(model, data)
    idx = model.predict_indices(data.features)
    assert len(part) >= 3
    for lvl, rows in part.items():
        assert np.array_equal(np.flatnonzero(idx == lvl), rows)


@given(st.integers(0, 10_000))
def test_partition_is_disjoint_cover(seed):
    rng = rng_for(seed)
    n = int(rng.integers(1, 30))
    data = Dataset(rng.normal(size=(n, 1)), rng.uniform(0, 1, n))
    model = LevelSetModel(Grid(int(rng.integers(1, 12))),
                          AffineHypothesis(float(rng.normal()), rng.normal(size=1)), ())
    part = partition_by_level(model, data)
    merged = np.concatenate(list(part.values()))
    assert sorted(merged.tolist()) == list(range(n))
