"""Tests for the boosting loop: halting, thresholds, reports, and probes."""

import numpy as np
import pytest

from lsboost import (
    ConstantHypothesis,
    ContractError,
    Dataset,
    Grid,
    LevelSetModel,
    OracleSpec,
    TrainConfig,
    TreeHypothesis,
    TreeLeaf,
    TreeSplit,
    UsageError,
    dataset_summary,
    mse,
    predict_batch,
    probe_round,
    serialize_model,
    train,
    training_config_obj,
)

CONSTANT = OracleSpec(kind="constant")
STUMP = OracleSpec(kind="stump")


# ---------------------------------------------------------------- worked runs


def test_constant_labels_halt_immediately():
    """Labels already on the grid: round 0 is perfect, round 1 finds nothing."""
    X = np.array([[0.1], [0.4], [0.6], [0.9]])
    y = np.array([0.3, 0.3, 0.3, 0.3])
    model, report = train(Dataset(X, y), TrainConfig(oracle=CONSTANT, levels_m=10))
    assert report.executed_rounds == 1
    assert len(model.rounds) == 0
    assert report.records[-1].mse == 0.0
    assert report.halting_reason == "converged"
    preds = predict_batch(model, X)
    assert np.all(preds == 0.3)


def test_constant_oracle_cannot_split_a_level(two_point):
    """A constant fit on a single level reproduces that level's mean."""
    model, report = train(two_point, TrainConfig(oracle=CONSTANT, levels_m=4))
    assert report.executed_rounds == 1
    assert len(model.rounds) == 0
    assert report.records[-1].mse == 0.25
    preds = predict_batch(model, two_point.features)
    assert np.all(preds == 0.5)


def test_stump_splits_the_two_point_level(two_point):
    """One stump round separates the two labels; improvement hits the
    threshold exactly (0.25 cut with threshold alpha/(2B) = 0.25)."""
    config = TrainConfig(oracle=STUMP, levels_m=4)
    assert config.threshold == 0.25
    model, report = train(two_point, config)
    assert report.executed_rounds == 2
    assert len(model.rounds) == 1
    assert report.records[-1].mse == 0.0
    assert report.records[0].mse - report.records[1].mse == 0.25
    assert report.final_improvement == 0.0
    preds = predict_batch(model, two_point.features)
    assert preds[0] == 0.0 and preds[1] == 1.0


def test_custom_initial_is_rounded_to_the_grid():
    X = np.array([[0.2], [0.8]])
    y = np.array([0.4, 0.4])
    model, report = train(
        Dataset(X, y),
        TrainConfig(oracle=CONSTANT, levels_m=10),
        initial=ConstantHypothesis(0.42),
    )
    # 0.42 rounds to the nearest level 0.4, which matches the labels exactly.
    assert report.records[0].mse == 0.0
    assert np.all(predict_batch(model, X) == 0.4)


def test_invalid_initial_predictions_rejected():
    X = np.array([[0.2], [0.8]])
    y = np.array([0.4, 0.4])
    with pytest.raises(ContractError, match="initial hypothesis"):
        train(
            Dataset(X, y),
            TrainConfig(oracle=CONSTANT, levels_m=10),
            initial=ConstantHypothesis(float("nan")),
        )


# ------------------------------------------------------------------ probing


def test_probe_round_measures_the_next_improvement():
    """A constant-zero model on all-one labels gains exactly 1.0 from one
    constant round at m=2."""
    model = LevelSetModel(
        grid=Grid(2), initial=ConstantHypothesis(0.0), rounds=(), n_features=1
    )
    data = Dataset(np.array([[0.3], [0.7]]), np.array([1.0, 1.0]))
    gain = probe_round(model, data, TrainConfig(oracle=CONSTANT, levels_m=2))
    assert gain == 1.0


def test_probe_round_matches_final_improvement(trained_tree):
    model, report, config, data = trained_tree
    gain = probe_round(model, data, config)
    assert gain == report.final_improvement
    assert gain < config.threshold


def test_probe_round_rejects_grid_mismatch(trained_tree):
    model, _, config, data = trained_tree
    other = TrainConfig(oracle=config.oracle, levels_m=50)
    with pytest.raises(UsageError, match="grid"):
        probe_round(model, data, other)


# -------------------------------------------------------------- configuration


def test_threshold_is_exactly_one_over_m():
    assert TrainConfig(oracle=CONSTANT, levels_m=100).threshold == 0.01
    assert TrainConfig(oracle=CONSTANT, levels_m=1000).threshold == 0.001
    assert TrainConfig(oracle=CONSTANT, levels_m=100).threshold == 1.0 / 100
    assert TrainConfig(oracle=CONSTANT, levels_m=1000).threshold == 1.0 / 1000


def test_alpha_determines_m():
    config = TrainConfig(oracle=CONSTANT, alpha=0.02, bound_B=1.0)
    assert config.m == 100
    assert config.threshold == 0.01
    config = TrainConfig(oracle=CONSTANT, alpha=0.5)
    assert config.m == 4
    assert config.threshold == 0.25


def test_levels_m_determines_alpha():
    config = TrainConfig(oracle=CONSTANT, levels_m=4, bound_B=1.0)
    assert config.effective_alpha == 0.5


def test_consistent_alpha_and_levels_accepted():
    config = TrainConfig(oracle=CONSTANT, alpha=0.5, levels_m=4, bound_B=1.0)
    assert config.m == 4


def test_inconsistent_alpha_and_levels_rejected():
    with pytest.raises(UsageError, match="disagree"):
        TrainConfig(oracle=CONSTANT, alpha=0.3, levels_m=4)


@pytest.mark.parametrize(
    "kwargs",
    [
        {},  # neither alpha nor levels_m
        {"alpha": 0.0},
        {"alpha": 1.0},
        {"alpha": -0.1},
        {"levels_m": 0},
        {"alpha": 0.5, "bound_B": 0.0},
        {"alpha": 0.5, "bound_B": float("inf")},
        {"alpha": 0.5, "min_level_size": -1},
        {"alpha": 0.5, "max_rounds": 0},
        {"alpha": 0.5, "thread_count": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(UsageError):
        TrainConfig(oracle=CONSTANT, **kwargs)


def test_default_round_budget_scales_with_m():
    config = TrainConfig(oracle=CONSTANT, levels_m=100)
    assert config.effective_max_rounds == 101
    capped = TrainConfig(oracle=CONSTANT, levels_m=100, max_rounds=7)
    assert capped.effective_max_rounds == 7


# -------------------------------------------------------- level-size skipping


def _one_vs_three():
    """Initial model sends row 0 to level 0 and rows 1-3 to level m."""
    initial = TreeHypothesis(
        root=TreeSplit(
            feature=0, threshold=0.5, left=TreeLeaf(0.0), right=TreeLeaf(1.0)
        )
    )
    data = Dataset(
        np.array([[0.0], [0.6], [0.7], [0.8]]), np.array([1.0, 1.0, 1.0, 1.0])
    )
    return initial, data


def test_small_levels_are_skipped():
    initial, data = _one_vs_three()
    config = TrainConfig(oracle=CONSTANT, levels_m=4, min_level_size=2)
    model, report = train(data, config, initial=initial)
    # The singleton level is never handed to the oracle, so its row stays put.
    assert report.executed_rounds == 1
    assert len(model.rounds) == 0
    preds = predict_batch(model, data.features)
    assert preds[0] == 0.0
    assert np.all(preds[1:] == 1.0)
    assert report.records[-1].mse == 0.25


def test_small_levels_move_without_the_size_floor():
    initial, data = _one_vs_three()
    config = TrainConfig(oracle=CONSTANT, levels_m=4, min_level_size=1)
    model, report = train(data, config, initial=initial)
    assert len(model.rounds) == 1
    assert report.records[-1].mse == 0.0
    assert np.all(predict_batch(model, data.features) == 1.0)


# ------------------------------------------------------------- round budgets


def test_max_rounds_exhaustion_is_a_contract_error(two_point):
    config = TrainConfig(oracle=STUMP, levels_m=4, max_rounds=1)
    with pytest.raises(ContractError, match="halting rule not reached"):
        train(two_point, config)


# ------------------------------------------------------------- report checks


def test_report_invariants(trained_tree):
    model, report, config, data = trained_tree
    records = report.records
    assert len(records) >= 2  # the fixture run keeps at least one round
    assert records[0].round_index == 0
    assert records[0].oracle_calls == 0
    assert report.executed_rounds == len(records)
    assert len(model.rounds) == len(records) - 1
    assert report.halting_reason == "converged"
    assert report.threshold == config.threshold
    assert report.final_improvement < config.threshold

    seq = report.mse_sequence()
    for prev, cur in zip(seq, seq[1:]):
        # every kept round cut the error by at least the threshold, exactly
        assert prev - cur >= config.threshold
    for rec in records[1:]:
        assert rec.oracle_calls >= 1
        assert 1 <= rec.nonempty_levels <= config.m + 1
        assert rec.round_index >= 1

    assert report.max_rounding_penalty <= 1.0 / config.m


def test_training_and_prediction_agree_bitwise(trained_tree):
    """The report's final error equals the error of replayed predictions with
    no tolerance: training and inference share the same arithmetic."""
    model, report, _, data = trained_tree
    preds = predict_batch(model, data.features)
    assert mse(preds, data.labels) == report.records[-1].mse
    idx = model.predict_indices(data.features)
    assert report.records[-1].nonempty_levels == int(np.unique(idx).size)


def test_thread_count_does_not_change_the_model(c0_small):
    data, record = c0_small
    oracle = OracleSpec(kind="tree", depth=3)
    runs = []
    for threads in (1, 4):
        config = TrainConfig(oracle=oracle, levels_m=100, thread_count=threads)
        model, report = train(data, config)
        doc = serialize_model(
            model, training_config_obj(config), dataset_summary(data), record
        )
        runs.append((doc, report.mse_sequence(), report.final_improvement))
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]
    assert runs[0][2] == runs[1][2]


def test_serialized_config_is_thread_independent(trained_tree):
    _, _, config, _ = trained_tree
    obj_1 = training_config_obj(config)
    obj_8 = training_config_obj(
        TrainConfig(
            oracle=config.oracle,
            levels_m=config.levels_m,
            thread_count=8,
            max_rounds=500,
        )
    )
    assert obj_1 == obj_8
    assert "thread_count" not in obj_1 and "max_rounds" not in obj_1
