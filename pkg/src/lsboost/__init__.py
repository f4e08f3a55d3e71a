"""Level-set boosting: squared-error regression that is calibrated — and
multicalibrated against an auditor's function class — by construction.

The trainer repeatedly partitions points by their current predicted value,
fits one weak hypothesis per level set, and substitutes the fits, rounding
predictions to a fixed grid; it halts the first time a full sweep fails to
cut the mean squared error by alpha/(2B) and returns the model from before
that sweep. At that point no level set retains a correlation the learner
class can see, which is exactly multicalibration.
"""

from .core import (
    AffineHypothesis,
    ConstantHypothesis,
    Dataset,
    Grid,
    LevelSetModel,
    RoundRecord,
    TrainReport,
    TreeHypothesis,
    TreeLeaf,
    TreeSplit,
    WeakHypothesis,
    hypothesis_from_descriptor,
    partition_by_level,
    predict,
    predict_batch,
    round_to_grid,
)
from .errors import ContractError, DataError, LSBoostError, UsageError
from .gradient_boosting import GBConfig, GBModel, GBRoundRecord, gb_train
from .io import (
    LoadedCsv,
    NormalizationRecord,
    ParsedModel,
    PreprocessSpec,
    dataset_fingerprint,
    dataset_summary,
    load_csv,
    parse_model,
    read_model,
    read_report_csv,
    serialize_model,
    training_config_obj,
    write_model,
    write_report_csv,
)
from .learners import OracleSpec, fit, residual_fit
from .metrics import (
    CalibrationReport,
    ImproverResult,
    LevelStat,
    MulticalibrationReport,
    ViolationResult,
    WeakLearningAudit,
    build_improver,
    calibration_error,
    calibration_from_indices,
    calibration_from_values,
    check_weak_learning,
    mse,
    msce_from_indices,
    multicalibration_error,
    sup_sq_bound,
    violation_from_improvement,
)
from .surfaces import SurfaceSpec, eval_c0, eval_c1, make_sidecar, sample_surface
from .train import TrainConfig, probe_round, train

__version__ = "0.1.0"

__all__ = [
    "AffineHypothesis",
    "CalibrationReport",
    "ConstantHypothesis",
    "ContractError",
    "DataError",
    "Dataset",
    "GBConfig",
    "GBModel",
    "GBRoundRecord",
    "Grid",
    "ImproverResult",
    "LSBoostError",
    "LevelSetModel",
    "LevelStat",
    "LoadedCsv",
    "MulticalibrationReport",
    "NormalizationRecord",
    "OracleSpec",
    "ParsedModel",
    "PreprocessSpec",
    "RoundRecord",
    "SurfaceSpec",
    "TrainConfig",
    "TrainReport",
    "TreeHypothesis",
    "TreeLeaf",
    "TreeSplit",
    "UsageError",
    "ViolationResult",
    "WeakHypothesis",
    "WeakLearningAudit",
    "build_improver",
    "calibration_error",
    "calibration_from_indices",
    "calibration_from_values",
    "check_weak_learning",
    "dataset_fingerprint",
    "eval_c0",
    "eval_c1",
    "fit",
    "gb_train",
    "hypothesis_from_descriptor",
    "load_csv",
    "make_sidecar",
    "mse",
    "msce_from_indices",
    "multicalibration_error",
    "parse_model",
    "partition_by_level",
    "predict",
    "predict_batch",
    "probe_round",
    "read_model",
    "read_report_csv",
    "residual_fit",
    "round_to_grid",
    "sample_surface",
    "dataset_summary",
    "serialize_model",
    "training_config_obj",
    "sup_sq_bound",
    "train",
    "violation_from_improvement",
    "write_model",
    "write_report_csv",
]
