"""Delimited-table and model-file input/output.

All model files are single JSON documents with sorted keys and no
insignificant whitespace, so serializing the same model twice yields the
same bytes. Parsing is strict: unknown fields anywhere in the document are
rejected rather than ignored.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Grid, LevelSetModel, RoundRecord, TrainReport, hypothesis_from_descriptor
from .errors import DataError, UsageError
from .learners import OracleSpec
from .train import TrainConfig

__all__ = [
    "NormalizationRecord",
    "PreprocessSpec",
    "LoadedCsv",
    "load_csv",
    "read_column_raw",
    "read_model_input",
    "load_groups_csv",
    "dataset_fingerprint",
    "dataset_summary",
    "training_config_obj",
    "oracle_to_obj",
    "oracle_from_obj",
    "serialize_model",
    "parse_model",
    "ParsedModel",
    "write_model",
    "read_model",
    "write_report_csv",
    "read_report_csv",
    "write_predictions_csv",
    "write_dataset_csv",
    "write_compare_csv",
    "write_json",
    "read_json",
    "MODEL_FORMAT",
    "MODEL_VERSION",
]

MODEL_FORMAT = "lsboost-model"
MODEL_VERSION = 1

_JSON_KW = {"sort_keys": True, "separators": (",", ":")}


def _check_keys(obj, context, required, optional=frozenset()):
    if not isinstance(obj, dict):
        raise DataError(f"{context} must be a JSON object")
    keys = set(obj)
    missing = sorted(set(required) - keys)
    if missing:
        raise DataError(f"{context} is missing required field(s): {', '.join(missing)}")
    unknown = sorted(keys - set(required) - set(optional))
    if unknown:
        raise DataError(f"{context} has unknown field(s): {', '.join(unknown)}")


# ---------------------------------------------------------------------------
# label normalization


@dataclass(frozen=True)
class NormalizationRecord:
    """Affine map raw -> (min(raw, cap) - lo) / (hi - lo), clipped to [0, 1].

    Stores the constants used to rescale training labels so held-out labels
    can be pushed through the identical map. A degenerate range (hi <= lo)
    maps everything to 0.0.
    """

    lo: float
    hi: float
    cap: float | None = None

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise DataError(f"normalization {name} must be finite, got {v}")
        if self.cap is not None and not np.isfinite(self.cap):
            raise DataError(f"normalization cap must be finite, got {self.cap}")

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.cap is not None:
            values = np.minimum(values, self.cap)
        span = self.hi - self.lo
        if span <= 0.0:
            return np.zeros_like(values)
        return np.clip((values - self.lo) / span, 0.0, 1.0)

    def to_obj(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "cap": self.cap}

    @staticmethod
    def from_obj(obj) -> "NormalizationRecord":
        _check_keys(obj, "normalization record", {"lo", "hi", "cap"})
        return NormalizationRecord(lo=float(obj["lo"]), hi=float(obj["hi"]),
                                   cap=None if obj["cap"] is None else float(obj["cap"]))


@dataclass(frozen=True)
class PreprocessSpec:
    """How to turn a raw table into a Dataset: which column is the label,
    an optional upper cap applied before anything else, and whether to
    min-max rescale (off means the labels must already sit in [0, 1])."""

    label: str
    cap: float | None = None
    rescale: bool = True

    def __post_init__(self):
        if not self.label:
            raise UsageError("label column name must be non-empty")
        if self.cap is not None and not np.isfinite(self.cap):
            raise UsageError(f"cap must be finite, got {self.cap}")


@dataclass
class LoadedCsv:
    data: Dataset
    normalization: NormalizationRecord
    feature_names: list[str] = field(default_factory=list)
    label_name: str = "label"


# ---------------------------------------------------------------------------
# delimited tables


def _read_matrix(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise DataError(f"{path} has duplicate column name(s): {', '.join(dupes)}")
    cells = rows[1:]
    if not cells:
        raise DataError(f"{path} has a header but no data rows")
    width = len(header)
    for i, row in enumerate(cells):
        if len(row) != width:
            raise DataError(f"{path}, line {i + 2}: expected {width} fields, found {len(row)}")
    return header, cells


def _parse_column(raw, name) -> np.ndarray:
    try:
        out = np.asarray(raw, dtype=np.float64)
    except ValueError:
        for i, cell in enumerate(raw):
            try:
                float(cell)
            except ValueError:
                raise DataError(
                    f"column {name!r}, line {i + 2}: {cell!r} is not a real number"
                ) from None
        raise
    bad = ~np.isfinite(out)
    if bad.any():
        raise DataError(f"column {name!r}, line {int(np.argmax(bad)) + 2}: value must be finite")
    return out


def _column(cells, idx):
    return [row[idx] for row in cells]


def load_csv(path, preprocess: PreprocessSpec, drop_columns=(),
             reuse_normalization: NormalizationRecord | None = None) -> LoadedCsv:
    """Read a CSV with a header row into a Dataset.

    Every column other than the label (and any drop_columns) is a feature,
    in file order. The label pipeline is cap, then min-max rescale; passing
    reuse_normalization applies previously stored constants instead of the
    file's own range.
    """
    header, cells = _read_matrix(path)
    if preprocess.label not in header:
        raise DataError(
            f"label column {preprocess.label!r} not found; file has: {', '.join(header)}"
        )
    drops = set(drop_columns)
    missing = sorted(drops - set(header))
    if missing:
        raise DataError(f"column(s) not found: {', '.join(missing)}")
    feature_names = [c for c in header if c != preprocess.label and c not in drops]
    if not feature_names:
        raise DataError(f"{path} has no feature columns besides the label")

    features = np.column_stack(
        [_parse_column(_column(cells, header.index(c)), c) for c in feature_names]
    )
    raw = _parse_column(_column(cells, header.index(preprocess.label)), preprocess.label)

    if not preprocess.rescale:
        labels = raw if preprocess.cap is None else np.minimum(raw, preprocess.cap)
        record = NormalizationRecord(lo=0.0, hi=1.0, cap=preprocess.cap)
        return LoadedCsv(Dataset(features, labels), record, feature_names, preprocess.label)

    if reuse_normalization is not None:
        record = reuse_normalization
    else:
        capped = raw if preprocess.cap is None else np.minimum(raw, preprocess.cap)
        lo, hi = float(capped.min()), float(capped.max())
        if hi <= lo:
            warnings.warn(f"label column {preprocess.label!r} has zero range; "
                          "all labels normalize to 0.0", stacklevel=2)
        record = NormalizationRecord(lo=lo, hi=hi, cap=preprocess.cap)
    return LoadedCsv(Dataset(features, record.apply(raw)), record,
                     feature_names, preprocess.label)


def read_column_raw(path, name) -> list[str]:
    """One column of a CSV as unparsed strings (e.g. subset tags)."""
    header, cells = _read_matrix(path)
    if name not in header:
        raise DataError(f"column {name!r} not found; file has: {', '.join(header)}")
    return _column(cells, header.index(name))


def read_model_input(path, feature_names, label_column=None,
                     normalization: NormalizationRecord | None = None,
                     require_label=False):
    """Feature matrix (and optionally labels) for a trained model.

    When feature_names is given the columns are matched by name and placed
    in that order; otherwise all non-label columns are taken in file order.
    Labels are parsed only when require_label is set and then go through the
    supplied normalization record. Returns (features, labels_or_None).
    """
    header, cells = _read_matrix(path)
    if feature_names is None:
        feature_names = [c for c in header if c != label_column]
        if not feature_names:
            raise DataError(f"{path} has no feature columns")
    else:
        missing = sorted(set(feature_names) - set(header))
        if missing:
            raise DataError(f"model expects feature column(s) missing from {path}: "
                            f"{', '.join(missing)}")
    features = np.column_stack(
        [_parse_column(_column(cells, header.index(c)), c) for c in feature_names]
    )
    labels = None
    if require_label:
        if label_column is None:
            raise DataError("no label column is recorded for this model; pass one explicitly")
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not found; "
                            f"file has: {', '.join(header)}")
        labels = _parse_column(_column(cells, header.index(label_column)), label_column)
        if normalization is not None:
            labels = normalization.apply(labels)
    return features, labels


def load_groups_csv(path, expected_rows) -> tuple[list[str], np.ndarray]:
    """Audit-function table: one named real-valued column per function,
    row-aligned with the evaluation data."""
    header, cells = _read_matrix(path)
    if len(cells) != expected_rows:
        raise DataError(f"{path} has {len(cells)} rows but the data has {expected_rows}")
    matrix = np.column_stack([_parse_column(_column(cells, i), name)
                              for i, name in enumerate(header)])
    return header, matrix


# ---------------------------------------------------------------------------
# model files


def dataset_fingerprint(data: Dataset) -> str:
    h = hashlib.sha256()
    h.update(f"{data.n}:{data.d}".encode())
    h.update(np.ascontiguousarray(data.features, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(data.labels, dtype=np.float64).tobytes())
    return h.hexdigest()


def dataset_summary(data: Dataset, feature_names=None, label_column=None) -> dict:
    return {
        "n": data.n,
        "d": data.d,
        "sha256": dataset_fingerprint(data),
        "feature_columns": list(feature_names) if feature_names is not None else None,
        "label_column": label_column,
    }


def oracle_to_obj(spec: OracleSpec) -> dict:
    return {"kind": spec.kind, "depth": spec.depth,
            "min_leaf": spec.min_leaf, "ridge": spec.ridge}


def oracle_from_obj(obj) -> OracleSpec:
    _check_keys(obj, "oracle", {"kind", "depth", "min_leaf", "ridge"})
    try:
        return OracleSpec(kind=obj["kind"], depth=int(obj["depth"]),
                          min_leaf=int(obj["min_leaf"]), ridge=float(obj["ridge"]))
    except UsageError as exc:
        raise DataError(f"invalid oracle in model file: {exc}") from None


def training_config_obj(config: TrainConfig) -> dict:
    # thread_count and max_rounds steer execution, not the function the model
    # computes, so they stay out of the persisted document.
    return {
        "alpha": config.effective_alpha,
        "bound_B": config.bound_B,
        "levels_m": config.levels_m,
        "min_level_size": config.min_level_size,
        "oracle": oracle_to_obj(config.oracle),
    }


def serialize_model(model: LevelSetModel, config_obj: dict, dataset_obj: dict,
                    normalization: NormalizationRecord | None) -> str:
    rounds = [
        [[level, fit.descriptor()] for level, fit in sorted(round_map.items())]
        for round_map in model.rounds
    ]
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "m": model.grid.m,
        "initial": model.initial.descriptor(),
        "rounds": rounds,
        "config": config_obj,
        "dataset": dataset_obj,
        "normalization": None if normalization is None else normalization.to_obj(),
    }
    return json.dumps(doc, **_JSON_KW) + "\n"


@dataclass
class ParsedModel:
    model: LevelSetModel
    config: dict
    dataset: dict
    normalization: NormalizationRecord | None

    @property
    def feature_names(self):
        return self.dataset.get("feature_columns")

    @property
    def label_column(self):
        return self.dataset.get("label_column")


def parse_model(text: str) -> ParsedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    _check_keys(doc, "model file",
                {"format", "version", "m", "initial", "rounds",
                 "config", "dataset", "normalization"})
    if doc["format"] != MODEL_FORMAT:
        raise DataError(f"not a model file (format={doc['format']!r})")
    if doc["version"] != MODEL_VERSION:
        raise DataError(f"unsupported model file version {doc['version']!r}; "
                        f"this build reads version {MODEL_VERSION}")
    m = doc["m"]
    if not isinstance(m, int) or m < 1:
        raise DataError(f"model grid size must be a positive integer, got {m!r}")

    config = doc["config"]
    _check_keys(config, "model config",
                {"alpha", "bound_B", "levels_m", "min_level_size", "oracle"})
    oracle_from_obj(config["oracle"])  # validates; the dict itself is kept

    dataset = doc["dataset"]
    _check_keys(dataset, "model dataset summary",
                {"n", "d", "sha256", "feature_columns", "label_column"})
    d = dataset["d"]
    if not isinstance(d, int) or d < 1:
        raise DataError(f"model feature count must be a positive integer, got {d!r}")
    cols = dataset["feature_columns"]
    if cols is not None:
        if not isinstance(cols, list) or len(cols) != d:
            raise DataError("feature_columns must be null or one name per feature")

    normalization = doc["normalization"]
    if normalization is not None:
        normalization = NormalizationRecord.from_obj(normalization)

    if not isinstance(doc["rounds"], list):
        raise DataError("model rounds must be a list")
    rounds = []
    for t, entries in enumerate(doc["rounds"]):
        round_map = {}
        for entry in entries:
            if not (isinstance(entry, list) and len(entry) == 2):
                raise DataError(f"round {t}: each entry must be [level, hypothesis]")
            level, desc = entry
            if not isinstance(level, int) or not (0 <= level <= m):
                raise DataError(f"round {t}: level {level!r} is outside 0..{m}")
            if level in round_map:
                raise DataError(f"round {t}: level {level} appears twice")
            round_map[level] = hypothesis_from_descriptor(desc)
        rounds.append(round_map)

    model = LevelSetModel(Grid(m), hypothesis_from_descriptor(doc["initial"]),
                          tuple(rounds), n_features=d)
    return ParsedModel(model, config, dataset, normalization)


def write_model(path, model: LevelSetModel, config_obj: dict, dataset_obj: dict,
                normalization: NormalizationRecord | None) -> None:
    text = serialize_model(model, config_obj, dataset_obj, normalization)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from None


def read_model(path) -> ParsedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return parse_model(text)


# ---------------------------------------------------------------------------
# report / prediction tables

REPORT_COLUMNS = ["round", "mse", "msce", "nonempty_levels", "oracle_calls", "millis"]


def _open_write(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from None


def write_report_csv(path, report: TrainReport) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for rec in report.records:
            w.writerow([rec.round_index, repr(rec.mse), repr(rec.msce),
                        rec.nonempty_levels, rec.oracle_calls, repr(rec.millis)])


def read_report_csv(path) -> list[dict]:
    header, cells = _read_matrix(path)
    if header != REPORT_COLUMNS:
        raise DataError(f"{path} is not a training report; columns are {header}")
    out = []
    for row in cells:
        out.append({
            "round": int(row[0]),
            "mse": float(row[1]),
            "msce": float(row[2]),
            "nonempty_levels": int(row[3]),
            "oracle_calls": int(row[4]),
            "millis": float(row[5]),
        })
    return out


def write_predictions_csv(path, values) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(["index", "prediction"])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def write_dataset_csv(path, features, labels, feature_names, label_name="label") -> None:
    features = np.asarray(features, dtype=np.float64)
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow([*feature_names, label_name])
        for row, y in zip(features, labels):
            w.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def write_compare_csv(path, ls_records, gb_records) -> None:
    """Side-by-side per-round table; the shorter run's cells are blank."""
    with _open_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(["round", "ls_mse", "ls_msce", "gb_mse", "gb_msce"])
        for t in range(max(len(ls_records), len(gb_records))):
            ls = ls_records[t] if t < len(ls_records) else None
            gb = gb_records[t] if t < len(gb_records) else None
            w.writerow([
                t,
                repr(ls.mse) if ls else "",
                repr(ls.msce) if ls else "",
                repr(gb.mse) if gb else "",
                repr(gb.msce) if gb else "",
            ])


def write_json(path, obj) -> None:
    with _open_write(path) as fh:
        fh.write(json.dumps(obj, **_JSON_KW) + "\n")


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from None
