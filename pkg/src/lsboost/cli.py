"""Command-line front end.

Subcommands: synth, train, predict, eval, audit, compare, check-wl.
Results go to the requested files plus a one-line JSON summary on stdout;
failures emit a one-line JSON diagnostic on stderr and exit 2 (bad usage),
3 (bad data), or 4 (a broken internal guarantee).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import Dataset, predict_batch
from .errors import LSBoostError, UsageError
from .gradient_boosting import GBConfig, gb_train
from .io import (
    PreprocessSpec,
    dataset_summary,
    load_csv,
    load_groups_csv,
    read_column_raw,
    read_model,
    read_model_input,
    training_config_obj,
    write_compare_csv,
    write_dataset_csv,
    write_json,
    write_model,
    write_predictions_csv,
    write_report_csv,
)
from .learners import OracleSpec
from .metrics import (
    calibration_from_indices,
    check_weak_learning,
    mse,
    multicalibration_error,
)
from .plots import render_comparison, render_training_report
from .surfaces import SurfaceSpec, make_sidecar, sample_surface
from .train import TrainConfig, train

__all__ = ["main", "main_entry", "build_parser", "parse_learner"]


def parse_learner(text: str, ridge: float = 1e-10, min_leaf: int = 1) -> OracleSpec:
    """Learner flag syntax: constant | linear | stump | tree:DEPTH."""
    if text in ("constant", "linear", "stump"):
        return OracleSpec(kind=text, ridge=ridge, min_leaf=min_leaf)
    if text.startswith("tree:"):
        try:
            depth = int(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad tree depth in {text!r}; expected tree:DEPTH") from None
        return OracleSpec(kind="tree", depth=depth, ridge=ridge, min_leaf=min_leaf)
    if text == "tree":
        raise UsageError("tree needs an explicit depth, e.g. tree:3")
    raise UsageError(f"unknown learner {text!r}; "
                     "expected constant, linear, stump, or tree:DEPTH")


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _plot_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    spec = SurfaceSpec(surface=args.surface, n=args.n, seed=args.seed,
                       noise_sd=args.noise_sd)
    data, record = sample_surface(spec)
    write_dataset_csv(args.out, data.features, data.labels, ["x1", "x2"], "label")
    sidecar = Path(args.out).with_suffix(".norm.json")
    write_json(sidecar, make_sidecar(spec, record))
    _emit({"n": spec.n, "out": str(args.out), "sidecar": str(sidecar),
           "surface": spec.surface})
    return 0


def _train_config(args) -> TrainConfig:
    oracle = parse_learner(args.learner, ridge=args.ridge)
    return TrainConfig(
        oracle=oracle,
        alpha=args.alpha,
        bound_B=args.bound,
        levels_m=args.levels,
        min_level_size=args.min_level_size,
        max_rounds=args.max_rounds,
        thread_count=args.threads,
    )


def _cmd_train(args) -> int:
    config = _train_config(args)
    loaded = load_csv(args.data, PreprocessSpec(label=args.label, cap=args.cap))
    model, report = train(loaded.data, config)
    write_model(args.model_out, model, training_config_obj(config),
                dataset_summary(loaded.data, loaded.feature_names, loaded.label_name),
                loaded.normalization)
    write_report_csv(args.report_out, report)
    plot = None
    if not args.no_plot:
        plot = render_training_report(report, _plot_path(args.report_out))
    last = report.records[-1]
    _emit({
        "executed_rounds": report.executed_rounds,
        "final_improvement": report.final_improvement,
        "halting_reason": report.halting_reason,
        "kept_rounds": len(model.rounds),
        "model": str(args.model_out),
        "mse": last.mse,
        "msce": last.msce,
        "plot": plot,
        "report": str(args.report_out),
    })
    return 0


def _cmd_predict(args) -> int:
    parsed = read_model(args.model)
    features, _ = read_model_input(args.data, parsed.feature_names,
                                   label_column=parsed.label_column)
    values = predict_batch(parsed.model, features)
    write_predictions_csv(args.out, values)
    _emit({"out": str(args.out), "rows": int(values.shape[0])})
    return 0


def _eval_table(args, parsed):
    label = args.label if args.label is not None else parsed.label_column
    features, labels = read_model_input(
        args.data, parsed.feature_names, label_column=label,
        normalization=parsed.normalization, require_label=True,
    )
    return Dataset(features, labels)


def _cmd_eval(args) -> int:
    parsed = read_model(args.model)
    data = _eval_table(args, parsed)
    values = predict_batch(parsed.model, data.features)
    idx = parsed.model.predict_indices(data.features)
    cal = calibration_from_indices(idx, data.labels, parsed.model.grid)
    _emit({"k1": cal.k1, "kinf": cal.kinf, "mse": mse(values, data.labels),
           "msce": cal.k2})
    return 0


def _cmd_audit(args) -> int:
    parsed = read_model(args.model)
    data = _eval_table(args, parsed)
    names, matrix = load_groups_csv(args.groups, data.n)
    report = multicalibration_error(
        parsed.model, data, [matrix[:, j] for j in range(len(names))]
    )
    grid = parsed.model.grid
    _emit({
        "functions": {
            name: {"k1": rep.k1, "k2": rep.k2, "kinf": rep.kinf}
            for name, rep in zip(names, report.reports)
        },
        "worst": {
            "contribution": report.worst_contribution,
            "function": names[report.worst_function],
            "level_index": report.worst_level,
            "level_value": float(grid.values[report.worst_level]),
        },
    })
    return 0


def _cmd_compare(args) -> int:
    config = _train_config(args)
    loaded = load_csv(args.data, PreprocessSpec(label=args.label, cap=args.cap))
    model, report = train(loaded.data, config)
    gb_config = GBConfig(oracle=config.oracle, rounds=args.gb_rounds,
                         learning_rate=args.gb_lr)
    _, gb_records = gb_train(loaded.data, gb_config, grid=config.grid)
    write_compare_csv(args.out, report.records, gb_records)
    plot = None
    if not args.no_plot:
        plot = render_comparison(report.records, gb_records, _plot_path(args.out))
    _emit({
        "gb_final_mse": gb_records[-1].mse,
        "gb_final_msce": gb_records[-1].msce,
        "gb_rounds": len(gb_records) - 1,
        "ls_final_mse": report.records[-1].mse,
        "ls_final_msce": report.records[-1].msce,
        "ls_kept_rounds": len(model.rounds),
        "out": str(args.out),
        "plot": plot,
    })
    return 0


def _cmd_check_wl(args) -> int:
    oracle = parse_learner(args.learner, ridge=args.ridge)
    comparison = None
    if args.comparison is not None:
        comparison = parse_learner(args.comparison, ridge=args.ridge)
    loaded = load_csv(args.data, PreprocessSpec(label=args.label),
                      drop_columns=[args.subset_col])
    tags = read_column_raw(args.data, args.subset_col)
    violations = 0
    count = 0
    for tag in sorted(set(tags)):
        rows = [i for i, t in enumerate(tags) if t == tag]
        audit = check_weak_learning(loaded.data, rows, oracle, args.gamma,
                                    comparison=comparison)
        count += 1
        if audit.premise and not audit.conclusion:
            violations += 1
        _emit({
            "benchmark_err": audit.benchmark_err,
            "conclusion": audit.conclusion,
            "const_err": audit.const_err,
            "gamma": args.gamma,
            "mass": audit.mass,
            "n": audit.subset_size,
            "oracle_err": audit.oracle_err,
            "premise": audit.premise,
            "satisfied": audit.satisfied,
            "subset": tag,
        })
    _emit({"subsets": count, "violations": violations})
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line JSON diagnostics, like every other failure
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def _add_train_flags(p, require_out=True):
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="label")
    p.add_argument("--learner", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="halting scale; each kept round must improve MSE by alpha/(2B)")
    p.add_argument("--bound", type=float, default=1.0,
                   help="squared-error scale B of the halting rule")
    p.add_argument("--levels", type=int, default=None,
                   help="prediction grid size m (sets alpha = 2B/m)")
    p.add_argument("--min-level-size", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cap", type=float, default=None,
                   help="clip raw labels above this value before rescaling")
    p.add_argument("--max-rounds", type=int, default=None,
                   help="abort (exit 4) if this many rounds do not reach the halting rule")
    p.add_argument("--ridge", type=float, default=1e-10,
                   help="diagonal regularizer for the linear learner")
    p.add_argument("--no-plot", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsboost",
                     description="level-set boosting for calibrated regression")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="sample a synthetic surface to CSV")
    p.add_argument("--surface", required=True, choices=["c0", "c1"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="fit a level-set boosting model")
    _add_train_flags(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="apply a model file to a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="MSE and calibration error on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default=None,
                   help="label column (default: the one recorded in the model)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("audit", help="multicalibration audit against a function table")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--groups", required=True,
                   help="CSV of audit functions, one column each, row-aligned with --data")
    p.add_argument("--label", default=None)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("compare", help="level-set boosting vs plain gradient boosting")
    _add_train_flags(p)
    p.add_argument("--gb-rounds", type=int, required=True)
    p.add_argument("--gb-lr", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("check-wl", help="weak-learning audit over tagged subsets")
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="label")
    p.add_argument("--subset-col", required=True,
                   help="column whose distinct values define the audited subsets")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--learner", required=True)
    p.add_argument("--comparison", default=None,
                   help="benchmark learner (default: exact per-point group means)")
    p.add_argument("--ridge", type=float, default=1e-10)
    p.set_defaults(func=_cmd_check_wl)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits itself on usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LSBoostError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return exc.exit_code


def main_entry() -> None:
    raise SystemExit(main())
