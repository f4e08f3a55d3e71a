"""Headless figure rendering for training reports and baseline comparisons."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")  # file output only; must be set before pyplot loads

import matplotlib.pyplot as plt  # noqa: E402

from .core import TrainReport

__all__ = ["render_training_report", "render_comparison"]


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def render_training_report(report: TrainReport, path) -> str:
    """Per-round squared error and calibration error, one panel each."""
    rounds = [rec.round_index for rec in report.records]
    fig, (ax_mse, ax_cal) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax_mse.plot(rounds, [rec.mse for rec in report.records], marker="o", color="tab:blue")
    ax_mse.set_xlabel("round")
    ax_mse.set_ylabel("squared error")
    ax_mse.set_title(f"training error (halted: {report.halting_reason})")
    ax_cal.plot(rounds, [rec.msce for rec in report.records], marker="o", color="tab:orange")
    ax_cal.set_xlabel("round")
    ax_cal.set_ylabel("calibration error")
    ax_cal.set_title("mean-squared calibration error")
    for ax in (ax_mse, ax_cal):
        ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def render_comparison(ls_records, gb_records, path) -> str:
    """Level-set booster vs gradient booster, per-round MSE and MSCE."""
    fig, (ax_mse, ax_cal) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for records, name, color in ((ls_records, "level-set", "tab:blue"),
                                 (gb_records, "gradient", "tab:green")):
        rounds = list(range(len(records)))
        ax_mse.plot(rounds, [r.mse for r in records], marker=".", label=name, color=color)
        ax_cal.plot(rounds, [r.msce for r in records], marker=".", label=name, color=color)
    ax_mse.set_xlabel("round")
    ax_mse.set_ylabel("squared error")
    ax_cal.set_xlabel("round")
    ax_cal.set_ylabel("calibration error")
    for ax in (ax_mse, ax_cal):
        ax.grid(True, alpha=0.3)
        ax.legend()
    return _finish(fig, path)
