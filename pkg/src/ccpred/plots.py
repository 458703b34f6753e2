"""Figure rendering for the CLI report paths.

Every artifact-producing command writes its delimited table first and
then, via these helpers, a PNG alongside it.  The Agg backend is forced
so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sepplan.elution import ElutionWindow
from .sepplan.trace import PeakBounds, TraceSignal

_DPI = 150


def save_parity_figure(path, pred: np.ndarray, truth: np.ndarray,
                       labels=("V start", "V end")) -> None:
    """Predicted-vs-observed scatter, one panel per target."""
    fig, axes = plt.subplots(1, pred.shape[1], figsize=(5 * pred.shape[1], 4.5))
    axes = np.atleast_1d(axes)
    for t, ax in enumerate(axes):
        ax.scatter(truth[:, t], pred[:, t], s=12, alpha=0.6,
                   edgecolors="none")
        lo = min(truth[:, t].min(), pred[:, t].min())
        hi = max(truth[:, t].max(), pred[:, t].max())
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=1)
        ax.set_xlabel(f"observed {labels[t]} (mL)")
        ax.set_ylabel(f"predicted {labels[t]} (mL)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_curve_figure(path, x, series: dict[str, list[float]],
                      xlabel: str, ylabel: str) -> None:
    """One or more metric curves over a shared grid."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, values in series.items():
        ax.plot(x, values, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_training_figure(path, train_curve, val_curve) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(train_curve, label="train")
    ax.plot(val_curve, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_trace_figure(path, trace: TraceSignal, bounds: PeakBounds,
                      threshold: float) -> None:
    """Trace with its detection threshold and detected bounds."""
    fig, ax = plt.subplots(figsize=(7, 4))
    times = trace.times_min()
    ax.plot(times, trace.absorbance, linewidth=0.9)
    ax.axhline(threshold, color="gray", linestyle=":", label="threshold")
    if bounds.valid:
        ax.axvline(bounds.t1_min, color="tab:green", linestyle="--",
                   label="start")
        ax.axvline(bounds.t2_min, color="tab:red", linestyle="--", label="end")
    ax.set_xlabel("time (min)")
    ax.set_ylabel("absorbance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_windows_figure(path, rows: list[tuple[str, ElutionWindow,
                                               ElutionWindow, float]]) -> None:
    """Quantile windows for both compounds per candidate condition.

    ``rows`` holds (condition label, window A, window B, probability).
    """
    fig, ax = plt.subplots(figsize=(7, 1.2 + 0.9 * len(rows)))
    for i, (label, wa, wb, sp) in enumerate(rows):
        base = len(rows) - 1 - i
        for offset, window, color in ((0.18, wa, "tab:blue"),
                                      (-0.18, wb, "tab:orange")):
            ax.plot([window.v_start.q10, window.v_end.q90],
                    [base + offset] * 2, color=color, linewidth=6, alpha=0.35)
            ax.plot([window.v_start.q50, window.v_end.q50],
                    [base + offset] * 2, color=color, linewidth=6)
        ax.text(ax.get_xlim()[1], base, f" sp={sp:.2f}", va="center")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([label for label, *_ in reversed(rows)])
    ax.set_xlabel("elution volume (mL)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
