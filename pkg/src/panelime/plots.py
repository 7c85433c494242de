"""SVG figures. Written next to the JSON artifacts, never compared for determinism."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .global_explain import ICECurve  # noqa: E402
from .models.reports import EvalReport, Explanation  # noqa: E402


def _save(fig: plt.Figure, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_explanation(explanation: Explanation, path: Path | str) -> Path:
    """Horizontal bars of surrogate weights, largest |weight| on top."""
    names = explanation.top(len(explanation.features))[::-1]
    weights = [explanation.weights[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 0.4 * max(len(names), 2) + 1.2))
    ax.barh(names, weights, color=["tab:green" if w > 0 else "tab:red" for w in weights])
    ax.axvline(0.0, color="black", linewidth=0.8)
    title = f"instance {explanation.instance_id}"
    if explanation.entity is not None:
        period = "" if explanation.period is None else f" {explanation.period:g}"
        title = f"{explanation.entity}{period}"
    ax.set_title(title)
    ax.set_xlabel("local weight")
    return _save(fig, path)


def plot_ice(curve: ICECurve, path: Path | str) -> Path:
    """One thin line per instance, PDP in bold."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for row in curve.predictions:
        ax.plot(curve.grid, row, color="tab:blue", alpha=0.25, linewidth=0.8)
    ax.plot(curve.grid, curve.pdp, color="black", linewidth=2.0, label="PDP")
    ax.set_xlabel(curve.feature)
    ax.set_ylabel("prediction")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_eval(report: EvalReport, path: Path | str) -> Path:
    """Grouped bars of LIME-selected vs random-column R^2 per run."""
    runs = np.arange(len(report.runs))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(runs) + 2), 4))
    ax.bar(runs - width / 2, [r.r2_lime for r in report.runs], width, label="LIME columns")
    ax.bar(runs + width / 2, [r.r2_random for r in report.runs], width, label="random columns")
    ax.axhline(report.r2_full_model, color="black", linestyle="--", linewidth=0.8, label="all columns")
    ax.set_xticks(runs, [f"run {i + 1}" for i in runs])
    ax.set_ylabel("R²")
    ax.set_title(f"k = {report.k_columns}")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_frequency(features: Sequence[str], counts: Sequence[int], path: Path | str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 0.4 * max(len(features), 2) + 1.2))
    ax.barh(list(features)[::-1], list(counts)[::-1], color="tab:gray")
    ax.set_xlabel("times among top features")
    return _save(fig, path)


__all__ = ["plot_explanation", "plot_ice", "plot_eval", "plot_frequency"]
