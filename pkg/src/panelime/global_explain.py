"""Global views built from local explanations and from the model directly.

Submodular pick selects a small set of explanations whose features cover
the most global importance; selection frequency counts how often each
feature ranks among an explanation's top features; ICE curves sweep one
feature while holding the rest of an instance fixed.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from .blackbox import Predictor, predict
from .errors import SummaryError
from .explainer import explain_many
from .models.base import CoverageMode
from .models.policies import LimeConfig
from .models.reports import Explanation, FeatureStats, FrequencyEntry, PickSelection

logger = logging.getLogger(__name__)


# === WEIGHTS AND IMPORTANCE ===


@dataclass(frozen=True)
class WeightMatrix:
    """Dense instance-by-feature matrix of surrogate weights."""

    values: np.ndarray
    instance_ids: Tuple[int, ...]
    feature_names: Tuple[str, ...]

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.instance_ids), len(self.feature_names)):
            raise SummaryError(
                f"WEIGHTS REJECTED: matrix shape {self.values.shape} does not match "
                f"{len(self.instance_ids)} ids x {len(self.feature_names)} features."
            )
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise SummaryError("WEIGHTS REJECTED: duplicate instance ids.")

    @classmethod
    def from_explanations(
        cls, explanations: Sequence[Explanation], feature_names: Sequence[str]
    ) -> "WeightMatrix":
        names = tuple(feature_names)
        column = {name: j for j, name in enumerate(names)}
        values = np.zeros((len(explanations), len(names)))
        for i, explanation in enumerate(explanations):
            for entry in explanation.features:
                if entry.name not in column:
                    raise SummaryError(f"WEIGHTS REJECTED: unknown feature '{entry.name}'.")
                values[i, column[entry.name]] = entry.weight
        return cls(values, tuple(e.instance_id for e in explanations), names)

    def positions(self, instance_ids: Iterable[int]) -> List[int]:
        index = {iid: i for i, iid in enumerate(self.instance_ids)}
        try:
            return [index[iid] for iid in instance_ids]
        except KeyError as exc:
            raise SummaryError(f"COVERAGE REJECTED: unknown instance id {exc.args[0]}.") from None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instance_ids": list(self.instance_ids),
            "feature_names": list(self.feature_names),
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class GlobalImportance:
    values: np.ndarray
    feature_names: Tuple[str, ...]

    def to_dict(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.feature_names, self.values)}


def global_importance(W: WeightMatrix) -> GlobalImportance:
    """I_j = sqrt(sum_i |W_ij|)."""
    if W.values.size == 0:
        raise SummaryError("IMPORTANCE REJECTED: weight matrix is empty.")
    return GlobalImportance(np.sqrt(np.abs(W.values).sum(axis=0)), W.feature_names)


def _touches(values: np.ndarray, mode: CoverageMode) -> np.ndarray:
    return np.abs(values) > 0 if mode == "abs" else values > 0


def coverage(
    V: Iterable[int], W: WeightMatrix, I: GlobalImportance, mode: CoverageMode = "abs"
) -> float:
    """Total importance of the features touched by any explanation in V."""
    rows = W.positions(V)
    if not rows:
        return 0.0
    touched = _touches(W.values[rows], mode).any(axis=0)
    return float(I.values[touched].sum())


def greedy_pick(
    W: WeightMatrix, I: GlobalImportance, B: int, mode: CoverageMode = "abs"
) -> PickSelection:
    """Add the instance with the largest marginal gain until B are chosen or nothing is gained.

    Ties go to the lowest instance id.
    """
    if B < 1:
        raise SummaryError(f"PICK REJECTED: budget must be at least 1, got {B}.")
    hits = _touches(W.values, mode)
    covered = np.zeros(len(W.feature_names), dtype=bool)
    by_id = sorted(range(len(W.instance_ids)), key=lambda i: W.instance_ids[i])
    chosen: List[int] = []

    while len(chosen) < B:
        best, best_gain = None, 0.0
        for row in by_id:
            if row in chosen:
                continue
            gain = float(I.values[hits[row] & ~covered].sum())
            if gain > best_gain:
                best, best_gain = row, gain
        if best is None:
            break
        chosen.append(best)
        covered |= hits[best]

    ids = [W.instance_ids[row] for row in chosen]
    return PickSelection(instance_ids=ids, budget=B, coverage=coverage(ids, W, I, mode), mode=mode)


@dataclass(frozen=True)
class PickOutcome:
    selection: PickSelection
    explanations: List[Explanation]
    weights: WeightMatrix
    importance: GlobalImportance
    skipped: int

    @property
    def picked(self) -> List[Explanation]:
        by_id = {e.instance_id: e for e in self.explanations}
        return [by_id[i] for i in self.selection.instance_ids]


def submodular_pick(
    model: Predictor,
    rows: ArrayLike,
    stats: FeatureStats,
    config: LimeConfig,
    budget: int,
    mode: CoverageMode = "abs",
    instance_ids: Sequence[int] | None = None,
    labels: Sequence[Tuple[str, float]] | None = None,
) -> PickOutcome:
    """Explain every row, then greedily pick ``budget`` covering explanations."""
    explanations, skipped = explain_many(model, rows, stats, config, instance_ids, labels)
    if not explanations:
        raise SummaryError("PICK REJECTED: no instance could be explained.")
    W = WeightMatrix.from_explanations(explanations, model.feature_names)
    I = global_importance(W)
    selection = greedy_pick(W, I, budget, mode)
    logger.info(
        "Picked %d of %d explanation(s), coverage %.4f of %.4f",
        len(selection.instance_ids),
        len(explanations),
        selection.coverage,
        float(I.values.sum()),
    )
    return PickOutcome(selection, explanations, W, I, skipped)


def selection_frequency(picks: Sequence[Explanation], top_k: int) -> List[FrequencyEntry]:
    """How often each feature is among an explanation's ``top_k`` by |weight|."""
    if top_k < 1:
        raise SummaryError(f"FREQUENCY REJECTED: top_k must be at least 1, got {top_k}.")
    counts: Counter[str] = Counter()
    for explanation in picks:
        if not explanation.features:
            raise SummaryError(
                f"FREQUENCY REJECTED: explanation {explanation.instance_id} selected no features."
            )
        counts.update(explanation.top(top_k))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [FrequencyEntry(feature=name, count=count) for name, count in ranked]


# === ICE / PDP ===


def default_grid(
    values: ArrayLike, n_points: int = 20, lower: float = 1.0, upper: float = 99.0
) -> np.ndarray:
    """Equally spaced points between two percentiles of ``values``."""
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise SummaryError("GRID REJECTED: no observed values.")
    if n_points < 2:
        raise SummaryError(f"GRID REJECTED: need at least 2 points, got {n_points}.")
    lo, hi = np.percentile(values, [lower, upper])
    if not hi > lo:
        raise SummaryError(
            f"GRID REJECTED: percentile range [{lower}, {upper}] is empty (value {lo:g})."
        )
    return np.linspace(lo, hi, n_points)


@dataclass(frozen=True)
class ICECurve:
    """Per-instance predictions over a one-feature grid."""

    feature: str
    grid: np.ndarray
    predictions: np.ndarray
    instance_ids: Tuple[int, ...]

    @property
    def pdp(self) -> np.ndarray:
        return self.predictions.mean(axis=0)

    @property
    def slope_scores(self) -> np.ndarray:
        """(max - min prediction) / grid span, per instance."""
        if self.grid.size < 2 or not self.grid[-1] > self.grid[0]:
            raise SummaryError(f"SLOPE REJECTED: degenerate grid for '{self.feature}'.")
        return np.ptp(self.predictions, axis=1) / float(self.grid[-1] - self.grid[0])

    @property
    def slope_score(self) -> float:
        return float(self.slope_scores.mean())


def _feature_index(model: Predictor, feature: str | int) -> int:
    if isinstance(feature, (int, np.integer)):
        if not 0 <= feature < model.n_features:
            raise SummaryError(
                f"ICE REJECTED: feature index {feature} out of range [0, {model.n_features})."
            )
        return int(feature)
    if feature not in model.feature_names:
        raise SummaryError(f"ICE REJECTED: model has no feature '{feature}'.")
    return model.feature_names.index(feature)


def ice_curves(
    model: Predictor,
    instances: ArrayLike,
    feature: str | int,
    grid: ArrayLike,
    instance_ids: Sequence[int] | None = None,
) -> ICECurve:
    """Sweep ``feature`` over ``grid`` for every instance, others held fixed."""
    X = np.asarray(instances, dtype=float)
    grid = np.asarray(grid, dtype=float)
    j = _feature_index(model, feature)
    if grid.ndim != 1 or grid.size < 2:
        raise SummaryError("ICE REJECTED: grid needs at least 2 points.")
    if np.any(np.diff(grid) <= 0):
        raise SummaryError("ICE REJECTED: grid must be strictly ascending.")
    if X.ndim != 2 or X.shape[0] == 0:
        raise SummaryError("ICE REJECTED: need a nonempty 2-D instance matrix.")

    swept = np.repeat(X, grid.size, axis=0)
    swept[:, j] = np.tile(grid, X.shape[0])
    predictions = predict(model, swept).reshape(X.shape[0], grid.size)
    ids = tuple(instance_ids) if instance_ids is not None else tuple(range(X.shape[0]))
    return ICECurve(model.feature_names[j], grid, predictions, ids)


def slope_rank(curves: Sequence[ICECurve]) -> List[Tuple[str, float]]:
    """(feature, aggregate slope score), steepest first."""
    if curves and any(c.instance_ids != curves[0].instance_ids for c in curves):
        raise SummaryError("SLOPE REJECTED: curves were computed on different instances.")
    scored = [(c.feature, c.slope_score) for c in curves]
    return sorted(scored, key=lambda item: -item[1])


def ice_frame(curves: Sequence[ICECurve]) -> pd.DataFrame:
    """Long format: feature, grid_value, instance_id, prediction."""
    parts = []
    for curve in curves:
        n_instances, n_grid = curve.predictions.shape
        parts.append(
            pd.DataFrame(
                {
                    "feature": curve.feature,
                    "grid_value": np.tile(curve.grid, n_instances),
                    "instance_id": np.repeat(curve.instance_ids, n_grid),
                    "prediction": curve.predictions.ravel(),
                }
            )
        )
    if not parts:
        return pd.DataFrame(columns=["feature", "grid_value", "instance_id", "prediction"])
    return pd.concat(parts, ignore_index=True)


__all__ = [
    "WeightMatrix",
    "GlobalImportance",
    "global_importance",
    "coverage",
    "greedy_pick",
    "PickOutcome",
    "submodular_pick",
    "selection_frequency",
    "default_grid",
    "ICECurve",
    "ice_curves",
    "slope_rank",
    "ice_frame",
]
