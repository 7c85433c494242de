"""Black-box regressors and a budgeted random hyperparameter search.

Predictions only ever go through ``predict``; explainers and evaluators
treat every ``Predictor`` as opaque.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import joblib
import numpy as np
from numpy.typing import ArrayLike
from sklearn.dummy import DummyRegressor
from sklearn.ensemble import (
    ExtraTreesRegressor,
    GradientBoostingRegressor,
    RandomForestRegressor,
)
from sklearn.linear_model import LinearRegression

from .config import get_config
from .errors import MissingArtifactError, ModelError, PanelimeError, SearchBudgetError
from .models.base import ModelFamily
from .models.policies import SearchConfig, SplitSpec
from .models.reports import SearchReport, Trial
from .seeding import derive_seed
from .stats import r_squared
from .table import DataTable, split_indices

logger = logging.getLogger(__name__)

PREDICTOR_FORMAT_VERSION = 1

# Search space bounds
N_ESTIMATORS = (50, 500)
MAX_DEPTH = (2, 12)
LEARNING_RATE = (0.01, 0.3)
SUBSAMPLE = (0.5, 1.0)
MIN_SAMPLES_LEAF = (1, 5)


@dataclass(frozen=True)
class Predictor:
    """A fitted regressor with its input contract."""

    family: ModelFamily
    feature_names: Tuple[str, ...]
    training_seed: int
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    estimator: Any = field(default=None, repr=False, compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.estimator, DummyRegressor)


def _build_estimator(
    family: ModelFamily, hyperparameters: Mapping[str, Any], seed: int
) -> Any:
    params = dict(hyperparameters)
    if family == "linear":
        return LinearRegression(**params)
    if family == "gradient_boosting":
        return GradientBoostingRegressor(random_state=seed, **params)
    n_jobs = get_config().n_jobs
    if family == "random_forest":
        return RandomForestRegressor(random_state=seed, n_jobs=n_jobs, **params)
    if family == "extra_trees":
        return ExtraTreesRegressor(random_state=seed, n_jobs=n_jobs, **params)
    raise ModelError(f"MODEL REJECTED: unknown family '{family}'.")


def fit_arrays(
    family: ModelFamily,
    X: ArrayLike,
    y: ArrayLike,
    hyperparameters: Mapping[str, Any] | None = None,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
) -> Predictor:
    """Fit on a plain feature matrix.

    ``max_depth = 0`` gives a single-leaf mean predictor, and so does a
    zero-variance target (with a warning).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    hyperparameters = dict(hyperparameters or {})
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ModelError(
            f"MODEL REJECTED: feature matrix {X.shape} does not match target length {y.shape[0]}."
        )
    if X.shape[0] < 2:
        raise ModelError(f"MODEL REJECTED: need at least 2 training rows, got {X.shape[0]}.")
    if np.isnan(X).any() or np.isnan(y).any():
        raise ModelError("MODEL REJECTED: training data has missing cells.")
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"x{j}" for j in range(X.shape[1])
    )
    if len(names) != X.shape[1]:
        raise ModelError(
            f"MODEL REJECTED: {len(names)} feature names for {X.shape[1]} columns."
        )

    if hyperparameters.get("max_depth") == 0:
        estimator: Any = DummyRegressor(strategy="mean")
    elif np.all(y == y[0]):
        logger.warning("Target has zero variance; fitting a constant predictor")
        estimator = DummyRegressor(strategy="mean")
    else:
        try:
            estimator = _build_estimator(family, hyperparameters, seed)
        except TypeError as exc:
            raise ModelError(
                f"MODEL REJECTED: bad hyperparameters for {family}: {exc}"
            ) from exc
    estimator.fit(X, y)
    return Predictor(
        family=family,
        feature_names=names,
        training_seed=seed,
        hyperparameters=hyperparameters,
        estimator=estimator,
    )


def fit(
    family: ModelFamily,
    train: DataTable,
    hyperparameters: Mapping[str, Any] | None = None,
    seed: int = 0,
    include_entity: bool = False,
) -> Predictor:
    """Fit ``family`` on a table's feature columns against its target."""
    return fit_arrays(
        family,
        train.features(include_entity),
        train.target,
        hyperparameters,
        seed,
        train.feature_columns(include_entity),
    )


def predict(model: Predictor, rows: ArrayLike) -> np.ndarray:
    """One prediction per row. Pure."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1 and rows.size == 0:
        return np.empty(0)
    if rows.ndim != 2 or rows.shape[1] != model.n_features:
        width = rows.shape[-1] if rows.ndim else 0
        raise ModelError(
            f"PREDICT REJECTED: rows have width {width}, model expects {model.n_features}."
        )
    if rows.shape[0] == 0:
        return np.empty(0)
    return np.asarray(model.estimator.predict(rows), dtype=float)


# === SEARCH ===


def sample_hyperparameters(family: ModelFamily, rng: np.random.Generator) -> Dict[str, Any]:
    """Draw one configuration from ``family``'s search space."""
    if family == "linear":
        return {}
    params: Dict[str, Any] = {
        "n_estimators": int(rng.integers(N_ESTIMATORS[0], N_ESTIMATORS[1] + 1)),
        "max_depth": int(rng.integers(MAX_DEPTH[0], MAX_DEPTH[1] + 1)),
    }
    if family == "gradient_boosting":
        low, high = math.log(LEARNING_RATE[0]), math.log(LEARNING_RATE[1])
        params["learning_rate"] = round(float(math.exp(rng.uniform(low, high))), 6)
        params["subsample"] = round(float(rng.uniform(*SUBSAMPLE)), 6)
    else:
        params["min_samples_leaf"] = int(
            rng.integers(MIN_SAMPLES_LEAF[0], MIN_SAMPLES_LEAF[1] + 1)
        )
    return params


def budgeted_search(
    train: DataTable, config: SearchConfig, include_entity: bool = False
) -> Tuple[Predictor, SearchReport]:
    """Random search over families and hyperparameters, scored by validation R^2.

    The training split is cut once into fit/validation parts. The winning
    configuration is refit on the whole training split with its trial seed.
    A wall-clock budget is checked between trials only.

    Raises:
        SearchBudgetError: no trial produced a score
    """
    X = train.features(include_entity)
    y = train.target
    names = train.feature_columns(include_entity)
    fit_rows, val_rows = split_indices(
        train.n_rows,
        SplitSpec(
            train_fraction=1.0 - config.validation_fraction,
            seed=derive_seed(config.seed, "validation"),
        ),
    )
    if len(fit_rows) < 2 or len(val_rows) < 2:
        raise ModelError(
            f"SEARCH REJECTED: {train.n_rows} rows cannot be split into fit and "
            "validation parts of at least 2 rows each."
        )

    rng = np.random.default_rng(config.seed)
    deadline = (
        time.monotonic() + config.time_budget_s if config.time_budget_s is not None else None
    )
    trials: List[Trial] = []
    while True:
        if config.max_trials is not None and len(trials) >= config.max_trials:
            break
        if deadline is not None and trials and time.monotonic() >= deadline:
            break

        family = config.families[int(rng.integers(len(config.families)))]
        hyperparameters = sample_hyperparameters(family, rng)
        seed = derive_seed(config.seed, "trial", len(trials))
        try:
            candidate = fit_arrays(family, X[fit_rows], y[fit_rows], hyperparameters, seed, names)
            score: Optional[float] = r_squared(y[val_rows], predict(candidate, X[val_rows]))
            error = None
        except (PanelimeError, ValueError) as exc:
            score, error = None, str(exc)
            logger.warning("Trial %d (%s) failed: %s", len(trials), family, exc)
        trials.append(
            Trial(
                family=family,
                hyperparameters=hyperparameters,
                seed=seed,
                score=score,
                error=error,
            )
        )
        logger.debug("Trial %d: %s %s -> %s", len(trials) - 1, family, hyperparameters, score)

    scores = [t.score if t.score is not None else -np.inf for t in trials]
    if all(t.score is None for t in trials):
        raise SearchBudgetError(
            f"SEARCH FAILED: budget exhausted after {len(trials)} trial(s) with no successful fit.",
            report=SearchReport(trials=trials, best_index=None),
        )
    best_index = int(np.argmax(scores))
    report = SearchReport(trials=trials, best_index=best_index)
    best = report.best
    logger.info(
        "Best of %d trial(s): #%d %s (validation R2 %.4f)",
        len(trials),
        best_index,
        best.family,
        best.score,
    )
    model = fit_arrays(best.family, X, y, best.hyperparameters, best.seed, names)
    return model, report


# === PERSISTENCE ===


def save_predictor(model: Predictor, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump(
        {
            "format_version": PREDICTOR_FORMAT_VERSION,
            "family": model.family,
            "feature_names": list(model.feature_names),
            "training_seed": model.training_seed,
            "hyperparameters": model.hyperparameters,
            "estimator": model.estimator,
        },
        path,
    )
    return path


def load_predictor(path: Path | str) -> Predictor:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"MODEL MISSING: {path} does not exist; run 'train' first.")
    payload = joblib.load(path)
    version = payload.get("format_version") if isinstance(payload, dict) else None
    if version != PREDICTOR_FORMAT_VERSION:
        raise ModelError(
            f"MODEL REJECTED: {path} has format version {version}, "
            f"expected {PREDICTOR_FORMAT_VERSION}."
        )
    return Predictor(
        family=payload["family"],
        feature_names=tuple(payload["feature_names"]),
        training_seed=payload["training_seed"],
        hyperparameters=payload["hyperparameters"],
        estimator=payload["estimator"],
    )


__all__ = [
    "PREDICTOR_FORMAT_VERSION",
    "Predictor",
    "fit_arrays",
    "fit",
    "predict",
    "sample_hyperparameters",
    "budgeted_search",
    "save_predictor",
    "load_predictor",
]
