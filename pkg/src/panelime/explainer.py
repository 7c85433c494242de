"""Tabular LIME: Gaussian neighbourhood, exponential kernel, sparse weighted ridge."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from sklearn.linear_model import LinearRegression, Ridge
from sklearn.metrics import r2_score

from .blackbox import Predictor, predict
from .errors import ExplanationError
from .models.policies import LimeConfig
from .models.reports import Explanation, FeatureStats, FeatureWeight
from .seeding import derive_seed

logger = logging.getLogger(__name__)


def compute_feature_stats(X: ArrayLike, names: Sequence[str]) -> FeatureStats:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ExplanationError("STATS REJECTED: need a nonempty 2-D training matrix.")
    if X.shape[1] != len(names):
        raise ExplanationError(
            f"STATS REJECTED: {len(names)} names for {X.shape[1]} columns."
        )
    return FeatureStats(
        names=list(names),
        mean=[float(v) for v in X.mean(axis=0)],
        std=[float(v) for v in X.std(axis=0)],
    )


def sample_neighborhood(
    x: ArrayLike, stats: FeatureStats, n: int, seed: int
) -> np.ndarray:
    """n Gaussian draws from the training marginals; row 0 is ``x`` itself.

    Features with zero training spread stay at ``x_j`` in every row.
    """
    x = np.asarray(x, dtype=float)
    if n < 1:
        raise ExplanationError(f"SAMPLING REJECTED: n must be at least 1, got {n}.")
    if x.shape != (stats.n_features,):
        raise ExplanationError(
            f"SAMPLING REJECTED: instance width {x.shape[-1]} != {stats.n_features} features."
        )
    rng = np.random.default_rng(seed)
    samples = rng.normal(np.asarray(stats.mean), np.asarray(stats.std), size=(n, x.size))
    constant = np.asarray(stats.constant)
    samples[:, constant] = x[constant]
    samples[0] = x
    return samples


def _distance_scale(stats: FeatureStats, standardize: bool) -> np.ndarray:
    std = np.asarray(stats.std, dtype=float)
    if not standardize:
        return np.ones_like(std)
    return np.where(std > 0, std, 1.0)


def kernel_weights(
    x: ArrayLike,
    samples: ArrayLike,
    width: float,
    stats: FeatureStats,
    standardize: bool = True,
) -> np.ndarray:
    """exp(-d^2 / width^2) for every sample row."""
    if width <= 0:
        raise ExplanationError(f"KERNEL REJECTED: width must be positive, got {width}.")
    scale = _distance_scale(stats, standardize)
    diffs = (np.asarray(samples, dtype=float) - np.asarray(x, dtype=float)) / scale
    squared = np.einsum("ij,ij->i", diffs, diffs)
    return np.exp(-squared / width**2)


def kernel_weight(
    x: ArrayLike, z: ArrayLike, width: float, stats: FeatureStats, standardize: bool = True
) -> float:
    return float(kernel_weights(x, np.atleast_2d(z), width, stats, standardize)[0])


def _weighted_linear(lam: float) -> Ridge | LinearRegression:
    return Ridge(alpha=lam) if lam > 0 else LinearRegression()


def fit_local_model(
    samples: ArrayLike,
    weights: ArrayLike,
    black_box_preds: ArrayLike,
    config: LimeConfig,
    feature_names: Sequence[str] | None = None,
    instance_id: int = 0,
    stats: FeatureStats | None = None,
) -> Explanation:
    """Two-stage weighted fit of a sparse linear surrogate.

    Stage 1 fits every non-constant feature and ranks them by
    |coefficient| * std; stage 2 refits on the top ``k_features``.
    Row 0 of ``samples`` is taken to be the explained instance.
    """
    Z = np.asarray(samples, dtype=float)
    w = np.asarray(weights, dtype=float)
    f = np.asarray(black_box_preds, dtype=float)
    if not (Z.shape[0] == w.shape[0] == f.shape[0]):
        raise ExplanationError(
            f"SURROGATE REJECTED: {Z.shape[0]} samples, {w.shape[0]} weights, "
            f"{f.shape[0]} predictions."
        )
    if (w < 0).any():
        raise ExplanationError("SURROGATE REJECTED: kernel weights must be nonnegative.")
    names = list(feature_names) if feature_names is not None else [
        f"x{j}" for j in range(Z.shape[1])
    ]

    positive = int((w > 0).sum())
    if positive < config.k_features + 1:
        raise ExplanationError(
            f"KERNEL TOO NARROW: only {positive} sample(s) carry weight, need "
            f"{config.k_features + 1}; increase kernel_width."
        )
    w = w / w.mean()

    if np.ptp(f) == 0.0:
        logger.warning("Instance %d: black box is constant around the instance", instance_id)
        return Explanation(
            instance_id=instance_id,
            intercept=float(f[0]),
            features=[],
            local_fit=None,
            prediction=float(f[0]),
            local_prediction=float(f[0]),
            degenerate=True,
            config=config,
        )

    spread = np.asarray(stats.std) if stats is not None else Z.std(axis=0)
    candidates = np.flatnonzero((spread > 0) & (np.ptp(Z, axis=0) > 0))
    if candidates.size == 0:
        raise ExplanationError("SURROGATE REJECTED: every feature is constant in the neighbourhood.")

    stage_one = _weighted_linear(config.ridge_lambda).fit(Z[:, candidates], f, sample_weight=w)
    score = np.abs(stage_one.coef_) * spread[candidates]
    order = np.argsort(-score, kind="stable")
    selected = candidates[order[: config.k_features]]

    surrogate = _weighted_linear(config.ridge_lambda).fit(Z[:, selected], f, sample_weight=w)
    fitted = surrogate.predict(Z[:, selected])
    return Explanation(
        instance_id=instance_id,
        intercept=float(surrogate.intercept_),
        features=[
            FeatureWeight(name=names[j], weight=float(c))
            for j, c in zip(selected, surrogate.coef_)
        ],
        local_fit=float(r2_score(f, fitted, sample_weight=w)),
        prediction=float(f[0]),
        local_prediction=float(fitted[0]),
        config=config,
    )


def explain(
    model: Predictor,
    x: ArrayLike,
    stats: FeatureStats,
    config: LimeConfig,
    instance_id: int = 0,
    entity: Optional[str] = None,
    period: Optional[float] = None,
    observed: Optional[float] = None,
) -> Explanation:
    """Explain ``model`` at ``x``. The random stream is derived from (config.seed, instance_id)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_features,):
        raise ExplanationError(
            f"EXPLAIN REJECTED: instance width {x.shape[-1] if x.ndim else 0} "
            f"!= model width {model.n_features}."
        )
    samples = sample_neighborhood(x, stats, config.n_samples, derive_seed(config.seed, instance_id))
    preds = predict(model, samples)
    weights = kernel_weights(
        x, samples, config.width_for(model.n_features), stats, config.standardize
    )
    explanation = fit_local_model(
        samples, weights, preds, config, model.feature_names, instance_id, stats
    )
    if entity is None and period is None and observed is None:
        return explanation
    return explanation.model_copy(
        update={"entity": entity, "period": period, "observed": observed}
    )


def explain_many(
    model: Predictor,
    rows: ArrayLike,
    stats: FeatureStats,
    config: LimeConfig,
    instance_ids: Sequence[int] | None = None,
    labels: Sequence[Tuple[str, float]] | None = None,
    observed: Sequence[float] | None = None,
) -> Tuple[List[Explanation], int]:
    """Explain each row; failures are logged and counted, not raised."""
    rows = np.asarray(rows, dtype=float)
    ids = list(instance_ids) if instance_ids is not None else list(range(rows.shape[0]))
    explanations: List[Explanation] = []
    skipped = 0
    for position, (instance_id, x) in enumerate(zip(ids, rows)):
        entity, period = labels[position] if labels is not None else (None, None)
        try:
            explanations.append(
                explain(
                    model,
                    x,
                    stats,
                    config,
                    instance_id=instance_id,
                    entity=entity,
                    period=period,
                    observed=float(observed[position]) if observed is not None else None,
                )
            )
        except ExplanationError as exc:
            skipped += 1
            logger.warning("Skipping instance %d: %s", instance_id, exc)
    if skipped:
        logger.warning("%d of %d instance(s) could not be explained", skipped, len(ids))
    return explanations, skipped


__all__ = [
    "compute_feature_stats",
    "sample_neighborhood",
    "kernel_weights",
    "kernel_weight",
    "fit_local_model",
    "explain",
    "explain_many",
]
