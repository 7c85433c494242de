"""Masked-column experiment: do LIME's chosen columns carry the prediction?

Each run explains the evaluated test rows, keeps every row's top-k
LIME features and zeroes the rest, then compares the pooled R^2 with the
same rows masked down to k uniformly drawn columns. Zero means "no change"
in differenced data.
"""

from __future__ import annotations

import logging
from typing import Iterable, List, Optional

import numpy as np
from numpy.typing import ArrayLike

from .blackbox import Predictor, predict
from .errors import EvaluationError
from .explainer import compute_feature_stats, explain_many
from .models.policies import LimeConfig
from .models.reports import EvalReport, FeatureStats, RunResult
from .seeding import derive_seed, rng_for
from .stats import paired_t_test, r_squared
from .table import DataTable

logger = logging.getLogger(__name__)


def mask_to_columns(rows: ArrayLike, keep: Iterable[int]) -> np.ndarray:
    """Copy of ``rows`` with every column outside ``keep`` set to 0."""
    rows = np.array(rows, dtype=float, ndmin=2)
    keep = sorted(set(int(j) for j in keep))
    if not keep:
        raise EvaluationError("MASK REJECTED: keep set is empty.")
    if keep[0] < 0 or keep[-1] >= rows.shape[1]:
        raise EvaluationError(
            f"MASK REJECTED: column ids {keep} out of range for width {rows.shape[1]}."
        )
    masked = np.zeros_like(rows)
    masked[:, keep] = rows[:, keep]
    return masked


def lime_vs_random_experiment(
    model: Predictor,
    test: DataTable,
    k: int,
    lime_config: LimeConfig,
    n_runs: int = 5,
    seed: int = 0,
    stats: Optional[FeatureStats] = None,
    max_instances: Optional[int] = None,
    include_entity: bool = False,
) -> EvalReport:
    """Run ``n_runs`` paired LIME-vs-random masking runs on ``test``.

    ``stats`` should come from the training split; test statistics are used
    when it is omitted. Instances whose explanation fails are skipped and
    counted per run.
    """
    names = test.feature_columns(include_entity)
    if tuple(names) != model.feature_names:
        raise EvaluationError(
            f"EVAL REJECTED: test features {names} do not match model features "
            f"{list(model.feature_names)}."
        )
    n_features = len(names)
    if not 1 <= k <= n_features:
        raise EvaluationError(f"EVAL REJECTED: k={k} must lie in [1, {n_features}].")
    if n_runs < 1:
        raise EvaluationError(f"EVAL REJECTED: n_runs must be at least 1, got {n_runs}.")
    if test.n_rows == 0:
        raise EvaluationError("EVAL REJECTED: test table is empty.")

    n = test.n_rows if max_instances is None else min(max_instances, test.n_rows)
    X = test.features(include_entity)[:n]
    y = test.target[:n]
    stats = stats or compute_feature_stats(test.features(include_entity), names)
    full = r_squared(y, predict(model, X))
    config = LimeConfig.model_validate({**lime_config.model_dump(), "k_features": k})
    column = {name: j for j, name in enumerate(names)}

    runs: List[RunResult] = []
    for run in range(n_runs):
        run_config = config.model_copy(update={"seed": derive_seed(seed, "lime", run)})
        explanations, skipped = explain_many(model, X, stats, run_config)
        usable = [e for e in explanations if e.features]
        skipped += len(explanations) - len(usable)
        if not usable:
            raise EvaluationError(f"EVAL FAILED: run {run} explained no instance.")

        rows = np.array([e.instance_id for e in usable])
        lime_preds = np.empty(len(usable))
        for i, explanation in enumerate(usable):
            keep = (
                range(n_features)
                if k == n_features
                else [column[name] for name in explanation.selected_features]
            )
            lime_preds[i] = predict(model, mask_to_columns(X[rows[i]], keep))[0]

        drawn = rng_for(seed, "random", run).choice(n_features, size=k, replace=False)
        random_preds = predict(model, mask_to_columns(X[rows], drawn))

        result = RunResult(
            r2_lime=r_squared(y[rows], lime_preds),
            r2_random=r_squared(y[rows], random_preds),
            random_columns=[names[j] for j in sorted(drawn)],
            skipped_instances=skipped,
        )
        logger.info(
            "Run %d: R2 lime %.4f, random %.4f (%d skipped)",
            run,
            result.r2_lime,
            result.r2_random,
            skipped,
        )
        runs.append(result)

    t_statistic = p_value = None
    if n_runs >= 2:
        test_result = paired_t_test(
            [r.r2_lime for r in runs], [r.r2_random for r in runs]
        )
        t_statistic, p_value = test_result.statistic, test_result.pvalue
    else:
        logger.info("Single run: paired t-test not computed")

    return EvalReport(
        runs=runs,
        r2_full_model=full,
        k_columns=k,
        n_instances=n,
        t_statistic=t_statistic,
        p_value=p_value,
        seed=seed,
    )


__all__ = ["mask_to_columns", "lime_vs_random_experiment"]
