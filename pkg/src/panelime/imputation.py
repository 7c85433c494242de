"""Missing-cell imputation gated per row by a missing-rate threshold.

A row qualifies when the fraction of its imputable cells that are missing
is at most ``theta``. Qualifying rows get their missing cells filled by
the chosen method; every other row passes through untouched. Observed
cells are never rewritten.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.dummy import DummyRegressor
from sklearn.linear_model import LinearRegression, Ridge
from sklearn.neighbors import NearestNeighbors

from .errors import ImputationError
from .models.policies import ImputationPolicy
from .models.reports import ImputationReport
from .table import DataTable

logger = logging.getLogger(__name__)

RIDGE_FALLBACK_ALPHA = 1e-8


@dataclass
class _ColumnFill:
    values: pd.Series
    filled: int = 0
    unfilled: int = 0
    ridge_fallback: bool = False
    shortfalls: int = 0


def missing_rate(row: pd.Series | Mapping[str, float], imputable_columns: Sequence[str]) -> float:
    """Fraction of ``imputable_columns`` that are missing in ``row``."""
    if len(imputable_columns) == 0:
        raise ImputationError("IMPUTATION REJECTED: the imputable column set is empty.")
    cells = pd.Series(row)[list(imputable_columns)]
    return float(cells.isna().sum()) / len(imputable_columns)


def _row_rates(table: DataTable) -> pd.Series:
    return table.frame[table.imputable_columns].isna().mean(axis=1)


def _fit_ols(X: np.ndarray, y: np.ndarray) -> Tuple[object, bool]:
    """OLS with intercept; ridge when the design is rank-deficient."""
    if X.shape[1] == 0:
        return DummyRegressor(strategy="mean").fit(np.zeros((len(y), 1)), y), False
    design = np.column_stack([np.ones(len(X)), X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        return Ridge(alpha=RIDGE_FALLBACK_ALPHA, solver="svd").fit(X, y), True
    return LinearRegression().fit(X, y), False


def _predict(model: object, X: np.ndarray) -> np.ndarray:
    if isinstance(model, DummyRegressor):
        return model.predict(np.zeros((len(X), 1)))
    return model.predict(X)  # type: ignore[attr-defined]


def _patterns(observed: pd.DataFrame) -> Dict[Tuple[bool, ...], pd.Index]:
    """Group row labels by which predictor columns are observed."""
    groups: Dict[Tuple[bool, ...], List[int]] = {}
    for label, flags in zip(observed.index, observed.to_numpy()):
        groups.setdefault(tuple(bool(f) for f in flags), []).append(label)
    return {key: pd.Index(rows) for key, rows in groups.items()}


def _linear_fill(
    frame: pd.DataFrame, column: str, imputable: Sequence[str], eligible: pd.Series
) -> _ColumnFill:
    y = frame[column]
    fill = _ColumnFill(values=y.copy())
    need = eligible & y.isna()
    if not need.any():
        return fill

    others = [c for c in imputable if c != column]
    for pattern, rows in _patterns(frame.loc[need, others].notna()).items():
        predictors = [c for c, seen in zip(others, pattern) if seen]
        train = y.notna() & frame[predictors].notna().all(axis=1)
        if not train.any():
            fill.unfilled += len(rows)
            continue
        model, fallback = _fit_ols(
            frame.loc[train, predictors].to_numpy(float), y[train].to_numpy(float)
        )
        fill.ridge_fallback |= fallback
        fill.values.loc[rows] = _predict(model, frame.loc[rows, predictors].to_numpy(float))
        fill.filled += len(rows)
    return fill


def impute_linear(
    table: DataTable, target_column: str, rows: pd.Series | None = None
) -> pd.Series:
    """Fill ``target_column`` with OLS predictions from the other imputable columns.

    Each missing cell uses the predictors observed in its own row; the fit
    uses every row where the target and those predictors are observed.
    ``rows`` restricts which missing cells are filled (default: all).
    """
    eligible = rows if rows is not None else pd.Series(True, index=table.frame.index)
    fill = _linear_fill(table.frame, target_column, table.imputable_columns, eligible)
    if fill.ridge_fallback:
        logger.warning("Linear imputation of '%s' fell back to ridge (rank-deficient design)", target_column)
    return fill.values


def inverse_distance_average(distances: np.ndarray, values: np.ndarray) -> float:
    """Weighted mean with w = 1/d; zero-distance neighbours take all the weight."""
    distances = np.asarray(distances, dtype=float)
    values = np.asarray(values, dtype=float)
    exact = distances <= 0.0
    if exact.any():
        return float(values[exact].mean())
    weights = 1.0 / distances
    return float(np.sum(weights * values) / np.sum(weights))


def _knn_fill(
    frame: pd.DataFrame,
    column: str,
    imputable: Sequence[str],
    eligible: pd.Series,
    k: int,
) -> _ColumnFill:
    y = frame[column]
    fill = _ColumnFill(values=y.copy())
    need = eligible & y.isna()
    if not need.any():
        return fill

    others = [c for c in imputable if c != column]
    centre = frame[others].mean()
    scale = frame[others].std(ddof=0).replace(0.0, 1.0).fillna(1.0)
    for pattern, rows in _patterns(frame.loc[need, others].notna()).items():
        predictors = [c for c, seen in zip(others, pattern) if seen]
        candidates = y.notna() & frame[predictors].notna().all(axis=1)
        n_candidates = int(candidates.sum())
        if n_candidates == 0:
            fill.unfilled += len(rows)
            continue
        if n_candidates < k:
            fill.shortfalls += len(rows)
        known = y[candidates].to_numpy(float)
        if not predictors:
            fill.values.loc[rows] = float(known.mean())
            fill.filled += len(rows)
            continue

        z = (frame[predictors] - centre[predictors]) / scale[predictors]
        index = NearestNeighbors(n_neighbors=min(k, n_candidates)).fit(
            z.loc[candidates].to_numpy(float)
        )
        distances, neighbours = index.kneighbors(z.loc[rows].to_numpy(float))
        fill.values.loc[rows] = [
            inverse_distance_average(d, known[n]) for d, n in zip(distances, neighbours)
        ]
        fill.filled += len(rows)
    return fill


def impute_knn(table: DataTable, k: int, rows: pd.Series | None = None) -> DataTable:
    """Fill every imputable column by inverse-distance kNN over z-scored predictors."""
    eligible = rows if rows is not None else pd.Series(True, index=table.frame.index)
    frame = table.frame.copy()
    for column in table.imputable_columns:
        fill = _knn_fill(table.frame, column, table.imputable_columns, eligible, k)
        missing = table.frame[column].isna()
        frame.loc[missing, column] = fill.values[missing]
    return table.with_frame(frame)


def impute_iterative(
    table: DataTable, policy: ImputationPolicy
) -> Tuple[DataTable, ImputationReport]:
    """Mean-initialise, then cycle columns left to right refitting OLS until stable.

    Only rows passing the ``theta`` gate take part. Stops when the largest
    change of any imputed cell in a sweep drops below ``tolerance``; otherwise
    returns the sweep with the smallest change and ``converged=False``.
    """
    columns = table.imputable_columns
    rates = _row_rates(table)
    eligible = rates <= policy.theta
    block = table.frame.loc[eligible, columns].to_numpy(dtype=float)
    mask = np.isnan(block)

    def report(**extra: object) -> ImputationReport:
        return ImputationReport(
            method="iterative",
            theta=policy.theta,
            rows_imputed=int(eligible.sum()),
            rows_skipped=int((~eligible).sum()),
            **extra,  # type: ignore[arg-type]
        )

    if not mask.any():
        return table, report(cells_filled=0, iterations_used=0, converged=True)

    sparse = [columns[j] for j in range(len(columns)) if mask[:, j].any() and (~mask[:, j]).sum() < 2]
    if sparse:
        raise ImputationError(
            f"IMPUTATION REJECTED: columns {sparse} need at least 2 observed values "
            "among qualifying rows."
        )

    rng = np.random.default_rng(policy.seed)
    current = block.copy()
    current[mask] = np.take(np.nanmean(block, axis=0), np.nonzero(mask)[1])
    best, best_change = current.copy(), np.inf
    fallbacks: set[str] = set()
    converged = False
    sweeps = 0

    for sweeps in range(1, policy.max_iterations + 1):
        previous = current.copy()
        for j in range(len(columns)):
            missing = mask[:, j]
            if not missing.any():
                continue
            others = np.delete(np.arange(len(columns)), j)
            model, fallback = _fit_ols(current[~missing][:, others], current[~missing, j])
            if fallback:
                fallbacks.add(columns[j])
            estimate = _predict(model, current[missing][:, others])
            if policy.sample_residuals:
                residuals = current[~missing, j] - _predict(model, current[~missing][:, others])
                estimate = estimate + rng.normal(0.0, residuals.std(), size=estimate.shape)
            current[missing, j] = estimate

        change = float(np.max(np.abs(current[mask] - previous[mask])))
        logger.debug("Iterative sweep %d: max change %.3g", sweeps, change)
        if change < best_change:
            best, best_change = current.copy(), change
        if change < policy.tolerance:
            converged = True
            break

    result = current if converged else best
    if not converged:
        logger.warning(
            "Iterative imputation did not converge in %d sweeps (best change %.3g)",
            policy.max_iterations,
            best_change,
        )

    frame = table.frame.copy()
    eligible_rows = frame.index[eligible.to_numpy()]
    for j, column in enumerate(columns):
        frame.loc[eligible_rows[mask[:, j]], column] = result[mask[:, j], j]

    return table.with_frame(frame), report(
        cells_filled=int(mask.sum()),
        iterations_used=sweeps,
        converged=converged,
        ridge_fallbacks=sorted(fallbacks),
    )


def impute_table(
    table: DataTable, policy: ImputationPolicy
) -> Tuple[DataTable, ImputationReport]:
    """Missing-rate gate plus the policy's imputer."""
    columns = table.imputable_columns
    if not columns:
        logger.info("No imputable columns; table passes through")
        return table, ImputationReport(
            method=policy.method,
            theta=policy.theta,
            rows_imputed=0,
            rows_skipped=table.n_rows,
            cells_filled=0,
        )
    if policy.method == "iterative":
        return impute_iterative(table, policy)

    eligible = _row_rates(table) <= policy.theta
    frame = table.frame.copy()
    filled = shortfalls = 0
    unfillable: List[str] = []
    fallbacks: List[str] = []
    for column in columns:
        if policy.method == "linear":
            fill = _linear_fill(table.frame, column, columns, eligible)
        else:
            fill = _knn_fill(table.frame, column, columns, eligible, policy.k)
        target = eligible & table.frame[column].isna() & fill.values.notna()
        frame.loc[target, column] = fill.values[target]
        filled += int(target.sum())
        shortfalls += fill.shortfalls
        if fill.unfilled:
            unfillable.append(column)
        if fill.ridge_fallback:
            fallbacks.append(column)

    if unfillable:
        logger.warning("No training rows to impute column(s) %s", unfillable)
    if fallbacks:
        logger.warning("Ridge fallback (rank-deficient design) for column(s) %s", fallbacks)
    if shortfalls:
        logger.warning("%d kNN queries had fewer than k=%d candidates", shortfalls, policy.k)

    report = ImputationReport(
        method=policy.method,
        theta=policy.theta,
        rows_imputed=int(eligible.sum()),
        rows_skipped=int((~eligible).sum()),
        cells_filled=filled,
        unfillable_columns=unfillable,
        ridge_fallbacks=fallbacks,
        knn_shortfalls=shortfalls,
    )
    logger.info(
        "Imputed %d cell(s) in %d qualifying row(s); %d row(s) above theta=%.3g",
        filled,
        report.rows_imputed,
        report.rows_skipped,
        policy.theta,
    )
    return table.with_frame(frame), report


def recovery_error(
    truth: np.ndarray, imputed: np.ndarray, mask: np.ndarray
) -> Tuple[float, float]:
    """(max absolute error, RMSE) over masked cells that were filled."""
    truth = np.asarray(truth, dtype=float)
    imputed = np.asarray(imputed, dtype=float)
    cells = np.asarray(mask, dtype=bool) & ~np.isnan(imputed)
    if not cells.any():
        return 0.0, 0.0
    errors = imputed[cells] - truth[cells]
    return float(np.max(np.abs(errors))), float(np.sqrt(np.mean(errors**2)))


__all__ = [
    "RIDGE_FALLBACK_ALPHA",
    "missing_rate",
    "impute_linear",
    "inverse_distance_average",
    "impute_knn",
    "impute_iterative",
    "impute_table",
    "recovery_error",
]
