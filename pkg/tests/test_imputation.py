"""Tests for missing-rate gating and the three imputers."""

import logging

import numpy as np
import pandas as pd
import pytest

from panelime.errors import ImputationError
from panelime.imputation import (
    impute_iterative,
    impute_knn,
    impute_linear,
    impute_table,
    inverse_distance_average,
    missing_rate,
    recovery_error,
)
from panelime.models import ImputationPolicy, TableSchema
from panelime.table import DataTable

logger = logging.getLogger(__name__)


def _table(features: np.ndarray, target=None) -> DataTable:
    n, p = features.shape
    frame = pd.DataFrame(features, columns=[f"f{j}" for j in range(p)])
    frame.insert(0, "year", 2000 + np.arange(n))
    frame.insert(0, "country", "A")
    frame["score"] = np.zeros(n) if target is None else target
    return DataTable(frame, TableSchema(entity="country", time="year", target="score"))


def _linear_features(n: int, p: int, seed: int) -> np.ndarray:
    """Rank-3 noiseless linear data: every column is a combination of 3 factors."""
    rng = np.random.default_rng(seed)
    factors = rng.normal(size=(n, 3))
    loadings = rng.normal(size=(3, p))
    return factors @ loadings + rng.normal(size=p)


# === Missing rate ===


def test_missing_rate_counts_imputable_only():
    row = pd.Series({"a": np.nan, "b": 1.0, "c": np.nan, "d": 2.0})
    assert missing_rate(row, ["a", "b", "c", "d"]) == 0.5
    assert missing_rate(row, ["b", "d"]) == 0.0


def test_missing_rate_eight_of_thirty_three():
    names = [f"c{j}" for j in range(33)]
    row = pd.Series({n: (np.nan if j < 8 else 1.0) for j, n in enumerate(names)})
    assert missing_rate(row, names) == pytest.approx(8 / 33)
    assert missing_rate(row, names) <= 0.25


def test_missing_rate_empty_set():
    with pytest.raises(ImputationError, match="empty"):
        missing_rate(pd.Series({"a": 1.0}), [])


# === Linear ===


def test_linear_exact_on_linear_column():
    x = np.arange(10, dtype=float)
    features = np.column_stack([x, 2 * x + 1])
    features[4, 1] = np.nan
    filled = impute_linear(_table(features), "f1")
    assert filled.iloc[4] == pytest.approx(9.0, abs=1e-9)
    assert filled.drop(index=4).tolist() == features[np.arange(10) != 4, 1].tolist()


def test_linear_rank_deficient_falls_back_to_ridge(caplog):
    x = np.linspace(0.0, 1.0, 12)
    features = np.column_stack([x, x, 3 * x])
    features[5, 2] = np.nan
    with caplog.at_level("WARNING"):
        filled = impute_linear(_table(features), "f2")
    assert filled.iloc[5] == pytest.approx(3 * x[5], abs=1e-5)
    assert "ridge" in caplog.text


def test_linear_recovery_acceptance():
    truth = _linear_features(500, 10, seed=1)
    rng = np.random.default_rng(2)
    mask = rng.random(truth.shape) < 0.10
    holed = truth.copy()
    holed[mask] = np.nan

    policy = ImputationPolicy(method="linear", theta=0.25)
    imputed, report = impute_table(_table(holed), policy)
    values = imputed.frame[[f"f{j}" for j in range(10)]].to_numpy()

    rates = mask.mean(axis=1)
    eligible = rates <= 0.25
    max_error, _ = recovery_error(truth[eligible], values[eligible], mask[eligible])
    assert max_error < 1e-6
    assert report.rows_imputed == int(eligible.sum())
    assert report.n_rows == 500


def test_knn_and_iterative_report_rmse(record_property):
    truth = _linear_features(200, 6, seed=3)
    rng = np.random.default_rng(4)
    mask = rng.random(truth.shape) < 0.10
    holed = truth.copy()
    holed[mask] = np.nan
    columns = [f"f{j}" for j in range(6)]

    rmse = {}
    for method in ("linear", "knn", "iterative"):
        imputed, _ = impute_table(_table(holed), ImputationPolicy(method=method, theta=0.5))
        _, rmse[method] = recovery_error(truth, imputed.frame[columns].to_numpy(), mask)
        record_property(f"rmse_{method}", rmse[method])
    logger.info("Recovery RMSE by method: %s", rmse)
    assert all(np.isfinite(value) for value in rmse.values())


# === Gate ===


def _assert_gated(table, imputed, report, theta):
    before = table.frame[table.imputable_columns]
    after = imputed.frame[table.imputable_columns]
    skipped = before.isna().mean(axis=1) > theta
    pd.testing.assert_frame_equal(before[skipped], after[skipped])
    observed = before.notna()
    assert (after[observed] == before[observed]).sum().sum() == observed.sum().sum()
    assert report.rows_imputed == int((~skipped).sum())
    assert report.rows_skipped == int(skipped.sum())


@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize("method", ["linear", "knn"])
def test_gate_leaves_rows_above_theta_unchanged(seed, method):
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(40, 6))
    features[rng.random(features.shape) < rng.uniform(0.05, 0.5)] = np.nan
    table = _table(features)
    theta = float(rng.uniform(0.0, 0.6))

    imputed, report = impute_table(table, ImputationPolicy(method=method, theta=theta))
    _assert_gated(table, imputed, report, theta)


@pytest.mark.slow
def test_gate_holds_over_random_tables():
    methods = ("linear", "knn", "iterative")
    rng = np.random.default_rng(2024)
    for i in range(500):
        method = methods[i % len(methods)]
        features = rng.normal(size=(60, 6))
        features[rng.random(features.shape) < rng.uniform(0.05, 0.4)] = np.nan
        table = _table(features)
        theta = float(rng.uniform(0.2, 0.6))
        wider = min(1.0, theta + float(rng.uniform(0.0, 0.3)))

        imputed, report = impute_table(table, ImputationPolicy(method=method, theta=theta))
        _assert_gated(table, imputed, report, theta)
        _, wider_report = impute_table(table, ImputationPolicy(method=method, theta=wider))
        assert wider_report.rows_imputed >= report.rows_imputed


def test_row_at_eight_of_thirty_three_is_imputed():
    rng = np.random.default_rng(5)
    features = rng.normal(size=(60, 33))
    features[0, :8] = np.nan
    features[1, :9] = np.nan
    imputed, _ = impute_table(_table(features), ImputationPolicy(theta=0.25))
    columns = [f"f{j}" for j in range(33)]
    assert imputed.frame.loc[0, columns].notna().all()
    assert imputed.frame.loc[1, columns].isna().sum() == 9


def test_theta_zero_changes_nothing():
    features = np.array([[1.0, np.nan], [2.0, 4.0], [3.0, 6.0]])
    table = _table(features)
    imputed, report = impute_table(table, ImputationPolicy(theta=0.0))
    pd.testing.assert_frame_equal(imputed.frame, table.frame)
    assert report.cells_filled == 0


def test_theta_one_fills_everything_fillable():
    features = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, np.nan], [np.nan, 8.0]])
    imputed, report = impute_table(_table(features), ImputationPolicy(theta=1.0))
    assert imputed.frame[["f0", "f1"]].notna().all().all()
    assert report.cells_filled == 2


def test_unfillable_column_reported():
    features = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, np.nan]])
    imputed, report = impute_table(_table(features), ImputationPolicy(theta=1.0))
    assert report.unfillable_columns == ["f1"]
    assert imputed.frame["f1"].isna().all()


# === KNN ===


def test_inverse_distance_average():
    assert inverse_distance_average([1.0, 3.0], [10.0, 20.0]) == pytest.approx(12.5)


def test_inverse_distance_zero_distance_dominates():
    assert inverse_distance_average([0.0, 0.0, 2.0], [4.0, 6.0, 100.0]) == 5.0


def test_knn_fills_within_neighbour_range():
    features = np.array(
        [[0.0, 0.0], [1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [1.5, np.nan]]
    )
    imputed = impute_knn(_table(features), k=2)
    assert 10.0 <= imputed.frame.loc[4, "f1"] <= 20.0


def test_knn_shortfall_counted():
    features = np.array([[0.0, 1.0], [1.0, np.nan], [2.0, 3.0]])
    _, report = impute_table(_table(features), ImputationPolicy(method="knn", k=5, theta=1.0))
    assert report.knn_shortfalls == 1
    assert report.cells_filled == 1


# === Iterative ===


def test_iterative_matches_linear_when_one_column_missing():
    x = np.linspace(-1.0, 1.0, 20)
    z = np.cos(np.arange(20.0))
    features = np.column_stack([x, z, 2 * x - 3 * z])
    features[[3, 11], 2] = np.nan
    table = _table(features)

    linear = impute_linear(table, "f2")
    iterative, report = impute_iterative(table, ImputationPolicy(method="iterative", theta=0.5))
    assert iterative.frame["f2"].to_numpy() == pytest.approx(linear.to_numpy(), abs=1e-6)
    assert report.converged


def test_iterative_needs_two_observed_values():
    features = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, 1.0]])
    with pytest.raises(ImputationError, match="at least 2 observed"):
        impute_iterative(_table(features), ImputationPolicy(method="iterative", theta=1.0))


def test_iterative_reports_non_convergence():
    rng = np.random.default_rng(8)
    features = rng.normal(size=(30, 4))
    features[rng.random(features.shape) < 0.2] = np.nan
    policy = ImputationPolicy(
        method="iterative", theta=1.0, max_iterations=1, tolerance=1e-12, sample_residuals=True
    )
    imputed, report = impute_iterative(_table(features), policy)
    assert report.iterations_used == 1
    assert not report.converged
    assert imputed.frame[[f"f{j}" for j in range(4)]].notna().all().all()


def test_iterative_is_seeded():
    rng = np.random.default_rng(9)
    features = rng.normal(size=(30, 4))
    features[rng.random(features.shape) < 0.2] = np.nan
    policy = ImputationPolicy(method="iterative", theta=1.0, sample_residuals=True, seed=3)
    first, _ = impute_iterative(_table(features), policy)
    second, _ = impute_iterative(_table(features), policy)
    pd.testing.assert_frame_equal(first.frame, second.frame)
