"""Tests for the pydantic domain models."""

import pytest
from pydantic import ValidationError

from panelime.models import (
    EvalReport,
    Explanation,
    FeatureStats,
    FeatureWeight,
    IceSettings,
    ImputationPolicy,
    LimeConfig,
    PickSelection,
    RunResult,
    SearchConfig,
    SearchReport,
    SplitSpec,
    TableSchema,
    Trial,
)


# === Schema ===


def test_schema_kinds():
    schema = TableSchema(entity="c", time="y", target="t", categorical=["region"])
    assert schema.kind_of("c") == "entity"
    assert schema.kind_of("y") == "time"
    assert schema.kind_of("t") == "target"
    assert schema.kind_of("region") == "categorical"
    assert schema.kind_of("gdp") == "numeric"
    assert schema.order_column == "y"


def test_schema_period_orders_rows():
    schema = TableSchema(entity="c", time="y", target="t", period="period")
    assert schema.kind_of("period") == "period"
    assert schema.order_column == "period"


def test_schema_roles_distinct():
    with pytest.raises(ValidationError, match="SCHEMA REJECTED"):
        TableSchema(entity="c", time="c", target="t")


def test_schema_is_frozen():
    schema = TableSchema(entity="c", time="y", target="t")
    with pytest.raises(ValidationError):
        schema.entity = "other"


# === Policies ===


@pytest.mark.parametrize("fraction", [0.0, 1.0, 1.5])
def test_split_fraction_open_interval(fraction):
    with pytest.raises(ValidationError):
        SplitSpec(train_fraction=fraction)


def test_imputation_policy_bounds():
    assert ImputationPolicy(theta=0.0).theta == 0.0
    with pytest.raises(ValidationError):
        ImputationPolicy(theta=1.2)
    with pytest.raises(ValidationError):
        ImputationPolicy(method="mice")


def test_search_default_budget_is_trials():
    config = SearchConfig()
    assert config.max_trials == 25
    assert config.time_budget_s is None
    assert set(config.families) == {"random_forest", "extra_trees", "gradient_boosting", "linear"}


def test_search_time_budget_alone():
    config = SearchConfig(time_budget_s=30.0)
    assert config.max_trials is None


def test_search_rejects_both_budgets():
    with pytest.raises(ValidationError, match="exactly one"):
        SearchConfig(max_trials=5, time_budget_s=1.0)


def test_search_rejects_other_metric():
    with pytest.raises(ValidationError):
        SearchConfig(metric="mae")


def test_lime_needs_enough_samples():
    with pytest.raises(ValidationError, match="LIME REJECTED"):
        LimeConfig(n_samples=3, k_features=3)
    assert LimeConfig(n_samples=4, k_features=3).n_samples == 4


def test_lime_kernel_width_positive():
    with pytest.raises(ValidationError):
        LimeConfig(kernel_width=0.0)


def test_lime_default_width():
    assert LimeConfig().width_for(16) == pytest.approx(3.0)
    assert LimeConfig(kernel_width=0.849).width_for(16) == 0.849


def test_ice_percentiles_ordered():
    with pytest.raises(ValidationError, match="ICE REJECTED"):
        IceSettings(lower_percentile=90, upper_percentile=10)


# === Reports ===


def test_search_report_best_must_maximise():
    trials = [
        Trial(family="linear", hyperparameters={}, seed=1, score=0.5),
        Trial(family="linear", hyperparameters={}, seed=2, score=0.9),
    ]
    assert SearchReport(trials=trials, best_index=1).best.seed == 2
    with pytest.raises(ValidationError, match="REPORT INCONSISTENT"):
        SearchReport(trials=trials, best_index=0)


def test_search_report_needs_a_trial():
    with pytest.raises(ValidationError):
        SearchReport(trials=[], best_index=None)


def test_explanation_respects_k():
    config = LimeConfig(n_samples=10, k_features=1)
    with pytest.raises(ValidationError, match="exceed"):
        Explanation(
            instance_id=0,
            intercept=0.0,
            features=[FeatureWeight(name="a", weight=1.0), FeatureWeight(name="b", weight=2.0)],
            prediction=0.0,
            local_prediction=0.0,
            config=config,
        )


def test_explanation_local_fit_at_most_one():
    with pytest.raises(ValidationError, match="local_fit"):
        Explanation(
            instance_id=0,
            intercept=0.0,
            local_fit=1.5,
            prediction=0.0,
            local_prediction=0.0,
            config=LimeConfig(),
        )


def test_explanation_top_orders_by_magnitude():
    explanation = Explanation(
        instance_id=3,
        intercept=1.0,
        features=[
            FeatureWeight(name="a", weight=0.5),
            FeatureWeight(name="b", weight=-2.0),
            FeatureWeight(name="c", weight=1.0),
        ],
        prediction=1.0,
        local_prediction=1.0,
        config=LimeConfig(),
    )
    assert explanation.top(2) == ["b", "c"]
    assert explanation.weights == {"a": 0.5, "b": -2.0, "c": 1.0}
    assert explanation.selected_features == ["a", "b", "c"]


def test_pick_selection_budget():
    with pytest.raises(ValidationError, match="PICK REJECTED"):
        PickSelection(instance_ids=[1, 2, 3], budget=2, coverage=1.0)


def test_eval_report_means():
    report = EvalReport(
        runs=[
            RunResult(r2_lime=0.8, r2_random=0.2, random_columns=["a"]),
            RunResult(r2_lime=0.6, r2_random=0.4, random_columns=["b"]),
        ],
        r2_full_model=0.9,
        k_columns=1,
        n_instances=10,
        t_statistic=2.0,
        p_value=0.1,
        seed=0,
    )
    assert report.mean_r2_lime == pytest.approx(0.7)
    assert report.mean_r2_random == pytest.approx(0.3)
    assert report.mean_uplift == pytest.approx(0.4)


def test_eval_report_p_value_bounds():
    with pytest.raises(ValidationError):
        EvalReport(
            runs=[RunResult(r2_lime=0.1, r2_random=0.1, random_columns=[])],
            r2_full_model=0.5,
            k_columns=1,
            n_instances=1,
            p_value=1.5,
            seed=0,
        )


def test_feature_stats_alignment():
    stats = FeatureStats(names=["a", "b"], mean=[0.0, 1.0], std=[1.0, 0.0])
    assert stats.constant == [False, True]
    with pytest.raises(ValidationError, match="STATS REJECTED"):
        FeatureStats(names=["a"], mean=[0.0, 1.0], std=[1.0, 1.0])
    with pytest.raises(ValidationError, match="negative"):
        FeatureStats(names=["a"], mean=[0.0], std=[-1.0])
