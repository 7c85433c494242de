"""
panelime: LIME explanations for entity-by-year panel regressions.

Impute, difference, fit an opaque regressor, then ask it which
year-over-year changes moved each prediction.
"""

__version__ = "0.1.0"

from .blackbox import Predictor, budgeted_search, fit, load_predictor, predict, save_predictor
from .errors import PanelimeError
from .evaluation import lime_vs_random_experiment, mask_to_columns
from .explainer import (
    compute_feature_stats,
    explain,
    explain_many,
    fit_local_model,
    kernel_weight,
    sample_neighborhood,
)
from .global_explain import (
    coverage,
    global_importance,
    greedy_pick,
    ice_curves,
    selection_frequency,
    slope_rank,
    submodular_pick,
)
from .imputation import impute_iterative, impute_knn, impute_linear, impute_table, missing_rate
from .models import (
    EvalReport,
    Explanation,
    FeatureStats,
    ImputationPolicy,
    LimeConfig,
    PipelineConfig,
    SearchConfig,
    SplitSpec,
    TableSchema,
)
from .pipeline import run_subcommand
from .stats import paired_t_test, r_squared
from .table import DataTable, diff_all, diff_target_lag_features, load_csv, split

__all__ = [
    "__version__",
    "PanelimeError",
    "TableSchema",
    "DataTable",
    "load_csv",
    "split",
    "diff_all",
    "diff_target_lag_features",
    "ImputationPolicy",
    "missing_rate",
    "impute_linear",
    "impute_knn",
    "impute_iterative",
    "impute_table",
    "SearchConfig",
    "SplitSpec",
    "Predictor",
    "fit",
    "predict",
    "budgeted_search",
    "save_predictor",
    "load_predictor",
    "LimeConfig",
    "FeatureStats",
    "Explanation",
    "compute_feature_stats",
    "sample_neighborhood",
    "kernel_weight",
    "fit_local_model",
    "explain",
    "explain_many",
    "global_importance",
    "coverage",
    "greedy_pick",
    "submodular_pick",
    "selection_frequency",
    "ice_curves",
    "slope_rank",
    "EvalReport",
    "r_squared",
    "paired_t_test",
    "mask_to_columns",
    "lime_vs_random_experiment",
    "PipelineConfig",
    "run_subcommand",
]
