"""Domain models. Strict Pydantic. Frozen where they cross a stage boundary."""

from .base import (
    MODEL_FAMILIES,
    PERIOD_COLUMN,
    ColumnKind,
    CoverageMode,
    ImputationMethod,
    ModelFamily,
    ReformatStrategy,
    Subcommand,
    TableSchema,
)
from .policies import ImputationPolicy, LimeConfig, SearchConfig, SplitSpec
from .reports import (
    EvalReport,
    Explanation,
    FeatureStats,
    FeatureWeight,
    FrequencyEntry,
    ImputationReport,
    PickSelection,
    RunResult,
    SearchReport,
    Trial,
)
from .pipeline import (
    EvalSettings,
    ExplainSettings,
    IceSettings,
    PickSettings,
    PipelineConfig,
    ReformatSettings,
    RunManifest,
)

__all__ = [
    "MODEL_FAMILIES",
    "PERIOD_COLUMN",
    "ColumnKind",
    "CoverageMode",
    "ImputationMethod",
    "ModelFamily",
    "ReformatStrategy",
    "Subcommand",
    "TableSchema",
    "ImputationPolicy",
    "LimeConfig",
    "SearchConfig",
    "SplitSpec",
    "EvalReport",
    "Explanation",
    "FeatureStats",
    "FeatureWeight",
    "FrequencyEntry",
    "ImputationReport",
    "PickSelection",
    "RunResult",
    "SearchReport",
    "Trial",
    "EvalSettings",
    "ExplainSettings",
    "IceSettings",
    "PickSettings",
    "PipelineConfig",
    "ReformatSettings",
    "RunManifest",
]
