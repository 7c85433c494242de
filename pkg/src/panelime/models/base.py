"""Base vocabularies and the table schema. Strict. Frozen."""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self


# === COLUMN KINDS ===
# "period" marks the label column added by differencing
ColumnKind = Literal["numeric", "categorical", "entity", "time", "target", "period"]

# === MODEL FAMILIES ===
ModelFamily = Literal["random_forest", "extra_trees", "gradient_boosting", "linear"]
MODEL_FAMILIES: tuple[ModelFamily, ...] = (
    "random_forest",
    "extra_trees",
    "gradient_boosting",
    "linear",
)

# === IMPUTATION ===
ImputationMethod = Literal["linear", "knn", "iterative"]

# === REFORMATTING ===
ReformatStrategy = Literal["diff_all", "diff_target_lag"]

# === COVERAGE ===
# abs: |W_ij| > 0 counts; positive: W_ij > 0 as printed in the coverage formula
CoverageMode = Literal["abs", "positive"]

# === SUBCOMMANDS ===
Subcommand = Literal[
    "impute", "reformat", "train", "explain", "pick", "ice", "eval", "pipeline"
]

PERIOD_COLUMN = "period"


class TableSchema(BaseModel):
    """Column-kind assignment. Unnamed columns are numeric features."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    entity: str = Field(..., min_length=1)
    time: str = Field(..., min_length=1)
    target: str = Field(..., min_length=1)
    categorical: List[str] = Field(default_factory=list)
    period: Optional[str] = None

    @model_validator(mode="after")
    def distinct_roles(self) -> Self:
        roles = [self.entity, self.time, self.target, *self.categorical]
        if self.period is not None:
            roles.append(self.period)
        if len(set(roles)) != len(roles):
            raise ValueError(
                "SCHEMA REJECTED: entity, time, target, period and categorical "
                "columns must be distinct."
            )
        return self

    def kind_of(self, column: str) -> ColumnKind:
        if column == self.entity:
            return "entity"
        if column == self.time:
            return "time"
        if column == self.target:
            return "target"
        if column == self.period:
            return "period"
        if column in self.categorical:
            return "categorical"
        return "numeric"

    @property
    def order_column(self) -> str:
        """Column that orders rows within an entity."""
        return self.period if self.period is not None else self.time
