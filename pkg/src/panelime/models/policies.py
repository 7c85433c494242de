"""Policies and configs for each stage. Strict Pydantic."""

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from .base import MODEL_FAMILIES, ImputationMethod, ModelFamily


class SplitSpec(BaseModel):
    """Uniform random train/test partition."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    seed: int = 0


class ImputationPolicy(BaseModel):
    """Method choice and the per-row missing-rate gate."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: ImputationMethod = "linear"
    theta: float = Field(0.25, ge=0.0, le=1.0)
    k: int = Field(5, ge=1)
    max_iterations: int = Field(10, ge=1)
    tolerance: float = Field(1e-3, gt=0.0)
    sample_residuals: bool = False
    seed: int = 0


class SearchConfig(BaseModel):
    """Budget and space of the random hyperparameter search."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_trials: Optional[int] = Field(None, ge=1)
    time_budget_s: Optional[float] = Field(None, gt=0.0)
    families: List[ModelFamily] = Field(
        default_factory=lambda: list(MODEL_FAMILIES), min_length=1
    )
    metric: Literal["r_squared"] = "r_squared"
    validation_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def default_budget(cls, data: Any) -> Any:
        if (
            isinstance(data, dict)
            and data.get("max_trials") is None
            and data.get("time_budget_s") is None
        ):
            return {**data, "max_trials": 25}
        return data

    @model_validator(mode="after")
    def one_budget(self) -> Self:
        if (self.max_trials is None) == (self.time_budget_s is None):
            raise ValueError(
                "SEARCH REJECTED: set exactly one of max_trials or time_budget_s."
            )
        return self


class LimeConfig(BaseModel):
    """Neighbourhood, kernel and sparsity settings of the local surrogate."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kernel_width: Optional[float] = Field(None, gt=0.0)
    n_samples: int = Field(5000, ge=1)
    k_features: int = Field(10, ge=1)
    ridge_lambda: float = Field(1.0, ge=0.0)
    standardize: bool = True
    seed: int = 0

    @model_validator(mode="after")
    def enough_samples(self) -> Self:
        if self.n_samples < self.k_features + 1:
            raise ValueError(
                f"LIME REJECTED: n_samples ({self.n_samples}) must be at least "
                f"k_features + 1 ({self.k_features + 1})."
            )
        return self

    def width_for(self, n_features: int) -> float:
        if self.kernel_width is not None:
            return self.kernel_width
        return 0.75 * float(n_features) ** 0.5
