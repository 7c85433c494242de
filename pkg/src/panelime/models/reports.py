"""Stage reports and explanation records. Everything here is written to JSON."""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from .base import CoverageMode, ImputationMethod, ModelFamily
from .policies import LimeConfig


class ImputationReport(BaseModel):
    """What missing-rate gating and the imputer did to a table."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: ImputationMethod
    theta: float
    rows_imputed: int = Field(..., ge=0)
    rows_skipped: int = Field(..., ge=0)
    cells_filled: int = Field(..., ge=0)
    iterations_used: int = Field(0, ge=0)
    converged: bool = True
    unfillable_columns: List[str] = Field(default_factory=list)
    ridge_fallbacks: List[str] = Field(default_factory=list)
    knn_shortfalls: int = Field(0, ge=0)

    @property
    def n_rows(self) -> int:
        return self.rows_imputed + self.rows_skipped


class Trial(BaseModel):
    """One sampled configuration and its validation score."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: ModelFamily
    hyperparameters: Dict[str, Any]
    seed: int
    score: Optional[float] = None
    error: Optional[str] = None


class SearchReport(BaseModel):
    """Every trial the search ran; best_index points at the winner."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    trials: List[Trial] = Field(..., min_length=1)
    best_index: Optional[int] = None

    @model_validator(mode="after")
    def best_is_max(self) -> Self:
        scored = [t.score for t in self.trials if t.score is not None]
        if self.best_index is None:
            if scored:
                raise ValueError("REPORT INCONSISTENT: scored trials but no best_index.")
            return self
        best = self.trials[self.best_index].score
        if best is None or best < max(scored):
            raise ValueError(
                "REPORT INCONSISTENT: best_index does not maximise validation score."
            )
        return self

    @property
    def best(self) -> Trial:
        if self.best_index is None:
            raise ValueError("No successful trial.")
        return self.trials[self.best_index]


class FeatureWeight(BaseModel):
    """One nonzero entry of a local surrogate."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    weight: float


class Explanation(BaseModel):
    """A local linear surrogate for a single instance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    instance_id: int
    intercept: float
    features: List[FeatureWeight] = Field(default_factory=list)
    local_fit: Optional[float] = None
    prediction: float
    local_prediction: float
    degenerate: bool = False
    entity: Optional[str] = None
    period: Optional[float] = None
    observed: Optional[float] = None
    config: LimeConfig

    @model_validator(mode="after")
    def sparse_and_bounded(self) -> Self:
        if len(self.features) > self.config.k_features:
            raise ValueError(
                f"EXPLANATION REJECTED: {len(self.features)} features exceed "
                f"K={self.config.k_features}."
            )
        if self.local_fit is not None and self.local_fit > 1.0 + 1e-12:
            raise ValueError("EXPLANATION REJECTED: local_fit above 1.")
        return self

    @property
    def selected_features(self) -> List[str]:
        return [f.name for f in self.features]

    @property
    def weights(self) -> Dict[str, float]:
        return {f.name: f.weight for f in self.features}

    def top(self, k: int) -> List[str]:
        """Names of the k features with the largest |weight| (stable on ties)."""
        ranked = sorted(
            range(len(self.features)), key=lambda i: -abs(self.features[i].weight)
        )
        return [self.features[i].name for i in ranked[:k]]


class PickSelection(BaseModel):
    """Instances chosen by greedy coverage maximisation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    instance_ids: List[int]
    budget: int = Field(..., ge=1)
    coverage: float = Field(..., ge=0.0)
    mode: CoverageMode = "abs"

    @model_validator(mode="after")
    def within_budget(self) -> Self:
        if len(self.instance_ids) > self.budget:
            raise ValueError("PICK REJECTED: more instances than the budget allows.")
        return self


class FrequencyEntry(BaseModel):
    """How many explanations ranked a feature among their top features."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    feature: str
    count: int = Field(..., ge=0)


class RunResult(BaseModel):
    """One masked-column run: LIME-chosen columns against random columns."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    r2_lime: float
    r2_random: float
    random_columns: List[str]
    skipped_instances: int = Field(0, ge=0)


class EvalReport(BaseModel):
    """Masked R^2 runs plus the one-sided paired test on them."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    runs: List[RunResult] = Field(..., min_length=1)
    r2_full_model: float
    k_columns: int = Field(..., ge=1)
    n_instances: int = Field(..., ge=1)
    t_statistic: Optional[float] = None
    p_value: Optional[float] = Field(None, ge=0.0, le=1.0)
    seed: int

    @property
    def mean_r2_lime(self) -> float:
        return sum(r.r2_lime for r in self.runs) / len(self.runs)

    @property
    def mean_r2_random(self) -> float:
        return sum(r.r2_random for r in self.runs) / len(self.runs)

    @property
    def mean_uplift(self) -> float:
        return self.mean_r2_lime - self.mean_r2_random


class FeatureStats(BaseModel):
    """Per-feature mean and standard deviation of the training split."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    names: List[str]
    mean: List[float]
    std: List[float]

    @model_validator(mode="after")
    def aligned(self) -> Self:
        if not (len(self.names) == len(self.mean) == len(self.std)):
            raise ValueError("STATS REJECTED: names, mean and std differ in length.")
        if any(s < 0 for s in self.std):
            raise ValueError("STATS REJECTED: negative standard deviation.")
        return self

    @property
    def n_features(self) -> int:
        return len(self.names)

    @property
    def constant(self) -> List[bool]:
        return [s == 0.0 for s in self.std]
