"""PipelineConfig: one file, one master seed, every stage's settings."""

from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from ..seeding import derive_seed
from .base import CoverageMode, ReformatStrategy, TableSchema
from .policies import ImputationPolicy, LimeConfig, SearchConfig, SplitSpec


class ReformatSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: ReformatStrategy = "diff_all"


class ExplainSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # None explains every reformatted row
    instances: Optional[List[int]] = None
    plot: bool = False


class PickSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    budget: int = Field(20, ge=1)
    top_k: int = Field(5, ge=1)
    coverage: CoverageMode = "abs"


class IceSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    features: Optional[List[str]] = None
    grid_points: int = Field(20, ge=2)
    lower_percentile: float = Field(1.0, ge=0.0, le=100.0)
    upper_percentile: float = Field(99.0, ge=0.0, le=100.0)

    @model_validator(mode="after")
    def ordered_percentiles(self) -> Self:
        if self.lower_percentile >= self.upper_percentile:
            raise ValueError("ICE REJECTED: lower_percentile must be below upper_percentile.")
        return self


class EvalSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(3, ge=1)
    runs: int = Field(5, ge=1)
    max_instances: Optional[int] = Field(None, ge=1)


class PipelineConfig(BaseModel):
    """
    Complete experiment description.

    Nested seeds are never taken from the file: they are re-derived from
    the master seed on every validation, so one integer reproduces a run.
    """

    model_config = ConfigDict(extra="forbid")

    dataset: Path
    columns: TableSchema
    rename_map: Optional[Path] = None
    output_dir: Optional[Path] = None
    seed: int = 0
    include_entity: bool = True

    imputation: ImputationPolicy = Field(default_factory=ImputationPolicy)
    reformat: ReformatSettings = Field(default_factory=ReformatSettings)
    split: SplitSpec = Field(default_factory=SplitSpec)
    search: SearchConfig = Field(default_factory=SearchConfig)
    lime: LimeConfig = Field(default_factory=LimeConfig)
    explain: ExplainSettings = Field(default_factory=ExplainSettings)
    pick: PickSettings = Field(default_factory=PickSettings)
    ice: IceSettings = Field(default_factory=IceSettings)
    evaluation: EvalSettings = Field(default_factory=EvalSettings)

    @model_validator(mode="after")
    def derive_stage_seeds(self) -> Self:
        self.imputation = self.imputation.model_copy(
            update={"seed": derive_seed(self.seed, "imputation")}
        )
        self.split = self.split.model_copy(update={"seed": derive_seed(self.seed, "split")})
        self.search = self.search.model_copy(
            update={"seed": derive_seed(self.seed, "search")}
        )
        self.lime = self.lime.model_copy(update={"seed": derive_seed(self.seed, "lime")})
        return self

    @property
    def evaluation_seed(self) -> int:
        return derive_seed(self.seed, "evaluation")

    @property
    def stage_seeds(self) -> Dict[str, int]:
        return {
            "imputation": self.imputation.seed,
            "split": self.split.seed,
            "search": self.search.seed,
            "lime": self.lime.seed,
            "evaluation": self.evaluation_seed,
        }


class RunManifest(BaseModel):
    """Machine-readable record of what a pipeline run used."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    package_version: str
    python_version: str
    libraries: Dict[str, str]
    master_seed: int
    derived_seeds: Dict[str, int]
    dataset_sha256: str
    config_sha256: str
    stages: Dict[str, str]
