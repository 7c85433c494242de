"""Shared fixtures: small synthetic panels and linear black boxes."""

from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
import pytest

from panelime.blackbox import fit_arrays
from panelime.config import reset_config
from panelime.models import TableSchema
from panelime.table import DataTable


@pytest.fixture(autouse=True)
def reset_config_cache():
    """Every test starts from the environment, not a cached config."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def schema() -> TableSchema:
    return TableSchema(entity="country", time="year", target="score")


@pytest.fixture
def make_panel(schema) -> Callable[..., DataTable]:
    """Build a sorted panel of ``n_entities`` x ``n_years`` with numeric features f0..f{p-1}."""

    def _make(
        n_entities: int = 4, n_years: int = 5, n_features: int = 3, seed: int = 0
    ) -> DataTable:
        rng = np.random.default_rng(seed)
        rows = []
        for e in range(n_entities):
            for t in range(n_years):
                features = rng.normal(size=n_features)
                rows.append(
                    {
                        "country": f"c{e:02d}",
                        "year": 2000 + t,
                        **{f"f{j}": features[j] for j in range(n_features)},
                        "score": float(features.sum()),
                    }
                )
        return DataTable(pd.DataFrame(rows), schema)

    return _make


@pytest.fixture
def linear_model():
    """Exact linear black box 3*x0 - 2*x1 + x2 over 6 features."""
    rng = np.random.default_rng(11)
    X = rng.normal(size=(400, 6))
    y = 3 * X[:, 0] - 2 * X[:, 1] + X[:, 2]
    return fit_arrays("linear", X, y, seed=0), X


@pytest.fixture
def fixture_csv() -> Path:
    return Path(__file__).resolve().parents[1] / "src" / "panelime" / "fixtures" / "freedom_snippet.csv"


@pytest.fixture
def fixture_config(tmp_path) -> Path:
    """Small pipeline config on the bundled economic-freedom snippet."""
    dataset = Path(__file__).resolve().parents[1] / "src" / "panelime" / "fixtures" / "freedom_snippet.csv"
    path = tmp_path / "experiment.toml"
    path.write_text(
        f"""
dataset = "{dataset.as_posix()}"
output_dir = "out"
seed = 7

[columns]
entity = "Country"
time = "Year"
target = "Economic Freedom"

[imputation]
theta = 0.34

[search]
max_trials = 3
families = ["random_forest", "linear"]

[lime]
n_samples = 300
k_features = 3

[evaluation]
k = 2
runs = 2
max_instances = 8

[pick]
budget = 3
top_k = 2
""",
        encoding="utf-8",
    )
    return path
