"""Failure paths: each rejection names its stage and maps to a CLI exit code."""

import pytest

from panelime import cli
from panelime.artifacts import read_json
from panelime.blackbox import fit_arrays
from panelime.errors import (
    EvaluationError,
    ExplanationError,
    ImputationError,
    MissingArtifactError,
    ModelError,
    PanelimeError,
    SearchBudgetError,
    SummaryError,
    TableError,
)
from panelime.explainer import compute_feature_stats, explain
from panelime.models import LimeConfig


@pytest.mark.parametrize(
    "error",
    [TableError, ImputationError, ModelError, ExplanationError, SummaryError, EvaluationError],
)
def test_input_errors_are_value_errors(error):
    assert issubclass(error, PanelimeError)
    assert issubclass(error, ValueError)


def test_missing_artifact_is_file_not_found():
    assert issubclass(MissingArtifactError, FileNotFoundError)
    assert issubclass(SearchBudgetError, ModelError)


def test_read_json_names_producing_stage(tmp_path):
    with pytest.raises(MissingArtifactError, match="run 'train' first"):
        read_json(tmp_path / "feature_stats.json", "train")


def test_narrow_kernel_advises_wider_width():
    X = [[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]]
    model = fit_arrays("linear", X, [0.0, 1.0, 2.0, 3.0])
    stats = compute_feature_stats(X, model.feature_names)
    with pytest.raises(ExplanationError, match="kernel_width"):
        explain(model, X[0], stats, LimeConfig(n_samples=50, k_features=2, kernel_width=1e-9))


def test_missing_dataset_exits_with_failure(capsys, tmp_path):
    config = tmp_path / "broken.toml"
    config.write_text(
        'dataset = "nowhere.csv"\n[columns]\nentity = "c"\ntime = "t"\ntarget = "y"\n',
        encoding="utf-8",
    )
    assert cli.main(["impute", "--config", str(config)]) == cli.EXIT_FAILURE
    assert "TABLE REJECTED" in capsys.readouterr().err


def test_bad_numeric_token_exits_with_failure(capsys, tmp_path):
    (tmp_path / "panel.csv").write_text("c,t,y\nA,2000,1\nA,2001,lots\n", encoding="utf-8")
    config = tmp_path / "panel.toml"
    config.write_text(
        'dataset = "panel.csv"\n[columns]\nentity = "c"\ntime = "t"\ntarget = "y"\n',
        encoding="utf-8",
    )
    assert cli.main(["impute", "--config", str(config)]) == cli.EXIT_FAILURE
    err = capsys.readouterr().err
    assert "non-numeric token 'lots'" in err


def test_unknown_config_key_is_config_error(capsys, tmp_path, fixture_config):
    text = fixture_config.read_text(encoding="utf-8") + "\n[surprise]\nvalue = 1\n"
    fixture_config.write_text(text, encoding="utf-8")
    assert cli.main(["impute", "--config", str(fixture_config)]) == cli.EXIT_CONFIG
    assert "surprise" in capsys.readouterr().err


def test_unwritable_output_dir_exits_with_failure(capsys, tmp_path, fixture_config):
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("", encoding="utf-8")
    code = cli.main(["impute", "--config", str(fixture_config), "--out", str(blocker / "sub")])
    assert code == cli.EXIT_FAILURE
    err = capsys.readouterr().err
    assert err.startswith("panelime: ")
    assert "Traceback" not in err
