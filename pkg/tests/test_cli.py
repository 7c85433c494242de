"""Tests for the panelime command line."""

import json
import os
from unittest.mock import patch

import pytest

from panelime import cli
from panelime.config import set_config_value


@pytest.fixture(autouse=True)
def no_plots():
    set_config_value("write_plots", False)


def test_no_command_prints_help(capsys):
    assert cli.main([]) == cli.EXIT_OK
    assert "impute" in capsys.readouterr().out


def test_show_config_outputs_json(capsys):
    assert cli.main(["show-config"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["log_level"] == "INFO"
    assert "write_plots" in data


def test_show_config_renders_experiment(capsys, fixture_config):
    assert cli.main(["show-config", "--config", str(fixture_config), "--seed", "11"]) == 0
    out = capsys.readouterr().out
    assert "seed = 11" in out
    assert "[lime]" in out


def test_missing_config_flag(capsys):
    assert cli.main(["train"]) == cli.EXIT_CONFIG
    assert "needs --config" in capsys.readouterr().err


def test_unreadable_config(capsys, tmp_path):
    assert cli.main(["impute", "--config", str(tmp_path / "absent.toml")]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_invalid_override(capsys, fixture_config):
    code = cli.main(["impute", "--config", str(fixture_config), "--theta", "1.5"])
    assert code == cli.EXIT_CONFIG
    assert "imputation.theta" in capsys.readouterr().err


def test_invalid_environment(capsys):
    with patch.dict(os.environ, {"PANELIME_LOG_LEVEL": "LOUD"}):
        from panelime.config import reset_config

        reset_config()
        assert cli.main(["show-config"]) == cli.EXIT_CONFIG
    assert "PANELIME_LOG_LEVEL" in capsys.readouterr().err


def test_stage_before_upstream(capsys, fixture_config):
    assert cli.main(["explain", "--config", str(fixture_config)]) == cli.EXIT_MISSING_ARTIFACT
    assert "ARTIFACT MISSING" in capsys.readouterr().err


def test_collect_overrides():
    args = cli.build_parser().parse_args(
        ["train", "--family", "linear", "--family", "extra_trees", "--budget", "4", "--seed", "3"]
    )
    overrides = cli.collect_overrides(args)
    assert overrides["seed"] == 3
    assert overrides["search"] == {
        "families": ["linear", "extra_trees"],
        "max_trials": 4,
        "time_budget_s": None,
    }


def test_collect_lime_overrides():
    args = cli.build_parser().parse_args(
        ["eval", "--config", "x.toml", "--kernel-width", "0.5", "--no-standardize", "--k", "3"]
    )
    overrides = cli.collect_overrides(args)
    assert overrides["lime"] == {"kernel_width": 0.5, "standardize": False}
    assert overrides["evaluation"] == {"k": 3}


def test_unknown_family_rejected_by_parser():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["train", "--family", "svm"])


def test_stages_one_by_one(capsys, fixture_config):
    for stage in ("impute", "reformat", "train"):
        assert cli.main([stage, "--config", str(fixture_config)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("impute: ")
    assert "train: " in out

    assert cli.main(
        ["explain", "--config", str(fixture_config), "--instance", "0", "--instance", "1"]
    ) == cli.EXIT_OK
    line = capsys.readouterr().out.strip()
    directory = line.split(": ", 1)[1]
    with open(os.path.join(directory, "explanations.json"), encoding="utf-8") as handle:
        payload = json.load(handle)
    assert [e["instance_id"] for e in payload["explanations"]] == [0, 1]


def test_explain_rejects_out_of_range_instance(capsys, fixture_config):
    for stage in ("impute", "reformat", "train"):
        cli.main([stage, "--config", str(fixture_config)])
    code = cli.main(["explain", "--config", str(fixture_config), "--instance", "100000"])
    assert code == cli.EXIT_FAILURE
    assert "EXPLAIN REJECTED" in capsys.readouterr().err
