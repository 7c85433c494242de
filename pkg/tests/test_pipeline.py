"""End-to-end stage runs on the bundled economic-freedom snippet."""

import json

import pytest

from panelime.config import load_pipeline_config, set_config_value
from panelime.errors import MissingArtifactError
from panelime.pipeline import PIPELINE_STAGES, Workspace, run_subcommand, stage_keys


@pytest.fixture
def config(fixture_config):
    set_config_value("write_plots", False)
    return load_pipeline_config(fixture_config)


@pytest.fixture
def pipeline_run(config):
    return config, run_subcommand("pipeline", config)


def _read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_pipeline_produces_every_stage(pipeline_run):
    config, produced = pipeline_run
    assert list(produced) == list(PIPELINE_STAGES)
    ws = Workspace.for_config(config)
    for stage, directory in produced.items():
        assert directory == ws.stage_dir(stage)
        assert directory.is_dir()
    assert (produced["train"] / "model.joblib").exists()


def test_manifest_records_seeds_and_stages(pipeline_run):
    config, produced = pipeline_run
    manifest = _read(config.output_dir / "run_manifest.json")
    assert manifest["master_seed"] == 7
    assert manifest["derived_seeds"] == config.stage_seeds
    assert manifest["stages"]["train"] == produced["train"].name
    assert "scikit-learn" in manifest["libraries"]


def test_syria_explanation_observes_drop(pipeline_run):
    _, produced = pipeline_run
    payload = _read(produced["explain"] / "explanations.json")
    syria = [
        e for e in payload["explanations"] if e["entity"] == "Syria" and e["period"] == 2012
    ]
    assert len(syria) == 1
    assert syria[0]["observed"] == pytest.approx(-0.91, abs=1e-9)
    assert len(syria[0]["features"]) <= 3


def test_imputation_report_written(pipeline_run):
    _, produced = pipeline_run
    report = _read(produced["impute"] / "imputation_report.json")
    assert report["theta"] == 0.34
    assert report["rows_imputed"] + report["rows_skipped"] == 250


def test_eval_report_shape(pipeline_run):
    _, produced = pipeline_run
    payload = _read(produced["eval"] / "eval_report.json")
    assert len(payload["report"]["runs"]) == 2
    assert payload["report"]["k_columns"] == 2
    assert payload["report"]["n_instances"] <= 8
    assert payload["mean_uplift"] == pytest.approx(
        payload["mean_r2_lime"] - payload["mean_r2_random"]
    )


def test_pipeline_is_reproducible(fixture_config, tmp_path):
    set_config_value("write_plots", False)
    runs = []
    for name in ("first", "second"):
        config = load_pipeline_config(fixture_config, {"output_dir": str(tmp_path / name)})
        runs.append(run_subcommand("pipeline", config))
    for stage, filename in [
        ("impute", "imputed.csv"),
        ("train", "search_report.json"),
        ("explain", "explanations.json"),
        ("eval", "eval_report.json"),
    ]:
        first = (runs[0][stage] / filename).read_bytes()
        assert first == (runs[1][stage] / filename).read_bytes()


def test_rerunning_a_stage_is_stable(pipeline_run):
    config, produced = pipeline_run
    before = (produced["explain"] / "explanations.json").read_bytes()
    again = run_subcommand("explain", config)
    assert (again["explain"] / "explanations.json").read_bytes() == before


def test_pick_and_ice_after_training(pipeline_run):
    config, _ = pipeline_run
    pick_dir = run_subcommand("pick", config)["pick"]
    pick = _read(pick_dir / "pick.json")
    assert 1 <= len(pick["picked"]) <= 3
    assert (pick_dir / "frequency.csv").read_text().startswith("feature,count\n")

    ice_dir = run_subcommand("ice", config)["ice"]
    ranked = _read(ice_dir / "slope_rank.json")
    scores = [entry["score"] for entry in ranked]
    assert scores == sorted(scores, reverse=True)


def test_ice_runs_straight_after_training(config):
    run_subcommand("pipeline", config)
    ice_dir = run_subcommand("ice", config)["ice"]
    assert ice_dir.is_dir()
    assert (ice_dir / "ice.csv").read_text(encoding="utf-8").startswith("feature,")


def test_changed_settings_change_downstream_keys(config):
    base = stage_keys(config)
    changed = stage_keys(type(config).model_validate({**config.model_dump(), "seed": 8}))
    assert changed["impute"] != base["impute"]
    assert changed["eval"] != base["eval"]


def test_lime_settings_leave_training_alone(config):
    base = stage_keys(config)
    dumped = config.model_dump()
    dumped["lime"]["n_samples"] = 400
    changed = stage_keys(type(config).model_validate(dumped))
    assert changed["train"] == base["train"]
    assert changed["explain"] != base["explain"]


def test_stage_without_upstream_artifacts(config):
    with pytest.raises(MissingArtifactError, match="run 'reformat'"):
        run_subcommand("train", config)
