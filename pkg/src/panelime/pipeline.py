"""Stage handlers behind the CLI subcommands.

Every stage writes into ``<out>/<stage>-<key>/`` where the key hashes the
stage's own settings together with its upstream stage key (and, for the
first stage, the dataset bytes). A stage reads its inputs only from the
upstream directories, so any stage can be re-run on its own.
"""

from __future__ import annotations

import logging
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import joblib
import matplotlib
import numpy as np
import pandas as pd
import pydantic
import scipy
import sklearn

from . import plots
from .artifacts import (
    read_json,
    sha256_file,
    sha256_text,
    stage_key,
    write_frame,
    write_json,
)
from .blackbox import Predictor, budgeted_search, load_predictor, save_predictor
from .config import dump_pipeline_config, get_config
from .errors import ExplanationError, MissingArtifactError, SummaryError, TableError
from .evaluation import lime_vs_random_experiment
from .explainer import compute_feature_stats, explain_many
from .global_explain import (
    default_grid,
    ice_curves,
    ice_frame,
    selection_frequency,
    slope_rank,
    submodular_pick,
)
from .imputation import impute_table
from .models.base import PERIOD_COLUMN, Subcommand, TableSchema
from .models.pipeline import PipelineConfig, RunManifest
from .models.reports import FeatureStats
from .table import (
    DataTable,
    EntityCodebook,
    drop_incomplete,
    encode_entities,
    load_csv,
    load_rename_map,
    reformat,
    split_indices,
    write_csv,
)

logger = logging.getLogger(__name__)

PIPELINE_STAGES: Tuple[Subcommand, ...] = ("impute", "reformat", "train", "explain", "eval")

IMPUTED_CSV = "imputed.csv"
REFORMATTED_CSV = "reformatted.csv"
MODEL_FILE = "model.joblib"


# === STAGE KEYS ===


def _settings(config: PipelineConfig, *sections: str) -> Dict[str, object]:
    dumped = config.model_dump(mode="json")
    return {section: dumped[section] for section in sections}


def stage_keys(config: PipelineConfig) -> Dict[str, str]:
    """Directory key of every stage for ``config``."""
    for source in (config.dataset, config.rename_map):
        if source is not None and not Path(source).is_file():
            raise TableError(f"TABLE REJECTED: cannot read {source}: no such file.")
    inputs = sha256_file(config.dataset)
    if config.rename_map is not None:
        inputs = sha256_text(inputs + sha256_file(config.rename_map))
    keys: Dict[str, str] = {}
    keys["impute"] = stage_key("impute", inputs, _settings(config, "columns", "imputation"))
    keys["reformat"] = stage_key("reformat", keys["impute"], _settings(config, "reformat"))
    keys["train"] = stage_key(
        "train", keys["reformat"], _settings(config, "include_entity", "split", "search")
    )
    keys["explain"] = stage_key("explain", keys["train"], _settings(config, "lime", "explain"))
    keys["pick"] = stage_key("pick", keys["train"], _settings(config, "lime", "pick"))
    keys["ice"] = stage_key("ice", keys["train"], _settings(config, "ice"))
    keys["eval"] = stage_key(
        "eval", keys["train"], _settings(config, "seed", "lime", "evaluation")
    )
    return keys


@dataclass(frozen=True)
class Workspace:
    """Where a config's artifacts live."""

    root: Path
    keys: Dict[str, str]

    @classmethod
    def for_config(cls, config: PipelineConfig) -> "Workspace":
        root = config.output_dir or Path(get_config().output_dir)
        return cls(Path(root), stage_keys(config))

    def stage_dir(self, stage: str) -> Path:
        return self.root / f"{stage}-{self.keys[stage]}"

    def require(self, stage: str, filename: str) -> Path:
        path = self.stage_dir(stage) / filename
        if not path.exists():
            raise MissingArtifactError(
                f"ARTIFACT MISSING: {path} does not exist; run '{stage}' with this config first."
            )
        return path


def _reformatted_schema(schema: TableSchema) -> TableSchema:
    return schema.model_copy(update={"period": PERIOD_COLUMN})


# === SHARED INPUTS ===


@dataclass(frozen=True)
class ModelInputs:
    """Complete, entity-encoded rows plus the split and fitted artifacts."""

    table: DataTable
    codebook: EntityCodebook
    train_rows: np.ndarray
    test_rows: np.ndarray

    def labels(self, rows: np.ndarray) -> List[Tuple[str, float]]:
        all_labels = self.table.labels(self.codebook)
        return [all_labels[i] for i in rows]


def _model_inputs(config: PipelineConfig, ws: Workspace) -> ModelInputs:
    path = ws.require("reformat", REFORMATTED_CSV)
    table = load_csv(path, _reformatted_schema(config.columns))
    encoded, codebook = encode_entities(table)
    complete = drop_incomplete(encoded, config.include_entity)
    train_rows, test_rows = split_indices(complete.n_rows, config.split)
    return ModelInputs(complete, codebook, train_rows, test_rows)


def _load_trained(ws: Workspace) -> Tuple[Predictor, FeatureStats]:
    model = load_predictor(ws.require("train", MODEL_FILE))
    stats = FeatureStats.model_validate(read_json(ws.require("train", "feature_stats.json"), "train"))
    return model, stats


def _plots_enabled() -> bool:
    return get_config().write_plots


# === STAGES ===


def run_impute(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("impute")
    renames = load_rename_map(config.rename_map) if config.rename_map is not None else None
    table = load_csv(config.dataset, config.columns, renames)
    imputed, report = impute_table(table, config.imputation)
    write_csv(imputed, out / IMPUTED_CSV)
    write_json(out / "imputation_report.json", report)
    return out


def run_reformat(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("reformat")
    table = load_csv(ws.require("impute", IMPUTED_CSV), config.columns)
    reformatted = reformat(table, config.reformat.strategy)
    write_csv(reformatted, out / REFORMATTED_CSV)
    write_json(
        out / "reformat_summary.json",
        {
            "strategy": config.reformat.strategy,
            "rows_in": table.n_rows,
            "rows_out": reformatted.n_rows,
        },
    )
    logger.info(
        "Reformatted %d row(s) into %d with %s", table.n_rows, reformatted.n_rows, config.reformat.strategy
    )
    return out


def run_train(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("train")
    inputs = _model_inputs(config, ws)
    train = inputs.table.take(inputs.train_rows)
    model, report = budgeted_search(train, config.search, config.include_entity)
    stats = compute_feature_stats(
        train.features(config.include_entity), train.feature_columns(config.include_entity)
    )
    save_predictor(model, out / MODEL_FILE)
    write_json(out / "search_report.json", report)
    write_json(out / "feature_stats.json", stats)
    write_json(out / "codebook.json", inputs.codebook)
    write_json(
        out / "split.json",
        {"train": inputs.train_rows.tolist(), "test": inputs.test_rows.tolist()},
    )
    return out


def run_explain(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("explain")
    model, stats = _load_trained(ws)
    inputs = _model_inputs(config, ws)
    if config.explain.instances is None:
        rows = np.arange(inputs.table.n_rows)
    else:
        rows = np.asarray(config.explain.instances, dtype=int)
        bad = [int(r) for r in rows if not 0 <= r < inputs.table.n_rows]
        if bad:
            raise ExplanationError(
                f"EXPLAIN REJECTED: instance ids {bad} outside [0, {inputs.table.n_rows})."
            )
    X = inputs.table.features(config.include_entity)[rows]
    explanations, skipped = explain_many(
        model,
        X,
        stats,
        config.lime,
        instance_ids=rows.tolist(),
        labels=inputs.labels(rows),
        observed=inputs.table.target[rows].tolist(),
    )
    write_json(
        out / "explanations.json",
        {"skipped_instances": skipped, "explanations": explanations},
    )
    if config.explain.plot and _plots_enabled():
        for explanation in explanations:
            plots.plot_explanation(
                explanation, out / "figures" / f"instance_{explanation.instance_id}.svg"
            )
    return out


def run_pick(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("pick")
    model, stats = _load_trained(ws)
    inputs = _model_inputs(config, ws)
    rows = inputs.test_rows
    outcome = submodular_pick(
        model,
        inputs.table.features(config.include_entity)[rows],
        stats,
        config.lime,
        config.pick.budget,
        config.pick.coverage,
        instance_ids=rows.tolist(),
        labels=inputs.labels(rows),
    )
    frequency = selection_frequency(outcome.picked, config.pick.top_k)
    write_json(
        out / "pick.json",
        {
            "selection": outcome.selection,
            "importance": outcome.importance.to_dict(),
            "weights": outcome.weights.to_dict(),
            "picked": outcome.picked,
            "skipped_instances": outcome.skipped,
        },
    )
    write_frame(
        out / "frequency.csv",
        pd.DataFrame(
            {"feature": [e.feature for e in frequency], "count": [e.count for e in frequency]}
        ),
    )
    if _plots_enabled() and frequency:
        plots.plot_frequency(
            [e.feature for e in frequency], [e.count for e in frequency], out / "frequency.svg"
        )
    return out


def run_ice(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("ice")
    model, _ = _load_trained(ws)
    inputs = _model_inputs(config, ws)
    X = inputs.table.features(config.include_entity)
    train_X, test_X = X[inputs.train_rows], X[inputs.test_rows]
    features = config.ice.features or list(model.feature_names)

    curves = []
    for feature in features:
        if feature not in model.feature_names:
            raise SummaryError(f"ICE REJECTED: model has no feature '{feature}'.")
        j = model.feature_names.index(feature)
        try:
            grid = default_grid(
                train_X[:, j],
                config.ice.grid_points,
                config.ice.lower_percentile,
                config.ice.upper_percentile,
            )
        except SummaryError as exc:
            logger.warning("Skipping ICE for '%s': %s", feature, exc)
            continue
        curves.append(ice_curves(model, test_X, feature, grid, inputs.test_rows.tolist()))

    write_frame(out / "ice.csv", ice_frame(curves))
    write_json(
        out / "slope_rank.json",
        [{"feature": name, "score": score} for name, score in slope_rank(curves)],
    )
    if _plots_enabled():
        for curve in curves:
            plots.plot_ice(curve, out / "figures" / f"ice_{curve.feature}.svg")
    return out


def run_eval(config: PipelineConfig, ws: Workspace) -> Path:
    out = ws.stage_dir("eval")
    model, stats = _load_trained(ws)
    inputs = _model_inputs(config, ws)
    report = lime_vs_random_experiment(
        model,
        inputs.table.take(inputs.test_rows),
        config.evaluation.k,
        config.lime,
        n_runs=config.evaluation.runs,
        seed=config.evaluation_seed,
        stats=stats,
        max_instances=config.evaluation.max_instances,
        include_entity=config.include_entity,
    )
    write_json(
        out / "eval_report.json",
        {
            "report": report,
            "mean_r2_lime": report.mean_r2_lime,
            "mean_r2_random": report.mean_r2_random,
            "mean_uplift": report.mean_uplift,
        },
    )
    if _plots_enabled():
        plots.plot_eval(report, out / "eval.svg")
    return out


STAGE_HANDLERS: Dict[str, Callable[[PipelineConfig, Workspace], Path]] = {
    "impute": run_impute,
    "reformat": run_reformat,
    "train": run_train,
    "explain": run_explain,
    "pick": run_pick,
    "ice": run_ice,
    "eval": run_eval,
}


# === ENTRY ===


def build_manifest(config: PipelineConfig, ws: Workspace) -> RunManifest:
    from . import __version__

    return RunManifest(
        package_version=__version__,
        python_version=platform.python_version(),
        libraries={
            "joblib": joblib.__version__,
            "matplotlib": matplotlib.__version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
            "pydantic": pydantic.VERSION,
            "scikit-learn": sklearn.__version__,
            "scipy": scipy.__version__,
        },
        master_seed=config.seed,
        derived_seeds=config.stage_seeds,
        dataset_sha256=sha256_file(config.dataset),
        config_sha256=sha256_text(dump_pipeline_config(config)),
        stages={stage: ws.stage_dir(stage).name for stage in PIPELINE_STAGES},
    )


def run_subcommand(name: Subcommand, config: PipelineConfig) -> Dict[str, Path]:
    """Run one stage, or the whole chain for ``pipeline``; return stage -> directory."""
    ws = Workspace.for_config(config)
    if name != "pipeline":
        logger.info("Running %s into %s", name, ws.stage_dir(name))
        return {name: STAGE_HANDLERS[name](config, ws)}

    produced: Dict[str, Path] = {}
    for stage in PIPELINE_STAGES:
        logger.info("Running %s into %s", stage, ws.stage_dir(stage))
        produced[stage] = STAGE_HANDLERS[stage](config, ws)
    write_json(ws.root / "run_manifest.json", build_manifest(config, ws))
    return produced


__all__ = [
    "PIPELINE_STAGES",
    "STAGE_HANDLERS",
    "Workspace",
    "ModelInputs",
    "stage_keys",
    "build_manifest",
    "run_subcommand",
]
