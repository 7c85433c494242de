"""panelime command line: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List

from pydantic import ValidationError

from .config import (
    Config,
    ConfigurationError,
    dump_pipeline_config,
    get_config,
    load_pipeline_config,
)
from .errors import MissingArtifactError, PanelimeError
from .models.base import MODEL_FAMILIES
from .pipeline import run_subcommand

logger = logging.getLogger("panelime")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3


def _render_config(config: Config) -> str:
    payload = asdict(config)
    payload["_initial_env"] = dict(config._initial_env)
    return json.dumps(payload, indent=2)


def _configure_logging(verbose: bool) -> None:
    config = get_config()
    level = getattr(logging, config.log_level, logging.INFO)
    if config.debug or verbose:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="[%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger("panelime").setLevel(level)


# === PARSER ===


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Pipeline TOML file")
    common.add_argument("--seed", type=int, help="Master seed (overrides the file)")
    common.add_argument("--out", type=Path, help="Artifact root directory")
    common.add_argument("--verbose", action="store_true", help="DEBUG logging")
    return common


def _lime_parser() -> argparse.ArgumentParser:
    lime = argparse.ArgumentParser(add_help=False)
    lime.add_argument("--kernel-width", type=float, help="Kernel width (default 0.75*sqrt(p))")
    lime.add_argument("--n-samples", type=int, help="Neighbourhood size")
    lime.add_argument(
        "--no-standardize",
        action="store_true",
        help="Measure kernel distances on raw feature scales",
    )
    return lime


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panelime",
        description="LIME explanations for entity-by-year panel regressions",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    common, lime = _common_parser(), _lime_parser()

    impute = sub.add_parser("impute", parents=[common], help="Gate rows by missing rate and impute")
    impute.add_argument("--method", choices=["linear", "knn", "iterative"])
    impute.add_argument("--theta", type=float, help="Maximum missing rate of an imputed row")

    reformat = sub.add_parser("reformat", parents=[common], help="Year-over-year differencing")
    reformat.add_argument("--strategy", choices=["diff_all", "diff_target_lag"])

    train = sub.add_parser("train", parents=[common], help="Budgeted model search")
    train.add_argument(
        "--family", action="append", choices=list(MODEL_FAMILIES), help="Repeatable"
    )
    train.add_argument("--budget", type=int, help="Number of search trials")
    train.add_argument("--time-budget", type=float, help="Search wall-clock seconds")
    train.add_argument("--metric", choices=["r_squared"])

    explain = sub.add_parser("explain", parents=[common, lime], help="Local explanations")
    explain.add_argument("--instance", type=int, action="append", help="Row id (repeatable)")
    explain.add_argument("--plot", action="store_true", help="Write one bar chart per instance")

    pick = sub.add_parser("pick", parents=[common, lime], help="Submodular pick + frequency table")
    pick.add_argument("--picks", type=int, help="Budget B of picked instances")
    pick.add_argument("--top-k", type=int, help="Top features counted per pick")
    pick.add_argument("--coverage", choices=["abs", "positive"])

    ice = sub.add_parser("ice", parents=[common], help="ICE/PDP curves and slope ranking")
    ice.add_argument("--feature", action="append", help="Feature name (repeatable)")
    ice.add_argument("--grid-points", type=int)

    evaluate = sub.add_parser("eval", parents=[common, lime], help="LIME vs random masking")
    evaluate.add_argument("--k", type=int, help="Columns kept per instance")
    evaluate.add_argument("--runs", type=int)
    evaluate.add_argument("--max-instances", type=int)

    sub.add_parser(
        "pipeline", parents=[common, lime], help="impute, reformat, train, explain, eval"
    )
    sub.add_parser("show-config", parents=[common], help="Print resolved configuration")
    return parser


# === OVERRIDES ===


def _put(overrides: Dict[str, Any], section: str, key: str, value: Any) -> None:
    if value is not None:
        overrides.setdefault(section, {})[key] = value


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested config overrides from whichever flags were given."""
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(args.out.resolve())

    flags = vars(args)
    _put(overrides, "imputation", "method", flags.get("method"))
    _put(overrides, "imputation", "theta", flags.get("theta"))
    _put(overrides, "reformat", "strategy", flags.get("strategy"))
    _put(overrides, "search", "families", flags.get("family"))
    _put(overrides, "search", "metric", flags.get("metric"))
    if flags.get("budget") is not None:
        overrides.setdefault("search", {}).update({"max_trials": args.budget, "time_budget_s": None})
    if flags.get("time_budget") is not None:
        overrides.setdefault("search", {}).update(
            {"time_budget_s": args.time_budget, "max_trials": None}
        )
    _put(overrides, "lime", "kernel_width", flags.get("kernel_width"))
    _put(overrides, "lime", "n_samples", flags.get("n_samples"))
    if flags.get("no_standardize"):
        _put(overrides, "lime", "standardize", False)
    _put(overrides, "explain", "instances", flags.get("instance"))
    if flags.get("plot"):
        _put(overrides, "explain", "plot", True)
    _put(overrides, "pick", "budget", flags.get("picks"))
    _put(overrides, "pick", "top_k", flags.get("top_k"))
    _put(overrides, "pick", "coverage", flags.get("coverage"))
    _put(overrides, "ice", "features", flags.get("feature"))
    _put(overrides, "ice", "grid_points", flags.get("grid_points"))
    _put(overrides, "evaluation", "k", flags.get("k"))
    _put(overrides, "evaluation", "runs", flags.get("runs"))
    _put(overrides, "evaluation", "max_instances", flags.get("max_instances"))
    return overrides


# === ENTRY ===


def _one_line(exc: BaseException) -> str:
    lines = str(exc).strip().splitlines()
    return lines[0] if lines else type(exc).__name__


def main(argv: List[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_OK

    try:
        _configure_logging(args.verbose)
        if args.command == "show-config":
            print(_render_config(get_config()))
            if args.config is not None:
                print(dump_pipeline_config(load_pipeline_config(args.config, collect_overrides(args))))
            return EXIT_OK

        if args.config is None:
            raise ConfigurationError(f"'{args.command}' needs --config PATH.")
        config = load_pipeline_config(args.config, collect_overrides(args))
        logger.debug("Loaded %s (master seed %d)", args.config, config.seed)
        produced = run_subcommand(args.command, config)
    except (ConfigurationError, ValidationError) as exc:
        print(f"panelime: config error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"panelime: {_one_line(exc)}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except PanelimeError as exc:
        print(f"panelime: {_one_line(exc)}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"panelime: {_one_line(exc)}", file=sys.stderr)
        return EXIT_FAILURE

    for stage, directory in produced.items():
        print(f"{stage}: {directory}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
