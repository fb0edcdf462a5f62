"""Command line entry point for staged pair-score runs."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from .config import PipelineSettings, SimulationSettings
from .errors import PairScoreError, ProviderError
from .llm import ProviderConfig
from .logging import setup_logging
from .pipeline import PIPELINE_ORDER, Stage, run_pipeline, run_stage

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3

STAGE_HELP = {
    Stage.INGEST: "Validate the experiment table and copy it into the run directory",
    Stage.IMPUTE: "Cross-fit the base covariate model (stratification input)",
    Stage.STRATIFY: "Group units into comparison strata",
    Stage.PAIR: "Plan within-stratum pairs for every question",
    Stage.QUERY: "Ask the provider for a verdict on every planned pair",
    Stage.SCORE: "Aggregate verdicts into adjusted pair scores",
    Stage.ESTIMATE: "Horvitz-Thompson and adjusted estimates per covariate recipe",
    Stage.EVALUATE: "Significance screen, regression table and order-effect audit",
    Stage.SIMULATE: "Monte-Carlo checks on synthetic experiments",
}


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="TOML run configuration")
    parent.add_argument("--seed", type=int, default=None, help="Master seed (default: config)")
    parent.add_argument("--out-dir", default=None, help="Run directory for artifacts")
    parent.add_argument(
        "--force",
        action="store_true",
        help="Recompute even when up to date; overwrite after a configuration change",
    )
    parent.add_argument(
        "--verbose", "-v", action="store_true", help="Enable verbose (DEBUG) logging output"
    )
    parent.add_argument(
        "--env-file", default=".env", help="Path to environment file (default: .env)"
    )
    provider = parent.add_argument_group("provider")
    provider.add_argument("--provider", choices=("mock", "http"), default=None)
    provider.add_argument(
        "--live",
        action="store_true",
        help="Allow paid calls to the HTTP provider (required with --provider http)",
    )
    provider.add_argument("--model", default=None, help="Chat model name, e.g. gpt-4o-mini")
    provider.add_argument("--max-in-flight", type=int, default=None)
    provider.add_argument("--rpm", type=float, default=None, help="Requests per minute")
    provider.add_argument("--cache-path", default=None, help="JSONL response cache")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairscore-rct",
        description="Pairwise LLM comparisons as covariates for randomized experiments.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    common = _common_options()
    for name, help_text in STAGE_HELP.items():
        sub = subparsers.add_parser(name.value, parents=[common], help=help_text)
        if name is Stage.SIMULATE:
            sub.add_argument("--suite", default=None, help="DGP suite name (default: default)")
            sub.add_argument("--replications", type=int, default=None)
            sub.add_argument("--n", type=int, default=None, help="Units per synthetic experiment")
    subparsers.add_parser(
        "run", parents=[common], help="Run every stage from ingest to evaluate"
    )
    return parser


def apply_overrides(settings: PipelineSettings, args: argparse.Namespace) -> PipelineSettings:
    """CLI flags over the loaded settings; nested sections are re-validated."""

    updates: dict[str, Any] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out_dir is not None:
        updates["out_dir"] = Path(args.out_dir)
    if args.cache_path is not None:
        updates["cache_path"] = Path(args.cache_path)

    provider: dict[str, Any] = {}
    if args.provider is not None:
        provider["kind"] = args.provider
    if args.live:
        provider["live"] = True
    if args.model is not None:
        provider["model"] = args.model
    if args.max_in_flight is not None:
        provider["max_in_flight"] = args.max_in_flight
    if args.rpm is not None:
        provider["requests_per_minute"] = args.rpm
    if provider:
        updates["provider"] = ProviderConfig.model_validate(
            {**settings.provider.model_dump(), **provider}
        )

    simulation: dict[str, Any] = {}
    for flag in ("suite", "replications", "n"):
        value = getattr(args, flag, None)
        if value is not None:
            simulation[flag] = value
    if simulation:
        updates["simulation"] = SimulationSettings.model_validate(
            {**settings.simulation.model_dump(), **simulation}
        )
    return settings.model_copy(update=updates)


def execute(args: argparse.Namespace) -> None:
    load_dotenv(args.env_file, override=False)
    settings = apply_overrides(
        PipelineSettings.load(args.config, env_file=args.env_file), args
    )
    setup_logging(settings, level="DEBUG" if args.verbose else None)
    if args.command == "run":
        run_pipeline(settings, PIPELINE_ORDER, force=args.force)
    else:
        run_stage(args.command, settings, force=args.force)


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse `argv`, run the command and map failures to exit codes."""

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_VALIDATION
    try:
        execute(args)
    except ValidationError as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProviderError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except PairScoreError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def main() -> None:
    """Main CLI entry point."""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
