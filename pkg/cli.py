"""Command-line entry point.

Usage:
    python cli.py sweep --preset superohmic-fig2 --out results/
    python cli.py threshold --config run.yaml --engine binder --threads 4
    python cli.py kernels --config run.yaml
    python cli.py validate
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from constants import EXIT_CONFIG, EXIT_ENGINE, EXIT_NO_CROSSING, EXIT_OK, VERSION
from errors import ConfigError, EngineError, KernelError, NoCrossing, ParseError, VariantMismatch
from experiment import ExperimentRunner, RunResult, list_presets, parse_config, run_validation
from models import EngineKind, RunConfig
from utils import config_section, load_app_config, resolve_threads, setup_logging

logger = logging.getLogger("tst")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tst",
        description="Surface-code fidelity under a bosonic bath",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"tst {VERSION}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run config (YAML)")
    common.add_argument("--preset", choices=list_presets() or None, help="Shipped preset")
    common.add_argument("--seed", type=int, help="Root seed")
    common.add_argument("--out", type=str, help="Output directory")
    common.add_argument(
        "--engine", choices=[k.value for k in EngineKind], help="Engine (default: auto)"
    )
    common.add_argument("--threads", type=int, help="Worker threads (fallback: TST_THREADS)")
    common.add_argument("--app-config", type=Path, help="Application settings file")
    common.add_argument("--dry-run", action="store_true", help="Print the plan, write nothing")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kernels", parents=[common], help="Write kernels.csv")
    fidelity = sub.add_parser("fidelity", parents=[common], help="Fidelity at one coupling")
    point = fidelity.add_mutually_exclusive_group(required=True)
    point.add_argument("--gamma", type=float, help="Reduced coupling lambda^2 F")
    point.add_argument("--lambda", dest="lambda_", type=float, help="Physical coupling")
    sub.add_parser("sweep", parents=[common], help="Fidelity over the whole grid")
    sub.add_parser("threshold", parents=[common], help="Sweep, then locate the crossing")
    sub.add_parser("validate", parents=[common], help="Cross-check engines on small lattices")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {
        "preset": args.preset,
        "seed": args.seed,
        "out_dir": args.out,
        "engine": args.engine,
    }
    if args.command == "fidelity":
        if args.gamma is not None:
            overrides["gammas"] = [args.gamma]
        else:
            overrides["lambdas"] = [args.lambda_]
    return overrides


def load_run(args: argparse.Namespace, app_config: dict[str, Any]) -> RunConfig:
    text, source = "", "<none>"
    if args.config:
        if not args.config.exists():
            raise ConfigError(f"Config file {args.config} not found")
        text, source = args.config.read_text(), str(args.config)
    elif not args.preset:
        raise ConfigError("give --config or --preset")
    return parse_config(text, source, _overrides(args), app_config)


def print_plan(runner: ExperimentRunner) -> None:
    plan = {
        "variant": runner.run.variant.value,
        "gammas": runner.gamma_grid(),
        "threads": runner.threads,
        "sizes": [entry.to_dict() for entry in runner.plan()],
    }
    print(json.dumps(plan, indent=2))


def execute(args: argparse.Namespace, app_config: dict[str, Any]) -> int:
    if args.command == "validate":
        results = run_validation(app_config, seed=args.seed if args.seed is not None else 7)
        width = max(len(r.name) for r in results)
        for r in results:
            print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_ENGINE

    run = load_run(args, app_config)
    runner = ExperimentRunner(run, app_config, threads=resolve_threads(args.threads, app_config))

    if args.command == "kernels":
        if args.dry_run:
            print(json.dumps({"distances": sorted({0.0, *run.kernel_distances})}, indent=2))
            return EXIT_OK
        print(runner.write_kernels())
        return EXIT_OK

    if args.dry_run:
        print_plan(runner)
        return EXIT_OK

    result = RunResult(estimates=runner.sweep())
    result.files.append(runner.write_curves(result.estimates))
    if args.command == "threshold":
        result.threshold = runner.threshold(result.estimates)
        result.files.append(runner.write_threshold(result.threshold))
        print(
            f"gamma_c = {result.threshold.gamma_c:.6g} +- {result.threshold.gamma_c_err:.2g}"
        )
    for path in result.files:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        app_config = load_app_config(args.app_config)
    except ParseError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_CONFIG
    log_settings = config_section(app_config, "logging")
    setup_logging(
        "DEBUG" if args.verbose else log_settings.get("level", "INFO"),
        log_settings.get("file"),
    )

    try:
        return execute(args, app_config)
    except (ConfigError, ValidationError, VariantMismatch) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except NoCrossing as e:
        logger.error(f"No threshold: {e}")
        return EXIT_NO_CROSSING
    except (EngineError, KernelError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
