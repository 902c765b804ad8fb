"""
steinlab command line.

    steinlab run <config> [--jobs N] [--plot-data] [--out-dir DIR] [--format csv|json|md ...]
    steinlab kernel eval <solution.json> <points.csv> [--output FILE]
    steinlab list-measures
    steinlab version

Exit status: 0 when every asserted record passes, 1 when a record or task
fails, 2 for configuration and usage errors.
"""

import argparse
import asyncio
import csv
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

import numpy as np
import structlog

from cli import __version__
from config.config_manager import ConfigManager
from config.settings import LoggingSettings, SystemSettings
from core.data_models import ExperimentRecord
from core.exceptions import ConfigError, ReportError, SteinLabError
from core.logging_setup import configure_logging
from galerkin.solver import GalerkinSolution, kernel_field
from measures.catalog import list_measures
from services.report_emitter import FORMATS, ReportEmitter, summarize
from task_orchestrator.experiment_runner import ExperimentRunner

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steinlab", description="Stein kernel and CLT bound experiments")
    parser.add_argument("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ERROR)")
    parser.add_argument("--log-json", action="store_true", help="Render logs as JSON lines")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment file")
    run.add_argument("config", help="Experiment file (YAML or JSON)")
    run.add_argument("--jobs", type=int, default=None, help="Worker processes (Ray when > 1)")
    run.add_argument("--plot-data", action="store_true", help="Also write plot_<label>.csv files")
    run.add_argument("--out-dir", default=None, help="Report directory")
    run.add_argument("--format", dest="formats", action="append", choices=FORMATS, default=None,
                     help="Report format; repeat for several")
    run.add_argument("--timing", action="store_true", help="Keep measured runtimes in the reports")
    run.add_argument("--env-file", default=None, help="dotenv file with STEINLAB_* overrides")

    kernel = sub.add_parser("kernel", help="Kernel utilities")
    kernel_sub = kernel.add_subparsers(dest="kernel_command", required=True)
    evaluate = kernel_sub.add_parser("eval", help="Evaluate a saved Galerkin kernel at points")
    evaluate.add_argument("solution", help="Solution JSON written by a galerkin task")
    evaluate.add_argument("points", help="CSV with one point per row")
    evaluate.add_argument("--output", default=None, help="Write to a file instead of stdout")

    sub.add_parser("list-measures", help="List catalog measures and their parameters")
    sub.add_parser("version", help="Print the version")
    return parser


def _apply_overrides(settings: SystemSettings, args: argparse.Namespace) -> SystemSettings:
    if args.jobs is not None:
        settings.workers.jobs = args.jobs
    if args.plot_data:
        settings.output.plot_data = True
    if args.out_dir:
        settings.output.out_dir = args.out_dir
    if args.formats:
        settings.output.formats = sorted(set(args.formats))
    if args.timing:
        settings.output.include_timing = True
    if args.log_level:
        settings.logging.level = args.log_level
    if args.log_json:
        settings.logging.json_output = True
    return settings


async def _execute(runner: ExperimentRunner) -> List[ExperimentRecord]:
    async with runner.session():
        return await runner.run_experiment()


def cmd_run(args: argparse.Namespace) -> int:
    manager = ConfigManager(args.env_file)
    try:
        experiment = manager.load(args.config)
    except ConfigError as e:
        print(f"steinlab: {e}", file=sys.stderr)
        return EXIT_USAGE
    settings = _apply_overrides(manager.system_settings, args)
    configure_logging(settings.logging)

    runner = ExperimentRunner(experiment, settings)
    try:
        records = asyncio.run(_execute(runner))
    except RuntimeError as e:
        print(f"steinlab: {e}", file=sys.stderr)
        return EXIT_FAILED
    if not records:
        print("steinlab: the experiment produced no records", file=sys.stderr)
        return EXIT_FAILED

    try:
        paths = ReportEmitter(settings.output).emit_all(records)
    except ReportError as e:
        print(f"steinlab: {e}", file=sys.stderr)
        return EXIT_FAILED

    summary = summarize(records)
    status = runner.exit_status()
    print(f"{experiment.name}: {summary['passed']} passed, {summary['failed']} failed, "
          f"{summary['informational']} informational ({len(paths)} files in {settings.output.out_dir})")
    return status


def _read_points(path: Path) -> np.ndarray:
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)


def _write_kernel_values(points: np.ndarray, values: np.ndarray, out: TextIO) -> None:
    d = points.shape[1]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(d)]
                    + [f"tau_{i + 1}{j + 1}" for i in range(d) for j in range(d)])
    for x, tau in zip(points, values.reshape(points.shape[0], -1)):
        writer.writerow([format(float(v), ".17g") for v in np.concatenate([x, tau])])


def cmd_kernel_eval(args: argparse.Namespace) -> int:
    try:
        solution = GalerkinSolution.load(args.solution)
        points = _read_points(Path(args.points))
    except (OSError, ValueError, KeyError) as e:
        print(f"steinlab: cannot read kernel inputs: {e}", file=sys.stderr)
        return EXIT_USAGE
    if points.shape[1] != solution.dim:
        print(f"steinlab: points have dimension {points.shape[1]}, the kernel has {solution.dim}",
              file=sys.stderr)
        return EXIT_USAGE
    values = kernel_field(solution).matrix(points)
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as f:
            _write_kernel_values(points, values, f)
    else:
        _write_kernel_values(points, values, sys.stdout)
    return EXIT_OK


def cmd_list_measures(args: argparse.Namespace) -> int:
    entries = list_measures()
    width = max(len(e["name"]) for e in entries)
    for entry in entries:
        print(f"{entry['name']:<{width}}  {entry['params']}")
    return EXIT_OK


def cmd_version(args: argparse.Namespace) -> int:
    print(f"steinlab {__version__}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "run":
        configure_logging(LoggingSettings(level=args.log_level or "WARNING", json_output=args.log_json))
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "kernel":
            return cmd_kernel_eval(args)
        if args.command == "list-measures":
            return cmd_list_measures(args)
        return cmd_version(args)
    except SteinLabError as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"steinlab: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
