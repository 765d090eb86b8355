"""
Command-line interface
Runs experiments, renders plots, validates configs and prints pilot-overhead tables
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from config import settings
from errors import BdRisError, ConfigError, PlotError
from harness import overhead_table, run_experiment
from plotting import emit_plots
from presets import OVERHEAD_RIS_SIZES, PRESETS, get_preset, full_scale_overhead
from report_generator import ReportGenerator
from schemas import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_FAILURE = 2


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment configuration"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e


def resolve_config(args) -> ExperimentConfig:
    """Config from --config or --preset, with --trials / --seed overrides"""
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = get_preset(args.preset)
    else:
        raise ConfigError("Either --config or --preset is required")
    overrides = {}
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        try:
            cfg = ExperimentConfig.model_validate({**cfg.model_dump(), **overrides})
        except ValidationError as e:
            raise ConfigError(f"Invalid override: {e}") from e
    return cfg


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    out_dir = Path(args.out or cfg.output_dir or settings.output_dir)
    print(f"Running {cfg.experiment_id}: {len(cfg.sweep_points())} sweep point(s) × {cfg.trials} trial(s)")
    records, csv_path = run_experiment(cfg, str(out_dir))
    print(f"✅ Results written to {csv_path}")

    report = ReportGenerator().generate_report(cfg, records, out_dir / f"{cfg.experiment_id}_report.md")
    print(f"✅ Report written to {report}")
    try:
        for path in emit_plots(csv_path, out_dir):
            print(f"✅ Figure written to {path}")
    except PlotError as e:
        print(f"⚠️  Plots skipped: {e}")

    failed = sum(r.error_flag for r in records)
    if records and failed == len(records):
        print("❌ All estimator runs failed")
        return EXIT_RUNTIME_FAILURE
    if failed:
        print(f"⚠️  {failed} of {len(records)} estimator run(s) failed")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        paths = emit_plots(args.csv, args.out)
    except PlotError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG_ERROR
    for path in paths:
        print(f"✅ Figure written to {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"✅ {args.config} is valid ({cfg.experiment_id}, {len(cfg.sweep_points())} sweep point(s))")
    return EXIT_OK


def cmd_overhead(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        sizes = [n1 * n2 for n1, n2 in cfg.ris_shapes]
    elif args.preset in (None, "fig5"):
        cfg, sizes = full_scale_overhead(), OVERHEAD_RIS_SIZES
    else:
        cfg = get_preset(args.preset)
        sizes = [n1 * n2 for n1, n2 in cfg.ris_shapes]
    table = overhead_table(cfg, sizes)
    print(table.to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdris",
        description="BD-RIS individual channel estimation experiments",
    )
    parser.add_argument("--log-level", default=None,
                        help="Logging level (default: BDRIS_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment and write CSV, report and figures")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="Path to a JSON experiment configuration")
    source.add_argument("--preset", choices=sorted(PRESETS), help="Built-in experiment preset")
    run.add_argument("--trials", type=int, help="Override the number of trials")
    run.add_argument("--seed", type=int, help="Override the base seed")
    run.add_argument("--out", help="Output directory")
    run.set_defaults(handler=cmd_run)

    plot = sub.add_parser("plot", help="Render SVG figures from an experiment CSV")
    plot.add_argument("--csv", required=True, help="Experiment CSV")
    plot.add_argument("--out", required=True, help="Output directory")
    plot.set_defaults(handler=cmd_plot)

    validate = sub.add_parser("validate-config", help="Validate a JSON experiment configuration")
    validate.add_argument("--config", required=True, help="Path to a JSON experiment configuration")
    validate.set_defaults(handler=cmd_validate)

    overhead = sub.add_parser("overhead", help="Print pilot-overhead counts for both estimators")
    overhead_source = overhead.add_mutually_exclusive_group()
    overhead_source.add_argument("--config", help="Path to a JSON experiment configuration")
    overhead_source.add_argument("--preset", choices=sorted(PRESETS), help="Built-in preset (default fig5)")
    overhead.set_defaults(handler=cmd_overhead)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except ValidationError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (BdRisError, ValueError) as e:
        print(f"❌ Run failed: {e}")
        return EXIT_RUNTIME_FAILURE


if __name__ == "__main__":
    sys.exit(main())
