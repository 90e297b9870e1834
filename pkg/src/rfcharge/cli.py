"""Command line entry points: run, sweep, validate-config."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .harness import (format_summary_table, run_experiment, run_sweep,
                      summarize, write_episodes_csv, write_summary_csv,
                      write_sweep_csv)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="YAML configuration file")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_common(parser)
    parser.add_argument("--seeds", help="comma-separated seed override")
    parser.add_argument("--output-dir", default="results",
                        help="directory for CSV outputs (created if missing)")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfcharge",
        description="Simulate a solar-powered AP charging RF-harvesting "
                    "devices under different transmit-power policies.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run every (agent, seed) pair once")
    _add_run_args(run_p)
    sweep_p = sub.add_parser("sweep", help="run the configured parameter sweep")
    _add_run_args(sweep_p)
    val_p = sub.add_parser("validate-config",
                           help="check a configuration file and exit")
    _add_common(val_p)
    return parser


def _load(args):
    config = load_config(args.config)
    seeds = getattr(args, "seeds", None)
    if seeds:
        from dataclasses import replace
        config = replace(config,
                         seeds=tuple(int(s) for s in seeds.split(",")))
        config.validate()
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print("configuration OK")
        return 0

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "run":
        rows = run_experiment(config, workers=args.workers)
        write_episodes_csv(out_dir / "episodes.csv", rows)
        summary = summarize(rows, config)
        write_summary_csv(out_dir / "summary.csv", summary)
        print(format_summary_table(summary))
        print(f"wrote {out_dir / 'episodes.csv'} and {out_dir / 'summary.csv'}")
        return 0

    if args.command == "sweep":
        records = run_sweep(config, workers=args.workers)
        write_sweep_csv(out_dir / "sweep.csv", records)
        axis = config.sweep.axis
        print(f"sweep over {axis}: {len(records)} records")
        print(f"wrote {out_dir / 'sweep.csv'}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
