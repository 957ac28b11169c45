#!/usr/bin/env python3
"""
Waveguide Heat Inverse Source Toolkit - Command Line
Main entry point for batch experiments

Subcommands:
- forward: modal forward solve, Neumann trace, energy and final-state reports
- invert: reconstruct the source from a trace file
- sweep: stability sweep against the log modulus
- carleman: weight lemma verification and inequality constant scan
- observability: empirical observability constant
- check-energy: numerical check of the energy estimates
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from src import __version__
from src.errors import ArgumentError, ConfigError, PreconditionError
from src.experiments.config import OUTPUT_DIR_ENV, load_config
from src.experiments.files import OutputWriter
from src.experiments.runner import SUBCOMMANDS, ExperimentRunner

logger = logging.getLogger("waveguide")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_OVERFLOW = 4
EXIT_IO = 5
EXIT_INTERRUPTED = 130


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Path to YAML configuration")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Base seed (overrides config)")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted configuration override, e.g. grids.n_t=400 (repeatable)",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    verbosity.add_argument("--verbose", action="store_true", help="Log debug details")

    parser = argparse.ArgumentParser(
        prog="waveguide",
        description="Inverse source experiments for the heat equation in a waveguide",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "invert":
            p.add_argument("--trace", type=Path, required=True, help="Trace CSV written by 'forward'")
            p.add_argument("--beta", type=Path, default=None, help="Reference source JSON for an error report")
    return parser


def configure_logging(args):
    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def resolve_output_dir(args, cfg):
    if args.out is not None:
        return args.out
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(cfg.output_dir)


def exit_code_for(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (PreconditionError, ArgumentError)):
        return EXIT_PRECONDITION
    if isinstance(exc, ArithmeticError):
        return EXIT_OVERFLOW
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_FAILURE


def write_error(writer, exc, code, subcommand, config_hash, started):
    """Write error.json and a manifest listing it; fall back to stderr."""
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, OSError) and exc.filename is not None:
        payload["path"] = str(exc.filename)
    try:
        writer.write_json("error.json", payload)
        writer.write_manifest(subcommand, config_hash, started)
    except OSError:
        sys.stderr.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def print_summary(subcommand, summary, out_dir):
    """Print a framed summary of the run."""
    print("\n" + "=" * 70)
    print(f"{subcommand.upper()} RESULTS")
    print("=" * 70)
    for key, value in summary.items():
        if isinstance(value, (dict, list)):
            text = json.dumps(value, sort_keys=True, default=str)
            if len(text) > 60:
                text = text[:57] + "..."
        else:
            text = value
        print(f"{key:>24}: {text}")
    print("-" * 70)
    print(f"Outputs written to {out_dir}")
    print("=" * 70 + "\n")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")

    started = datetime.now(timezone.utc)
    out_dir = args.out or Path(os.environ.get(OUTPUT_DIR_ENV) or "output")
    writer = OutputWriter(out_dir)
    config_hash = None
    try:
        cfg = load_config(args.config, overrides)
        config_hash = cfg.config_hash()
        out_dir = resolve_output_dir(args, cfg)
        writer = OutputWriter(out_dir)
        runner = ExperimentRunner(cfg, writer)
        options = {}
        if args.subcommand == "invert":
            options = {"trace_path": args.trace, "beta_path": args.beta}
        summary = runner.run(args.subcommand, **options)
        writer.write_manifest(args.subcommand, config_hash, started)
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.")
        return EXIT_INTERRUPTED
    except (ConfigError, PreconditionError, ArgumentError, ArithmeticError, OSError) as exc:
        code = exit_code_for(exc)
        logger.error("%s: %s", type(exc).__name__, exc)
        write_error(writer, exc, code, args.subcommand, config_hash, started)
        return code
    except Exception as exc:
        logger.exception("unexpected failure in %s", args.subcommand)
        write_error(writer, exc, EXIT_FAILURE, args.subcommand, config_hash, started)
        return EXIT_FAILURE

    if not args.quiet:
        print_summary(args.subcommand, summary, out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
