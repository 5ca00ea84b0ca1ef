"""
flatsonium command-line interface

Spectrum, sweet spots, dephasing sweeps and self-verification for the
flatsonium qubit. Tables go to files, summaries to stdout, logs to stderr.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .circuit import CircuitError
from .commands.figures import cmd_dephasing, cmd_spectrum, cmd_sweetspots
from .commands.verification import cmd_verify
from .config import (
    MODES,
    PRESET_DESCRIPTIONS,
    PRESETS,
    ConfigError,
    RunConfig,
    dump_config,
    resolve_config,
    workers_from_env,
)
from .noise import NoiseModelError, SensitivityError
from .oracle import OracleError
from .spectrum import GridTooCoarseError, SpectrumError
from .utils.output import OutputError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4
EXIT_OUTPUT = 5

NUMERIC_ERRORS = (SpectrumError, SensitivityError, OracleError, CircuitError, NoiseModelError)


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config file ([circuit], [noise], [run])")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    common.add_argument("--out", type=Path, help="output file")
    common.add_argument("--grid-n", type=int, help="number of flux points")
    common.add_argument("--dim", type=int, help="Fock truncation")
    common.add_argument("--mode", choices=MODES, help="noise model for dephasing")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging and tracebacks")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="flatsonium",
        description="Spectrum, flux sweet spots and 1/f flux-noise dephasing of the flatsonium qubit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("spectrum", parents=[common], help="transition frequencies versus flux")
    sub.add_parser("sweetspots", parents=[common], help="numeric sweet spots versus the closed-form count")
    sub.add_parser("dephasing", parents=[common], help="dephasing time versus flux")
    sub.add_parser("verify", parents=[common], help="run the numerical self-checks (--dim sets verify_dim)")
    sub.add_parser("presets", parents=[common], help="list parameter presets")
    sub.add_parser("config-dump", parents=[common], help="print the effective TOML config")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Effective configuration for a parsed command line.

    --grid-n seeds the sweet-spot finder for `sweetspots`, and --dim sets the
    checked truncation for `verify`.
    """
    overrides = {"mode": args.mode}
    if args.command == "sweetspots":
        overrides["sweet_grid_n"] = args.grid_n
    else:
        overrides["grid_n"] = args.grid_n
    if args.command == "verify":
        overrides["verify_dim"] = args.dim
    else:
        overrides["dim"] = args.dim
    if args.command not in ("verify", "config-dump"):
        overrides["output_path"] = args.out

    config = resolve_config(preset=args.preset, path=args.config, **overrides)
    return replace(config, workers=workers_from_env())


# =============================================================================
# Commands
# =============================================================================

def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        print(text)
        return
    try:
        out.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(out, e.strerror or str(e))
    logger.info(f"Wrote {out}")


def list_presets() -> str:
    width = max(len(name) for name in PRESETS)
    return "\n".join(f"{name:<{width}}  {PRESET_DESCRIPTIONS[name]}" for name in PRESETS)


def run(args: argparse.Namespace) -> int:
    if args.command == "presets":
        print(list_presets())
        return EXIT_OK

    config = config_from_args(args)

    if args.command == "config-dump":
        _emit(dump_config(config).rstrip("\n"), args.out)
        return EXIT_OK

    logger.info(f"Running {args.command} (r={config.params.r:g}, b={config.params.b:g}, dim={config.dim})")

    if args.command == "spectrum":
        print(json.dumps(cmd_spectrum(config), indent=2))
    elif args.command == "sweetspots":
        print(cmd_sweetspots(config)["report"])
    elif args.command == "dephasing":
        print(json.dumps(cmd_dephasing(config), indent=2))
    elif args.command == "verify":
        summary = cmd_verify(config)
        _emit(json.dumps(summary, indent=2), args.out)
        return EXIT_OK if summary["passed"] else EXIT_VERIFY
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(verbose=args.verbose, quiet=args.quiet)

    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}", exc_info=args.verbose)
        return EXIT_CONFIG
    except GridTooCoarseError as e:
        logger.error(f"{e}; rerun with --grid-n {e.suggested_grid_n}", exc_info=args.verbose)
        return EXIT_NUMERIC
    except NUMERIC_ERRORS as e:
        logger.error(f"Numerical failure: {e}", exc_info=args.verbose)
        return EXIT_NUMERIC
    except OutputError as e:
        logger.error(str(e), exc_info=args.verbose)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
