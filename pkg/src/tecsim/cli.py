"""Command line interface.

Subcommands:

* ``run <config>``: execute a simulation described by a configuration file
  and write all artifacts into the run directory.
* ``validate <case>``: run a built-in analytic benchmark and report the
  deviation against its independent reference (CSV pairs are written next
  to the report).
* ``mesh-info <mesh>``: load and validate a mesh file, reporting counts,
  areas and the edge-weight quality check.
* ``version``: print the package version.

Exit codes: 0 success, 1 configuration/input error, 2 solver or
validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import cases as case_lib
from . import runner
from .config import ConfigError, parse_config
from .equations import BoundarySpecError
from .fem import SolverError
from .materials import MaterialError
from .mesh import MeshError, read_mesh_file
from .output import RunWriter, default_output_root, mesh_summary
from .solver import GummelError

log = logging.getLogger("tecsim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", default=None,
                        help="directory for run artifacts (overrides the "
                             "config and the TECSIM_OUTPUT_ROOT default)")
    parser.add_argument("--toll", type=float, default=None,
                        help="override the nonlinear convergence tolerance")
    parser.add_argument("--max-gummel", type=int, default=None,
                        help="override the decoupling iteration limit")
    parser.add_argument("--log-level", default="info",
                        choices=("debug", "info", "warning", "error"),
                        help="logging verbosity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tecsim",
        description="3D thermo-electrochemical device simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config", help="path to the configuration file")
    _add_common(p_run)

    p_val = sub.add_parser("validate",
                           help="run a built-in analytic benchmark")
    p_val.add_argument("case", help="case name, or 'list' to enumerate")
    _add_common(p_val)

    p_info = sub.add_parser("mesh-info", help="inspect a mesh file")
    p_info.add_argument("mesh", help="path to a mesh file")
    p_info.add_argument("--log-level", default="info",
                        choices=("debug", "info", "warning", "error"))

    sub.add_parser("version", help="print the package version")
    return parser


def _setup_logging(level_name: str, directory: Path | None = None) -> None:
    log.setLevel(getattr(logging, level_name.upper()))
    log.handlers.clear()
    stream = logging.StreamHandler()
    stream.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(stream)
    if directory is not None:
        file_handler = logging.FileHandler(directory / "run.log")
        file_handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(file_handler)


def _resolve_output_dir(flag_value, config_value, fallback_name) -> Path:
    if flag_value:
        return Path(flag_value)
    if config_value:
        return default_output_root() / config_value
    return default_output_root() / fallback_name


def _cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _resolve_output_dir(args.output_dir, config.output.directory,
                                  Path(args.config).stem + "_out")
    writer = RunWriter(out_dir)
    _setup_logging(args.log_level, writer.directory)
    try:
        prepared = runner.build_problem(config)
        runner.apply_overrides(prepared, toll=args.toll,
                               max_iterations=args.max_gummel)
    except (ConfigError, MeshError, MaterialError, BoundarySpecError,
            ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = runner.execute(prepared, writer)
    except (SolverError, GummelError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        print(f"partial history preserved in {writer.directory}",
              file=sys.stderr)
        return EXIT_SOLVER

    final = result.final_state
    print(f"completed {len(result.traces)} time levels, "
          f"final t = {final.time:.6e} s")
    if result.step_changes:
        print(f"final per-step relative density change: "
              f"{result.step_changes[-1]:.3e}")
    print(f"artifacts written to {writer.directory}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cases = case_lib.available_cases()
    if args.case == "list":
        print("\n".join(sorted(cases)))
        return EXIT_OK
    if args.case not in cases:
        print(f"unknown case {args.case!r}; available:\n  "
              + "\n  ".join(sorted(cases)), file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _resolve_output_dir(args.output_dir, "",
                                  f"validate_{args.case}")
    writer = RunWriter(out_dir)
    _setup_logging(args.log_level, writer.directory)
    if args.toll is not None or args.max_gummel is not None:
        log.warning("--toll/--max-gummel have no effect on built-in cases")

    result = cases[args.case]()
    print(f"case {result.name}:")
    for line in result.lines:
        print(f"  {line}")
    if result.numeric is not None:
        writer.write_cut(result.name, "numeric", result.numeric)
        writer.write_cut(result.name, "reference", result.reference)
        print(f"  CSV pair written to {writer.directory}")
    return EXIT_OK if result.passed else EXIT_SOLVER


def _cmd_mesh_info(args) -> int:
    _setup_logging(args.log_level)
    try:
        mesh = read_mesh_file(args.mesh)
    except (MeshError, OSError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(mesh_summary(mesh), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(f"tecsim {__version__}")
        return EXIT_OK
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "mesh-info":
        return _cmd_mesh_info(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
