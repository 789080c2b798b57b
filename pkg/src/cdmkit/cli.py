"""Command-line front end.

Subcommands:
    run <config> [--output DIR]    simulate, identify, write artifacts
    report <reconstruction>        print a human-readable summary
    viabilize <reconstruction> <vector..>   solve for a viabilized input

Exit codes: 0 success, 2 config or input-file error, 3 identification
failure, 4 unviable input.  Failures print one machine-parsable line to
stderr of the form ``<kind>: <message>``.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import ConfigError, IdentificationError, ReportParseError, UnviableInputError
from .experiment import parse_config, render_report, run_experiment
from .identification import viabilize
from .serialization import _fmt, read_reconstruction

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IDENTIFICATION = 3
EXIT_UNVIABLE = 4


def _fail(kind: str, message: str, code: int) -> int:
    print(f"{kind}: {message}", file=sys.stderr)
    return code


def _cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
        result = run_experiment(config, out_dir=args.output)
    except ConfigError as exc:
        return _fail("config-error", str(exc), EXIT_CONFIG)
    except IdentificationError as exc:
        return _fail("identification-failure", str(exc), EXIT_IDENTIFICATION)
    print(result.summary())
    for name in ("samples", "reconstruction", "convergence"):
        print(f"{name}: {result.artifacts[name]}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        recon = read_reconstruction(args.reconstruction)
    except ReportParseError as exc:
        return _fail("parse-error", str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("config-error", str(exc), EXIT_CONFIG)
    print(render_report(recon))
    return EXIT_OK


def _parse_vector(tokens) -> np.ndarray:
    values = []
    for tok in tokens:
        values.extend(float(t) for t in tok.replace(",", " ").split() if t)
    return np.array(values)


def _cmd_viabilize(args) -> int:
    try:
        recon = read_reconstruction(args.reconstruction)
    except ReportParseError as exc:
        return _fail("parse-error", str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("config-error", str(exc), EXIT_CONFIG)
    try:
        u_cmd = _parse_vector(args.vector)
    except ValueError:
        return _fail("config-error", "commanded input is not numeric", EXIT_CONFIG)
    if u_cmd.shape[0] != recon.input_dim:
        return _fail(
            "config-error",
            f"commanded input has dimension {u_cmd.shape[0]}, "
            f"reconstruction expects {recon.input_dim}",
            EXIT_CONFIG,
        )
    try:
        u_v = viabilize(recon, u_cmd)
    except UnviableInputError as exc:
        return _fail("unviable-input", str(exc), EXIT_UNVIABLE)
    print(" ".join(_fmt(x) for x in u_v))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cdmkit",
        description="Identify input-degradation maps and viabilize commands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to an experiment config file")
    p_run.add_argument("--output", default=None, help="override the output directory")
    p_run.set_defaults(func=_cmd_run)

    p_report = sub.add_parser("report", help="summarize a reconstruction file")
    p_report.add_argument("reconstruction", help="path to a reconstruction file")
    p_report.set_defaults(func=_cmd_report)

    p_via = sub.add_parser("viabilize", help="solve for a viabilized input")
    p_via.add_argument("reconstruction", help="path to a reconstruction file")
    p_via.add_argument("vector", nargs="+", help="commanded input components")
    p_via.set_defaults(func=_cmd_viabilize)

    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
