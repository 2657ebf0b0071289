"""Command-line entry point.

Subcommands: ``gen-matrix``, ``compare``, ``regpath``, ``sample``,
``diagnostics``.  Exit codes: 0 on success, 2 on configuration errors,
3 on numerical failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .errors import ConfigError, NumericalFailureError
from .matgen import STREAM_MATRIX, SeededRng, generate_problem, make_eigenvalues
from .operator import write_chunked


def _add_common(sub):
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--preset", help="named preset: " + ", ".join(harness.preset_names()))
    group.add_argument("--config", help="path to a key=value config file")
    sub.add_argument("--seed", type=int, help="override the configured seed")
    sub.add_argument("--out", help="override the configured output path")


def _resolve_config(args, command):
    if args.config:
        config = harness.load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace

            config = replace(config, seed=args.seed)
    else:
        name = args.preset or "fastdecay"
        config = harness.preset_config(name, command=command, seed=args.seed)
    return config


def _output_path(args, config, command):
    if args.out:
        return args.out
    if config.out:
        return config.out
    return f"{config.experiment}_{command}.csv"


def _run_trace_command(args, command, runner):
    config = _resolve_config(args, command)
    trace = runner(config)
    path = _output_path(args, config, command)
    harness.write_trace(trace, path, config.experiment, config.seed)
    print(f"wrote {len(trace)} rows to {path}")
    return 0


def _cmd_gen_matrix(args):
    config = _resolve_config(args, "gen-matrix")
    problem = generate_problem(config.spectrum, SeededRng(config.seed, STREAM_MATRIX))
    path = args.out or config.out or f"{config.experiment}.bkspd"
    write_chunked(problem.matrix, args.chunk_rows, path)
    print(f"wrote {problem.dim}x{problem.dim} matrix to {path}")
    if args.spectrum_out:
        lam = make_eigenvalues(config.spectrum)
        with open(args.spectrum_out, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join("%.17g" % v for v in lam) + "\n")
        print(f"wrote spectrum to {args.spectrum_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkspd",
        description=(
            "Block Krylov solvers and preconditioning experiments for "
            "regularized SPD systems"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-matrix", help="generate a problem matrix file")
    _add_common(gen)
    gen.add_argument("--chunk-rows", type=int, default=1000)
    gen.add_argument("--spectrum-out", help="also write the spectrum as one-column CSV")
    gen.set_defaults(func=_cmd_gen_matrix)

    for name, runner, doc in (
        ("compare", harness.run_comparison, "error vs matrix-loads for all methods"),
        ("regpath", harness.run_regpath, "error across a grid of shifts"),
        ("sample", harness.run_sampling, "block vs single-vector square-root sampling"),
        ("diagnostics", harness.run_diagnostics, "preconditioner condition numbers"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(func=lambda args, r=runner, n=name: _run_trace_command(args, n, r))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
