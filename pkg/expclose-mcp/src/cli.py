#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
expclose command line.

    python3 cli.py check varieties/swap.json --format json
    python3 cli.py solve varieties/masser_ez.json --seed 1
    python3 cli.py solve varieties/triangular_sqrt.json --triangular --seed 1 --branch 0
    python3 cli.py audit solution.json --height-bound 100
    python3 cli.py sweep varieties/swap.json --seed-box=-2..2 --density-degree 2 --out results.json

Negative values need the = form (--seed=-1,2).

Exit status: 0 success, 2 hypothesis gate failed, 3 no convergence, 4 bad input or config.
Every report carries the config echo; `--config report.json` replays it.
"""

import argparse
import os
import sys
from dataclasses import replace

from errors import ExpCloseError, InputError, HypothesisError
from generic import audit, freeness_spot_check
from masser import Seed, prepare_variety, solve_masser_algebraic, solve_prepared
from records import (
    load_document, system_from_record, solution_from_record, variety_from_record,
    solution_to_record, hypotheses_to_record, triangular_to_record, report_to_record,
    sweep_to_record, render,
)
from settings import build_config, debug_log
from sweep import SweepPlan, parse_seed_box, sweep, density_evidence
from triangularize import TriangularSystem, verify_containment
from variety import check_hypotheses

COMMANDS = ("check", "triangularize", "solve", "audit", "sweep")
EXIT_OK = 0


def parse_int_list(text, what):
    """'1,-1' -> (1, -1)."""
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise InputError(f"{what} must be comma-separated integers, got {text!r}")


def _document(source):
    if isinstance(source, dict):
        return source
    if not source:
        raise InputError("no input file given")
    return load_document(source)


def _variety(source):
    data = _document(source)
    if data.get("form", "variety") != "variety":
        raise InputError(f"form: this command needs a variety, got {data.get('form')!r}")
    return variety_from_record(data)


def _seed(options, n):
    if options.get("seed") is None:
        raise InputError("--seed is required")
    k = parse_int_list(options["seed"], "seed")
    if len(k) != n:
        raise InputError(f"seed has {len(k)} entries for n = {n}")
    branch = parse_int_list(options["branch"], "branch") if options.get("branch") else ()
    if branch and len(branch) != n:
        raise InputError(f"branch has {len(branch)} entries for n = {n}")
    return Seed(k, branch)


# --- commands ---

def cmd_check(source, config, options):
    V = _variety(source)
    report = check_hypotheses(V, config)
    record = hypotheses_to_record(report)
    status = EXIT_OK
    try:
        report.gate(config.require_both_dominant)
        record["gate"] = {"passed": True}
    except HypothesisError as e:
        record["gate"] = {"passed": False, "error": e.message, "error_type": type(e).__name__}
        status = e.exit_code
    if options.get("freeness") and status == EXIT_OK:
        record["freeness"] = freeness_spot_check(V, config)
    return status, record


def cmd_triangularize(source, config, options):
    V = _variety(source)
    prepared = prepare_variety(V, config)
    T = prepared.triangular
    record = triangular_to_record(T)
    record["kind"] = "triangular"
    record["hypotheses"] = hypotheses_to_record(prepared.hypotheses)
    record["containment"] = verify_containment(V, T, prepared.witness, config.precision_bits,
                                               rng_seed=config.rng_seed)
    record["stage_log"] = list(prepared.stage_log)
    return EXIT_OK, record


def cmd_solve(source, config, options):
    data = _document(source)
    system = system_from_record(data)
    if options.get("triangular") and not isinstance(system, TriangularSystem):
        raise InputError("--triangular given but the input form is 'variety'")
    seed = _seed(options, system.n)
    if isinstance(system, TriangularSystem):
        s = solve_masser_algebraic(system, seed, config.precision_bits, config=config)
    else:
        s = solve_prepared(prepare_variety(system, config), seed, config)
    return EXIT_OK, solution_to_record(s)


def cmd_audit(source, config, options):
    solution = solution_from_record(_document(source))
    V = _variety(options["variety"]) if options.get("variety") else None
    precision = min(config.precision_bits, solution.precision_bits)
    report = audit(solution, config.height_bound, precision, variety=V)
    record = report_to_record(report)
    record["solution"] = solution_to_record(solution)
    return EXIT_OK, record


def cmd_sweep(source, config, options):
    V = _variety(source)
    plan = SweepPlan(
        seed_box=parse_seed_box(options.get("seed_box") or "-3..3", V.n),
        branch_policy=options.get("branch_policy") or "first",
        budget=options.get("budget") or 200,
        height_bound=config.height_bound,
    )
    result = sweep(V, plan, config.precision_bits, config,
                   allow_non_dominant=bool(options.get("allow_non_dominant")))
    degree = options.get("density_degree")
    if degree is not None:
        result = replace(result, density=density_evidence(result.solutions, degree, variety=V, config=config))
    return EXIT_OK, sweep_to_record(result)


HANDLERS = {
    "check": cmd_check,
    "triangularize": cmd_triangularize,
    "solve": cmd_solve,
    "audit": cmd_audit,
    "sweep": cmd_sweep,
}


def run(command, source, config, options=None):
    """Execute one pipeline command; returns (exit status, report record)."""
    if command not in HANDLERS:
        raise InputError(f"unknown command {command!r}; expected one of {COMMANDS}")
    options = options or {}
    debug_log(f"Running {command} at {config.precision_bits} bits")
    try:
        status, record = HANDLERS[command](source, config, options)
    except ExpCloseError as e:
        debug_log(f"{command} failed: {type(e).__name__}: {e.message}", "WARNING")
        record = {"kind": "error", **e.to_dict()}
        status = e.exit_code
    record["config"] = config.echo()
    return status, record


# --- argument parsing ---

class ArgumentParser(argparse.ArgumentParser):
    """Usage errors become InputError so they exit with status 4."""

    def error(self, message):
        raise InputError(message)


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument("input", help="Variety, triangular system or solution JSON file")
    common.add_argument("--precision-bits", type=int, help="Working precision in bits (default 256)")
    common.add_argument("--tol", help="Certificate tolerance, 'auto' = 2^-(p/2)")
    common.add_argument("--height-bound", type=int, help="Relation height bound H (default 100)")
    common.add_argument("--rng-seed", type=int, help="Seed for all sampling (default 0)")
    common.add_argument("--max-iter", type=int, help="Solver iteration cap (default 500)")
    common.add_argument("--format", dest="output_format", choices=("text", "json"), help="Report format")
    common.add_argument("--workers", type=int, help="Worker threads for sampling and sweeps")
    common.add_argument("--require-both-dominant", action="store_true", default=None,
                        help="Also require pi2 dominant")
    common.add_argument("--config", help="Replay the config echo of a previous report")
    common.add_argument("--out", help="Write the report here instead of stdout")

    parser = ArgumentParser(prog="expclose", description="Exponential-algebraic closedness toolkit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    check = sub.add_parser("check", parents=[common], help="Dimension and dominance hypotheses")
    check.add_argument("--freeness", action="store_true", help="Also search translates of hyperplanes and tori")

    sub.add_parser("triangularize", parents=[common], help="Reduce to p_i(x, y_i) = 0")

    solve = sub.add_parser("solve", parents=[common], help="Solve the Masser system for one seed")
    solve.add_argument("--seed", help="Nonzero integers k, comma-separated")
    solve.add_argument("--branch", help="Branch choice per coordinate, comma-separated")
    solve.add_argument("--triangular", action="store_true", help="Input is a triangular system")

    audit_cmd = sub.add_parser("audit", parents=[common], help="Search integer relations on a solution")
    audit_cmd.add_argument("--variety", help="Variety file, to attach the finite-fiber flag")

    sweep_cmd = sub.add_parser("sweep", parents=[common], help="Sweep seeds with torus exclusion")
    sweep_cmd.add_argument("--seed-box", default="-3..3", help="lo..hi, or one interval per coordinate")
    sweep_cmd.add_argument("--budget", type=int, default=200, help="Maximum seeds tried")
    sweep_cmd.add_argument("--branch-policy", choices=("first", "all"), default="first")
    sweep_cmd.add_argument("--density-degree", type=int, help="Compute density evidence up to this degree")
    sweep_cmd.add_argument("--allow-non-dominant", action="store_true",
                           help="Proceed when only pi1 is dominant")
    return parser


CONFIG_FLAGS = ("precision_bits", "tol", "height_bound", "rng_seed", "max_iter", "output_format",
                "workers", "require_both_dominant")


def config_from_args(args):
    base = None
    if args.config:
        data = load_document(args.config)
        base = data.get("config", data)
    overrides = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
    return build_config(overrides, base=base)


def write_report(text, out=None):
    if out:
        directory = os.path.dirname(os.path.abspath(out))
        os.makedirs(directory, exist_ok=True)
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
    except ExpCloseError as e:
        write_report(render({"kind": "error", **e.to_dict()}, "text"))
        return e.exit_code
    options = {k: v for k, v in vars(args).items() if k not in CONFIG_FLAGS}
    status, record = run(args.command, args.input, config, options)
    try:
        write_report(render(record, config.output_format), args.out)
    except OSError as e:
        sys.stderr.write(f"cannot write {args.out}: {e.strerror}\n")
        return InputError.exit_code
    return status


if __name__ == "__main__":
    sys.exit(main())
