#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Seed sweeps with torus exclusion, and Zariski-density evidence.

Seeds are solved (and audited) by a worker pool; a single aggregator walks
the results in seed order, so the exclusion list evolves exactly as in a
sequential run.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice, product
from math import prod

from errors import PlanError, InputError, NoConvergenceError, SweepExhaustedError
from generic import audit, build_torus, stack_relations, on_torus, MULTIPLICATIVE
from masser import Seed, prepare_variety, solve_prepared
from polycore import lift, monomial_exponents
from settings import RunConfig, make_context, debug_log
from variety import numerical_rank, sample_points

BRANCH_POLICIES = ("first", "all")


@dataclass(frozen=True)
class SweepPlan:
    seed_box: tuple
    branch_policy: str = "first"
    excluded_tori: tuple = ()
    budget: int = 200
    height_bound: int = None

    def __post_init__(self):
        box = tuple(tuple(interval) for interval in self.seed_box)
        object.__setattr__(self, "seed_box", box)
        object.__setattr__(self, "excluded_tori", tuple(self.excluded_tori))
        if not box:
            raise PlanError("seed box has no coordinates")
        for i, interval in enumerate(box):
            if len(interval) != 2 or not all(isinstance(v, int) for v in interval):
                raise PlanError(f"seed_box[{i}] must be an integer interval lo..hi")
            if not self.values(i):
                raise PlanError(f"seed_box[{i}] = {interval[0]}..{interval[1]} is empty once 0 is removed")
        if not isinstance(self.budget, int) or self.budget < 1:
            raise PlanError(f"budget must be a positive integer, got {self.budget!r}")
        if self.branch_policy not in BRANCH_POLICIES:
            raise PlanError(f"branch_policy must be one of {BRANCH_POLICIES}, got {self.branch_policy!r}")

    @property
    def n(self):
        return len(self.seed_box)

    def values(self, i):
        lo, hi = self.seed_box[i]
        return [k for k in range(lo, hi + 1) if k != 0]

    def seeds(self, degrees=None):
        """Lexicographic seeds; with policy "all" every branch choice per seed."""
        degrees = degrees or (1,) * self.n
        for k in product(*(self.values(i) for i in range(self.n))):
            if self.branch_policy == "first":
                yield Seed(k)
            else:
                for branch in product(*(range(d) for d in degrees)):
                    yield Seed(k, branch)


def parse_seed_box(text, n):
    """"a..b" for every coordinate, or "a..b,c..d,..." per coordinate."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise PlanError(f"seed box {text!r} has {len(parts)} intervals for n = {n}")
    box = []
    for part in parts:
        lo, sep, hi = part.partition("..")
        try:
            box.append((int(lo), int(hi if sep else lo)))
        except ValueError:
            raise PlanError(f"bad seed interval {part!r}; expected lo..hi")
    return tuple(box)


@dataclass(frozen=True)
class DensityEvidence:
    solutions: tuple
    degree: int
    monomial_rank: int
    full: bool
    monomial_count: int
    target_rank: int
    inconclusive: bool = False
    reason: str = ""


@dataclass(frozen=True)
class SweepResult:
    solutions: tuple
    audits: tuple
    rejected_log: tuple
    tori_found: tuple
    seeds_tried: int
    hypotheses: object
    height_bound: int
    dominance_override: bool = False
    density: object = field(default=None)


def _process(prepared, seed, config, H):
    try:
        s = solve_prepared(prepared, seed, config)
    except NoConvergenceError as e:
        return seed, None, None, e
    return seed, s, audit(s, H, config.precision_bits, variety=prepared.variety), None


def sweep(V, plan, precision, config=None, allow_non_dominant=False):
    """(solutions, rejected_log, tori_found) plus the audits and the hypothesis report."""
    config = config or RunConfig(precision_bits=precision)
    if config.precision_bits != precision:
        config = config.replace(precision_bits=precision)
    if plan.n != V.n:
        raise PlanError(f"seed box has {plan.n} coordinates for n = {V.n}")
    H = plan.height_bound or config.height_bound
    prepared = prepare_variety(V, config, require_both=not allow_non_dominant)
    degrees = prepared.triangular.degrees_in_u
    # budget counts seeds; policy "all" spends it once per branch choice
    limit = plan.budget * (prod(degrees) if plan.branch_policy == "all" else 1)
    seeds = list(islice(plan.seeds(degrees), limit))
    debug_log(f"Sweep: {len(seeds)} seeds, H={H}, p={precision}, workers={config.workers}")

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda s: _process(prepared, s, config, H), seeds))
    else:
        results = [_process(prepared, s, config, H) for s in seeds]

    ctx = make_context(precision)
    tol = config.tolerance(ctx)
    excluded = list(plan.excluded_tori)
    found, accepted, audits, log = [], [], [], []
    for seed, s, report, error in results:
        entry = {"seed": list(seed.k), "branch": list(seed.branch_choice)}
        if error is not None:
            entry.update(reason="solver", error_type=type(error).__name__, stage=error.stage,
                         message=error.message)
            log.append(entry)
            continue
        hit = next((j for j, t in enumerate(excluded) if on_torus(t, s.z, ctx, tol)), None)
        if hit is not None:
            entry.update(reason="excluded_torus", torus_index=hit,
                         relations=[list(r) for M in report.relations for r in M.rows])
            log.append(entry)
            continue
        if report.verdict == "relations_found":
            witnessed = report.multiplicative or report.additive
            torus = build_torus(stack_relations(list(witnessed), MULTIPLICATIVE))
            index = next((j for j, t in enumerate(excluded) if t.same_subgroup(torus)), None)
            if index is None:
                excluded.append(torus)
                found.append(torus)
                index = len(excluded) - 1
            entry.update(reason="relations_found", torus_index=index,
                         relations=[list(r) for M in report.relations for r in M.rows])
            log.append(entry)
            continue
        accepted.append(s)
        audits.append(report)

    debug_log(f"Sweep done: {len(accepted)} presumed generic, {len(log)} rejected, {len(found)} tori")
    if not accepted:
        raise SweepExhaustedError(
            f"no presumed-generic solution among {len(seeds)} seeds (not a disproof)", stage="sweep",
            details={"rejected_log": log, "seeds_tried": len(seeds)})
    return SweepResult(solutions=tuple(accepted), audits=tuple(audits), rejected_log=tuple(log),
                       tori_found=tuple(found), seeds_tried=len(seeds), hypotheses=prepared.hypotheses,
                       height_bound=H, dominance_override=allow_non_dominant)


def _monomial_rows(points, exponents, ctx):
    rows = []
    for coords in points:
        values = [lift(ctx, v) for v in coords]
        row = []
        for exps in exponents:
            term = ctx.mpc(1)
            for v, e in zip(values, exps):
                if e:
                    term *= v ** e
            row.append(term)
        rows.append(row)
    # column scaling leaves the rank unchanged
    for j in range(len(exponents)):
        scale = max(abs(row[j]) for row in rows)
        if scale != 0:
            for row in rows:
                row[j] /= scale
    return rows


def density_evidence(solutions, d, variety=None, config=None):
    """Rank of all monomials of total degree <= d in (z, y) over the solutions.

    Without a variety the target is the monomial count; with one it is the
    rank the same monomials attain on random samples of V.
    """
    solutions = tuple(solutions)
    if not solutions:
        raise InputError("density evidence needs at least one solution")
    if not isinstance(d, int) or d < 0:
        raise InputError(f"degree must be a non-negative integer, got {d!r}")
    precision = min(s.precision_bits for s in solutions)
    ctx = make_context(precision)
    n = solutions[0].n
    exponents = monomial_exponents(2 * n, d)
    count = len(exponents)
    rank = numerical_rank(ctx, _monomial_rows([list(s.z) + list(s.y) for s in solutions], exponents, ctx))
    target = count
    if variety is not None:
        config = config or RunConfig(precision_bits=precision)
        samples = sample_points(variety, count + 2, f"density:{config.rng_seed}", precision, config)
        target = numerical_rank(ctx, _monomial_rows([p.coords for p in samples], exponents, ctx))
    inconclusive = len(solutions) < count
    full = not inconclusive and rank == target
    if inconclusive:
        reason = f"inconclusive: {len(solutions)} solutions for {count} monomials of degree <= {d}"
    elif full:
        reason = f"no polynomial of degree <= {d} vanishes on all solutions"
        if variety is not None:
            reason += " other than those vanishing on V"
    else:
        reason = f"rank {rank} < {target}: a polynomial of degree <= {d} vanishes on all solutions"
    return DensityEvidence(solutions=solutions, degree=d, monomial_rank=rank, full=full,
                           monomial_count=count, target_rank=target, inconclusive=inconclusive,
                           reason=reason)
