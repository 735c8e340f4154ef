#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Solvers for Masser systems e^(z_i) = f_i(z).

Both solvers iterate z <- 2*pi*i*k + Log f(z) from z0 = 2*pi*i*k with
damping (a step is accepted only if max|G| decreases, else halved), then
polish by Newton on G_i(z) = z_i - 2*pi*i*k_i - Log f_i(z).
The logarithm is principal; every branch choice is carried by k.

f is either a polynomial vector P(z) or an algebraic function given by a
TriangularSystem: y_i is a root of p_i(z, u), chosen by index at the first
step and tracked by proximity afterwards.
"""

from dataclasses import dataclass, field, replace

from errors import (
    ExpCloseError, InputError, NoConvergenceError, LogSingularityError, BranchCollisionError,
    NumericRangeError, ExtraneousComponentError,
)
from polycore import evaluate, partial, lift, sort_roots
from settings import RunConfig, make_context, debug_log
from triangularize import roots_over, triangularize
from variety import check_hypotheses, sample_point

FIXED_POINT_SWITCH = 24  # hand over to Newton once max|G| <= 2^-24


@dataclass(frozen=True)
class Seed:
    k: tuple
    branch_choice: tuple = ()

    def __post_init__(self):
        k = tuple(self.k)
        if not k:
            raise InputError("seed needs at least one coordinate")
        for value in k:
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"seed entries must be integers, got {value!r}")
            if value == 0:
                raise InputError(f"seed {k} has a zero entry; seeds live in (Z \\ {{0}})^n")
        branch = tuple(self.branch_choice) if self.branch_choice else (0,) * len(k)
        if len(branch) != len(k):
            raise InputError(f"branch choice {branch} does not match seed length {len(k)}")
        if any(isinstance(b, bool) or not isinstance(b, int) or b < 0 for b in branch):
            raise InputError(f"branch indices must be non-negative integers, got {branch}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "branch_choice", branch)

    @property
    def n(self):
        return len(self.k)


@dataclass(frozen=True)
class SolutionPoint:
    z: tuple
    y: tuple
    residual_exp: object
    residual_var: object
    seed: Seed
    precision_bits: int
    stage_log: tuple = ()
    iterations: int = 0

    @property
    def n(self):
        return len(self.z)


def _certify_tol(config, ctx):
    return config.tolerance(ctx)


def _iterate(ctx, seed, rhs, drhs, start, start_y, config):
    """Damped fixed-point phase then damped Newton; returns (z, y, iterations, log)."""
    n = seed.n
    shift = [ctx.mpc(0, 2 * ctx.pi * k) for k in seed.k]
    log_floor = ctx.ldexp(ctx.mpf(1), -(ctx.prec // 4))
    range_limit = ctx.ldexp(ctx.mpf(1), ctx.prec // 4)
    switch = ctx.ldexp(ctx.mpf(1), -FIXED_POINT_SWITCH)
    step = [0]

    def evaluate_at(z, previous):
        for v in z:
            if ctx.isnan(v) or ctx.isinf(v) or abs(v) > range_limit:
                raise NumericRangeError(f"iterate left the numeric range at step {step[0]}",
                                        details={"step": step[0]})
        y = rhs(z, previous, step[0])
        G = []
        for i in range(n):
            if abs(y[i]) < log_floor:
                raise LogSingularityError(f"f_{i + 1}(z) entered the logarithm singularity at step {step[0]}",
                                          details={"step": step[0], "coordinate": i + 1})
            G.append(z[i] - shift[i] - ctx.log(y[i]))
        return y, G, max(abs(g) for g in G)

    z = [lift(ctx, v) for v in start] if start is not None else list(shift)
    previous = [lift(ctx, v) for v in start_y] if start_y is not None else None
    y, G, norm = evaluate_at(z, previous)
    log = []

    iterations = 0
    while norm > switch and iterations < config.max_iter:
        iterations += 1
        step[0] = iterations
        lam = ctx.mpf(1)
        for _ in range(config.max_halvings):
            trial = [a - lam * g for a, g in zip(z, G)]
            trial_y, trial_G, trial_norm = evaluate_at(trial, y)
            if trial_norm < norm:
                break
            lam /= 2
        else:
            break
        z, y, G, norm = trial, trial_y, trial_G, trial_norm
    log.append(f"fixed-point: {iterations} iterations, max|G| = {ctx.nstr(norm, 5)}")

    done = ctx.ldexp(ctx.mpf(1), -(ctx.prec - 16)) * max(ctx.mpf(1), max(abs(v) for v in z))
    newton_steps = 0
    while norm > done and iterations < config.max_iter:
        iterations += 1
        newton_steps += 1
        step[0] = iterations
        D = drhs(z, y)
        J = [[(1 if i == j else 0) - D[i][j] / y[i] for j in range(n)] for i in range(n)]
        try:
            delta = ctx.lu_solve(ctx.matrix(J), ctx.matrix([-g for g in G]))
        except ZeroDivisionError:
            raise NoConvergenceError(f"singular Newton matrix at step {iterations}", details={"step": iterations})
        delta = [delta[i] for i in range(n)]
        lam = ctx.mpf(1)
        for _ in range(config.max_halvings):
            trial = [a + lam * d for a, d in zip(z, delta)]
            trial_y, trial_G, trial_norm = evaluate_at(trial, y)
            if trial_norm < norm:
                break
            lam /= 2
        else:
            break
        z, y, G, norm = trial, trial_y, trial_G, trial_norm
    log.append(f"newton: {newton_steps} iterations, max|G| = {ctx.nstr(norm, 5)}")
    if norm > done and iterations >= config.max_iter:
        raise NoConvergenceError(f"max_iter = {config.max_iter} exceeded with max|G| = {ctx.nstr(norm, 5)}",
                                 details={"iterations": iterations})
    return z, y, iterations, log


def _finish(ctx, seed, z, y, residual_var, iterations, log, config):
    residual_exp = max(abs(ctx.exp(a) - b) for a, b in zip(z, y))
    tol = _certify_tol(config, ctx)
    log.append(f"residual_exp = {ctx.nstr(residual_exp, 5)}, residual_var = {ctx.nstr(residual_var, 5)}")
    if residual_exp > tol or residual_var > tol:
        raise NoConvergenceError(
            f"residuals {ctx.nstr(residual_exp, 5)} / {ctx.nstr(residual_var, 5)} exceed tol {ctx.nstr(tol, 5)}",
            details={"iterations": iterations})
    return SolutionPoint(z=tuple(z), y=tuple(y), residual_exp=residual_exp, residual_var=residual_var,
                         seed=seed, precision_bits=ctx.prec, stage_log=tuple(log), iterations=iterations)


def _config_for(config, precision, max_iter):
    config = config or RunConfig(precision_bits=precision)
    changes = {}
    if config.precision_bits != precision:
        changes["precision_bits"] = precision
    if max_iter is not None and max_iter != config.max_iter:
        changes["max_iter"] = max_iter
    return config.replace(**changes) if changes else config


def solve_masser_poly(P, seed, precision, max_iter=None, start=None, config=None):
    """Solve e^(z_i) = P_i(z)."""
    config = _config_for(config, precision, max_iter)
    P = tuple(P)
    n = len(P)
    if seed.n != n:
        raise InputError(f"seed has {seed.n} entries for a system of {n} equations")
    for i, p in enumerate(P):
        if p.is_zero:
            raise InputError(f"P{i + 1} is the zero polynomial")
        if p.num_vars != n:
            raise InputError(f"P{i + 1} must have {n} variables")
    ctx = make_context(precision)
    gradients = [[partial(p, j) for j in range(n)] for p in P]

    def rhs(z, previous, step):
        return [evaluate(p, z, ctx) for p in P]

    def drhs(z, y):
        return [[evaluate(d, z, ctx) for d in row] for row in gradients]

    z, y, iterations, log = _iterate(ctx, seed, rhs, drhs, start, None, config)
    # y = P(z) exactly as evaluated; report the algebraic side against the evaluation
    residual_var = max(abs(b - evaluate(p, z, ctx)) for p, b in zip(P, y))
    return _finish(ctx, seed, z, y, residual_var, iterations, log, config)


def solve_masser_algebraic(T, seed, precision, max_iter=None, start=None, start_y=None, config=None):
    """Solve e^(z_i) = f_i(z) with f_i(z) a tracked root of p_i(z, u)."""
    config = _config_for(config, precision, max_iter)
    n = T.n
    if seed.n != n:
        raise InputError(f"seed has {seed.n} entries for a triangular system over n = {n}")
    degrees = T.degrees_in_u
    for i, b in enumerate(seed.branch_choice):
        if b >= degrees[i]:
            raise InputError(f"branch index {b} for p{i + 1} but it has degree {degrees[i]} in u")
    ctx = make_context(precision)
    params = T.parameter_values(ctx)
    separation = ctx.ldexp(ctx.mpf(1), -(precision // 4))
    u = T.u_index
    x_gradients = [[partial(p, j) for j in range(n)] for p in T.polys]
    u_gradients = [partial(p, u) for p in T.polys]

    def rhs(z, previous, step):
        y = []
        for i in range(n):
            roots = roots_over(T, i, z, ctx, params)
            if previous is None:
                ordered = sort_roots(roots, ctx)
                if seed.branch_choice[i] >= len(ordered):
                    raise BranchCollisionError(f"p{i + 1} lost a root at step {step}", details={"step": step})
                pick = ordered[seed.branch_choice[i]]
            else:
                pick = min(roots, key=lambda r: abs(r - previous[i]))
            for r in roots:
                if r is not pick and abs(r - pick) <= separation:
                    raise BranchCollisionError(f"two roots of p{i + 1} collided at step {step}",
                                               details={"step": step, "coordinate": i + 1})
            y.append(pick)
        return y

    def drhs(z, y):
        rows = []
        for i in range(n):
            point = list(z) + [y[i]] + params
            du = evaluate(u_gradients[i], point, ctx)
            if du == 0:
                raise BranchCollisionError(f"dp{i + 1}/du vanishes at the tracked root")
            rows.append([-evaluate(d, point, ctx) / du for d in x_gradients[i]])
        return rows

    z, y, iterations, log = _iterate(ctx, seed, rhs, drhs, start, start_y, config)
    residual_var = max(abs(evaluate(p, list(z) + [b] + params, ctx)) for p, b in zip(T.polys, y))
    return _finish(ctx, seed, z, y, residual_var, iterations, log, config)


# --- variety pipeline ---

@dataclass(frozen=True)
class PreparedVariety:
    variety: object
    hypotheses: object
    witness: object
    triangular: object
    stage_log: tuple = field(default=())


def _staged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ExpCloseError as e:
        raise e.with_stage(stage)


def prepare_variety(V, config, require_both=None):
    """Hypothesis gate, witness sample and triangularization, done once per variety."""
    require_both = config.require_both_dominant if require_both is None else require_both
    precision = config.precision_bits
    report = _staged("hypotheses", check_hypotheses, V, config)
    _staged("hypotheses", report.gate, require_both)
    witness = _staged("sample", sample_point, V, f"witness:{config.rng_seed}", precision, config)
    T = _staged("triangularize", triangularize, V, witness, precision, config.max_intermediate_terms)
    log = (f"hypotheses: dim={report.dim_estimate} pi1={report.pi1_dominant} pi2={report.pi2_dominant}",
           f"sample: witness residual {make_context(precision).nstr(witness.max_residual, 5)}",
           f"triangularize: degrees in u {T.degrees_in_u}")
    debug_log(f"Prepared variety n={V.n}: {log[-1]}")
    return PreparedVariety(variety=V, hypotheses=report, witness=witness, triangular=T, stage_log=log)


def solve_prepared(prepared, seed, config, start=None, start_y=None):
    precision = config.precision_bits
    s = _staged("solve", solve_masser_algebraic, prepared.triangular, seed, precision,
                start=start, start_y=start_y, config=config)
    ctx = make_context(precision)
    residual_var = prepared.variety.residual(list(s.z) + list(s.y), ctx)
    tol = config.tolerance(ctx)
    if residual_var > tol:
        raise ExtraneousComponentError(
            f"solution for seed {seed.k} misses V: generator residual {ctx.nstr(residual_var, 5)}",
            stage="verify", details={"seed": list(seed.k), "branch": list(seed.branch_choice)})
    log = prepared.stage_log + s.stage_log + (f"verify: generator residual {ctx.nstr(residual_var, 5)}",)
    return replace(s, residual_var=residual_var, stage_log=log)


def solve_on_variety(V, seed, precision, config=None):
    """sample -> triangularize -> solve, re-checked against every generator of V."""
    config = _config_for(config, precision, None)
    return solve_prepared(prepare_variety(V, config), seed, config)


def refine(solution, system, precision, config=None):
    """Re-solve from an existing solution at a new precision."""
    config = _config_for(config, precision, None)
    if isinstance(system, PreparedVariety):
        return solve_prepared(system, solution.seed, config, start=solution.z, start_y=solution.y)
    if hasattr(system, "polys"):
        return solve_masser_algebraic(system, solution.seed, precision, start=solution.z,
                                      start_y=solution.y, config=config)
    return solve_masser_poly(system, solution.seed, precision, start=solution.z, config=config)
