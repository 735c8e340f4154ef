#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Varieties V in C^n x (C*)^n and numerical certificates for their hypotheses.

Everything here is decided by tangent-space ranks at random sample points:
    dim V          = 2n - rank J
    pi dominant    <=> rank [J; P] - rank J = n   (P = the projection's rows)
Ranks count singular values >= 2^-(p/4). Samples vote; a tied vote is
reported as unstable, never guessed.
"""

import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from errors import (
    InputError, HypothesisError, DimensionHypothesisError, RankUnstableError,
    SamplingError, CoordinateHyperplaneError,
)
from polycore import MultiPoly, evaluate, partial, lift, variable_names
from settings import RunConfig, make_context, debug_log

PROJECTIONS = ("pi1", "pi2")


@dataclass(frozen=True)
class ApproxConstant:
    """A non-Q(i) constant known to within `radius`; an extra trailing variable."""

    name: str
    value_re: str
    value_im: str = "0"
    radius: str = "0"

    def value(self, ctx):
        try:
            return ctx.mpc(ctx.mpf(self.value_re), ctx.mpf(self.value_im))
        except (ValueError, TypeError):
            raise InputError(f"approx constant {self.name}: not a decimal value")


@dataclass(frozen=True)
class ExpVariety:
    n: int
    generators: tuple
    coefficient_field_note: str = "Q(i)"
    parameters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n!r}")
        if not self.generators:
            raise InputError("a variety needs at least one generator")
        for j, g in enumerate(self.generators):
            if not isinstance(g, MultiPoly) or g.num_vars != self.num_vars:
                raise InputError(f"generators[{j}] must have {self.num_vars} variables")
            if g.is_zero:
                raise InputError(f"generators[{j}] is the zero polynomial")

    @property
    def num_vars(self):
        return 2 * self.n + len(self.parameters)

    @property
    def names(self):
        return variable_names(self.n, "variety", [c.name for c in self.parameters])

    def parameter_values(self, ctx):
        return [c.value(ctx) for c in self.parameters]

    def full_point(self, coords, ctx):
        return [lift(ctx, v) for v in coords] + self.parameter_values(ctx)

    def residual(self, coords, ctx):
        point = self.full_point(coords, ctx)
        return max(abs(evaluate(g, point, ctx)) for g in self.generators)


@dataclass(frozen=True)
class SamplePoint:
    coords: tuple
    max_residual: object
    precision_bits: int
    seed: str = ""
    slices: int = 0

    @property
    def x(self):
        return self.coords[: len(self.coords) // 2]

    @property
    def y(self):
        return self.coords[len(self.coords) // 2:]


@dataclass(frozen=True)
class HypothesisReport:
    dim_estimate: int
    pi1_dominant: bool
    pi2_dominant: bool
    samples_used: int
    precision_bits: int
    tolerance: str
    rank_threshold: str
    n: int = 0
    votes: dict = field(default_factory=dict)

    def gate(self, require_both=False):
        """Raise unless dim = n, pi1 dominant, and (if required) pi2 dominant."""
        if self.dim_estimate != self.n:
            raise DimensionHypothesisError(
                f"dim V estimated {self.dim_estimate}, expected n = {self.n}", stage="hypotheses")
        if not self.pi1_dominant:
            raise HypothesisError("projection pi1 is not dominant", stage="hypotheses")
        if require_both and not self.pi2_dominant:
            raise HypothesisError("projection pi2 is not dominant (--require-both-dominant)",
                                  stage="hypotheses")
        return self


# --- numerical linear algebra ---

def rank_threshold(ctx):
    return ctx.ldexp(ctx.mpf(1), -(ctx.prec // 4))


def singular_values(ctx, rows):
    if not rows or not rows[0]:
        return []
    A = ctx.matrix(rows)
    if A.rows < A.cols:
        A = A.T
    S = ctx.svd_c(A, compute_uv=False)
    return [S[i] for i in range(len(S))]


def numerical_rank(ctx, rows, threshold=None):
    threshold = rank_threshold(ctx) if threshold is None else threshold
    return sum(1 for s in singular_values(ctx, rows) if s >= threshold)


def jacobian(V, coords, ctx):
    """d generators / d (x, y), parameters held fixed."""
    point = V.full_point(coords, ctx)
    return [[evaluate(partial(g, k), point, ctx) for k in range(2 * V.n)] for g in V.generators]


def projection_rows(n, which, ctx):
    offset = 0 if which == "pi1" else n
    rows = []
    for i in range(n):
        row = [ctx.mpc(0)] * (2 * n)
        row[offset + i] = ctx.mpc(1)
        rows.append(row)
    return rows


def image_rank(ctx, J, D):
    """rank of D restricted to ker J."""
    return numerical_rank(ctx, J + D) - numerical_rank(ctx, J)


# --- sampling ---

def _random_complex(rng, ctx):
    return ctx.mpc(rng.gauss(0, 1), rng.gauss(0, 1))


def _newton_on_slices(V, slices, start, ctx, config):
    """Damped Newton on generators + affine slices from `start`."""
    params = V.parameter_values(ctx)
    N = 2 * V.n
    floor = ctx.ldexp(ctx.mpf(1), -(ctx.prec - 8))

    def system(v):
        point = list(v) + params
        values = [evaluate(g, point, ctx) for g in V.generators]
        values += [sum((a * c for a, c in zip(row, v)), ctx.mpc(0)) - b for row, b in slices]
        return values

    v = list(start)
    F = system(v)
    norm = max(abs(f) for f in F)
    for _ in range(config.max_iter):
        if norm <= floor:
            break
        J = jacobian(V, v, ctx) + [list(row) for row, _ in slices]
        step = ctx.lu_solve(ctx.matrix(J), ctx.matrix([-f for f in F]))
        step = [step[k] for k in range(N)]
        lam = ctx.mpf(1)
        for _ in range(config.max_halvings):
            trial = [a + lam * d for a, d in zip(v, step)]
            trial_F = system(trial)
            trial_norm = max(abs(f) for f in trial_F)
            if trial_norm < norm:
                break
            lam /= 2
        else:
            break
        v, F, norm = trial, trial_F, trial_norm
    return v


def sample_point(V, rng_seed, precision, config=None):
    """A point of V off the coordinate hyperplanes y_i = 0, by Newton on random slices."""
    config = config or RunConfig(precision_bits=precision)
    ctx = make_context(precision)
    rng = random.Random(f"sample:{rng_seed}")
    N = 2 * V.n
    base_slices = max(0, N - len(V.generators))
    extra = 0
    zero_hits = 0
    y_floor = rank_threshold(ctx)
    target = ctx.ldexp(ctx.mpf(1), -(precision // 2))
    for attempt in range(config.sample_retries):
        count = min(N, base_slices + extra)
        slices = [(tuple(_random_complex(rng, ctx) for _ in range(N)), _random_complex(rng, ctx))
                  for _ in range(count)]
        start = [_random_complex(rng, ctx) for _ in range(N)]
        try:
            v = _newton_on_slices(V, slices, start, ctx, config)
        except ZeroDivisionError:
            debug_log(f"sample {rng_seed} attempt {attempt}: singular Jacobian with {count} slices", "DEBUG")
            extra += 1
            continue
        if any(abs(y) < y_floor for y in v[V.n:]):
            zero_hits += 1
            continue
        residual = V.residual(v, ctx)
        if residual <= target:
            return SamplePoint(coords=tuple(v), max_residual=residual, precision_bits=precision,
                               seed=str(rng_seed), slices=count)
    if zero_hits == config.sample_retries:
        raise CoordinateHyperplaneError(
            f"all {zero_hits} sampling attempts landed on a coordinate hyperplane y_i = 0", stage="sample")
    raise SamplingError(f"no sample converged within {config.sample_retries} attempts", stage="sample",
                        details={"coordinate_hyperplane_hits": zero_hits})


def sample_points(V, count, rng_seed, precision, config=None):
    """`count` independent samples, merged in slice-index order."""
    config = config or RunConfig(precision_bits=precision)
    seeds = [f"{rng_seed}:{k}" for k in range(count)]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(lambda s: sample_point(V, s, precision, config), seeds))
    return [sample_point(V, s, precision, config) for s in seeds]


def _plurality(votes, what):
    counts = Counter(votes).most_common()
    if len(counts) > 1 and counts[0][1] == counts[1][1]:
        raise RankUnstableError(f"{what} unstable across samples: {dict(counts)}", stage="hypotheses",
                                details={"votes": {str(k): v for k, v in counts}})
    return counts[0][0]


def _dimension_votes(V, points, ctx):
    return [2 * V.n - numerical_rank(ctx, jacobian(V, p.coords, ctx)) for p in points]


def _dominance_votes(V, which, points, ctx):
    votes = []
    for p in points:
        J = jacobian(V, p.coords, ctx)
        votes.append(image_rank(ctx, J, projection_rows(V.n, which, ctx)) == V.n)
    return votes


def estimate_dimension(V, samples, rng_seed, precision, config=None):
    points = sample_points(V, samples, rng_seed, precision, config)
    ctx = make_context(precision)
    return _plurality(_dimension_votes(V, points, ctx), "dimension estimate")


def check_dominant(V, which, samples, rng_seed, precision, config=None):
    if which not in PROJECTIONS:
        raise InputError(f"projection must be one of {PROJECTIONS}, got {which!r}")
    points = sample_points(V, samples, rng_seed, precision, config)
    ctx = make_context(precision)
    dim = _plurality(_dimension_votes(V, points, ctx), "dimension estimate")
    if dim != V.n:
        raise DimensionHypothesisError(f"dim V estimated {dim}, expected n = {V.n}", stage="hypotheses")
    return _plurality(_dominance_votes(V, which, points, ctx), f"{which} dominance")


def check_hypotheses(V, config):
    """dim V and both dominance tests over one shared sample set."""
    precision = config.precision_bits
    points = sample_points(V, config.samples, config.rng_seed, precision, config)
    ctx = make_context(precision)
    dim_votes = _dimension_votes(V, points, ctx)
    dim = _plurality(dim_votes, "dimension estimate")
    pi1_votes = _dominance_votes(V, "pi1", points, ctx)
    pi2_votes = _dominance_votes(V, "pi2", points, ctx)
    report = HypothesisReport(
        dim_estimate=dim,
        pi1_dominant=_plurality(pi1_votes, "pi1 dominance"),
        pi2_dominant=_plurality(pi2_votes, "pi2 dominance"),
        samples_used=len(points),
        precision_bits=precision,
        tolerance=ctx.nstr(config.tolerance(ctx), 10),
        rank_threshold=ctx.nstr(rank_threshold(ctx), 10),
        n=V.n,
        votes={"dimension": dim_votes, "pi1": pi1_votes, "pi2": pi2_votes},
    )
    debug_log(f"Hypotheses: dim={dim} pi1={report.pi1_dominant} pi2={report.pi2_dominant}")
    return report


# --- consequences of dominance ---

def pushforward_rows(n, matrix, y, ctx):
    """Differential of (x, y) -> (M x, y^M) at a point with the given y."""
    rows = []
    for r in matrix:
        rows.append([ctx.mpc(c) for c in r] + [ctx.mpc(0)] * n)
    for r in matrix:
        monomial = ctx.mpc(1)
        for yj, e in zip(y, r):
            if e:
                monomial *= yj ** e
        rows.append([ctx.mpc(0)] * n + [ctx.mpc(e) * monomial / yj for yj, e in zip(y, r)])
    return rows


def rotundity_spot_check(V, matrices, config):
    """Check dim(M.V) >= rank(M) for each supplied integer matrix."""
    from generic import exact_rank

    precision = config.precision_bits
    if not check_dominant(V, "pi1", config.samples, config.rng_seed, precision, config):
        raise HypothesisError("rotundity spot check needs pi1 dominant", stage="hypotheses")
    points = sample_points(V, config.samples, config.rng_seed, precision, config)
    ctx = make_context(precision)
    entries = []
    for M in matrices:
        rows = [list(r) for r in (M.rows if hasattr(M, "rows") else M)]
        votes = []
        for p in points:
            J = jacobian(V, p.coords, ctx)
            votes.append(image_rank(ctx, J, pushforward_rows(V.n, rows, p.y, ctx)))
        dim_image = _plurality(votes, "pushforward rank")
        rank = exact_rank(rows)
        entries.append({"matrix": rows, "rank": rank, "dim_image": dim_image, "ok": dim_image >= rank})
    return {"kind": "rotundity_report", "entries": entries, "all_ok": all(e["ok"] for e in entries),
            "samples_used": len(points), "precision_bits": precision}


def finite_fibers_at(V, coords, ctx):
    """Both projections have finite fibers through this point (tangent-space test)."""
    J = jacobian(V, coords, ctx)
    tangent = 2 * V.n - numerical_rank(ctx, J)
    pi1 = image_rank(ctx, J, projection_rows(V.n, "pi1", ctx))
    pi2 = image_rank(ctx, J, projection_rows(V.n, "pi2", ctx))
    return {"tangent_dim": tangent, "pi1_rank": pi1, "pi2_rank": pi2,
            "finite": tangent == V.n and pi1 == V.n and pi2 == V.n}
