#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Reduce a variety with dominant pi1 to a triangular system p_i(x, y_i) = 0.

For each i every y_j (j != i, ascending) is eliminated by resultants against
a minimal-degree pivot. Of the surviving factors only those vanishing at a
witness point are kept, which selects the component through the witness.
"""

import random
from dataclasses import dataclass

from errors import EliminationError, InputError, NoConvergenceError, SingularLeadingCoefficientError
from polycore import (
    MultiPoly, evaluate, resultant, primitive_part, square_free_part, square_free_factors,
    poly_gcd, coefficient_magnitude, univariate_coefficients, polynomial_roots, lift,
    variable_names,
)
from settings import make_context, debug_log


@dataclass(frozen=True)
class TriangularSystem:
    """p_i in variables (x1..xn, u, constants...)."""

    n: int
    polys: tuple
    parameters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n!r}")
        if len(self.polys) != self.n:
            raise InputError(f"a triangular system over n = {self.n} needs {self.n} polynomials")
        u = self.u_index
        for i, p in enumerate(self.polys):
            if not isinstance(p, MultiPoly) or p.num_vars != self.num_vars:
                raise InputError(f"polys[{i}] must have {self.num_vars} variables")
            if p.degree_in(u) < 1:
                raise InputError(f"polys[{i}] has degree 0 in u")
            if len(p) == 1 and p.terms[0][0][u] == 1 and sum(p.terms[0][0]) == 1:
                raise InputError(f"polys[{i}] is a constant multiple of u")

    @property
    def u_index(self):
        return self.n

    @property
    def num_vars(self):
        return self.n + 1 + len(self.parameters)

    @property
    def degrees_in_u(self):
        return tuple(p.degree_in(self.u_index) for p in self.polys)

    @property
    def names(self):
        return variable_names(self.n, "triangular", [c.name for c in self.parameters])

    @classmethod
    def build(cls, n, polys, parameters=()):
        """Normalize (content, square-free part in u, leading coefficient) then validate."""
        u = n
        main = (u,)
        cleaned = []
        for p in polys:
            p = primitive_part(p, main) if p.degree_in(u) > 0 else p
            if p.degree_in(u) > 0:
                p = square_free_part(p, u)
            cleaned.append(p.normalized(u))
        return cls(n=n, polys=tuple(cleaned), parameters=tuple(parameters))

    def parameter_values(self, ctx):
        return [c.value(ctx) for c in self.parameters]


def fiber_bound(T):
    bound = 1
    for d in T.degrees_in_u:
        bound *= d
    return bound


def _eliminate(polys, var, max_terms):
    """Resultants of a minimal-degree pivot against every other poly involving var."""
    involved = [p for p in polys if p.degree_in(var) > 0]
    rest = [p for p in polys if p.degree_in(var) == 0]
    if not involved:
        return list(polys)
    pivot = min(involved, key=lambda p: (p.degree_in(var), len(p), p.to_text()))
    others = [p for p in involved if p is not pivot]
    produced = []
    for q in others:
        r = resultant(pivot, q, var)
        if r.is_zero:
            continue
        if len(r) > max_terms:
            raise EliminationError(f"intermediate resultant has {len(r)} terms (bound {max_terms})",
                                   stage="triangularize")
        produced.append(r)
    if others and not produced:
        raise EliminationError(f"elimination of variable {var} collapsed to the zero polynomial",
                               stage="triangularize")
    return rest + produced


def _vanishes(p, point, ctx, threshold):
    value = abs(evaluate(p, point, ctx))
    return value <= threshold * max(ctx.mpf(1), coefficient_magnitude(p, point, ctx)), value


def triangularize(V, witness, precision, max_terms=100000):
    """TriangularSystem whose component through the witness lies in V."""
    ctx = make_context(precision)
    n = V.n
    params = V.parameter_values(ctx)
    point = [lift(ctx, c) for c in witness.coords] + params
    threshold = ctx.ldexp(ctx.mpf(1), -(precision // 4))
    y_vars = [n + j for j in range(n)]
    polys = []
    for i in range(n):
        current = list(V.generators)
        for j in range(n):
            if j == i:
                continue
            current = _eliminate(current, n + j, max_terms)
            others = tuple(v for v in y_vars if v != n + j)
            current = [primitive_part(p, others) if any(p.degree_in(v) for v in others) else p
                       for p in current]
        target = n + i
        candidates = [p for p in current if p.degree_in(target) > 0]
        if not candidates:
            raise EliminationError(f"no polynomial in y{i + 1} survives elimination", stage="triangularize")
        chosen = _select_factor(candidates, target, point, ctx, threshold)
        mapping = {k: k for k in range(n)}
        mapping[target] = n
        for k in range(len(V.parameters)):
            mapping[2 * n + k] = n + 1 + k
        polys.append(chosen.remap(n + 1 + len(V.parameters), mapping))
        debug_log(f"p{i + 1} = {polys[-1].to_text(variable_names(n, 'triangular', [c.name for c in V.parameters]))}",
                  "DEBUG")
    try:
        return TriangularSystem.build(n, polys, V.parameters)
    except InputError as e:
        raise EliminationError(str(e), stage="triangularize")


def _select_factor(candidates, var, point, ctx, threshold):
    vanishing = []
    for c in candidates:
        ok, _ = _vanishes(c, point, ctx, threshold)
        if ok:
            vanishing.append(c)
    if len(vanishing) > 1:
        g = vanishing[0]
        for c in vanishing[1:]:
            g = poly_gcd(g, c)
        if g.degree_in(var) > 0:
            vanishing.append(g)
    factors = []
    for c in vanishing:
        for f in square_free_factors(c):
            if f.degree_in(var) > 0 and _vanishes(f, point, ctx, threshold)[0]:
                factors.append(f)
    if not factors:
        raise EliminationError(
            "all factors extraneous at the witness (no finite-fiber component through it)",
            stage="triangularize")
    return min(factors, key=lambda f: (f.degree_in(var), f.total_degree(), len(f), f.to_text()))


def _nearest(roots, target):
    return min(range(len(roots)), key=lambda k: abs(roots[k] - target))


def roots_over(T, i, x, ctx, params=None):
    """Roots of p_i(x, u) in u; refuses a vanishing leading coefficient."""
    params = T.parameter_values(ctx) if params is None else params
    point = [lift(ctx, v) for v in x] + [ctx.mpc(0)] + params
    coeffs = univariate_coefficients(T.polys[i], T.u_index, point, ctx)
    scale = max(abs(c) for c in coeffs)
    if abs(coeffs[0]) <= ctx.ldexp(scale, -(ctx.prec // 4)):
        raise SingularLeadingCoefficientError(f"leading u-coefficient of p{i + 1} vanishes here")
    return polynomial_roots(coeffs, ctx)


def fiber_size(T, x, precision):
    """Number of y in (C*)^n with p_i(x, y_i) = 0, off the discriminant locus."""
    ctx = make_context(precision)
    separation = ctx.ldexp(ctx.mpf(1), -(precision // 4))
    count = 1
    for i in range(T.n):
        roots = roots_over(T, i, x, ctx)
        for a in range(len(roots)):
            for b in range(a + 1, len(roots)):
                if abs(roots[a] - roots[b]) <= separation:
                    raise NoConvergenceError(f"x lies on the discriminant locus of p{i + 1}")
        count *= sum(1 for r in roots if abs(r) > separation)
    return count


def verify_containment(V, T, witness, precision, samples=10, rng_seed=0, step=None):
    """Sample T's component near the witness and check V's generators vanish there."""
    ctx = make_context(precision)
    rng = random.Random(f"containment:{rng_seed}")
    n = V.n
    step = ctx.mpf(step) if step is not None else ctx.mpf("1e-3")
    threshold = ctx.ldexp(ctx.mpf(1), -(precision // 4))
    base_x = [lift(ctx, c) for c in witness.coords[:n]]
    base_y = [lift(ctx, c) for c in witness.coords[n:2 * n]]
    params = V.parameter_values(ctx)
    worst = ctx.mpf(0)
    for _ in range(samples):
        x = [a + step * ctx.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1)) for a in base_x]
        y = []
        for i in range(n):
            roots = roots_over(T, i, x, ctx)
            y.append(roots[_nearest(roots, base_y[i])])
        full = x + y + params
        for g in V.generators:
            ok, value = _vanishes(g, full, ctx, threshold)
            worst = max(worst, value)
            if not ok:
                return {"kind": "containment_report", "ok": False, "samples": samples,
                        "max_residual": ctx.nstr(worst, 10), "precision_bits": precision}
    return {"kind": "containment_report", "ok": True, "samples": samples,
            "max_residual": ctx.nstr(worst, 10), "precision_bits": precision}
