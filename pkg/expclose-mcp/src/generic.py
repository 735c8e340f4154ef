#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Genericity audit: integer relations among the coordinates of a solution.

Additive relations:        r . z = 0
Multiplicative relations:  r . z = 2*pi*i*m   (equivalently e^(r.z) = 1)

Relations are found by LLL on an integer basis built from the values scaled
by C = 2^(p/2), then re-verified by direct evaluation. A report can prove a
relation exists; it can only presume genericity "up to height H at precision p".
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, log2

from sympy.polys.domains import ZZ, QQ
from sympy.polys.matrices import DomainMatrix

from errors import InputError, PrecisionError
from polycore import lift
from settings import make_context, debug_log

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
LLL_DELTA = QQ(99, 100)

AFFINE_NOTE = ("additive search is homogeneous (b = 0); affine relations r.x = b with "
               "transcendental b are not searched")
TD_NOTE = ("td_proxy = n - rank(additive relations); under finite fibers of both "
           "projections t.d.(z) = t.d.(z, e^z) = t.d.(e^z), so td_proxy bounds the "
           "transcendence degree only conditionally on Schanuel's conjecture")


# --- exact integer linear algebra ---

def _rows(matrix):
    rows = matrix.rows if isinstance(matrix, IntegerRelationMatrix) else matrix
    return [[int(v) for v in row] for row in rows]


def exact_rank(rows):
    rows = _rows(rows)
    if not rows or not rows[0]:
        return 0
    return DomainMatrix([[QQ(v) for v in r] for r in rows], (len(rows), len(rows[0])), QQ).rank()


def hyperplane_dimension(rows):
    """dim L_M = dim {x : M x = 0}, from an exact rational kernel basis."""
    rows = _rows(rows)
    n = len(rows[0])
    kernel = DomainMatrix([[QQ(v) for v in r] for r in rows], (len(rows), n), QQ).nullspace()
    return kernel.shape[0]


def torus_tangent_dimension(rows):
    """dim of the tangent space of T_M at 1: nullity of d(y -> y^M) at y = 1."""
    rows = _rows(rows)
    n = len(rows[0])
    one = [Fraction(1)] * n
    differential = []
    for r in rows:
        monomial = Fraction(1)
        for yj, e in zip(one, r):
            monomial *= yj ** e
        differential.append([e * monomial / yj for yj, e in zip(one, r)])
    return n - DomainMatrix([[QQ(v.numerator, v.denominator) for v in r] for r in differential],
                            (len(rows), n), QQ).rank()


def _exgcd(a, b):
    """(g, s, t, u, v) with [[s, t], [u, v]] of determinant 1 sending (a, b) to (g, 0)."""
    a_sign = -1 if a < 0 else 1
    b_sign = -1 if b < 0 else 1
    a, b = abs(a), abs(b)
    # Euclid on the column (a, b) with the identity alongside; rows swapped first
    # so that a | b gives t = 0.
    top, bottom = [b, 0, 1], [a, 1, 0]
    while bottom[0] != 0:
        q = top[0] // bottom[0]
        top = [x - q * y for x, y in zip(top, bottom)]
        top, bottom = bottom, top
    g = top[0]
    s, t = top[1] * a_sign, top[2] * b_sign
    if g == 0:
        return 0, 1, 0, 0, 1
    u, v = -b_sign * b // g, a_sign * a // g
    return g, s, t, u, v


def diagonalize(rows):
    """Integer D, T with M = S D T, T unimodular (S is not tracked).

    Returns (diagonal entries, T as a list of rows). Divisibility of the
    diagonal is not enforced; see invariant_factors_of.
    """
    A = _rows(rows)
    m, n = len(A), len(A[0])
    T = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def swap_columns(j, k):
        for row in A:
            row[j], row[k] = row[k], row[j]
        T[j], T[k] = T[k], T[j]

    def column_op(j, k, s, t, u, v):
        for row in A:
            row[j], row[k] = s * row[j] + t * row[k], u * row[j] + v * row[k]
        # T <- E^-1 T with E^-1 = [[v, -u], [-t, s]] on rows j, k
        T[j], T[k] = ([v * x - u * y for x, y in zip(T[j], T[k])],
                      [-t * x + s * y for x, y in zip(T[j], T[k])])

    diagonal = []
    for p in range(min(m, n)):
        pivot = next(((i, j) for j in range(p, n) for i in range(p, m) if A[i][j] != 0), None)
        if pivot is None:
            break
        i, j = pivot
        A[p], A[i] = A[i], A[p]
        if j != p:
            swap_columns(p, j)
        while True:
            for i in range(p + 1, m):
                if A[i][p] != 0:
                    _, s, t, u, v = _exgcd(A[p][p], A[i][p])
                    A[p], A[i] = ([s * x + t * y for x, y in zip(A[p], A[i])],
                                  [u * x + v * y for x, y in zip(A[p], A[i])])
            for j in range(p + 1, n):
                if A[p][j] != 0:
                    _, s, t, u, v = _exgcd(A[p][p], A[p][j])
                    column_op(p, j, s, t, u, v)
            if all(A[i][p] == 0 for i in range(p + 1, m)):
                break
        diagonal.append(A[p][p])
    return diagonal, T


def invariant_factors_of(diagonal):
    """Smith invariant factors d1 | d2 | ... of a diagonal integer matrix."""
    d = sorted(abs(x) for x in diagonal if x != 0)
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            g = gcd(d[i], d[j])
            d[i], d[j] = g, d[i] * d[j] // g
    return tuple(d)


def reduce_basis(rows):
    """LLL-reduced, sign-normalized, sorted basis of the same lattice."""
    rows = _rows(rows)
    if not rows:
        return []
    dm = DomainMatrix([[ZZ(v) for v in r] for r in rows], (len(rows), len(rows[0])), ZZ)
    reduced = dm.lll(delta=LLL_DELTA).to_Matrix().tolist()
    out = []
    for r in reduced:
        r = [int(v) for v in r]
        first = next((v for v in r if v != 0), 0)
        out.append([-v for v in r] if first < 0 else r)
    return sorted(out, key=lambda r: (max(abs(v) for v in r), r))


# --- domain types ---

@dataclass(frozen=True)
class IntegerRelationMatrix:
    rows: tuple
    kind: str = ADDITIVE
    height: int = 0
    witness_error: str = "0"
    periods: tuple = ()

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "periods", tuple(int(m) for m in self.periods))
        if not rows or not rows[0]:
            raise InputError("relation matrix must be nonempty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise InputError("relation matrix rows differ in length")
        if any(not any(r) for r in rows):
            raise InputError("relation matrix has a zero row")
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise InputError(f"relation kind must be additive or multiplicative, got {self.kind!r}")
        if exact_rank(rows) != len(rows):
            raise InputError("relation matrix rows are not independent over Q")
        object.__setattr__(self, "height", max(abs(v) for r in rows for v in r))

    @property
    def m(self):
        return len(self.rows)

    @property
    def n(self):
        return len(self.rows[0])


@dataclass(frozen=True)
class Hyperplane:
    matrix: IntegerRelationMatrix
    dim: int


@dataclass(frozen=True)
class Torus:
    matrix: IntegerRelationMatrix
    dim: int
    identity_component_matrix: tuple
    invariant_factors: tuple = ()

    def same_subgroup(self, other):
        """Equal identity components (same saturated lattice)."""
        a, b = self.identity_component_matrix, other.identity_component_matrix
        if len(a[0]) != len(b[0]) or len(a) != len(b):
            return False
        return exact_rank(list(a) + list(b)) == len(a)


@dataclass(frozen=True)
class GenericityReport:
    verdict: str
    relations: tuple
    hyperplanes: tuple
    tori: tuple
    height_bound: int
    precision_bits: int
    tolerance: str
    td_proxy: int
    n: int
    notes: tuple = ()
    finite_fibers: dict = field(default=None)

    @property
    def additive(self):
        return tuple(r for r in self.relations if r.kind == ADDITIVE)

    @property
    def multiplicative(self):
        return tuple(r for r in self.relations if r.kind == MULTIPLICATIVE)


def build_torus(matrix):
    """T_M with dim = n - rank(M) from the Smith diagonal and M' = saturated row lattice."""
    if isinstance(matrix, IntegerRelationMatrix):
        rows = matrix.rows
    else:
        rows = _rows(matrix)
        if not rows or not any(any(r) for r in rows):
            raise InputError("the zero matrix does not define a proper torus")
        matrix = IntegerRelationMatrix(rows=_independent_rows([r for r in rows if any(r)]),
                                       kind=MULTIPLICATIVE)
    diagonal, T = diagonalize(rows)
    rank = sum(1 for d in diagonal if d != 0)
    identity = reduce_basis(T[:rank])
    return Torus(matrix=matrix, dim=matrix.n - rank,
                 identity_component_matrix=tuple(tuple(r) for r in identity),
                 invariant_factors=invariant_factors_of(diagonal))


def _independent_rows(rows):
    kept = []
    for r in rows:
        if exact_rank(kept + [r]) > len(kept):
            kept.append(r)
    return kept


def stack_relations(relations, kind=None):
    """One matrix from a list of independent 1-row relations."""
    if not relations:
        return None
    kind = kind or relations[0].kind
    rows = _independent_rows([list(r) for M in relations for r in M.rows])
    periods = [m for M in relations for m in M.periods] if kind == MULTIPLICATIVE else []
    return IntegerRelationMatrix(rows=rows, kind=kind,
                                 periods=periods if len(periods) == len(rows) else ())


# --- relation search ---

def check_precision(H, precision):
    need = 4 * log2(H) + 64
    if precision < need:
        raise PrecisionError(f"precision {precision} bits is below 4*log2(H) + 64 = {need:.1f} for H = {H}",
                             stage="audit")


def relation_threshold(ctx, n, H):
    return n * H * ctx.ldexp(ctx.mpf(1), -(ctx.prec // 2))


def lattice_relations(blocks, H, precision, with_period=False):
    """Integer r with r . v = 2*pi*i*m_k (m_k = 0 unless with_period) for every value block v.

    Returns (r, m, error) triples, primitive, first nonzero entry positive,
    sorted by height then lexicographically, independent over Q.
    """
    check_precision(H, precision)
    ctx = make_context(precision)
    blocks = [[lift(ctx, v) for v in block] for block in blocks]
    n = len(blocks[0])
    periods = len(blocks) if with_period else 0
    scale = ctx.ldexp(ctx.mpf(1), precision // 2)
    two_pi = 2 * ctx.pi

    def scaled(x):
        return int(ctx.nint(scale * x))

    basis = []
    for i in range(n):
        row = [1 if j == i else 0 for j in range(n)] + [0] * periods
        for block in blocks:
            row += [scaled(block[i].real), scaled(block[i].imag)]
        basis.append(row)
    for k in range(periods):
        row = [0] * n + [1 if j == k else 0 for j in range(periods)]
        for b in range(len(blocks)):
            row += [0, scaled(two_pi)] if b == k else [0, 0]
        basis.append(row)
    width = len(basis[0])
    reduced = DomainMatrix([[ZZ(v) for v in r] for r in basis], (len(basis), width), ZZ)
    reduced = reduced.lll(delta=LLL_DELTA).to_Matrix().tolist()

    threshold = relation_threshold(ctx, n, H)
    found = []
    for row in reduced:
        row = [int(v) for v in row]
        r = row[:n]
        m = [-v for v in row[n:n + periods]]
        if not any(r):
            continue
        g = 0
        for v in r + m:
            g = gcd(g, v)
        if g > 1:
            r, m = [v // g for v in r], [v // g for v in m]
        first = next(v for v in r if v != 0)
        if first < 0:
            r, m = [-v for v in r], [-v for v in m]
        if max(abs(v) for v in r) > H:
            continue
        error = ctx.mpf(0)
        for k, block in enumerate(blocks):
            value = sum((c * v for c, v in zip(r, block)), ctx.mpc(0))
            if with_period:
                value -= ctx.mpc(0, two_pi * m[k])
            error = max(error, abs(value))
        if error <= threshold:
            found.append((r, m, error))

    found.sort(key=lambda f: (max(abs(v) for v in f[0]), f[0]))
    kept, rows = [], []
    for r, m, error in found:
        if exact_rank(rows + [r]) > len(rows):
            rows.append(r)
            kept.append((r, m, error))
    debug_log(f"Relation search (period={with_period}, H={H}, p={precision}): {len(kept)} found", "DEBUG")
    return kept


def find_additive_relations(z, H, precision):
    ctx = make_context(precision)
    return [IntegerRelationMatrix(rows=(tuple(r),), kind=ADDITIVE, witness_error=ctx.nstr(err, 5))
            for r, _, err in lattice_relations([z], H, precision, with_period=False)]


def find_multiplicative_relations(z, H, precision):
    ctx = make_context(precision)
    return [IntegerRelationMatrix(rows=(tuple(r),), kind=MULTIPLICATIVE, witness_error=ctx.nstr(err, 5),
                                  periods=(m[0],))
            for r, m, err in lattice_relations([z], H, precision, with_period=True)]


def on_torus(torus, z, ctx, tol):
    """e^z in T_{M'}: every row r of M' has |r.z - 2*pi*i*m0| <= tol, m0 = round(Im(r.z)/2pi)."""
    values = [lift(ctx, v) for v in z]
    for r in torus.identity_component_matrix:
        value = sum((c * v for c, v in zip(r, values)), ctx.mpc(0))
        m0 = ctx.nint(value.imag / (2 * ctx.pi))
        if abs(value - ctx.mpc(0, 2 * ctx.pi * m0)) > tol:
            return False
    return True


def audit(solution, H, precision, variety=None):
    """GenericityReport for the z-coordinates of a solution."""
    check_precision(H, precision)
    ctx = make_context(precision)
    z = list(solution.z)
    n = len(z)
    additive = find_additive_relations(z, H, precision)
    multiplicative = find_multiplicative_relations(z, H, precision)
    relations = tuple(additive + multiplicative)
    td_proxy = n - (exact_rank([r for M in additive for r in M.rows]) if additive else 0)
    hyperplanes = tuple(Hyperplane(M, hyperplane_dimension(M.rows)) for M in relations)
    tori = tuple(build_torus(M) for M in relations)
    finite = None
    if variety is not None and getattr(solution, "y", None):
        from variety import finite_fibers_at
        finite = finite_fibers_at(variety, list(z) + list(solution.y), ctx)
    verdict = "relations_found" if relations else "presumed_generic"
    notes = (f"presumed generic only up to height {H} at precision {precision} bits", AFFINE_NOTE, TD_NOTE)
    debug_log(f"Audit: verdict={verdict} additive={len(additive)} multiplicative={len(multiplicative)}")
    return GenericityReport(
        verdict=verdict, relations=relations, hyperplanes=hyperplanes, tori=tori,
        height_bound=H, precision_bits=precision,
        tolerance=ctx.nstr(relation_threshold(ctx, n, H), 10),
        td_proxy=td_proxy, n=n, notes=notes, finite_fibers=finite,
    )


def freeness_spot_check(V, config, H=None):
    """Search r with r.x or y^r constant along V from differences of samples."""
    from variety import sample_points

    H = H or config.height_bound
    precision = config.precision_bits
    points = sample_points(V, config.samples + 1, f"free:{config.rng_seed}", precision, config)
    ctx = make_context(precision)
    base = points[0]
    x_blocks = [[lift(ctx, a) - lift(ctx, b) for a, b in zip(p.x, base.x)] for p in points[1:]]
    y_blocks = [[ctx.log(lift(ctx, a)) - ctx.log(lift(ctx, b)) for a, b in zip(p.y, base.y)]
                for p in points[1:]]
    additive = [r for r, _, _ in lattice_relations(x_blocks, H, precision, with_period=False)]
    multiplicative = [r for r, _, _ in lattice_relations(y_blocks, H, precision, with_period=True)]
    return {
        "kind": "freeness_report",
        "additive_translates": additive,
        "multiplicative_translates": multiplicative,
        "free": not additive and not multiplicative,
        "samples_used": len(points),
        "height_bound": H,
        "precision_bits": precision,
        "notes": [AFFINE_NOTE],
    }
