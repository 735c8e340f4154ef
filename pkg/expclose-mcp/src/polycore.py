#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Exact multivariate polynomials over Q(i), arbitrary-precision evaluation,
and elimination by resultants.

Polynomials are immutable: a MultiPoly is a sorted tuple of
(exponent-vector, GaussianRational) pairs. Heavy exact algebra (resultants,
gcds, square-free decomposition) is delegated to sympy's dense polynomial
engine; evaluation runs in a caller-supplied mpmath context.

Text form, used in files and reports:
    x1^2 * y1 - 3/4 * x2 + (1/2+1/3*i) * u
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import mpmath
from sympy import Poly, Rational, I, symbols, sympify
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.polyerrors import ExactQuotientFailed

from errors import InputError, PolynomialError, NoConvergenceError


def _fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a rational literal: {value!r}")
    raise TypeError(f"cannot use {type(value).__name__} as a rational")


@dataclass(frozen=True)
class GaussianRational:
    """a/b + (c/d)·i with reduced fractions and positive denominators."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _fraction(self.re))
        object.__setattr__(self, "im", _fraction(self.im))

    @property
    def re_num(self):
        return self.re.numerator

    @property
    def re_den(self):
        return self.re.denominator

    @property
    def im_num(self):
        return self.im.numerator

    @property
    def im_den(self):
        return self.im.denominator

    @property
    def is_zero(self):
        return self.re == 0 and self.im == 0

    @property
    def is_real(self):
        return self.im == 0

    @classmethod
    def coerce(cls, value):
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot use {type(value).__name__} as a Gaussian rational")

    def __add__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re * other.re - self.im * other.im,
                                self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def norm(self):
        return self.re * self.re + self.im * self.im

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * GaussianRational.coerce(other).inverse()

    @classmethod
    def parse(cls, text):
        """Parse `a/b`, `c/d*i`, `a/b+c/d*i` (spaces ignored)."""
        if not isinstance(text, str):
            raise InputError(f"coefficient must be a string, got {text!r}")
        body = text.replace(" ", "")
        if not body:
            raise InputError("empty coefficient")
        if not body.endswith("i"):
            return cls(_fraction(body))
        body = body[:-1]
        if body.endswith("*"):
            body = body[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        if split > 0:
            re_text, im_text = body[:split], body[split:]
        else:
            re_text, im_text = "0", body
        if im_text in ("", "+"):
            im_text = "1"
        elif im_text == "-":
            im_text = "-1"
        return cls(_fraction(re_text), _fraction(im_text))

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"

    def to_mpc(self, ctx):
        return ctx.mpc(ctx.fdiv(self.re_num, self.re_den), ctx.fdiv(self.im_num, self.im_den))

    def to_sympy(self):
        return Rational(self.re_num, self.re_den) + I * Rational(self.im_num, self.im_den)

    @classmethod
    def from_sympy(cls, expr):
        re_part, im_part = sympify(expr).as_real_imag()
        re_part, im_part = Rational(re_part), Rational(im_part)
        return cls(Fraction(int(re_part.p), int(re_part.q)), Fraction(int(im_part.p), int(im_part.q)))


ONE = GaussianRational(1)


def _merge_terms(num_vars, terms):
    merged = {}
    items = terms.items() if isinstance(terms, dict) else terms
    for exps, coeff in items:
        exps = tuple(int(e) for e in exps)
        if len(exps) != num_vars:
            raise PolynomialError(f"exponent vector {exps} has length {len(exps)}, expected {num_vars}")
        if any(e < 0 for e in exps):
            raise PolynomialError(f"negative exponent in {exps}")
        coeff = GaussianRational.coerce(coeff)
        merged[exps] = merged[exps] + coeff if exps in merged else coeff
    return tuple(sorted(((e, c) for e, c in merged.items() if not c.is_zero), reverse=True))


@dataclass(frozen=True)
class MultiPoly:
    num_vars: int
    terms: tuple = ()

    def __post_init__(self):
        if not isinstance(self.num_vars, int) or self.num_vars < 1:
            raise PolynomialError(f"num_vars must be a positive integer, got {self.num_vars!r}")
        object.__setattr__(self, "terms", _merge_terms(self.num_vars, self.terms))

    @classmethod
    def zero(cls, num_vars):
        return cls(num_vars, ())

    @classmethod
    def constant(cls, num_vars, coeff):
        return cls(num_vars, (((0,) * num_vars, coeff),))

    @classmethod
    def variable(cls, num_vars, index):
        exps = [0] * num_vars
        exps[index] = 1
        return cls(num_vars, ((tuple(exps), ONE),))

    @property
    def is_zero(self):
        return not self.terms

    @property
    def is_constant(self):
        return all(not any(exps) for exps, _ in self.terms)

    @property
    def is_real(self):
        return all(c.is_real for _, c in self.terms)

    def __len__(self):
        return len(self.terms)

    def _check(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return MultiPoly.constant(self.num_vars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if other.num_vars != self.num_vars:
            raise PolynomialError(f"arity mismatch: {self.num_vars} vs {other.num_vars}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return MultiPoly(self.num_vars, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.num_vars, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        product = []
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                product.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return MultiPoly(self.num_vars, product)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise PolynomialError(f"exponent must be a non-negative integer, got {k!r}")
        result = MultiPoly.constant(self.num_vars, 1)
        for _ in range(k):
            result = result * self
        return result

    def scale(self, coeff):
        coeff = GaussianRational.coerce(coeff)
        return MultiPoly(self.num_vars, tuple((e, c * coeff) for e, c in self.terms))

    def degree_in(self, var):
        return max((e[var] for e, _ in self.terms), default=0)

    def total_degree(self):
        return max((sum(e) for e, _ in self.terms), default=0)

    def leading_term(self, var=None):
        """Largest term by (degree in var, exponent vector)."""
        if self.is_zero:
            raise PolynomialError("zero polynomial has no leading term")
        if var is None:
            return max(self.terms)
        return max(self.terms, key=lambda t: (t[0][var], t[0]))

    def normalized(self, var=None):
        """Scale so the leading coefficient (in var, if given) is 1."""
        if self.is_zero:
            return self
        return self.scale(self.leading_term(var)[1].inverse())

    def remap(self, num_vars, mapping):
        """Move variable k to position mapping[k]; unmapped variables must be absent."""
        moved = []
        for exps, coeff in self.terms:
            new = [0] * num_vars
            for k, e in enumerate(exps):
                if e == 0:
                    continue
                if k not in mapping:
                    raise PolynomialError(f"variable {k} still occurs and has no target")
                new[mapping[k]] += e
            moved.append((tuple(new), coeff))
        return MultiPoly(num_vars, moved)

    def to_text(self, names=None):
        return format_poly(self, names)


# --- Evaluation ---

def lift(ctx, value):
    """Bring a number from any mpmath context (or a Python number) into ctx."""
    if hasattr(value, "imag"):
        return ctx.mpc(ctx.convert(value.real), ctx.convert(value.imag))
    return ctx.mpc(ctx.convert(value))


def _horner(terms, var, values, ctx):
    if var == len(values):
        return terms[0][1].to_mpc(ctx)
    groups = {}
    for exps, coeff in terms:
        groups.setdefault(exps[var], []).append((exps, coeff))
    x = values[var]
    degrees = sorted(groups, reverse=True)
    acc = ctx.mpc(0)
    previous = degrees[0]
    for d in degrees:
        acc = acc * x ** (previous - d) + _horner(groups[d], var + 1, values, ctx)
        previous = d
    return acc * x ** previous


def evaluate(p, point, ctx=None):
    """p(point) by nested Horner in variable order."""
    ctx = ctx or mpmath.mp
    if len(point) != p.num_vars:
        raise PolynomialError(f"arity mismatch: polynomial has {p.num_vars} variables, point has {len(point)}")
    if p.is_zero:
        return ctx.mpc(0)
    values = [lift(ctx, v) for v in point]
    return _horner(p.terms, 0, values, ctx)


def coefficient_magnitude(p, point, ctx):
    """sum |c|·|monomial| at point: the scale against which p(point) is judged."""
    values = [abs(lift(ctx, v)) for v in point]
    total = ctx.mpf(0)
    for exps, coeff in p.terms:
        term = abs(coeff.to_mpc(ctx))
        for v, e in zip(values, exps):
            if e:
                term *= v ** e
        total += term
    return total


@lru_cache(maxsize=4096)
def partial(p, var):
    """Formal partial derivative in variable var."""
    if not 0 <= var < p.num_vars:
        raise PolynomialError(f"variable index {var} out of range for {p.num_vars} variables")
    out = []
    for exps, coeff in p.terms:
        e = exps[var]
        if e:
            lowered = exps[:var] + (e - 1,) + exps[var + 1:]
            out.append((lowered, coeff * e))
    return MultiPoly(p.num_vars, out)


@lru_cache(maxsize=4096)
def coefficients_in(p, var):
    """{power: coefficient polynomial} with p viewed as a polynomial in var."""
    split = {}
    for exps, coeff in p.terms:
        stripped = exps[:var] + (0,) + exps[var + 1:]
        split.setdefault(exps[var], []).append((stripped, coeff))
    return {d: MultiPoly(p.num_vars, ts) for d, ts in split.items()}


def univariate_coefficients(p, var, point, ctx):
    """Numerical coefficients of p(point with var free), highest power first."""
    split = coefficients_in(p, var)
    degree = max(split)
    zero = ctx.mpc(0)
    return [evaluate(split[d], point, ctx) if d in split else zero for d in range(degree, -1, -1)]


def polynomial_roots(coeffs, ctx):
    """All roots of a univariate polynomial, Newton-polished at ctx precision."""
    degree = len(coeffs) - 1
    if degree < 1:
        return []
    if degree == 1:
        return [-coeffs[1] / coeffs[0]]
    try:
        roots = ctx.polyroots(coeffs, maxsteps=200, cleanup=False, extraprec=ctx.prec)
    except ctx.NoConvergence:
        raise NoConvergenceError(f"root finder did not converge on a degree {degree} polynomial")
    polished = []
    for r in roots:
        r = ctx.mpc(r)
        for _ in range(3):
            value, slope = ctx.polyval(coeffs, r, derivative=True)
            if slope == 0:
                break
            r = r - value / slope
        polished.append(r)
    return polished


def sort_roots(roots, ctx):
    """By magnitude, ties (equal to half precision) by principal argument."""
    by_size = sorted(roots, key=abs)
    eps = ctx.ldexp(ctx.mpf(1), -(ctx.prec // 2))
    ordered, cluster = [], []
    for r in by_size:
        if cluster and abs(r) - abs(cluster[0]) > eps * (1 + abs(r)):
            ordered += sorted(cluster, key=ctx.arg)
            cluster = []
        cluster.append(r)
    return ordered + sorted(cluster, key=ctx.arg)


# --- Exact algebra through sympy ---

@lru_cache(maxsize=64)
def _generators(num_vars):
    return symbols(f"v0:{num_vars}")


def _domain_for(*polys):
    return QQ if all(p.is_real for p in polys) else QQ_I


def to_sympy(p, order=None, domain=None):
    """sympy Poly with generators in `order` (default: natural order)."""
    order = tuple(order) if order is not None else tuple(range(p.num_vars))
    gens = _generators(p.num_vars)
    rep = {tuple(exps[k] for k in order): coeff.to_sympy() for exps, coeff in p.terms}
    if not rep:
        rep = {(0,) * len(order): 0}
    return Poly.from_dict(rep, *[gens[k] for k in order], domain=domain or _domain_for(p))


def from_sympy(poly, num_vars, order=None):
    if not isinstance(poly, Poly):
        return MultiPoly.constant(num_vars, GaussianRational.from_sympy(poly))
    order = tuple(order) if order is not None else tuple(range(num_vars))
    terms = []
    for monom, coeff in poly.as_dict(native=False).items():
        exps = [0] * num_vars
        for position, k in enumerate(order):
            exps[k] = monom[position]
        terms.append((tuple(exps), GaussianRational.from_sympy(coeff)))
    return MultiPoly(num_vars, terms)


def resultant(p, q, var):
    """Sylvester resultant eliminating var; the result keeps num_vars with var absent."""
    if p.num_vars != q.num_vars:
        raise PolynomialError(f"arity mismatch: {p.num_vars} vs {q.num_vars}")
    if p.degree_in(var) == 0 or q.degree_in(var) == 0:
        raise PolynomialError(f"resultant needs positive degree in variable {var}")
    order = (var,) + tuple(k for k in range(p.num_vars) if k != var)
    domain = _domain_for(p, q)
    r = to_sympy(p, order, domain).resultant(to_sympy(q, order, domain))
    return from_sympy(r, p.num_vars, order[1:])


def poly_gcd(p, q):
    if p.is_zero:
        return q
    if q.is_zero:
        return p
    domain = _domain_for(p, q)
    return from_sympy(to_sympy(p, domain=domain).gcd(to_sympy(q, domain=domain)), p.num_vars)


def exact_quotient(p, q):
    domain = _domain_for(p, q)
    try:
        quotient = to_sympy(p, domain=domain).exquo(to_sympy(q, domain=domain))
    except ExactQuotientFailed:
        raise PolynomialError("division is not exact")
    return from_sympy(quotient, p.num_vars)


def content_in(p, main_vars):
    """gcd of the coefficients of p viewed as a polynomial in main_vars."""
    main_vars = tuple(main_vars)
    groups = {}
    for exps, coeff in p.terms:
        key = tuple(exps[k] for k in main_vars)
        stripped = tuple(0 if k in main_vars else e for k, e in enumerate(exps))
        groups.setdefault(key, []).append((stripped, coeff))
    content = None
    for ts in groups.values():
        c = MultiPoly(p.num_vars, ts)
        content = c if content is None else poly_gcd(content, c)
        if content.is_constant:
            return MultiPoly.constant(p.num_vars, 1)
    return content


def primitive_part(p, main_vars):
    """p with every factor free of main_vars removed, scaled to leading coefficient 1."""
    if p.is_zero:
        return p
    content = content_in(p, main_vars)
    if not content.is_constant:
        p = exact_quotient(p, content)
    return p.normalized()


def square_free_part(p, var):
    """p / gcd(p, dp/dvar): repeated factors in var removed."""
    g = poly_gcd(p, partial(p, var))
    if g.degree_in(var) > 0:
        p = exact_quotient(p, g)
    return p


def square_free_factors(p):
    """Distinct non-constant square-free factors of p."""
    _, factors = to_sympy(p).sqf_list()
    return [from_sympy(f, p.num_vars) for f, _ in factors if not f.is_ground]


# --- Text form ---

def variable_names(n, kind="variety", parameters=()):
    if kind == "variety":
        names = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    elif kind == "triangular":
        names = [f"x{i + 1}" for i in range(n)] + ["u"]
    else:
        raise PolynomialError(f"unknown variable layout {kind!r}")
    return names + list(parameters)


def _coeff_text(coeff):
    text = str(coeff)
    return f"({text})" if not coeff.is_real else text


def format_poly(p, names=None):
    names = names or [f"v{k + 1}" for k in range(p.num_vars)]
    if p.is_zero:
        return "0"
    pieces = []
    for position, (exps, coeff) in enumerate(p.terms):
        negative = coeff.is_real and coeff.re < 0
        if negative and position > 0:
            coeff = -coeff
        factors = [names[k] if e == 1 else f"{names[k]}^{e}" for k, e in enumerate(exps) if e]
        if not factors:
            body = _coeff_text(coeff)
        elif coeff == ONE:
            body = " * ".join(factors)
        elif coeff == -ONE:
            body = "-" + " * ".join(factors)
        else:
            body = " * ".join([_coeff_text(coeff)] + factors)
        if position == 0:
            pieces.append(body)
        else:
            pieces.append((" - " if negative else " + ") + body)
    return "".join(pieces)


def _split_top_level(text, separators):
    parts, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in separators and k > start:
            prev = text[:k].rstrip()[-1:]
            if separators == "+-" and prev in ("*", "^", ""):
                continue
            parts.append(text[start:k])
            start = k
    parts.append(text[start:])
    return parts


def parse_poly(text, names):
    """Inverse of format_poly for the given variable names."""
    index = {name: k for k, name in enumerate(names)}
    num_vars = len(names)
    body = (text or "").strip()
    if not body:
        raise InputError("empty polynomial text")
    terms = []
    for chunk in _split_top_level(body, "+-"):
        chunk = chunk.strip()
        sign = 1
        if chunk[:1] in "+-":
            sign = -1 if chunk[0] == "-" else 1
            chunk = chunk[1:].strip()
        if not chunk:
            raise InputError(f"dangling sign in polynomial {text!r}")
        coeff = GaussianRational(sign)
        exps = [0] * num_vars
        for factor in _split_top_level(chunk, "*"):
            factor = factor.strip().lstrip("*").strip()
            if factor.startswith("(") and factor.endswith(")"):
                coeff = coeff * GaussianRational.parse(factor[1:-1])
            elif factor == "i":
                coeff = coeff * GaussianRational(0, 1)
            elif factor.split("^")[0] in index:
                name, _, power = factor.partition("^")
                try:
                    power = int(power) if power else 1
                except ValueError:
                    raise InputError(f"bad exponent in factor {factor!r}")
                if power < 0:
                    raise InputError(f"negative exponent in factor {factor!r}")
                exps[index[name]] += power
            else:
                try:
                    coeff = coeff * GaussianRational(Fraction(factor))
                except (ValueError, ZeroDivisionError):
                    raise InputError(f"unknown factor {factor!r} in polynomial {text!r}")
        terms.append((tuple(exps), coeff))
    return MultiPoly(num_vars, terms)


def monomial_exponents(num_vars, degree):
    """All exponent vectors of total degree <= degree, by degree then lexicographic."""
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(num_vars), d):
            exps = [0] * num_vars
            for k in combo:
                exps[k] += 1
            out.append(tuple(exps))
    return out
