#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Input parsing and report records.

Input files are JSON documents discriminated by `form`:
    {"form": "variety",    "n": 2, "generators": [...], "approx_coeffs": {...}}
    {"form": "triangular", "n": 2, "polys": [...],      "approx_coeffs": {...}}
A polynomial is either a term array [{"coeff": "1/2+1/3*i", "exps": [...]}, ...]
or its text form ("y1 - x2"). See docs/schema.md.

High-precision numbers are written as decimal strings with enough digits to
recover the binary value at the record's precision_bits. Records are dumped
with sorted keys so identical runs give identical bytes.
"""

import json
from math import ceil, log10

from errors import InputError
from generic import (
    IntegerRelationMatrix, Hyperplane, Torus, GenericityReport,
)
from masser import Seed, SolutionPoint
from polycore import MultiPoly, GaussianRational, parse_poly, format_poly
from settings import make_context
from sweep import DensityEvidence, SweepResult
from triangularize import TriangularSystem, fiber_bound
from variety import ApproxConstant, ExpVariety, HypothesisReport

FORMS = ("variety", "triangular")


# --- numbers ---

def digits_for(precision):
    return int(ceil(precision * log10(2))) + 1


def real_to_str(x, precision):
    return make_context(precision).nstr(x, digits_for(precision))


def complex_to_record(z, precision):
    ctx = make_context(precision)
    return {"re": ctx.nstr(z.real, digits_for(precision)), "im": ctx.nstr(z.imag, digits_for(precision))}


def _parse_real(ctx, text, where):
    try:
        return ctx.mpf(text)
    except (ValueError, TypeError):
        raise InputError(f"{where}: not a decimal number: {text!r}")


def complex_from_record(data, ctx, where):
    if not isinstance(data, dict) or "re" not in data or "im" not in data:
        raise InputError(f"{where}: expected an object with 're' and 'im'")
    return ctx.mpc(_parse_real(ctx, data["re"], f"{where}.re"), _parse_real(ctx, data["im"], f"{where}.im"))


# --- polynomials ---

def poly_to_terms(p):
    return [{"coeff": str(c), "exps": list(e)} for e, c in p.terms]


def poly_from_record(data, names, where):
    if isinstance(data, dict) and "text" in data:
        data = data["text"]
    if isinstance(data, str):
        try:
            return parse_poly(data, names)
        except InputError as e:
            raise InputError(f"{where}: {e.message}")
    if not isinstance(data, list):
        raise InputError(f"{where}: expected a term array or polynomial text")
    terms = []
    for t, term in enumerate(data):
        field = f"{where}.terms[{t}]"
        if not isinstance(term, dict) or "coeff" not in term or "exps" not in term:
            raise InputError(f"{field}: expected an object with 'coeff' and 'exps'")
        try:
            coeff = GaussianRational.parse(term["coeff"])
        except InputError as e:
            raise InputError(f"{field}.coeff: {e.message}")
        exps = term["exps"]
        if not isinstance(exps, list) or len(exps) != len(names):
            raise InputError(f"{field}.exps: expected {len(names)} exponents")
        if not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exps):
            raise InputError(f"{field}.exps: exponents must be non-negative integers")
        terms.append((tuple(exps), coeff))
    return MultiPoly(len(names), terms)


def _approx_from_record(data):
    if data is None:
        return ()
    if not isinstance(data, dict):
        raise InputError("approx_coeffs: expected an object name -> {value_re, value_im, radius}")
    constants = []
    for name, block in data.items():
        where = f"approx_coeffs.{name}"
        if not isinstance(block, dict) or "value_re" not in block:
            raise InputError(f"{where}: expected an object with value_re")
        if not name.isidentifier() or name in ("u", "i") or name[0] in "xy" and name[1:].isdigit():
            raise InputError(f"{where}: name clashes with a variable or is not an identifier")
        constant = ApproxConstant(name=name, value_re=str(block["value_re"]),
                                  value_im=str(block.get("value_im", "0")),
                                  radius=str(block.get("radius", "0")))
        constant.value(make_context(64))
        constants.append(constant)
    return tuple(constants)


def _approx_to_record(parameters):
    return {c.name: {"value_re": c.value_re, "value_im": c.value_im, "radius": c.radius} for c in parameters}


def _positive_n(data):
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError(f"n: expected a positive integer, got {n!r}")
    return n


def variety_from_record(data):
    n = _positive_n(data)
    parameters = _approx_from_record(data.get("approx_coeffs"))
    names = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + [c.name for c in parameters]
    generators = data.get("generators")
    if not isinstance(generators, list) or not generators:
        raise InputError("generators: expected a nonempty array")
    polys = [poly_from_record(g, names, f"generators[{j}]") for j, g in enumerate(generators)]
    return ExpVariety(n=n, generators=tuple(polys),
                      coefficient_field_note=str(data.get("coefficient_field_note", "Q(i)")),
                      parameters=parameters)


def variety_to_record(V):
    return {
        "form": "variety",
        "n": V.n,
        "generators": [poly_to_terms(g) for g in V.generators],
        "generators_text": [format_poly(g, V.names) for g in V.generators],
        "coefficient_field_note": V.coefficient_field_note,
        "approx_coeffs": _approx_to_record(V.parameters),
    }


def triangular_from_record(data):
    n = _positive_n(data)
    parameters = _approx_from_record(data.get("approx_coeffs"))
    names = [f"x{i + 1}" for i in range(n)] + ["u"] + [c.name for c in parameters]
    polys = data.get("polys")
    if not isinstance(polys, list) or len(polys) != n:
        raise InputError(f"polys: expected an array of {n} polynomials")
    parsed = [poly_from_record(p, names, f"polys[{i}]") for i, p in enumerate(polys)]
    for i, p in enumerate(parsed):
        if p.degree_in(n) < 1:
            raise InputError(f"polys[{i}]: degree 0 in u")
    return TriangularSystem.build(n, parsed, parameters)


def triangular_to_record(T):
    return {
        "form": "triangular",
        "n": T.n,
        "polys": [poly_to_terms(p) for p in T.polys],
        "polys_text": [format_poly(p, T.names) for p in T.polys],
        "degrees_in_u": list(T.degrees_in_u),
        "fiber_bound": fiber_bound(T),
        "approx_coeffs": _approx_to_record(T.parameters),
    }


def parse_document(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}")


def load_document(path):
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}")
    data = parse_document(text, path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    return data


def system_from_record(data):
    """ExpVariety or TriangularSystem, by `form` (default variety)."""
    form = data.get("form", "variety")
    if form not in FORMS:
        raise InputError(f"form: expected one of {FORMS}, got {form!r}")
    return variety_from_record(data) if form == "variety" else triangular_from_record(data)


# --- solutions ---

def seed_to_record(seed):
    return {"k": list(seed.k), "branch": list(seed.branch_choice)}


def seed_from_record(data):
    if not isinstance(data, dict) or "k" not in data:
        raise InputError("seed: expected an object with 'k'")
    return Seed(tuple(data["k"]), tuple(data.get("branch") or ()))


def solution_to_record(s):
    p = s.precision_bits
    return {
        "kind": "solution",
        "n": s.n,
        "precision_bits": p,
        "z": [complex_to_record(v, p) for v in s.z],
        "y": [complex_to_record(v, p) for v in s.y],
        "residual_exp": real_to_str(s.residual_exp, p),
        "residual_var": real_to_str(s.residual_var, p),
        "seed": seed_to_record(s.seed),
        "stage_log": list(s.stage_log),
        "iterations": s.iterations,
    }


def solution_from_record(data):
    if not isinstance(data, dict):
        raise InputError("solution: expected an object")
    if "solution" in data and isinstance(data["solution"], dict):
        data = data["solution"]
    precision = data.get("precision_bits")
    if not isinstance(precision, int) or precision < 64:
        raise InputError(f"precision_bits: expected an integer >= 64, got {precision!r}")
    ctx = make_context(precision)
    z = data.get("z")
    y = data.get("y") or []
    if not isinstance(z, list) or not z:
        raise InputError("z: expected a nonempty array")
    return SolutionPoint(
        z=tuple(complex_from_record(v, ctx, f"z[{i}]") for i, v in enumerate(z)),
        y=tuple(complex_from_record(v, ctx, f"y[{i}]") for i, v in enumerate(y)),
        residual_exp=_parse_real(ctx, data.get("residual_exp", "0"), "residual_exp"),
        residual_var=_parse_real(ctx, data.get("residual_var", "0"), "residual_var"),
        seed=seed_from_record(data.get("seed") or {"k": [1] * len(z)}),
        precision_bits=precision,
        stage_log=tuple(data.get("stage_log") or ()),
        iterations=int(data.get("iterations", 0)),
    )


# --- audit records ---

def relation_to_record(M):
    return {"rows": [list(r) for r in M.rows], "kind": M.kind, "height": M.height,
            "witness_error": M.witness_error, "periods": list(M.periods)}


def relation_from_record(data):
    return IntegerRelationMatrix(rows=tuple(tuple(r) for r in data["rows"]), kind=data["kind"],
                                 witness_error=data.get("witness_error", "0"),
                                 periods=tuple(data.get("periods") or ()))


def torus_to_record(t):
    return {"matrix": relation_to_record(t.matrix), "dim": t.dim,
            "identity_component_matrix": [list(r) for r in t.identity_component_matrix],
            "invariant_factors": list(t.invariant_factors)}


def torus_from_record(data):
    return Torus(matrix=relation_from_record(data["matrix"]), dim=data["dim"],
                 identity_component_matrix=tuple(tuple(r) for r in data["identity_component_matrix"]),
                 invariant_factors=tuple(data.get("invariant_factors") or ()))


def report_to_record(report):
    return {
        "kind": "genericity_report",
        "verdict": report.verdict,
        "n": report.n,
        "height_bound": report.height_bound,
        "precision_bits": report.precision_bits,
        "tolerance": report.tolerance,
        "td_proxy": report.td_proxy,
        "relations": [relation_to_record(M) for M in report.relations],
        "hyperplanes": [{"matrix": relation_to_record(h.matrix), "dim": h.dim} for h in report.hyperplanes],
        "tori": [torus_to_record(t) for t in report.tori],
        "notes": list(report.notes),
        "finite_fibers": report.finite_fibers,
    }


def report_from_record(data):
    return GenericityReport(
        verdict=data["verdict"],
        relations=tuple(relation_from_record(r) for r in data["relations"]),
        hyperplanes=tuple(Hyperplane(relation_from_record(h["matrix"]), h["dim"]) for h in data["hyperplanes"]),
        tori=tuple(torus_from_record(t) for t in data["tori"]),
        height_bound=data["height_bound"],
        precision_bits=data["precision_bits"],
        tolerance=data["tolerance"],
        td_proxy=data["td_proxy"],
        n=data["n"],
        notes=tuple(data.get("notes") or ()),
        finite_fibers=data.get("finite_fibers"),
    )


def hypotheses_to_record(report):
    return {
        "kind": "hypothesis_report",
        "n": report.n,
        "dim_estimate": report.dim_estimate,
        "pi1_dominant": report.pi1_dominant,
        "pi2_dominant": report.pi2_dominant,
        "samples_used": report.samples_used,
        "precision_bits": report.precision_bits,
        "tolerance": report.tolerance,
        "rank_threshold": report.rank_threshold,
        "votes": report.votes,
    }


def _kind(data, kind):
    if not isinstance(data, dict) or data.get("kind") != kind:
        raise InputError(f"expected a record of kind {kind!r}")
    return data


def hypotheses_from_record(data):
    data = _kind(data, "hypothesis_report")
    return HypothesisReport(
        dim_estimate=data["dim_estimate"],
        pi1_dominant=data["pi1_dominant"],
        pi2_dominant=data["pi2_dominant"],
        samples_used=data["samples_used"],
        precision_bits=data["precision_bits"],
        tolerance=data["tolerance"],
        rank_threshold=data["rank_threshold"],
        n=data["n"],
        votes={k: list(v) for k, v in (data.get("votes") or {}).items()},
    )


def density_to_record(evidence):
    return {
        "kind": "density_evidence",
        "solution_count": len(evidence.solutions),
        "degree": evidence.degree,
        "monomial_rank": evidence.monomial_rank,
        "monomial_count": evidence.monomial_count,
        "target_rank": evidence.target_rank,
        "full": evidence.full,
        "inconclusive": evidence.inconclusive,
        "reason": evidence.reason,
    }


def density_from_record(data, solutions):
    """The record stores a count; the solutions come from the enclosing sweep."""
    data = _kind(data, "density_evidence")
    solutions = tuple(solutions)
    if len(solutions) != data["solution_count"]:
        raise InputError(f"density_evidence: solution_count {data['solution_count']} "
                         f"but {len(solutions)} solutions given")
    return DensityEvidence(
        solutions=solutions,
        degree=data["degree"],
        monomial_rank=data["monomial_rank"],
        full=data["full"],
        monomial_count=data["monomial_count"],
        target_rank=data["target_rank"],
        inconclusive=data["inconclusive"],
        reason=data["reason"],
    )


def sweep_to_record(result):
    return {
        "kind": "sweep_result",
        "solutions": [solution_to_record(s) for s in result.solutions],
        "audits": [report_to_record(r) for r in result.audits],
        "rejected_log": list(result.rejected_log),
        "tori_found": [torus_to_record(t) for t in result.tori_found],
        "seeds_tried": result.seeds_tried,
        "height_bound": result.height_bound,
        "hypotheses": hypotheses_to_record(result.hypotheses),
        "dominance_override": result.dominance_override,
        "density": density_to_record(result.density) if result.density is not None else None,
    }


def sweep_from_record(data):
    data = _kind(data, "sweep_result")
    solutions = tuple(solution_from_record(s) for s in data["solutions"])
    density = data.get("density")
    return SweepResult(
        solutions=solutions,
        audits=tuple(report_from_record(r) for r in data["audits"]),
        rejected_log=tuple(data["rejected_log"]),
        tori_found=tuple(torus_from_record(t) for t in data["tori_found"]),
        seeds_tried=data["seeds_tried"],
        hypotheses=hypotheses_from_record(data["hypotheses"]),
        height_bound=data["height_bound"],
        dominance_override=data.get("dominance_override", False),
        density=density_from_record(density, solutions) if density is not None else None,
    )


# --- output ---

def dump_json(record):
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def _scalar(value):
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        im = value["im"]
        sign = "-" if im.startswith("-") else "+"
        return f"{value['re']} {sign} {im.lstrip('-')}*i"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "-"
    return str(value)


def _text_lines(value, indent):
    pad = " " * indent
    lines = []
    for key in sorted(value):
        item = value[key]
        if isinstance(item, dict) and set(item) != {"re", "im"}:
            lines.append(f"{pad}{key}:")
            lines += _text_lines(item, indent + 2)
        elif isinstance(item, list) and any(isinstance(v, dict) and set(v) != {"re", "im"} for v in item):
            lines.append(f"{pad}{key}:")
            for v in item:
                sub = _text_lines(v, indent + 4) if isinstance(v, dict) else [f"{pad}    {_scalar(v)}"]
                sub[0] = f"{pad}  - " + sub[0].lstrip()
                lines += sub
        elif isinstance(item, list):
            if all(not isinstance(v, (list, dict)) or set(v) == {"re", "im"} for v in item if isinstance(v, dict)) \
                    and not any(isinstance(v, list) for v in item):
                lines.append(f"{pad}{key}: [{', '.join(_scalar(v) for v in item)}]")
            else:
                lines.append(f"{pad}{key}: {json.dumps(item)}")
        else:
            lines.append(f"{pad}{key}: {_scalar(item)}")
    return lines


def format_text(record):
    return "\n".join(_text_lines(record, 0)) + "\n"


def render(record, output_format):
    return dump_json(record) if output_format == "json" else format_text(record)
