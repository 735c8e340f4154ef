#!/usr/bin/env python3
"""End-to-end acceptance checks on the shipped sample varieties.

Each class pins one property of the pipeline with an independent oracle:
mpmath.findroot for the solvers, sympy for exact ranks, planted
relations for the auditor.
"""

import io
import os
import sys
import json
import random
import tempfile
import shutil
import unittest
from math import gcd
from unittest.mock import patch

from sympy import Matrix

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "expclose-mcp", "src"))

from cli import main
from generic import (
    build_torus, diagonalize, find_additive_relations, find_multiplicative_relations, hyperplane_dimension,
    invariant_factors_of, torus_tangent_dimension,
)
from masser import (
    Seed, prepare_variety, refine, solve_masser_algebraic, solve_masser_poly, solve_on_variety, solve_prepared,
)
from polycore import MultiPoly
from records import load_document, solution_from_record, system_from_record
from settings import RunConfig, make_context
from sweep import SweepPlan, density_evidence, sweep
from triangularize import fiber_bound, fiber_size
from variety import check_hypotheses

PRECISION = 256
VARIETIES = os.path.join(os.path.dirname(__file__), "..", "expclose-mcp", "varieties")


def sample(name):
    return os.path.join(VARIETIES, name)


def load(name):
    return system_from_record(load_document(sample(name)))


def quiet_main(argv):
    with patch("sys.stdout", new_callable=io.StringIO):
        return main(argv)


class TestMasserBaseCase(unittest.TestCase):
    def test_exp_equals_z_on_graph(self):
        """V = {y1 - x1}, seed 1: |e^z - z| <= 1e-30, 40 digits against findroot."""
        config = RunConfig(precision_bits=PRECISION)
        s = solve_on_variety(load("masser_ez.json"), Seed((1,)), PRECISION, config)
        ctx = make_context(PRECISION)
        z = s.z[0]
        self.assertLessEqual(abs(ctx.exp(z) - z), ctx.mpf(10) ** -30)
        root = ctx.findroot(lambda w: ctx.exp(w) - w, ctx.mpc(complex(z)))
        self.assertLessEqual(abs(root - z), ctx.mpf(10) ** -40)

    def test_polynomial_entry_point_agrees(self):
        config = RunConfig(precision_bits=PRECISION)
        a = solve_on_variety(load("masser_ez.json"), Seed((1,)), PRECISION, config)
        b = solve_masser_poly((MultiPoly.variable(1, 0),), Seed((1,)), PRECISION)
        self.assertLessEqual(abs(a.z[0] - b.z[0]), make_context(PRECISION).mpf(10) ** -40)


class TestAlgebraicCase(unittest.TestCase):
    def test_square_root_branch(self):
        ctx = make_context(PRECISION)
        s = solve_masser_algebraic(load("triangular_sqrt.json"), Seed((1,), (0,)), PRECISION)
        z = s.z[0]
        self.assertLessEqual(abs(ctx.exp(2 * z) - z), ctx.mpf(10) ** -30)
        root = ctx.findroot(lambda w: ctx.exp(2 * w) - w, ctx.mpc(complex(z)))
        self.assertLessEqual(abs(root - z), ctx.mpf(10) ** -40)


class TestPrecisionRefinement(unittest.TestCase):
    def _check(self, coarse, fine):
        ctx = make_context(fine.precision_bits)
        self.assertEqual(fine.precision_bits, 2 * coarse.precision_bits)
        self.assertLessEqual(fine.residual_exp, ctx.ldexp(1, -(fine.precision_bits // 2)))
        self.assertTrue(fine.residual_exp < coarse.residual_exp or coarse.residual_exp == 0)
        self.assertLessEqual(abs(fine.z[0] - coarse.z[0]), ctx.ldexp(1, -(coarse.precision_bits // 2)))

    def test_doubling_precision(self):
        P = (MultiPoly.variable(1, 0),)
        s = solve_masser_poly(P, Seed((1,)), PRECISION)
        self._check(s, refine(s, P, 2 * PRECISION))

        T = load("triangular_sqrt.json")
        s = solve_masser_algebraic(T, Seed((1,), (0,)), PRECISION)
        self._check(s, refine(s, T, 2 * PRECISION))

        config = RunConfig(precision_bits=PRECISION)
        prepared = prepare_variety(load("swap.json"), config)
        s = solve_prepared(prepared, Seed((1, -1)), config)
        self._check(s, refine(s, prepared, 2 * PRECISION, config))


class TestTorusExclusion(unittest.TestCase):
    def test_swap_sweep(self):
        swap = load("swap.json")
        config = RunConfig(precision_bits=PRECISION)
        result = sweep(swap, SweepPlan(seed_box=((-2, 2), (-2, 2)), height_bound=100), PRECISION, config)

        diagonal = [e for e in result.rejected_log if e["seed"][0] == e["seed"][1]]
        self.assertEqual(len(diagonal), 4)
        for entry in diagonal:
            self.assertIn([1, -1], entry["relations"])
        self.assertEqual(len(result.tori_found), 1)
        self.assertEqual(result.tori_found[0].dim, 1)
        self.assertEqual(result.tori_found[0].identity_component_matrix, ((1, -1),))

        generic = [r for r in result.audits if r.verdict == "presumed_generic" and r.height_bound == 100]
        self.assertGreaterEqual(len(generic), 4)

        ctx = make_context(PRECISION)
        tol = config.tolerance(ctx)
        for s in result.solutions:
            self.assertFalse(abs(s.z[0] - s.z[1]) <= tol)

    def test_diagonal_seeds_are_symmetric(self):
        swap = load("swap.json")
        config = RunConfig(precision_bits=PRECISION)
        ctx = make_context(PRECISION)
        for k in (-2, -1, 1, 2):
            s = solve_on_variety(swap, Seed((k, k)), PRECISION, config)
            self.assertLessEqual(abs(s.z[0] - s.z[1]), ctx.mpf(10) ** -30)


class TestHyperplaneTorusDimensions(unittest.TestCase):
    def test_random_matrices(self):
        """200 matrices with m <= n <= 5: dim L_M = n - rank M = dim T_M, no failures."""
        rng = random.Random(2024)
        failures = 0
        for _ in range(200):
            n = rng.randint(1, 5)
            m = rng.randint(1, n)
            rows = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(m)]
            rank = Matrix(rows).rank()
            if hyperplane_dimension(rows) != n - rank or torus_tangent_dimension(rows) != n - rank:
                failures += 1
                continue
            if rank and build_torus(rows).dim != n - rank:
                failures += 1
                continue
            if rank:
                factors = invariant_factors_of(diagonalize(rows)[0])
                g = 0
                for v in (v for row in rows for v in row):
                    g = gcd(g, v)
                if factors[0] != g or len(factors) != rank:
                    failures += 1
        self.assertEqual(failures, 0)


class TestAuditorRecall(unittest.TestCase):
    """Planted relations of height <= 50 are recovered at H = 50."""

    HEIGHT = 50

    def setUp(self):
        self.ctx = make_context(PRECISION)
        self.rng = random.Random(11)

    def _planted(self, m):
        """Four coordinates with r.z = 2*pi*i*m; returns (z, normalized r, normalized m)."""
        rng, ctx = self.rng, self.ctx
        r = [0] * 4
        while not any(r[:3]) or r[3] == 0:
            r = [rng.randint(-self.HEIGHT, self.HEIGHT) for _ in range(4)]
        g = 0
        for v in r:
            g = gcd(g, v)
        r = [v // g for v in r]
        z = [ctx.mpc(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(3)]
        z.append((ctx.mpc(0, 2 * ctx.pi * m) - sum(c * v for c, v in zip(r, z))) / r[3])
        sign = 1 if next(v for v in r if v) > 0 else -1
        return z, tuple(sign * v for v in r), sign * m

    def test_planted_additive_relations(self):
        hits = 0
        for _ in range(100):
            z, expected, _ = self._planted(0)
            found = find_additive_relations(z, self.HEIGHT, PRECISION)
            if [M.rows for M in found] == [(expected,)]:
                hits += 1
        self.assertEqual(hits, 100)

    def test_planted_multiplicative_relations(self):
        hits = 0
        for _ in range(100):
            m = self.rng.randint(-3, 3)
            z, expected, period = self._planted(m)
            found = find_multiplicative_relations(z, self.HEIGHT, PRECISION)
            if [(M.rows, M.periods) for M in found] == [((expected,), (period,))]:
                hits += 1
        self.assertEqual(hits, 100)

    def test_independent_coordinates(self):
        for _ in range(100):
            z = [self.ctx.mpc(self.rng.uniform(-3, 3), self.rng.uniform(-3, 3)) for _ in range(4)]
            self.assertEqual(find_additive_relations(z, 1000, PRECISION), [])

    def test_logs_of_two_three_six(self):
        z = [self.ctx.log(2), self.ctx.log(3), self.ctx.log(6)]
        found = find_additive_relations(z, 100, PRECISION)
        self.assertEqual([M.rows for M in found], [((1, 1, -1),)])


class TestDensityEvidence(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        P = (MultiPoly.variable(1, 0),)
        cls.solutions = [solve_masser_poly(P, Seed((k,)), PRECISION) for k in range(1, 11)]

    def test_ten_solutions_full(self):
        evidence = density_evidence(self.solutions, 2, variety=load("masser_ez.json"))
        self.assertTrue(evidence.full)
        self.assertEqual(evidence.monomial_rank, evidence.target_rank)

    def test_five_solutions_inconclusive(self):
        evidence = density_evidence(self.solutions[:5], 2, variety=load("masser_ez.json"))
        self.assertTrue(evidence.inconclusive)
        self.assertFalse(evidence.full)


class TestHypothesisGate(unittest.TestCase):
    def test_constant_coordinate_fails_gate(self):
        self.assertEqual(quiet_main(["check", sample("y1_minus_2.json"), "--require-both-dominant"]), 2)

    def test_graphs_pass(self):
        config = RunConfig(precision_bits=PRECISION)
        for n in (1, 2, 3):
            report = check_hypotheses(load(f"graph{n}.json"), config)
            self.assertEqual(report.dim_estimate, n)
            self.assertTrue(report.pi1_dominant)
            self.assertTrue(report.pi2_dominant)
            self.assertEqual(quiet_main(["check", sample(f"graph{n}.json")]), 0)


class TestFiberBound(unittest.TestCase):
    def test_fiber_counts(self):
        T = load("triangular_fiber.json")
        self.assertEqual(fiber_bound(T), 6)
        rng = random.Random(8)
        for _ in range(10):
            x = [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(2)]
            self.assertTrue(1 <= fiber_size(T, x, PRECISION) <= 6)


class TestCertificatesAndDeterminism(unittest.TestCase):
    def setUp(self):
        """Create temporary output directory."""
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def _solve(self, name, seed, out):
        path = os.path.join(self.test_dir, out)
        status = quiet_main(["solve", sample(name), f"--seed={seed}", "--format", "json", "--out", path])
        self.assertEqual(status, 0)
        return path

    def test_stored_residuals_reproduce(self):
        for name, seed in (("masser_ez.json", "1"), ("swap.json", "1,-2"), ("graph2.json", "2,1")):
            path = self._solve(name, seed, "sol.json")
            s = solution_from_record(load_document(path))
            ctx = make_context(s.precision_bits)
            residual = max(abs(ctx.exp(a) - b) for a, b in zip(s.z, s.y))
            self.assertLessEqual(residual, s.residual_exp)
            V = load(name)
            self.assertLessEqual(V.residual(list(s.z) + list(s.y), ctx), s.residual_var)

    def test_identical_runs_identical_bytes(self):
        first = self._solve("swap.json", "1,-2", "a.json")
        second = self._solve("swap.json", "1,-2", "b.json")
        with open(first) as a, open(second) as b:
            self.assertEqual(a.read(), b.read())

        sweeps = []
        for out in ("s1.json", "s2.json"):
            path = os.path.join(self.test_dir, out)
            status = quiet_main(["sweep", sample("swap.json"), "--seed-box=-1..1", "--format", "json",
                                 "--out", path])
            self.assertEqual(status, 0)
            with open(path) as f:
                sweeps.append(f.read())
        self.assertEqual(sweeps[0], sweeps[1])
        self.assertEqual(json.loads(sweeps[0])["kind"], "sweep_result")


if __name__ == "__main__":
    unittest.main()
