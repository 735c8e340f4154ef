#!/usr/bin/env python3
"""
Tests for sweep module: seed plans, torus exclusion and density evidence.
"""
import unittest
import os
import sys

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import InputError, PlanError, SweepExhaustedError
from generic import build_torus
from masser import Seed, solve_masser_poly
from polycore import MultiPoly, parse_poly, variable_names
from settings import RunConfig
from sweep import SweepPlan, parse_seed_box, sweep, density_evidence
from variety import ExpVariety

PRECISION = 256


def variety(n, texts):
    names = variable_names(n, "variety")
    return ExpVariety(n=n, generators=tuple(parse_poly(t, names) for t in texts))


SWAP = variety(2, ["y1 - x2", "y2 - x1"])


class TestSweepPlan(unittest.TestCase):
    def test_seeds_skip_zero_in_order(self):
        plan = SweepPlan(seed_box=((-1, 1), (-1, 1)))
        self.assertEqual([s.k for s in plan.seeds()], [(-1, -1), (-1, 1), (1, -1), (1, 1)])

    def test_all_branches(self):
        plan = SweepPlan(seed_box=((1, 2),), branch_policy="all")
        seeds = list(plan.seeds((2,)))
        self.assertEqual([(s.k, s.branch_choice) for s in seeds],
                         [((1,), (0,)), ((1,), (1,)), ((2,), (0,)), ((2,), (1,))])

    def test_invalid_plans(self):
        with self.assertRaises(PlanError):
            SweepPlan(seed_box=((0, 0),))
        with self.assertRaises(PlanError):
            SweepPlan(seed_box=((1, 2),), budget=0)
        with self.assertRaises(PlanError):
            SweepPlan(seed_box=((1, 2),), branch_policy="random")

    def test_parse_seed_box(self):
        self.assertEqual(parse_seed_box("-3..3", 2), ((-3, 3), (-3, 3)))
        self.assertEqual(parse_seed_box("1..2,-1..1", 2), ((1, 2), (-1, 1)))
        with self.assertRaises(PlanError):
            parse_seed_box("1..2,3..4", 3)
        with self.assertRaises(PlanError):
            parse_seed_box("a..b", 1)


class TestSweep(unittest.TestCase):
    def setUp(self):
        self.config = RunConfig(precision_bits=PRECISION)

    def test_swap_box(self):
        """Diagonal seeds land on the torus z1 = z2; off-diagonal seeds are presumed generic."""
        plan = SweepPlan(seed_box=((-2, 2), (-2, 2)))
        result = sweep(SWAP, plan, PRECISION, self.config)
        self.assertEqual(result.seeds_tried, 16)
        self.assertEqual(len(result.tori_found), 1)
        torus = result.tori_found[0]
        self.assertEqual(torus.dim, 1)
        self.assertEqual(torus.identity_component_matrix, ((1, -1),))

        rejected = {tuple(entry["seed"]): entry for entry in result.rejected_log}
        for k in (-2, -1, 1, 2):
            self.assertIn((k, k), rejected)
            self.assertIn([1, -1], rejected[(k, k)]["relations"])
        self.assertEqual(rejected[(-2, -2)]["reason"], "relations_found")
        self.assertEqual(rejected[(2, 2)]["reason"], "excluded_torus")

        self.assertGreaterEqual(len(result.solutions), 4)
        for s, report in zip(result.solutions, result.audits):
            self.assertNotEqual(s.seed.k[0], s.seed.k[1])
            self.assertEqual(report.verdict, "presumed_generic")

    def test_preexcluded_torus(self):
        """A torus supplied up front rejects the diagonal immediately."""
        plan = SweepPlan(seed_box=((1, 1), (1, 2)), excluded_tori=(build_torus([[1, -1]]),))
        result = sweep(SWAP, plan, PRECISION, self.config)
        self.assertEqual(result.rejected_log[0]["reason"], "excluded_torus")
        self.assertEqual(result.rejected_log[0]["torus_index"], 0)
        self.assertEqual(result.tori_found, ())
        self.assertEqual([s.seed.k for s in result.solutions], [(1, 2)])

    def test_exhausted(self):
        plan = SweepPlan(seed_box=((1, 1), (1, 1)))
        with self.assertRaises(SweepExhaustedError) as caught:
            sweep(SWAP, plan, PRECISION, self.config)
        self.assertEqual(caught.exception.exit_code, 3)
        self.assertEqual(caught.exception.details["seeds_tried"], 1)

    def test_budget_caps_seeds(self):
        plan = SweepPlan(seed_box=((1, 3), (-3, -1)), budget=2)
        result = sweep(SWAP, plan, PRECISION, self.config)
        self.assertEqual(result.seeds_tried, 2)

    def test_all_branches_multiply_budget(self):
        """Budget 3 on a degree-2 fiber with policy "all": 3 seeds x 2 branches."""
        V = variety(1, ["y1^2 - x1"])
        plan = SweepPlan(seed_box=((1, 3),), branch_policy="all", budget=3)
        result = sweep(V, plan, PRECISION, self.config)
        self.assertEqual(result.seeds_tried, 6)
        tried = {tuple(e["seed"]) for e in result.rejected_log} | {s.seed.k for s in result.solutions}
        self.assertIn((3,), tried)

    def test_workers_do_not_change_result(self):
        plan = SweepPlan(seed_box=((-1, 1), (-1, 1)))
        one = sweep(SWAP, plan, PRECISION, self.config)
        many = sweep(SWAP, plan, PRECISION, self.config.replace(workers=3))
        self.assertEqual(one.rejected_log, many.rejected_log)
        self.assertEqual([s.z for s in one.solutions], [s.z for s in many.solutions])

    def test_plan_dimension_mismatch(self):
        with self.assertRaises(PlanError):
            sweep(SWAP, SweepPlan(seed_box=((1, 2),)), PRECISION, self.config)


class TestDensity(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        P = (MultiPoly.variable(1, 0),)
        cls.solutions = [solve_masser_poly(P, Seed((k,)), PRECISION) for k in range(1, 11)]

    def test_ten_solutions_full_on_graph(self):
        """Only multiples of y - z vanish on the solutions: rank 3 = generic rank on V."""
        V = variety(1, ["y1 - x1"])
        evidence = density_evidence(self.solutions, 2, variety=V)
        self.assertEqual(evidence.monomial_count, 6)
        self.assertEqual(evidence.monomial_rank, 3)
        self.assertEqual(evidence.target_rank, 3)
        self.assertTrue(evidence.full)
        self.assertFalse(evidence.inconclusive)

    def test_ten_solutions_raw_count(self):
        """Against the raw monomial count the same solutions fall short."""
        evidence = density_evidence(self.solutions, 2)
        self.assertEqual(evidence.target_rank, 6)
        self.assertFalse(evidence.full)
        self.assertFalse(evidence.inconclusive)

    def test_five_solutions_inconclusive(self):
        evidence = density_evidence(self.solutions[:5], 2)
        self.assertTrue(evidence.inconclusive)
        self.assertFalse(evidence.full)
        self.assertIn("inconclusive", evidence.reason)

    def test_degree_one_on_distinct_points(self):
        V = variety(1, ["y1 - x1"])
        evidence = density_evidence(self.solutions[:3], 1, variety=V)
        self.assertEqual(evidence.monomial_count, 3)
        self.assertEqual(evidence.target_rank, 2)
        self.assertTrue(evidence.full)

    def test_needs_solutions(self):
        with self.assertRaises(InputError):
            density_evidence([], 2)


if __name__ == '__main__':
    unittest.main()
