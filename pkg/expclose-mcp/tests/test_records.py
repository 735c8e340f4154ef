#!/usr/bin/env python3
"""
Tests for records module: input parsing and report serialization.
"""
import unittest
import os
import json
import tempfile
import shutil
import sys
from dataclasses import replace

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import InputError
from generic import audit
from masser import Seed, SolutionPoint, solve_masser_poly
from polycore import MultiPoly, parse_poly, variable_names
from settings import RunConfig, make_context
from sweep import SweepPlan, density_evidence, sweep
from triangularize import TriangularSystem
from variety import ExpVariety, check_hypotheses
from records import (
    load_document,
    parse_document,
    system_from_record,
    variety_from_record,
    variety_to_record,
    triangular_from_record,
    triangular_to_record,
    solution_to_record,
    solution_from_record,
    report_to_record,
    report_from_record,
    hypotheses_to_record,
    hypotheses_from_record,
    density_to_record,
    density_from_record,
    sweep_to_record,
    sweep_from_record,
    dump_json,
    format_text,
    digits_for,
)

PRECISION = 256
VARIETIES = os.path.join(os.path.dirname(__file__), '..', 'varieties')


class TestInputParsing(unittest.TestCase):
    def setUp(self):
        """Create temporary test directory."""
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Clean up temporary directory."""
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def _write(self, name, text):
        path = os.path.join(self.test_dir, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_bad_json_cites_line_and_column(self):
        path = self._write("bad.json", '{\n  "n": 1,\n  "generators": [oops]\n}\n')
        with self.assertRaises(InputError) as caught:
            load_document(path)
        self.assertIn("line 3", caught.exception.message)
        self.assertIn("column", caught.exception.message)

    def test_missing_file(self):
        with self.assertRaises(InputError):
            load_document(os.path.join(self.test_dir, "absent.json"))

    def test_top_level_must_be_object(self):
        path = self._write("list.json", "[1, 2]")
        with self.assertRaises(InputError):
            load_document(path)

    def test_sample_files_parse(self):
        """Every shipped sample is a valid variety or triangular system."""
        for name in sorted(os.listdir(VARIETIES)):
            system = system_from_record(load_document(os.path.join(VARIETIES, name)))
            self.assertIsInstance(system, (ExpVariety, TriangularSystem), name)

    def test_terms_and_text_agree(self):
        text = variety_from_record({"n": 2, "generators": ["y1 - x2", {"text": "y2 - x1"}]})
        terms = load_document(os.path.join(VARIETIES, "swap.json"))
        self.assertEqual(variety_from_record(terms).generators, text.generators)

    def test_field_path_in_errors(self):
        data = {"n": 1, "generators": [[{"coeff": "1", "exps": [1]}]]}
        with self.assertRaises(InputError) as caught:
            variety_from_record(data)
        self.assertIn("generators[0].terms[0].exps", caught.exception.message)

        data = {"n": 1, "generators": [[{"coeff": "x", "exps": [1, 0]}]]}
        with self.assertRaises(InputError) as caught:
            variety_from_record(data)
        self.assertIn("generators[0].terms[0].coeff", caught.exception.message)

    def test_bad_n_and_form(self):
        with self.assertRaises(InputError):
            variety_from_record({"n": 0, "generators": ["y1"]})
        with self.assertRaises(InputError):
            system_from_record({"form": "matrix", "n": 1})

    def test_approx_constants(self):
        V = system_from_record(load_document(os.path.join(VARIETIES, "scaled_graph.json")))
        self.assertEqual(V.num_vars, 3)
        self.assertEqual(V.names, ["x1", "y1", "c"])
        ctx = make_context(PRECISION)
        self.assertLess(abs(V.parameter_values(ctx)[0] - ctx.pi), ctx.mpf(10) ** -90)
        self.assertEqual(variety_to_record(V)["approx_coeffs"]["c"]["radius"], "1e-100")

    def test_approx_constant_name_clash(self):
        data = {"n": 1, "generators": ["y1 - x1"], "approx_coeffs": {"x1": {"value_re": "2"}}}
        with self.assertRaises(InputError):
            variety_from_record(data)
        imaginary_unit = {"n": 1, "generators": ["y1 - x1"], "approx_coeffs": {"i": {"value_re": "2"}}}
        with self.assertRaises(InputError):
            variety_from_record(imaginary_unit)

    def test_triangular_record(self):
        T = triangular_from_record({"form": "triangular", "n": 1, "polys": ["2*u^2 - 2*x1"]})
        record = triangular_to_record(T)
        self.assertEqual(record["polys_text"], ["-x1 + u^2"])
        self.assertEqual(record["fiber_bound"], 2)
        self.assertEqual(triangular_from_record(record), T)
        with self.assertRaises(InputError):
            triangular_from_record({"form": "triangular", "n": 2, "polys": ["u - x1"]})


class TestReports(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.solution = solve_masser_poly((MultiPoly.variable(1, 0),), Seed((1,)), PRECISION)

    def test_digits(self):
        self.assertEqual(digits_for(256), 79)

    def test_solution_reparses_identically(self):
        record = solution_to_record(self.solution)
        self.assertEqual(record["kind"], "solution")
        self.assertEqual(solution_from_record(record), self.solution)
        again = solution_from_record(json.loads(dump_json(record)))
        self.assertEqual(again, self.solution)

    def test_solution_record_fields(self):
        record = solution_to_record(self.solution)
        self.assertEqual(record["seed"], {"k": [1], "branch": [0]})
        self.assertEqual(record["precision_bits"], PRECISION)
        self.assertTrue(record["z"][0]["im"].startswith("7.58863117847"))

    def test_report_reparses_identically(self):
        s = solve_masser_poly((MultiPoly.variable(1, 0),), Seed((2,)), PRECISION)
        doubled = SolutionPoint(z=(s.z[0], s.z[0]), y=(s.y[0], s.y[0]), residual_exp=s.residual_exp,
                                residual_var=s.residual_var, seed=Seed((2, 2)), precision_bits=PRECISION)
        report = audit(doubled, 100, PRECISION)
        self.assertEqual(report.verdict, "relations_found")
        self.assertEqual(report_from_record(report_to_record(report)), report)

    def test_json_is_sorted_and_stable(self):
        record = solution_to_record(self.solution)
        text = dump_json(record)
        self.assertEqual(text, dump_json(solution_to_record(self.solution)))
        keys = list(json.loads(text).keys())
        self.assertEqual(keys, sorted(keys))

    def test_text_format(self):
        text = format_text(solution_to_record(self.solution))
        self.assertIn("kind: solution", text)
        self.assertIn("*i", text)
        self.assertTrue(text.endswith("\n"))

    def test_solution_needs_precision(self):
        with self.assertRaises(InputError):
            solution_from_record({"z": [{"re": "1", "im": "0"}]})
        with self.assertRaises(InputError):
            solution_from_record({"precision_bits": 256, "z": [{"re": "abc", "im": "0"}]})

    def test_parse_document(self):
        self.assertEqual(parse_document('{"a": 1}'), {"a": 1})
        with self.assertRaises(InputError):
            parse_document("{", "inline")


class TestCheckAndSweepRecords(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        names = variable_names(2, "variety")
        cls.swap = ExpVariety(n=2, generators=(parse_poly("y1 - x2", names), parse_poly("y2 - x1", names)))
        cls.config = RunConfig(precision_bits=PRECISION)
        # (1, 1) lies on the diagonal torus, (1, 2) does not
        result = sweep(cls.swap, SweepPlan(seed_box=((1, 1), (1, 2))), PRECISION, cls.config)
        cls.result = replace(result, density=density_evidence(result.solutions, 1, variety=cls.swap,
                                                              config=cls.config))

    def test_hypothesis_report_reparses_identically(self):
        report = check_hypotheses(self.swap, self.config)
        record = json.loads(dump_json(hypotheses_to_record(report)))
        self.assertEqual(hypotheses_from_record(record), report)

    def test_density_reparses_identically(self):
        density = self.result.density
        record = json.loads(dump_json(density_to_record(density)))
        self.assertEqual(density_from_record(record, self.result.solutions), density)
        with self.assertRaises(InputError):
            density_from_record(record, ())

    def test_sweep_result_reparses_identically(self):
        self.assertEqual(len(self.result.tori_found), 1)
        record = json.loads(dump_json(sweep_to_record(self.result)))
        self.assertEqual(sweep_from_record(record), self.result)

    def test_kind_is_checked(self):
        with self.assertRaises(InputError):
            sweep_from_record(solution_to_record(self.result.solutions[0]))
        with self.assertRaises(InputError):
            hypotheses_from_record({"kind": "density_evidence"})


if __name__ == '__main__':
    unittest.main()
