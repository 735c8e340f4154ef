#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Exception hierarchy for expclose.

Every failure carries the process exit code the CLI maps it to:
    4  parse / config / precision / plan errors
    2  hypothesis-gate failures (dimension, dominance, elimination)
    3  solver non-convergence and per-seed rejections
"""


class ExpCloseError(Exception):
    """Base error. `stage` names the pipeline stage that raised it."""

    exit_code = 1
    kind = "error"

    def __init__(self, message, stage=None, details=None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.details = dict(details or {})

    def with_stage(self, stage):
        if self.stage is None:
            self.stage = stage
        return self

    def to_dict(self):
        return {
            "success": False,
            "error": self.message,
            "error_type": type(self).__name__,
            "stage": self.stage,
            "exit_code": self.exit_code,
            "details": self.details,
        }


# --- exit 4 ---

class InputError(ExpCloseError):
    exit_code = 4


class ConfigError(ExpCloseError):
    exit_code = 4


class PolynomialError(ExpCloseError):
    exit_code = 4


class PrecisionError(ExpCloseError):
    """Working precision too low for the requested height bound."""
    exit_code = 4


class PlanError(ExpCloseError):
    exit_code = 4


# --- exit 2 ---

class HypothesisError(ExpCloseError):
    exit_code = 2


class DimensionHypothesisError(HypothesisError):
    pass


class RankUnstableError(HypothesisError):
    """Numerical rank votes tied across samples."""


class EliminationError(HypothesisError):
    pass


# --- exit 3 ---

class NoConvergenceError(ExpCloseError):
    exit_code = 3


class SamplingError(NoConvergenceError):
    pass


class CoordinateHyperplaneError(SamplingError):
    """Every sampling attempt landed on some y_i = 0."""


class LogSingularityError(NoConvergenceError):
    pass


class BranchCollisionError(NoConvergenceError):
    pass


class SingularLeadingCoefficientError(NoConvergenceError):
    pass


class NumericRangeError(NoConvergenceError):
    pass


class ExtraneousComponentError(NoConvergenceError):
    pass


class SweepExhaustedError(NoConvergenceError):
    pass
