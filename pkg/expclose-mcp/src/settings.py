#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
Configuration and logging for expclose.

Precedence, lowest first:
    built-in defaults -> config.json -> .env / environment
    (EXPCLOSE_PRECISION_BITS) -> explicit overrides (CLI flags, MCP arguments)

Logs go to stderr only: stdout carries reports and the MCP stdio stream.
"""

import os
import sys
import json
import logging
from dataclasses import dataclass, asdict, fields, replace
from logging.handlers import RotatingFileHandler

import mpmath

from errors import ConfigError

# --- Configuration ---
CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
CONFIG_PATH = os.path.join(CONFIG_DIR, "config.json")
ENV_PATH = os.path.join(CONFIG_DIR, ".env")

PRECISION_ENV = "EXPCLOSE_PRECISION_BITS"
OUTPUT_FORMATS = ("text", "json")
LOG_FORMAT = "[%(asctime)s] [%(levelname)s] %(message)s"


def load_env(path=ENV_PATH):
    """Load .env file if present. Real environment variables win."""
    if os.path.exists(path):
        with open(path, "r") as f:
            for line in f:
                line = line.strip()
                if line and not line.startswith("#") and "=" in line:
                    key, value = line.split("=", 1)
                    os.environ.setdefault(key.strip(), value.strip())


def load_config(path=CONFIG_PATH):
    """Load config.json next to src/, filling in defaults."""
    cfg = {}
    if os.path.exists(path):
        try:
            with open(path, "r") as f:
                cfg = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: top level must be an object")
    cfg.setdefault("debug", False)
    cfg.setdefault("log_file", None)
    cfg.setdefault("run", {})
    if cfg["log_file"]:
        cfg["log_file"] = os.path.expanduser(cfg["log_file"])
        if not os.path.isabs(cfg["log_file"]):
            cfg["log_file"] = os.path.join(os.path.abspath(CONFIG_DIR), cfg["log_file"])
    return cfg


# --- Logging ---
logger = logging.getLogger("expclose")


def configure_logging(cfg):
    """Attach the stderr handler (and the rotating file handler if configured) once."""
    if getattr(logger, "_expclose_configured", False):
        return logger
    logger.setLevel(logging.DEBUG if cfg.get("debug") else logging.INFO)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    console_handler.setLevel(logging.DEBUG if cfg.get("debug") else logging.WARNING)
    logger.addHandler(console_handler)
    if cfg.get("log_file"):
        os.makedirs(os.path.dirname(cfg["log_file"]) or ".", exist_ok=True)
        # Max 10MB per file, keep 10 backups
        file_handler = RotatingFileHandler(cfg["log_file"], maxBytes=10 * 1024 * 1024, backupCount=10)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)
    logger.propagate = False
    logger._expclose_configured = True
    return logger


def debug_log(message, level="INFO"):
    logger.log(getattr(logging, level.upper(), logging.INFO), message)


load_env()
CFG = load_config()
configure_logging(CFG)


# --- Run configuration ---

def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = 256
    tol: str = "auto"
    height_bound: int = 100
    rng_seed: int = 0
    max_iter: int = 500
    output_format: str = "text"
    samples: int = 5
    sample_retries: int = 20
    max_halvings: int = 60
    max_intermediate_terms: int = 100000
    workers: int = 1
    require_both_dominant: bool = False

    def __post_init__(self):
        if not _is_int(self.precision_bits) or self.precision_bits < 64:
            raise ConfigError(f"precision_bits must be an integer >= 64, got {self.precision_bits!r}")
        if not _is_int(self.height_bound) or self.height_bound < 1:
            raise ConfigError(f"height_bound must be an integer >= 1, got {self.height_bound!r}")
        for name in ("max_iter", "samples", "sample_retries", "max_halvings",
                     "max_intermediate_terms", "workers"):
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not _is_int(self.rng_seed):
            raise ConfigError(f"rng_seed must be an integer, got {self.rng_seed!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")
        if not isinstance(self.require_both_dominant, bool):
            raise ConfigError("require_both_dominant must be a boolean")
        if not isinstance(self.tol, str):
            raise ConfigError(f"tol must be 'auto' or a decimal string, got {self.tol!r}")
        if self.tol != "auto":
            try:
                value = mpmath.mpf(self.tol)
            except (ValueError, TypeError):
                raise ConfigError(f"tol is not a decimal number: {self.tol!r}")
            if not 0 < value < 1:
                raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")

    def context(self):
        return make_context(self.precision_bits)

    def tolerance(self, ctx=None):
        """Certificate tolerance; auto means 2^-(p/2)."""
        ctx = ctx or self.context()
        if self.tol == "auto":
            return ctx.ldexp(ctx.mpf(1), -(self.precision_bits // 2))
        return ctx.mpf(self.tol)

    def replace(self, **changes):
        return replace(self, **changes)

    def echo(self):
        return asdict(self)

    @classmethod
    def from_echo(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config echo must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)


def make_context(precision_bits):
    """A private mpmath context; workers never share precision state."""
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    return ctx


def build_config(overrides=None, base=None):
    """Layer config.json "run" block, environment and overrides onto the defaults.

    `base` is a complete echo (from --config); when given it replaces the
    config.json and environment layers.
    """
    if base is not None:
        values = dict(base)
    else:
        values = dict(CFG.get("run") or {})
        env_bits = os.environ.get(PRECISION_ENV)
        if env_bits:
            try:
                values["precision_bits"] = int(env_bits)
            except ValueError:
                raise ConfigError(f"{PRECISION_ENV} must be an integer, got {env_bits!r}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    config = RunConfig.from_echo(values)
    debug_log(f"Run config: {json.dumps(config.echo(), sort_keys=True)}", "DEBUG")
    return config
