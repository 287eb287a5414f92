"""Experiment runner: configs, canned scenarios, CSV traces and the CLI."""

from __future__ import annotations

from .config import ConfigError, RunConfig, load_config, parse_text
from .runner import run_scenario
from .scenarios import SCENARIOS
from .traceio import compare_stepsizes, emit_trace, read_trace

__all__ = [
    "ConfigError",
    "RunConfig",
    "SCENARIOS",
    "compare_stepsizes",
    "emit_trace",
    "load_config",
    "parse_text",
    "read_trace",
    "run_scenario",
]
