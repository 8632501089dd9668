"""Experiment harness: configuration, recipes, sweeps, plot-data export, CLI."""

from .config import ConfigError, ExperimentConfig, parse_config, parse_config_text, serialize_config
from .plotdata import emit_plotdata
from .recipes import RECIPES, Recipe, SweepBlock, get_recipe
from .sweep import ResultRow, build_system, evaluate_point, read_rows, run_recipe, run_sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "emit_plotdata",
    "RECIPES",
    "Recipe",
    "SweepBlock",
    "get_recipe",
    "ResultRow",
    "build_system",
    "evaluate_point",
    "read_rows",
    "run_recipe",
    "run_sweep",
]
