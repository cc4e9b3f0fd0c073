"""Scenario loading, command dispatch, reports and geometry export."""

from .main import build_parser, dumps, exit_code_for, main, strip_wall_time
from .scenario import BUILTINS, Scenario, load_scenario, parse_scenario

__all__ = ["build_parser", "dumps", "exit_code_for", "main", "strip_wall_time", "BUILTINS",
           "Scenario", "load_scenario", "parse_scenario"]
