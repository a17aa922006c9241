"""Deterministic discrete-event simulator and the command line around it."""

from .engine import SimInvariantError, Simulator, run_scenario
from .report import MetricsReport, UnknownFlowError, emit_report, trace_query
from .scenario import ScenarioScript, ScriptError, load_scenario

__all__ = [
    "MetricsReport",
    "ScenarioScript",
    "ScriptError",
    "SimInvariantError",
    "Simulator",
    "UnknownFlowError",
    "emit_report",
    "load_scenario",
    "run_scenario",
    "trace_query",
]
