"""Discrete-event simulation of SIP and H.323 VoIP calls over 802.11a WLANs."""

from .errors import (
    CompareError,
    ConfigError,
    MisuseError,
    ScenarioError,
    StateMachineError,
    WlanVoipError,
)
from .report import compare, emit, emit_comparison
from .runner import MetricsReport, Simulation, SimulationFault, run, run_mode
from .scenario import Scenario, dump_scenario, load_scenario, load_shipped, resolve_scenario
from .signaling import Protocol

__version__ = "0.1.0"

__all__ = [
    "CompareError", "ConfigError", "MetricsReport", "MisuseError", "Protocol", "Scenario",
    "ScenarioError", "Simulation", "SimulationFault", "StateMachineError", "WlanVoipError",
    "compare", "dump_scenario", "emit", "emit_comparison", "load_scenario", "load_shipped",
    "resolve_scenario", "run", "run_mode",
]
