"""Seeded agent-based simulator of indoor navigation assistance.

Residents with dementia follow appointment schedules on a grid floor
plan, occasionally losing orientation; a smart watch detects, hints,
and escalates to nurses.  Runs produce an event log from which three
compliance values are computed: resident autonomy, nurse efficiency,
and travel efficiency.  The experiment layer sweeps assistance
strategies over seeded replications.
"""

from .agents import (
    Appointment, NurseAgent, PwDAgent, SmartWatch, assign_calls, nurse_step,
    pwd_step, watch_step,
)
from .engine import (
    InvalidScenarioError, NurseConfig, PwDConfig, Scenario, WatchConfig,
    derive_stream, run_simulation,
)
from .events import Event, EventLog
from .experiment import (
    Aggregate, InsufficientSitesError, ScenarioTemplate, Strategy,
    SweepConfig, SweepRow, aggregate, expand_sweep, generate_schedule,
    paper_strategies, run_sweep,
)
from .grid import (
    DisconnectedMapError, GridMap, MapError, MissingRoleError, Position,
    RaggedGridError, UnknownGlyphError, UnreachableError, line_of_sight,
    parse_map, serialize_map, shortest_path,
)
from .metrics import (
    MetricReport, TripRecord, UnknownAgentError, autonomy, build_report,
    nurse_efficiency, travel_efficiency, trip_records,
)
from .scenario import LoadedScenario, ScenarioError, load_scenario

__version__ = "0.1.0"

__all__ = [
    "Aggregate", "Appointment", "DisconnectedMapError", "Event", "EventLog",
    "GridMap", "InsufficientSitesError", "InvalidScenarioError",
    "LoadedScenario", "MapError", "MetricReport", "MissingRoleError",
    "NurseAgent", "NurseConfig", "Position", "PwDAgent", "PwDConfig",
    "RaggedGridError", "Scenario", "ScenarioError", "ScenarioTemplate",
    "SmartWatch", "Strategy", "SweepConfig", "SweepRow", "TripRecord",
    "UnknownAgentError", "UnknownGlyphError", "UnreachableError",
    "WatchConfig", "aggregate", "assign_calls", "autonomy", "build_report",
    "derive_stream", "expand_sweep", "generate_schedule", "line_of_sight",
    "load_scenario", "nurse_efficiency", "nurse_step", "paper_strategies",
    "parse_map", "pwd_step", "run_simulation", "run_sweep", "serialize_map",
    "shortest_path", "travel_efficiency", "trip_records", "watch_step",
]
