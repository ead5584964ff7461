"""Scenario files: the human-editable YAML front end.

A scenario file names a map, supplies the glyph legend, the resident
and nurse rosters, the watch settings, a horizon and a seed.  Residents
may carry explicit appointments; otherwise schedules are drawn from the
run seed.

Loading is two-staged: structural problems (bad YAML, missing keys,
unreadable map) raise immediately, while semantic problems are
collected so a validation run can report all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agents import Appointment
from .engine import (
    DEFAULT_RADIUS, NurseConfig, PwDConfig, Scenario, WatchConfig,
)
from .experiment import (
    DEFAULT_APPOINTMENT_DURATION, DEFAULT_APPOINTMENTS, InsufficientSitesError,
    ScenarioTemplate, build_run,
)
from .grid import ROLES, GridMap, MapError, parse_map

_TOP_KEYS = {"map", "legend", "pwd", "nurses", "watch", "horizon", "seed",
             "appointments_per_pwd", "appointment_duration"}
_PWD_KEYS = {"id", "home", "p_d", "p_i", "p_noise", "p_forget", "appointments"}
_NURSE_KEYS = {"id", "base", "radius"}
_WATCH_KEYS = {"enabled", "p_detect", "n_help", "intervention_interval"}


class ScenarioError(ValueError):
    """Scenario file is unusable; ``problems`` lists every diagnostic."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class LoadedScenario:
    path: Path
    template: ScenarioTemplate
    seed: int
    problems: list[str] = field(default_factory=list)

    @property
    def grid(self) -> GridMap:
        return self.template.grid

    def scenario(self, seed: int | None = None) -> Scenario:
        """Single-run scenario; generated schedules use replication 0."""
        run_seed = self.seed if seed is None else seed
        return build_run(self.template, schedule_seed=run_seed,
                         replication=0, run_seed=run_seed)


def _number(value, name: str, problems: list[str], default: float) -> float:
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{name} must be a number, got {value!r}")
        return default
    return float(value)


def _integer(value, name: str, problems: list[str], default: int) -> int:
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        problems.append(f"{name} must be an integer, got {value!r}")
        return default
    return value


def load_scenario(path: str | Path) -> LoadedScenario:
    """Parse and fully validate a scenario file.

    Raises ScenarioError with every collected diagnostic, or OSError if
    the scenario or map file cannot be read.
    """
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ScenarioError(["scenario file must be a mapping"])
    for key in raw:
        if key not in _TOP_KEYS:
            problems.append(f"unknown key {key!r}")

    legend: dict[str, tuple[str, str]] = {}
    for glyph, entry in (raw.get("legend") or {}).items():
        glyph = str(glyph)
        if not isinstance(entry, dict) or "label" not in entry or "role" not in entry:
            problems.append(f"legend {glyph!r}: need label and role")
            continue
        role = str(entry["role"])
        if role not in ROLES:
            problems.append(f"legend {glyph!r}: unknown role {role!r}")
            continue
        legend[glyph] = (str(entry["label"]), role)

    map_name = raw.get("map")
    if not map_name:
        raise ScenarioError(problems + ["no map file given"])
    map_path = (path.parent / str(map_name)).resolve()
    try:
        grid = parse_map(map_path.read_text(encoding="utf-8"), legend)
    except MapError as exc:
        raise ScenarioError(problems + [f"map: {exc}"]) from exc

    pwds: list[PwDConfig] = []
    rows = raw.get("pwd") or []
    if not rows:
        problems.append("no pwd roster")
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "id" not in row or "home" not in row:
            problems.append(f"pwd entry {i}: need id and home")
            continue
        for key in row:
            if key not in _PWD_KEYS:
                problems.append(f"pwd {row.get('id')}: unknown key {key!r}")
        appointments = []
        for j, appt in enumerate(row.get("appointments") or []):
            if not isinstance(appt, dict) or "location" not in appt \
                    or "start" not in appt:
                problems.append(f"pwd {row['id']}: appointment {j} needs location and start")
                continue
            appointments.append(Appointment(
                location=str(appt["location"]),
                start=_integer(appt["start"], f"pwd {row['id']} appointment {j} start",
                               problems, 0),
                duration=_integer(appt.get("duration"),
                                  f"pwd {row['id']} appointment {j} duration",
                                  problems, DEFAULT_APPOINTMENT_DURATION)))
        pwds.append(PwDConfig(
            id=str(row["id"]), home=str(row["home"]), schedule=appointments,
            p_d=_number(row.get("p_d"), f"pwd {row['id']} p_d", problems, 0.0),
            p_i=_number(row.get("p_i"), f"pwd {row['id']} p_i", problems, 0.2),
            p_noise=_number(row.get("p_noise"), f"pwd {row['id']} p_noise",
                            problems, 0.1),
            p_forget=_number(row.get("p_forget"), f"pwd {row['id']} p_forget",
                             problems, 0.0)))

    nurses: list[NurseConfig] = []
    rows = raw.get("nurses") or []
    if not rows:
        problems.append("no nurse roster")
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "id" not in row or "base" not in row:
            problems.append(f"nurse entry {i}: need id and base")
            continue
        for key in row:
            if key not in _NURSE_KEYS:
                problems.append(f"nurse {row.get('id')}: unknown key {key!r}")
        nurses.append(NurseConfig(
            id=str(row["id"]), base=str(row["base"]),
            radius=_number(row.get("radius"), f"nurse {row['id']} radius",
                           problems, DEFAULT_RADIUS)))

    watch_raw = raw.get("watch") or {}
    for key in watch_raw:
        if key not in _WATCH_KEYS:
            problems.append(f"watch: unknown key {key!r}")
    watch = WatchConfig(
        enabled=bool(watch_raw.get("enabled", True)),
        p_detect=_number(watch_raw.get("p_detect"), "watch p_detect", problems, 0.5),
        n_help=_integer(watch_raw.get("n_help"), "watch n_help", problems, 1),
        intervention_interval=_integer(watch_raw.get("intervention_interval"),
                                       "watch intervention_interval", problems, 1))

    template = ScenarioTemplate(
        grid=grid, pwds=pwds, nurses=nurses, watch=watch,
        horizon=_integer(raw.get("horizon"), "horizon", problems, 10_000),
        appointments_per_pwd=_integer(raw.get("appointments_per_pwd"),
                                      "appointments_per_pwd", problems,
                                      DEFAULT_APPOINTMENTS),
        appointment_duration=_integer(raw.get("appointment_duration"),
                                      "appointment_duration", problems,
                                      DEFAULT_APPOINTMENT_DURATION))
    seed = _integer(raw.get("seed"), "seed", problems, 0)
    loaded = LoadedScenario(path=path, template=template, seed=seed)

    # Semantic validation via a trial materialization.
    if not problems:
        try:
            trial = loaded.scenario()
            problems.extend(trial.validate())
        except InsufficientSitesError as exc:
            problems.append(str(exc))
    if problems:
        raise ScenarioError(problems)
    return loaded
