"""Discrete-time scheduler: advances the world tick by tick.

A run is a pure function of (scenario, seed).  Randomness comes from
counter-style substreams derived per (seed, agent, purpose), so adding
or removing one agent never perturbs another agent's draws.

Tick phase order:

  A  resident scheduling + disorientation onset
  B  watch sense/intervene/call, then call dispatch
  C  nurse movement and guidance
  D  resident movement
  E  tally recording

Agents are processed in ascending-id order within each phase.  A
same-tick chain detection -> call -> response start is possible by
construction, which is the normative tick semantics.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .agents import (
    REMINDER_DELAY, Appointment, NurseAgent, PwDAgent, PwDStreams,
    SmartWatch, WorldContext, assign_calls, nurse_step, pwd_begin_tick,
    pwd_move, watch_step,
)
from .events import (
    NURSE_INACTIVE, PWD_AT_APPOINTMENT, PWD_GUIDED, PWD_TRAVELING, EventLog,
)
from .grid import ROLE_APPOINTMENT_SITE, ROLE_NURSE_BASE, ROLE_PWD_HOME, GridMap

DEFAULT_HORIZON = 10_000
DEFAULT_RADIUS = 5.0
DEFAULT_P_NOISE = 0.1

STREAM_PURPOSES = ("disorient", "noise", "detect", "intervene", "false_goal")


class InvalidScenarioError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def derive_stream(seed: int, agent_id: str, purpose: str) -> random.Random:
    """Independent random stream keyed by (seed, agent, purpose).

    The key tuple is hashed, so streams never overlap and draws for one
    agent are unaffected by the presence of others.
    """
    key = f"{seed}\x1f{agent_id}\x1f{purpose}".encode()
    digest = hashlib.sha256(key).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


@dataclass
class PwDConfig:
    id: str
    home: str
    schedule: list[Appointment] = field(default_factory=list)
    p_d: float = 0.0
    p_i: float = 0.2
    p_noise: float = DEFAULT_P_NOISE
    p_forget: float = 0.0


@dataclass
class WatchConfig:
    enabled: bool = True
    p_detect: float = 0.5
    n_help: int = 1
    intervention_interval: int = 1


@dataclass
class NurseConfig:
    id: str
    base: str
    radius: float = DEFAULT_RADIUS


@dataclass
class Scenario:
    grid: GridMap
    pwds: list[PwDConfig]
    nurses: list[NurseConfig]
    watches: dict[str, WatchConfig] = field(default_factory=dict)
    horizon: int = DEFAULT_HORIZON
    seed: int = 0

    def watch_for(self, pwd_id: str) -> WatchConfig:
        return self.watches.get(pwd_id) or WatchConfig(enabled=False)

    def validate(self) -> list[str]:
        problems: list[str] = []
        if self.horizon <= 0:
            problems.append("horizon must be positive")
        ids = [p.id for p in self.pwds] + [n.id for n in self.nurses]
        if len(set(ids)) != len(ids):
            problems.append("agent ids are not unique")
        for agent_id in ids:
            if not agent_id or any(c in agent_id for c in ", \t\n"):
                problems.append(f"invalid agent id {agent_id!r}")
        locations = self.grid.locations
        roles = self.grid.roles
        for pwd in self.pwds:
            if pwd.home not in locations or roles.get(pwd.home) != ROLE_PWD_HOME:
                problems.append(f"{pwd.id}: home {pwd.home!r} is not a pwd_home location")
            for name, value in (("p_d", pwd.p_d), ("p_i", pwd.p_i),
                                ("p_noise", pwd.p_noise), ("p_forget", pwd.p_forget)):
                if not 0.0 <= value <= 1.0:
                    problems.append(f"{pwd.id}: {name}={value} outside [0, 1]")
            last_end = None
            for i, appt in enumerate(pwd.schedule):
                if appt.location not in locations or \
                        roles.get(appt.location) != ROLE_APPOINTMENT_SITE:
                    problems.append(
                        f"{pwd.id}: appointment {i} site {appt.location!r} "
                        "is not an appointment_site location")
                if appt.duration < 0:
                    problems.append(f"{pwd.id}: appointment {i} has negative duration")
                if appt.start < 0 or appt.start + appt.duration > self.horizon:
                    problems.append(f"{pwd.id}: appointment {i} does not fit the horizon")
                if last_end is not None and appt.start < last_end:
                    problems.append(f"{pwd.id}: appointments {i - 1} and {i} overlap")
                last_end = appt.start + appt.duration
            watch = self.watch_for(pwd.id)
            if not 0.0 <= watch.p_detect <= 1.0:
                problems.append(f"{pwd.id}: watch p_detect outside [0, 1]")
            if watch.n_help < 0:
                problems.append(f"{pwd.id}: watch n_help must be >= 0")
            if watch.intervention_interval < 1:
                problems.append(f"{pwd.id}: watch intervention_interval must be >= 1")
        for nurse in self.nurses:
            if nurse.base not in locations or roles.get(nurse.base) != ROLE_NURSE_BASE:
                problems.append(f"{nurse.id}: base {nurse.base!r} is not a nurse_base location")
            if nurse.radius < 0:
                problems.append(f"{nurse.id}: radius must be >= 0")
        return problems


def _build_agents(scenario: Scenario) -> tuple[list[PwDAgent], list[NurseAgent]]:
    grid = scenario.grid
    seed = scenario.seed
    sites = tuple(grid.labels_with_role(ROLE_APPOINTMENT_SITE))

    pwds: list[PwDAgent] = []
    for cfg in sorted(scenario.pwds, key=lambda c: c.id):
        streams = PwDStreams(
            disorient=derive_stream(seed, cfg.id, "disorient"),
            noise=derive_stream(seed, cfg.id, "noise"),
            false_goal=derive_stream(seed, cfg.id, "false_goal"),
            forget=derive_stream(seed, cfg.id, "forget"),
        )
        wcfg = scenario.watch_for(cfg.id)
        watch = SmartWatch(
            owner=cfg.id, enabled=wcfg.enabled, p_detect=wcfg.p_detect,
            n_help=wcfg.n_help, intervention_interval=wcfg.intervention_interval,
            detect_rng=derive_stream(seed, cfg.id, "detect"),
            intervene_rng=derive_stream(seed, cfg.id, "intervene"),
        )
        pwd = PwDAgent(
            id=cfg.id, home=cfg.home, schedule=list(cfg.schedule),
            p_d=cfg.p_d, p_i=cfg.p_i, p_noise=cfg.p_noise,
            p_forget=cfg.p_forget, position=grid.only_cell(cfg.home),
            streams=streams, site_labels=sites, watch=watch,
        )
        pwds.append(pwd)

    nurses: list[NurseAgent] = []
    base_counts: dict[str, int] = {}
    for cfg in sorted(scenario.nurses, key=lambda c: c.id):
        cells = grid.cells_of(cfg.base)
        k = base_counts.get(cfg.base, 0)
        base_counts[cfg.base] = k + 1
        nurses.append(NurseAgent(id=cfg.id, base=cfg.base, radius=cfg.radius,
                                 position=cells[k % len(cells)]))
    return pwds, nurses


def _quiet_until(ctx: WorldContext, horizon: int) -> int | None:
    """Earliest tick anything can happen again, or None if the world is live.

    The world is quiescent when every resident is idle or dwelling, no
    one is disoriented, the call queue is empty, and every nurse stands
    inactive on a base cell.  Quiescent ticks consume no random draws
    and emit no events, so they can be fast-forwarded.
    """
    if ctx.queue:
        return None
    wake = horizon
    for pwd in ctx.pwds:
        mode = pwd.mode
        if mode == PWD_TRAVELING or mode == PWD_GUIDED or pwd.disoriented:
            return None
        if mode == PWD_AT_APPOINTMENT:
            w = pwd.until
        else:  # idle
            if pwd.next_idx >= len(pwd.schedule):
                continue
            appt = pwd.schedule[pwd.next_idx]
            w = appt.start + (REMINDER_DELAY if pwd.forgotten else 0)
        if w < wake:
            wake = w
    grid = ctx.grid
    for nurse in ctx.nurses:
        if nurse.state != NURSE_INACTIVE or \
                not grid.at_label(nurse.position, nurse.base):
            return None
    return wake


def run_simulation(scenario: Scenario, *, fast_forward: bool = True) -> EventLog:
    """Execute the scenario for its full horizon and return the log."""
    problems = scenario.validate()
    if problems:
        raise InvalidScenarioError(problems)

    grid = scenario.grid
    horizon = scenario.horizon
    pwds, nurses = _build_agents(scenario)
    ctx = WorldContext(grid=grid, pwds=pwds, nurses=nurses)
    log = EventLog(horizon, scenario.seed,
                   [p.id for p in pwds], [n.id for n in nurses])
    events = log.events
    queue = ctx.queue
    pwd_tallies = [(p, log.pwd_mode_seq[p.id]) for p in pwds]
    nurse_tallies = [(n, log.nurse_state_seq[n.id]) for n in nurses]

    tick = 0
    while tick < horizon:
        for pwd in pwds:
            pwd_begin_tick(pwd, grid, tick, events)
        for pwd in pwds:
            watch_step(pwd.watch, pwd, tick, events, queue)
        assign_calls(ctx, tick, events)
        for nurse in nurses:
            nurse_step(nurse, ctx, tick, events)
        for pwd in pwds:
            pwd_move(pwd, grid, tick, events)
        for pwd, seq in pwd_tallies:
            seq.append(pwd.mode)
        for nurse, seq in nurse_tallies:
            seq.append(nurse.state)
        tick += 1

        if fast_forward and tick < horizon:
            wake = _quiet_until(ctx, horizon)
            if wake is not None and wake > tick:
                delta = min(wake, horizon) - tick
                for pwd, seq in pwd_tallies:
                    seq.extend(bytes((pwd.mode,)) * delta)
                for nurse, seq in nurse_tallies:
                    seq.extend(bytes((nurse.state,)) * delta)
                tick += delta
    return log
