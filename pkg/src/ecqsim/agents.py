"""Agent state machines: resident (PwD), smart-watch, and nurse.

Each agent is a mutable state machine advanced once per tick by the
engine, in a fixed phase order:

  A  resident scheduling: trip completion, departures, disorientation onset
  B  watch: detect / intervene / escalate, then call dispatch
  C  nurses: scan, pursue, guide
  D  resident movement
  E  tallies (engine)

The step functions append :class:`~ecqsim.events.Event` records to the
list they are given and draw randomness only from the streams attached
to the agent, so a run is a pure function of (scenario, seed).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .events import (
    CALL_DROPPED, DETECTION, DISORIENTATION_START, GUIDANCE_END,
    GUIDANCE_START, INTERVENTION_FAIL, INTERVENTION_SUCCESS, NURSE_CALLED,
    PWD_AT_APPOINTMENT, PWD_GUIDED, PWD_IDLE, PWD_TRAVELING, REMINDER,
    RESPONSE_START, TRIP_END, TRIP_START, Event,
    NURSE_GUIDING, NURSE_INACTIVE, NURSE_RESPONDING,
)
from .grid import GridMap, Position, line_of_sight

# Disoriented agents re-pick their mistaken destination this often.
FALSE_GOAL_PERIOD = 20
# Ticks an enabled watch waits before reminding about a missed departure.
REMINDER_DELAY = 10

WATCH_DORMANT, WATCH_INTERVENING, WATCH_AWAITING_NURSE = range(3)

LEG_OUT = "out"
LEG_RETURN = "return"


@dataclass(slots=True)
class Appointment:
    location: str
    start: int
    duration: int


@dataclass(slots=True)
class Trip:
    trip_id: str
    goal: str
    leg: str
    start_tick: int
    nominal: int
    duration: int  # dwell after an outbound leg; 0 for return legs


@dataclass(slots=True)
class PwDStreams:
    disorient: random.Random
    noise: random.Random
    false_goal: random.Random
    forget: random.Random


@dataclass(slots=True)
class SmartWatch:
    owner: str
    enabled: bool
    p_detect: float
    n_help: int
    intervention_interval: int
    detect_rng: random.Random
    intervene_rng: random.Random
    phase: int = WATCH_DORMANT
    fail_count: int = 0
    next_attempt: int = 0

    def reset(self) -> None:
        self.phase = WATCH_DORMANT
        self.fail_count = 0


@dataclass(slots=True)
class PwDAgent:
    id: str
    home: str
    schedule: list[Appointment]
    p_d: float
    p_i: float
    p_noise: float
    p_forget: float
    position: Position
    streams: PwDStreams
    site_labels: tuple[str, ...] = ()
    watch: SmartWatch | None = None
    mode: int = PWD_IDLE
    disoriented: bool = False
    false_goal: str | None = None
    resample_tick: int = 0
    trip: Trip | None = None
    until: int = 0
    next_idx: int = 0
    forget_eval: bool = False
    forgotten: bool = False
    skipped: int = 0
    guide_nurse: str | None = None
    moved_tick: int = -1
    trip_seq: int = 0
    episode_seq: int = 0
    episode: str | None = None


@dataclass(slots=True)
class NurseAgent:
    id: str
    base: str
    radius: float
    position: Position
    state: int = NURSE_INACTIVE
    target: str | None = None
    via_call: bool = False
    call_episode: str | None = None


@dataclass(slots=True)
class Call:
    pwd_id: str
    episode: str
    tick: int


@dataclass
class WorldContext:
    """Read/write view the nurse and dispatch logic operate on."""
    grid: GridMap
    pwds: list[PwDAgent]
    nurses: list[NurseAgent]
    by_id: dict[str, PwDAgent] = field(default_factory=dict)
    assignments: dict[str, str] = field(default_factory=dict)  # pwd id -> nurse id
    queue: deque[Call] = field(default_factory=deque)

    def __post_init__(self):
        if not self.by_id:
            self.by_id = {p.id: p for p in self.pwds}


def _pos_str(pos: Position) -> str:
    return f"{pos.x}:{pos.y}"


# -- resident ------------------------------------------------------------


def _start_trip(pwd: PwDAgent, grid: GridMap, tick: int, goal: str, leg: str,
                duration: int, events: list[Event]) -> None:
    pwd.trip_seq += 1
    trip = Trip(f"{pwd.id}.{pwd.trip_seq}", goal, leg, tick,
                grid.label_distance(pwd.position, goal), duration)
    pwd.trip = trip
    pwd.mode = PWD_TRAVELING
    events.append(Event(tick, "A", TRIP_START, pwd.id, {
        "trip": trip.trip_id, "leg": leg, "goal": goal, "nominal": trip.nominal}))


def _end_episode(pwd: PwDAgent) -> None:
    pwd.disoriented = False
    pwd.false_goal = None
    pwd.episode = None
    if pwd.watch is not None:
        pwd.watch.reset()


def _sample_false_goal(pwd: PwDAgent, grid: GridMap, true_goal: str) -> str | None:
    candidates = [label for label in pwd.site_labels if label != true_goal]
    if not candidates:
        candidates = [label for label in sorted(grid.locations) if label != true_goal]
    if not candidates:
        return None
    return candidates[pwd.streams.false_goal.randrange(len(candidates))]


def pwd_begin_tick(pwd: PwDAgent, grid: GridMap, tick: int,
                   events: list[Event]) -> None:
    """Phase A for one resident: arrivals, departures, disorientation onset."""
    # Trip completion is recognized at the tick boundary, so the time on
    # a trip equals the number of movement ticks it spanned.
    if pwd.mode == PWD_TRAVELING and grid.at_label(pwd.position, pwd.trip.goal):
        trip = pwd.trip
        events.append(Event(tick, "A", TRIP_END, pwd.id, {
            "trip": trip.trip_id, "leg": trip.leg, "goal": trip.goal,
            "nominal": trip.nominal, "taken": tick - trip.start_tick}))
        _end_episode(pwd)
        pwd.trip = None
        if trip.leg == LEG_OUT:
            pwd.mode = PWD_AT_APPOINTMENT
            pwd.until = tick + trip.duration
        else:
            pwd.mode = PWD_IDLE

    if pwd.mode == PWD_AT_APPOINTMENT and tick >= pwd.until:
        _start_trip(pwd, grid, tick, pwd.home, LEG_RETURN, 0, events)

    if pwd.mode == PWD_IDLE and pwd.next_idx < len(pwd.schedule):
        appt = pwd.schedule[pwd.next_idx]
        if tick >= appt.start:
            watch_on = pwd.watch is not None and pwd.watch.enabled
            if pwd.p_forget > 0 and not pwd.forget_eval:
                pwd.forget_eval = True
                pwd.forgotten = pwd.streams.forget.random() < pwd.p_forget
                if pwd.forgotten and not watch_on:
                    # Nothing will ever remind them; the appointment is missed.
                    pwd.skipped += 1
                    pwd.next_idx += 1
                    pwd.forget_eval = False
                    pwd.forgotten = False
            if pwd.mode == PWD_IDLE and pwd.next_idx < len(pwd.schedule) \
                    and pwd.schedule[pwd.next_idx] is appt:
                depart = False
                if not pwd.forgotten:
                    depart = True
                elif watch_on and tick >= appt.start + REMINDER_DELAY:
                    events.append(Event(tick, "A", REMINDER, pwd.id,
                                        {"appointment": pwd.next_idx}))
                    depart = True
                if depart:
                    pwd.next_idx += 1
                    pwd.forget_eval = False
                    pwd.forgotten = False
                    _start_trip(pwd, grid, tick, appt.location, LEG_OUT,
                                appt.duration, events)

    if pwd.mode == PWD_TRAVELING and not pwd.disoriented and pwd.p_d > 0:
        if pwd.streams.disorient.random() < pwd.p_d:
            false_goal = _sample_false_goal(pwd, grid, pwd.trip.goal)
            if false_goal is not None:
                pwd.episode_seq += 1
                pwd.episode = f"{pwd.id}.e{pwd.episode_seq}"
                pwd.disoriented = True
                pwd.false_goal = false_goal
                pwd.resample_tick = tick + FALSE_GOAL_PERIOD
                events.append(Event(tick, "A", DISORIENTATION_START, pwd.id, {
                    "episode": pwd.episode, "trip": pwd.trip.trip_id,
                    "false_goal": false_goal, "pos": _pos_str(pwd.position)}))


def pwd_move(pwd: PwDAgent, grid: GridMap, tick: int,
             events: list[Event]) -> None:
    """Phase D for one resident: locomotion noise, then one step."""
    if pwd.mode != PWD_TRAVELING or pwd.moved_tick == tick:
        return
    if pwd.disoriented and tick >= pwd.resample_tick:
        resampled = _sample_false_goal(pwd, grid, pwd.trip.goal)
        if resampled is not None:
            pwd.false_goal = resampled
        pwd.resample_tick = tick + FALSE_GOAL_PERIOD
    if pwd.p_noise > 0 and pwd.streams.noise.random() < pwd.p_noise:
        return
    target = pwd.false_goal if pwd.disoriented else pwd.trip.goal
    pwd.position = grid.step_toward_label(pwd.position, target)


def pwd_step(pwd: PwDAgent, grid: GridMap, tick: int) -> list[Event]:
    """Scheduling plus movement in one call, for isolated harnesses."""
    events: list[Event] = []
    pwd_begin_tick(pwd, grid, tick, events)
    pwd_move(pwd, grid, tick, events)
    return events


# -- smart-watch -----------------------------------------------------------


def watch_step(watch: SmartWatch, owner: PwDAgent, tick: int,
               events: list[Event], queue: deque[Call] | None = None) -> None:
    """Phase B for one watch: detection, interventions, escalation."""
    if not watch.enabled or not owner.disoriented:
        return

    if watch.phase == WATCH_DORMANT:
        if watch.detect_rng.random() < watch.p_detect:
            events.append(Event(tick, "B", DETECTION, owner.id,
                                {"episode": owner.episode}))
            if watch.n_help == 0:
                _call_nurse(watch, owner, tick, events, queue)
            else:
                watch.phase = WATCH_INTERVENING
                watch.next_attempt = tick

    if watch.phase == WATCH_INTERVENING and tick >= watch.next_attempt:
        if watch.intervene_rng.random() < owner.p_i:
            events.append(Event(tick, "B", INTERVENTION_SUCCESS, owner.id,
                                {"episode": owner.episode}))
            owner.disoriented = False
            owner.false_goal = None
            owner.episode = None
            watch.reset()
        else:
            watch.fail_count += 1
            events.append(Event(tick, "B", INTERVENTION_FAIL, owner.id, {
                "episode": owner.episode, "fails": watch.fail_count}))
            if watch.fail_count >= watch.n_help:
                _call_nurse(watch, owner, tick, events, queue)
            else:
                watch.next_attempt = tick + watch.intervention_interval


def _call_nurse(watch: SmartWatch, owner: PwDAgent, tick: int,
                events: list[Event], queue: deque[Call] | None) -> None:
    events.append(Event(tick, "B", NURSE_CALLED, owner.id, {
        "episode": owner.episode, "pos": _pos_str(owner.position)}))
    watch.phase = WATCH_AWAITING_NURSE
    if queue is not None:
        queue.append(Call(owner.id, owner.episode, tick))


# -- dispatch and nurses ---------------------------------------------------


def _drop_call(call: Call, reason: str, tick: int, events: list[Event]) -> None:
    events.append(Event(tick, "B", CALL_DROPPED, call.pwd_id,
                        {"episode": call.episode, "reason": reason}))


def _begin_response(nurse: NurseAgent, pwd: PwDAgent, via: str, phase: str,
                    ctx: WorldContext, tick: int, events: list[Event]) -> None:
    nurse.state = NURSE_RESPONDING
    nurse.target = pwd.id
    nurse.via_call = via == "call"
    nurse.call_episode = pwd.episode
    ctx.assignments[pwd.id] = nurse.id
    events.append(Event(tick, phase, RESPONSE_START, nurse.id, {
        "pwd": pwd.id, "episode": pwd.episode, "via": via}))


def assign_calls(ctx: WorldContext, tick: int, events: list[Event]) -> None:
    """Phase B dispatch: match queued calls to inactive nurses, FIFO.

    Stale calls (resident already fine or already attended) are dropped;
    unassignable calls stay queued in order.
    """
    if not ctx.queue:
        return
    free = [(idx, n) for idx, n in enumerate(ctx.nurses)
            if n.state == NURSE_INACTIVE]
    pending: list[Call] = []
    while ctx.queue:
        call = ctx.queue.popleft()
        pwd = ctx.by_id[call.pwd_id]
        if not pwd.disoriented:
            _drop_call(call, "resolved", tick, events)
            continue
        if pwd.id in ctx.assignments:
            _drop_call(call, "duplicate", tick, events)
            continue
        if not free:
            pending.append(call)
            continue
        grid = ctx.grid
        best = min(free, key=lambda item: (
            grid.distance(item[1].position, pwd.position), item[0]))
        free.remove(best)
        _begin_response(best[1], pwd, "call", "B", ctx, tick, events)
    ctx.queue.extend(pending)


def _take_next_call(nurse: NurseAgent, ctx: WorldContext, tick: int,
                    events: list[Event]) -> bool:
    while ctx.queue:
        call = ctx.queue.popleft()
        pwd = ctx.by_id[call.pwd_id]
        if not pwd.disoriented:
            _drop_call(call, "resolved", tick, events)
            continue
        if pwd.id in ctx.assignments:
            _drop_call(call, "duplicate", tick, events)
            continue
        _begin_response(nurse, pwd, "call", "C", ctx, tick, events)
        return True
    return False


def _release(nurse: NurseAgent, ctx: WorldContext, tick: int,
             events: list[Event]) -> None:
    if nurse.target is not None and ctx.assignments.get(nurse.target) == nurse.id:
        del ctx.assignments[nurse.target]
    nurse.target = None
    nurse.via_call = False
    nurse.call_episode = None
    if not _take_next_call(nurse, ctx, tick, events):
        nurse.state = NURSE_INACTIVE


def _begin_guidance(nurse: NurseAgent, pwd: PwDAgent, tick: int,
                    events: list[Event]) -> None:
    nurse.state = NURSE_GUIDING
    pwd.mode = PWD_GUIDED
    pwd.guide_nurse = nurse.id
    pwd.disoriented = False
    pwd.false_goal = None
    if pwd.watch is not None:
        pwd.watch.reset()
    events.append(Event(tick, "C", GUIDANCE_START, nurse.id,
                        {"pwd": pwd.id, "episode": pwd.episode}))


def nurse_step(nurse: NurseAgent, ctx: WorldContext, tick: int,
               events: list[Event]) -> None:
    """Phase C for one nurse: scan, pursue, or guide."""
    grid = ctx.grid

    if nurse.state == NURSE_INACTIVE:
        target: PwDAgent | None = None
        best: tuple[int, int] | None = None
        for idx, pwd in enumerate(ctx.pwds):
            if pwd.disoriented and pwd.id not in ctx.assignments:
                if line_of_sight(grid, nurse.position, pwd.position, nurse.radius):
                    key = (grid.distance(nurse.position, pwd.position), idx)
                    if best is None or key < best:
                        best = key
                        target = pwd
        if target is not None:
            _begin_response(nurse, target, "sight", "C", ctx, tick, events)
            # Falls through to the pursuit move below on the next tick.
            return
        if not grid.at_label(nurse.position, nurse.base):
            nurse.position = grid.step_toward_label(nurse.position, nurse.base)
        return

    if nurse.state == NURSE_RESPONDING:
        pwd = ctx.by_id[nurse.target]
        if not pwd.disoriented:
            # Reoriented (or finished the trip) before the nurse arrived.
            if nurse.via_call:
                events.append(Event(tick, "C", CALL_DROPPED, pwd.id, {
                    "episode": nurse.call_episode, "reason": "aborted"}))
            _release(nurse, ctx, tick, events)
            return
        nurse.position = grid.step_toward_cell(nurse.position, pwd.position)
        if nurse.position == pwd.position:
            _begin_guidance(nurse, pwd, tick, events)
        return

    if nurse.state == NURSE_GUIDING:
        pwd = ctx.by_id[nurse.target]
        if pwd.p_noise > 0 and pwd.streams.noise.random() < pwd.p_noise:
            return  # resident steadies themselves; nurse waits
        step = grid.step_toward_label(pwd.position, pwd.trip.goal)
        pwd.position = step
        nurse.position = step
        pwd.moved_tick = tick
        if grid.at_label(step, pwd.trip.goal):
            events.append(Event(tick, "C", GUIDANCE_END, nurse.id,
                                {"pwd": pwd.id, "episode": pwd.episode}))
            pwd.episode = None
            pwd.guide_nurse = None
            pwd.mode = PWD_TRAVELING  # arrival is recognized next tick
            _release(nurse, ctx, tick, events)
        return
