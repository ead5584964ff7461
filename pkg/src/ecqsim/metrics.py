"""Compliance values computed from a run log.

Three per-agent values, all percentages:

  autonomy          100 * (1 - guided_ticks / total_ticks)     per resident
  nurse efficiency  100 * inactive_ticks / total_ticks         per nurse
  travel efficiency 100 * nominal / taken, averaged over the
                    resident's completed trips                 per resident

Values are computed from integer tick counts with a single division, and
rounded only when serialized.  A resident with no completed trip has no
travel-efficiency value (absent, never zero).
"""

from __future__ import annotations

from dataclasses import dataclass

from .events import (
    DISORIENTATION_START, NURSE_CALLED, NURSE_INACTIVE, PWD_GUIDED,
    TRIP_END, TRIP_START, EventLog,
)


class UnknownAgentError(KeyError):
    """The log does not cover the requested agent."""


@dataclass(slots=True)
class TripRecord:
    pwd: str
    trip_id: str
    t_nominal: int
    t_taken: int | None
    completed: bool


@dataclass(slots=True)
class AgentCounts:
    trips_completed: int = 0
    trips_incomplete: int = 0
    episodes: int = 0
    calls: int = 0


@dataclass
class MetricReport:
    t_total: int
    autonomy: dict[str, float]
    efficiency: dict[str, float]
    travel_efficiency: dict[str, float | None]
    counts: dict[str, AgentCounts]

    def to_text(self, seed: int | None = None) -> str:
        lines = ["ecqsim-report v1"]
        if seed is not None:
            lines.append(f"seed {seed}")
        lines.append(f"horizon {self.t_total}")
        for pwd_id, value in self.autonomy.items():
            lines.append(f"autonomy {pwd_id} {value:.2f}")
        for nurse_id, value in self.efficiency.items():
            lines.append(f"efficiency {nurse_id} {value:.2f}")
        for pwd_id, value in self.travel_efficiency.items():
            shown = "absent" if value is None else f"{value:.2f}"
            lines.append(f"travel_efficiency {pwd_id} {shown}")
        for pwd_id, c in self.counts.items():
            lines.append(
                f"counts {pwd_id} trips_completed={c.trips_completed} "
                f"trips_incomplete={c.trips_incomplete} "
                f"episodes={c.episodes} calls={c.calls}")
        return "\n".join(lines) + "\n"


def autonomy(log: EventLog, pwd_id: str) -> float:
    """Share of the run the resident was not nurse-guided, as a percent."""
    if pwd_id not in log.pwd_mode_seq:
        raise UnknownAgentError(pwd_id)
    guided = log.pwd_mode_seq[pwd_id].count(PWD_GUIDED)
    return 100.0 * (log.horizon - guided) / log.horizon


def nurse_efficiency(log: EventLog, nurse_id: str) -> float:
    """Share of the run the nurse spent inactive, as a percent.

    Responding and guiding both count as active time.
    """
    if nurse_id not in log.nurse_state_seq:
        raise UnknownAgentError(nurse_id)
    inactive = log.nurse_state_seq[nurse_id].count(NURSE_INACTIVE)
    return 100.0 * inactive / log.horizon


def trip_records(log: EventLog, pwd_id: str | None = None) -> list[TripRecord]:
    """Pair trip start/end events into per-trip records, in start order."""
    if pwd_id is not None and pwd_id not in log.pwd_mode_seq:
        raise UnknownAgentError(pwd_id)
    records: dict[str, TripRecord] = {}
    for event in log.events:
        if event.kind == TRIP_START:
            if pwd_id is not None and event.subject != pwd_id:
                continue
            trip_id = str(event.payload["trip"])
            records[trip_id] = TripRecord(
                pwd=event.subject, trip_id=trip_id,
                t_nominal=int(event.payload["nominal"]),
                t_taken=None, completed=False)
        elif event.kind == TRIP_END:
            trip_id = str(event.payload["trip"])
            record = records.get(trip_id)
            if record is not None:
                record.t_taken = int(event.payload["taken"])
                record.completed = True
    return list(records.values())


def travel_efficiency(log: EventLog, pwd_id: str) -> float | None:
    """Mean per-trip nominal/taken ratio over completed trips, as a percent.

    Returns None when the resident completed no trip within the horizon.
    """
    ratios = [100.0 if r.t_taken == 0 else 100.0 * r.t_nominal / r.t_taken
              for r in trip_records(log, pwd_id) if r.completed]
    if not ratios:
        return None
    return sum(ratios) / len(ratios)


def build_report(log: EventLog) -> MetricReport:
    """All three value families plus per-resident activity counts."""
    counts = {pwd_id: AgentCounts() for pwd_id in log.pwd_ids}
    for event in log.events:
        if event.kind == DISORIENTATION_START:
            counts[event.subject].episodes += 1
        elif event.kind == NURSE_CALLED:
            counts[event.subject].calls += 1
    for pwd_id in log.pwd_ids:
        for record in trip_records(log, pwd_id):
            if record.completed:
                counts[pwd_id].trips_completed += 1
            else:
                counts[pwd_id].trips_incomplete += 1
    return MetricReport(
        t_total=log.horizon,
        autonomy={pwd_id: autonomy(log, pwd_id) for pwd_id in log.pwd_ids},
        efficiency={n: nurse_efficiency(log, n) for n in log.nurse_ids},
        travel_efficiency={pwd_id: travel_efficiency(log, pwd_id)
                           for pwd_id in log.pwd_ids},
        counts=counts,
    )
