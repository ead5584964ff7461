"""Event records and the run log they accumulate into.

Every turn of the simulation appends events in a canonical order
(tick, phase, agent).  The log also carries per-tick state tallies for
each agent; metrics are computed from the log alone.

The text form is newline-delimited: header lines, per-agent tally
lines, then one ``tick,phase,kind,subject,k=v,...`` line per event.
Field order is fixed, so identical runs serialize to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TRIP_START = "TripStart"
TRIP_END = "TripEnd"
DISORIENTATION_START = "DisorientationStart"
DETECTION = "Detection"
INTERVENTION_SUCCESS = "InterventionSuccess"
INTERVENTION_FAIL = "InterventionFail"
NURSE_CALLED = "NurseCalled"
CALL_DROPPED = "CallDropped"
RESPONSE_START = "ResponseStart"
GUIDANCE_START = "GuidanceStart"
GUIDANCE_END = "GuidanceEnd"
REMINDER = "Reminder"

EVENT_KINDS = (
    TRIP_START, TRIP_END, DISORIENTATION_START, DETECTION,
    INTERVENTION_SUCCESS, INTERVENTION_FAIL, NURSE_CALLED, CALL_DROPPED,
    RESPONSE_START, GUIDANCE_START, GUIDANCE_END, REMINDER,
)

# PwD modes / nurse states as small ints; index = serialized code.
PWD_IDLE, PWD_TRAVELING, PWD_AT_APPOINTMENT, PWD_GUIDED = range(4)
PWD_MODE_NAMES = ("idle", "traveling", "at_appointment", "guided")

NURSE_INACTIVE, NURSE_RESPONDING, NURSE_GUIDING = range(3)
NURSE_STATE_NAMES = ("inactive", "responding", "guiding")


@dataclass(slots=True)
class Event:
    tick: int
    phase: str  # "A".."E"
    kind: str
    subject: str
    payload: dict[str, object] = field(default_factory=dict)

    def to_line(self) -> str:
        parts = [str(self.tick), self.phase, self.kind, self.subject]
        parts.extend(f"{k}={v}" for k, v in self.payload.items())
        return ",".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "Event":
        parts = line.split(",")
        if len(parts) < 4:
            raise ValueError(f"malformed event line: {line!r}")
        payload: dict[str, object] = {}
        for item in parts[4:]:
            key, _, value = item.partition("=")
            payload[key] = int(value) if value.lstrip("-").isdigit() else value
        return cls(int(parts[0]), parts[1], parts[2], parts[3], payload)


class EventLog:
    """Ordered event list plus per-tick agent-state tallies for one run."""

    def __init__(self, horizon: int, seed: int,
                 pwd_ids: list[str], nurse_ids: list[str]):
        self.horizon = horizon
        self.seed = seed
        self.pwd_ids = list(pwd_ids)
        self.nurse_ids = list(nurse_ids)
        self.events: list[Event] = []
        # Per-tick sequences; byte value = mode/state code at that tick.
        self.pwd_mode_seq: dict[str, bytearray] = {p: bytearray() for p in pwd_ids}
        self.nurse_state_seq: dict[str, bytearray] = {n: bytearray() for n in nurse_ids}

    def append(self, event: Event) -> None:
        self.events.append(event)

    # -- tallies ---------------------------------------------------------

    def pwd_mode_counts(self, pwd_id: str) -> tuple[int, int, int, int]:
        seq = self.pwd_mode_seq[pwd_id]
        return tuple(seq.count(code) for code in range(4))  # type: ignore[return-value]

    def nurse_state_counts(self, nurse_id: str) -> tuple[int, int, int]:
        seq = self.nurse_state_seq[nurse_id]
        return tuple(seq.count(code) for code in range(3))  # type: ignore[return-value]

    # -- serialization ---------------------------------------------------

    def to_text(self) -> str:
        lines = [
            "ecqsim-log v1",
            f"horizon {self.horizon}",
            f"seed {self.seed}",
            "pwds " + " ".join(self.pwd_ids),
            "nurses " + " ".join(self.nurse_ids),
        ]
        for pwd_id in self.pwd_ids:
            counts = self.pwd_mode_counts(pwd_id)
            pairs = " ".join(f"{name}={n}" for name, n in zip(PWD_MODE_NAMES, counts))
            lines.append(f"tally {pwd_id} {pairs}")
        for nurse_id in self.nurse_ids:
            counts = self.nurse_state_counts(nurse_id)
            pairs = " ".join(f"{name}={n}" for name, n in zip(NURSE_STATE_NAMES, counts))
            lines.append(f"tally {nurse_id} {pairs}")
        lines.append(f"events {len(self.events)}")
        lines.extend(event.to_line() for event in self.events)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EventLog":
        lines = text.splitlines()
        if not lines or lines[0] != "ecqsim-log v1":
            raise ValueError("not an ecqsim event log")
        horizon = int(lines[1].split(" ", 1)[1])
        seed = int(lines[2].split(" ", 1)[1])
        pwd_ids = lines[3].split()[1:]
        nurse_ids = lines[4].split()[1:]
        log = cls(horizon, seed, pwd_ids, nurse_ids)

        idx = 5
        tally_counts: dict[str, list[int]] = {}
        while idx < len(lines) and lines[idx].startswith("tally "):
            parts = lines[idx].split()
            tally_counts[parts[1]] = [int(p.split("=")[1]) for p in parts[2:]]
            idx += 1
        # Rebuild flat sequences from counts: metrics only consume totals,
        # so the per-tick ordering of a parsed log is not preserved.
        for pwd_id in pwd_ids:
            seq = bytearray()
            for code, n in enumerate(tally_counts.get(pwd_id, [])):
                seq.extend(bytes([code]) * n)
            log.pwd_mode_seq[pwd_id] = seq
        for nurse_id in nurse_ids:
            seq = bytearray()
            for code, n in enumerate(tally_counts.get(nurse_id, [])):
                seq.extend(bytes([code]) * n)
            log.nurse_state_seq[nurse_id] = seq

        if idx >= len(lines) or not lines[idx].startswith("events "):
            raise ValueError("missing events header")
        count = int(lines[idx].split(" ", 1)[1])
        idx += 1
        for line in lines[idx:idx + count]:
            log.append(Event.from_line(line))
        return log
