from dataclasses import replace

import pytest

from conftest import check_causal_ordering, corridor_grid

from ecqsim.engine import (
    InvalidScenarioError, NurseConfig, PwDConfig, Scenario, WatchConfig,
    derive_stream, run_simulation,
)
from ecqsim.agents import Appointment
from ecqsim.events import (
    DETECTION, DISORIENTATION_START, EventLog, NURSE_CALLED, TRIP_END,
    TRIP_START,
)
from ecqsim.experiment import build_run
from ecqsim.metrics import build_report

PHASE_ORDER = {p: i for i, p in enumerate("ABCDE")}


def small_scenario(*, horizon=1200, p_d=0.5, p_i=0.2, p_noise=0.1,
                   watch=None, seed=7, demo_loaded=None, appointments=3,
                   duration=10):
    template = replace(demo_loaded.template, horizon=horizon,
                       appointments_per_pwd=appointments,
                       appointment_duration=duration)
    template.pwds = [replace(p, p_i=p_i, p_noise=p_noise) for p in template.pwds]
    return build_run(template, schedule_seed=seed, replication=0,
                     run_seed=seed, p_d=p_d,
                     watch=watch or WatchConfig(enabled=False))


def test_no_disorientation_leaves_only_trip_events(demo_loaded):
    scenario = small_scenario(p_d=0.0, demo_loaded=demo_loaded)
    log = run_simulation(scenario)
    assert {e.kind for e in log.events} == {TRIP_START, TRIP_END}
    for pwd_id in log.pwd_ids:
        assert log.pwd_mode_counts(pwd_id)[3] == 0  # never guided
    for nurse_id in log.nurse_ids:
        assert log.nurse_state_counts(nurse_id) == (log.horizon, 0, 0)


def test_determinism_same_seed_identical_bytes(demo_loaded):
    watch = WatchConfig(enabled=True, p_detect=0.5, n_help=1)
    first = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=42))
    second = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=42))
    assert first.to_text() == second.to_text()
    third = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=43))
    assert third.to_text() != first.to_text()


def test_fast_forward_is_invisible(demo_loaded):
    watch = WatchConfig(enabled=True, p_detect=0.5, n_help=2)
    scenario = small_scenario(demo_loaded=demo_loaded, watch=watch, seed=11)
    with_skip = run_simulation(scenario, fast_forward=True)
    without = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=11),
                             fast_forward=False)
    assert with_skip.to_text() == without.to_text()


def test_forced_chain_detection_and_call_same_tick(demo_loaded):
    watch = WatchConfig(enabled=True, p_detect=1.0, n_help=0)
    scenario = small_scenario(demo_loaded=demo_loaded, p_d=1.0, p_i=0.0,
                              watch=watch, seed=3)
    log = run_simulation(scenario)
    onsets = [e for e in log.events if e.kind == DISORIENTATION_START]
    assert onsets
    for onset in onsets:
        episode = onset.payload["episode"]
        detections = [e for e in log.events
                      if e.kind == DETECTION and e.payload["episode"] == episode]
        calls = [e for e in log.events
                 if e.kind == NURSE_CALLED and e.payload["episode"] == episode]
        assert len(detections) == 1 and detections[0].tick == onset.tick
        assert len(calls) == 1 and calls[0].tick == onset.tick


def test_tally_conservation_and_event_order(demo_loaded):
    watch = WatchConfig(enabled=True, p_detect=0.5, n_help=1)
    log = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=9))
    for pwd_id in log.pwd_ids:
        assert len(log.pwd_mode_seq[pwd_id]) == log.horizon
        assert sum(log.pwd_mode_counts(pwd_id)) == log.horizon
    for nurse_id in log.nurse_ids:
        assert len(log.nurse_state_seq[nurse_id]) == log.horizon
        assert sum(log.nurse_state_counts(nurse_id)) == log.horizon
    keys = [(e.tick, PHASE_ORDER[e.phase]) for e in log.events]
    assert keys == sorted(keys)
    check_causal_ordering(log)


def test_stream_independence_roster_change(demo_loaded):
    # Watch resolves every episode on the first attempt, so residents
    # never interact; removing one must not disturb the others.
    watch = WatchConfig(enabled=True, p_detect=1.0, n_help=3)
    full = small_scenario(demo_loaded=demo_loaded, p_d=0.3, p_i=1.0,
                          watch=watch, seed=21)
    log_full = run_simulation(full)
    reduced = small_scenario(demo_loaded=demo_loaded, p_d=0.3, p_i=1.0,
                             watch=watch, seed=21)
    reduced.pwds = [p for p in reduced.pwds if p.id != "P3"]
    reduced.watches.pop("P3", None)
    log_reduced = run_simulation(reduced)

    def per_agent(log, agent_id):
        return [(e.tick, e.kind, tuple(sorted(e.payload.items())))
                for e in log.events if e.subject == agent_id]

    for pwd_id in ("P1", "P2", "P4", "P5"):
        assert per_agent(log_full, pwd_id) == per_agent(log_reduced, pwd_id)


def test_derive_stream_properties():
    a = derive_stream(1, "P1", "noise")
    b = derive_stream(1, "P1", "noise")
    assert [a.random() for _ in range(50)] == [b.random() for _ in range(50)]
    c = derive_stream(1, "P1", "disorient")
    assert [derive_stream(1, "P1", "noise").random() for _ in range(10)] != \
        [c.random() for _ in range(10)]
    assert derive_stream(2, "P1", "noise").random() != \
        derive_stream(1, "P1", "noise").random()


def test_derive_stream_uniform_mean():
    rng = derive_stream(123, "P1", "noise")
    n = 1_000_000
    mean = sum(rng.random() for _ in range(n)) / n
    assert abs(mean - 0.5) < 0.002


def test_log_roundtrip_preserves_metrics(demo_loaded):
    watch = WatchConfig(enabled=True, p_detect=0.5, n_help=1)
    log = run_simulation(small_scenario(demo_loaded=demo_loaded, watch=watch, seed=5))
    text = log.to_text()
    parsed = EventLog.from_text(text)
    assert parsed.to_text() == text
    assert build_report(parsed) == build_report(log)


def test_invalid_scenarios_rejected():
    grid = corridor_grid(5, with_base=True)
    base = dict(grid=grid,
                pwds=[PwDConfig(id="P1", home="home",
                                schedule=[Appointment("site", 0, 0)])],
                nurses=[NurseConfig(id="N1", base="base")])

    with pytest.raises(InvalidScenarioError, match="horizon"):
        run_simulation(Scenario(horizon=0, **base))

    bad = Scenario(horizon=100, **base)
    bad.pwds[0].p_d = 1.5
    with pytest.raises(InvalidScenarioError, match="p_d"):
        run_simulation(bad)

    bad = Scenario(horizon=100, **base)
    bad.pwds[0].schedule = [Appointment("site", 0, 10), Appointment("site", 5, 5)]
    with pytest.raises(InvalidScenarioError, match="overlap"):
        run_simulation(bad)

    bad = Scenario(horizon=100, **base)
    bad.pwds[0].home = "site"
    with pytest.raises(InvalidScenarioError, match="pwd_home"):
        run_simulation(bad)

    bad = Scenario(horizon=100, **base)
    bad.nurses.append(NurseConfig(id="P1", base="base"))
    with pytest.raises(InvalidScenarioError, match="unique"):
        run_simulation(bad)


def test_appointment_must_fit_horizon():
    grid = corridor_grid(5, with_base=True)
    scenario = Scenario(
        grid=grid,
        pwds=[PwDConfig(id="P1", home="home",
                        schedule=[Appointment("site", 95, 20)])],
        nurses=[NurseConfig(id="N1", base="base")],
        horizon=100)
    with pytest.raises(InvalidScenarioError, match="fit"):
        run_simulation(scenario)
