"""Parameter sweeps: expand a grid into seeded runs and tabulate results.

A sweep is the full cross product of disorientation levels, detection
levels, assistance strategies, and replications.  Appointment schedules
are drawn per replication (6 unique sites per resident by default) and
are identical across strategies within a replication, so strategy
comparisons are paired.

Row order of the output is deterministic regardless of execution order
or parallelism degree.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass, field, replace
from statistics import mean, stdev
from typing import Callable, Iterator

from .agents import Appointment
from .engine import (
    NurseConfig, PwDConfig, Scenario, WatchConfig, derive_stream,
    run_simulation,
)
from .grid import ROLE_APPOINTMENT_SITE, GridMap
from .metrics import MetricReport, build_report

DEFAULT_REPLICATIONS = 200
DEFAULT_APPOINTMENTS = 6
DEFAULT_APPOINTMENT_DURATION = 30

PAPER_P_D = (0.0, 0.25, 0.5, 0.75, 1.0)
PAPER_P_DETECT = (0.5, 0.2)
PAPER_P_I = 0.2
PAPER_N_HELP = (0, 1, 2, 3, 4, 5)

ROWS_CSV_HEADER = "config_id,replication,seed,p_d,p_detect,strategy,agent,metric,value"
AGGREGATE_CSV_HEADER = "p_d,p_detect,strategy,agent,metric,mean,std,count"
POOLED_AGENT = "all"


class InsufficientSitesError(ValueError):
    """The map has fewer appointment sites than a schedule needs."""


@dataclass(frozen=True)
class Strategy:
    """Assistance strategy: no watch, or a watch escalating after n_help fails."""
    watch: bool
    n_help: int = 0

    def label(self) -> str:
        return f"nhelp={self.n_help}" if self.watch else "nowatch"

    @classmethod
    def parse(cls, token: str) -> "Strategy":
        if token == "nowatch":
            return cls(watch=False)
        if token.startswith("nhelp="):
            value = token[len("nhelp="):]
            if value.isdigit():
                return cls(watch=True, n_help=int(value))
        raise ValueError(f"bad strategy token {token!r}")


def paper_strategies() -> tuple[Strategy, ...]:
    return (Strategy(watch=False),) + tuple(
        Strategy(watch=True, n_help=k) for k in PAPER_N_HELP)


@dataclass
class ScenarioTemplate:
    """Everything a sweep holds fixed: the map, the rosters, the clock.

    Residents with a non-empty schedule keep it verbatim; for the rest a
    schedule is drawn per replication.
    """
    grid: GridMap
    pwds: list[PwDConfig]
    nurses: list[NurseConfig]
    watch: WatchConfig = field(default_factory=WatchConfig)
    horizon: int = 10_000
    appointments_per_pwd: int = DEFAULT_APPOINTMENTS
    appointment_duration: int = DEFAULT_APPOINTMENT_DURATION


@dataclass
class SweepConfig:
    template: ScenarioTemplate
    p_d_levels: tuple[float, ...] = PAPER_P_D
    p_detect_levels: tuple[float, ...] = PAPER_P_DETECT
    strategies: tuple[Strategy, ...] = ()
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0

    def __post_init__(self):
        if not self.strategies:
            self.strategies = paper_strategies()

    def validate(self) -> list[str]:
        problems = []
        if self.replications < 1:
            problems.append("replications must be >= 1")
        for name, levels in (("p_d", self.p_d_levels),
                             ("p_detect", self.p_detect_levels)):
            if not levels:
                problems.append(f"no {name} levels")
            for level in levels:
                if not 0.0 <= level <= 1.0:
                    problems.append(f"{name} level {level} outside [0, 1]")
        if not self.strategies:
            problems.append("no strategies")
        return problems


@dataclass(frozen=True)
class SweepCoords:
    config_id: str
    replication: int
    seed: int
    p_d: float
    p_detect: float
    strategy: Strategy


@dataclass(frozen=True)
class SweepRow:
    config_id: str
    replication: int
    seed: int
    p_d: float
    p_detect: float
    strategy: str
    agent: str
    metric: str
    value: float

    def to_csv(self) -> str:
        return (f"{self.config_id},{self.replication},{self.seed},"
                f"{self.p_d:g},{self.p_detect:g},{self.strategy},"
                f"{self.agent},{self.metric},{self.value:.2f}")


@dataclass(frozen=True)
class Aggregate:
    p_d: float
    p_detect: float
    strategy: str
    agent: str
    metric: str
    mean: float
    std: float
    count: int

    def to_csv(self) -> str:
        return (f"{self.p_d:g},{self.p_detect:g},{self.strategy},{self.agent},"
                f"{self.metric},{self.mean:.4f},{self.std:.4f},{self.count}")


def derive_run_seed(base_seed: int, config_id: str, replication: int) -> int:
    """Stable 64-bit seed for one run of the sweep."""
    key = f"{base_seed}\x1f{config_id}\x1f{replication}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def config_label(p_d: float, p_detect: float, strategy: Strategy) -> str:
    return f"pd{p_d:g}_pdet{p_detect:g}_{strategy.label()}"


def iter_coords(config: SweepConfig) -> Iterator[SweepCoords]:
    for p_d in config.p_d_levels:
        for p_detect in config.p_detect_levels:
            for strategy in config.strategies:
                config_id = config_label(p_d, p_detect, strategy)
                for rep in range(config.replications):
                    yield SweepCoords(
                        config_id=config_id, replication=rep,
                        seed=derive_run_seed(config.base_seed, config_id, rep),
                        p_d=p_d, p_detect=p_detect, strategy=strategy)


def generate_schedule(grid: GridMap, pwd_id: str, base_seed: int,
                      replication: int, count: int, duration: int,
                      horizon: int) -> list[Appointment]:
    """Draw ``count`` appointments at distinct sites, evenly spread with jitter.

    The stream is keyed by (base_seed, resident, replication) only, so
    schedules match across strategies and probability levels within a
    replication.
    """
    sites = grid.labels_with_role(ROLE_APPOINTMENT_SITE)
    if len(sites) < count:
        raise InsufficientSitesError(
            f"map offers {len(sites)} appointment sites, need {count}")
    rng = derive_stream(base_seed, pwd_id, f"schedule.{replication}")
    chosen = rng.sample(sites, count)
    spacing = horizon // (count + 1)
    jitter = spacing // 10
    starts = sorted((i + 1) * spacing + (rng.randint(-jitter, jitter) if jitter else 0)
                    for i in range(count))
    return [Appointment(location, start, duration)
            for location, start in zip(chosen, starts)]


def build_run(template: ScenarioTemplate, *, schedule_seed: int,
              replication: int, run_seed: int, p_d: float | None = None,
              watch: WatchConfig | None = None) -> Scenario:
    """Turn a template into a runnable scenario.

    Schedules are drawn from (schedule_seed, replication) for residents
    without an explicit one, so they are shared by every configuration
    of a replication.
    """
    pwds = []
    for cfg in template.pwds:
        schedule = list(cfg.schedule) or generate_schedule(
            template.grid, cfg.id, schedule_seed, replication,
            template.appointments_per_pwd, template.appointment_duration,
            template.horizon)
        pwds.append(replace(cfg, schedule=schedule,
                            p_d=cfg.p_d if p_d is None else p_d))
    effective_watch = template.watch if watch is None else watch
    return Scenario(
        grid=template.grid, pwds=pwds,
        nurses=[replace(n) for n in template.nurses],
        watches={p.id: effective_watch for p in pwds},
        horizon=template.horizon, seed=run_seed)


def scenario_for(config: SweepConfig, coords: SweepCoords) -> Scenario:
    """Materialize one run of the sweep."""
    strategy = coords.strategy
    watch = WatchConfig(
        enabled=strategy.watch,
        p_detect=coords.p_detect,
        n_help=strategy.n_help,
        intervention_interval=config.template.watch.intervention_interval)
    return build_run(
        config.template, schedule_seed=config.base_seed,
        replication=coords.replication, run_seed=coords.seed,
        p_d=coords.p_d, watch=watch)


def expand_sweep(config: SweepConfig) -> list[tuple[SweepCoords, Scenario]]:
    """Full cross product of levels x strategies x replications."""
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    return [(coords, scenario_for(config, coords))
            for coords in iter_coords(config)]


def rows_for_run(coords: SweepCoords, report: MetricReport) -> list[SweepRow]:
    rows = []

    def add(agent: str, metric: str, value: float) -> None:
        rows.append(SweepRow(
            config_id=coords.config_id, replication=coords.replication,
            seed=coords.seed, p_d=coords.p_d, p_detect=coords.p_detect,
            strategy=coords.strategy.label(), agent=agent, metric=metric,
            value=value))

    for pwd_id, value in report.autonomy.items():
        add(pwd_id, "autonomy", value)
    for pwd_id, value in report.travel_efficiency.items():
        if value is not None:
            add(pwd_id, "travel_efficiency", value)
    for nurse_id, value in report.efficiency.items():
        add(nurse_id, "efficiency", value)
    return rows


def _execute(config: SweepConfig, coords: SweepCoords) -> list[SweepRow]:
    report = build_report(run_simulation(scenario_for(config, coords)))
    return rows_for_run(coords, report)


_WORKER_CONFIG: SweepConfig | None = None


def _worker_init(config: SweepConfig) -> None:
    global _WORKER_CONFIG
    _WORKER_CONFIG = config


def _worker_run(coords: SweepCoords) -> list[SweepRow]:
    return _execute(_WORKER_CONFIG, coords)


def run_sweep(config: SweepConfig, jobs: int = 1,
              progress: Callable[[int, int], None] | None = None) -> list[SweepRow]:
    """Run every scenario of the sweep and return sorted result rows.

    ``jobs`` > 1 distributes runs over worker processes; the output is
    byte-identical either way because rows are sorted afterwards.
    """
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    coords = list(iter_coords(config))
    rows: list[SweepRow] = []
    done = 0
    if jobs <= 1:
        for c in coords:
            rows.extend(_execute(config, c))
            done += 1
            if progress is not None:
                progress(done, len(coords))
    else:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=jobs, initializer=_worker_init,
                initargs=(config,)) as pool:
            chunk = max(1, len(coords) // (jobs * 8))
            for run_rows in pool.map(_worker_run, coords, chunksize=chunk):
                rows.extend(run_rows)
                done += 1
                if progress is not None:
                    progress(done, len(coords))
    rows.sort(key=lambda r: (r.config_id, r.replication, r.agent, r.metric))
    return rows


def aggregate(rows: list[SweepRow]) -> list[Aggregate]:
    """Mean/std/count per configuration, per agent and pooled across agents."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        base = (row.p_d, row.p_detect, row.strategy, row.metric)
        groups.setdefault(base + (row.agent,), []).append(row.value)
        groups.setdefault(base + (POOLED_AGENT,), []).append(row.value)
    out = []
    for key in sorted(groups):
        p_d, p_detect, strategy, metric, agent = key
        values = groups[key]
        out.append(Aggregate(
            p_d=p_d, p_detect=p_detect, strategy=strategy, agent=agent,
            metric=metric, mean=mean(values),
            std=stdev(values) if len(values) > 1 else 0.0,
            count=len(values)))
    return out


def rows_to_csv(rows: list[SweepRow]) -> str:
    return "\n".join([ROWS_CSV_HEADER] + [r.to_csv() for r in rows]) + "\n"


def aggregates_to_csv(aggs: list[Aggregate]) -> str:
    return "\n".join([AGGREGATE_CSV_HEADER] + [a.to_csv() for a in aggs]) + "\n"
