"""Command-line front end.

Subcommands:

  validate  check a scenario file and its map, print an inventory
  run       execute one scenario, write the event log and metric report
  sweep     run a parameter grid and write row/aggregate CSVs
  demo      copy the bundled demo map and scenario into a directory

Exit codes: 0 success, 2 validation or grid-spec failure, 3 I/O
failure.  Diagnostics go to stderr, one per line, prefixed ``error:``.
Seed precedence: scenario file < ECQ_SEED environment variable <
--seed flag.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from importlib import resources
from pathlib import Path

import yaml

from .engine import run_simulation
from .experiment import (
    PAPER_P_D, PAPER_P_DETECT, Strategy, SweepConfig, aggregate,
    aggregates_to_csv, paper_strategies, rows_to_csv, run_sweep,
)
from .grid import ROLES
from .metrics import build_report
from .scenario import LoadedScenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def _fail(messages: list[str] | str, code: int) -> int:
    if isinstance(messages, str):
        messages = [messages]
    for message in messages:
        print(f"error: {message}", file=sys.stderr)
    return code


def _load(path: str) -> LoadedScenario | int:
    try:
        return load_scenario(path)
    except FileNotFoundError as exc:
        return _fail(f"cannot read {exc.filename}", EXIT_IO)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except ScenarioError as exc:
        return _fail(exc.problems, EXIT_INVALID)
    except yaml.YAMLError as exc:
        return _fail(f"bad scenario file: {exc}", EXIT_INVALID)


def _pick_seed(loaded: LoadedScenario, flag_seed: int | None) -> int:
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("ECQ_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ScenarioError([f"ECQ_SEED is not an integer: {env!r}"])
    return loaded.seed


def cmd_validate(args: argparse.Namespace) -> int:
    loaded = _load(args.scenario)
    if isinstance(loaded, int):
        return loaded
    grid = loaded.grid
    print(f"OK {args.scenario}")
    print(f"map {grid.width}x{grid.height}, {len(grid.locations)} locations")
    for role in ROLES:
        labels = grid.labels_with_role(role)
        if labels:
            print(f"{role}: {' '.join(labels)}")
    print(f"pwds {len(loaded.template.pwds)}, nurses {len(loaded.template.nurses)}, "
          f"horizon {loaded.template.horizon}, seed {loaded.seed}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    loaded = _load(args.scenario)
    if isinstance(loaded, int):
        return loaded
    try:
        seed = _pick_seed(loaded, args.seed)
    except ScenarioError as exc:
        return _fail(exc.problems, EXIT_INVALID)
    log = run_simulation(loaded.scenario(seed))
    report = build_report(log)
    text = report.to_text(seed=seed)
    if args.out:
        Path(args.out).write_text(log.to_text(), encoding="utf-8", newline="\n")
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8", newline="\n")
    print(text, end="")
    return EXIT_OK


def _parse_grid_spec(spec: str) -> dict[str, tuple]:
    """Parse ``key=v1,v2`` entries (';'-separated) into axis overrides."""
    overrides: dict[str, tuple] = {}
    for entry in spec.split(";"):
        entry = entry.strip()
        if not entry:
            continue
        key, sep, values = entry.partition("=")
        tokens = [t for t in values.split(",") if t]
        if not sep or not tokens:
            raise ValueError(f"bad grid entry {entry!r}")
        if key == "p_d":
            overrides["p_d"] = tuple(_parse_prob(t) for t in tokens)
        elif key == "p_detect":
            overrides["p_detect"] = tuple(_parse_prob(t) for t in tokens)
        elif key == "strategy":
            overrides["strategy"] = tuple(Strategy.parse(t) for t in tokens)
        else:
            raise ValueError(f"unknown grid key {key!r}")
    return overrides


def _parse_prob(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"bad probability {token!r}") from None
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"probability {token!r} outside [0, 1]")
    return value


def cmd_sweep(args: argparse.Namespace) -> int:
    loaded = _load(args.scenario)
    if isinstance(loaded, int):
        return loaded
    try:
        seed = _pick_seed(loaded, args.seed)
    except ScenarioError as exc:
        return _fail(exc.problems, EXIT_INVALID)
    if not args.paper_grid and not args.grid:
        return _fail("need --paper-grid and/or --grid", EXIT_INVALID)
    overrides: dict[str, tuple] = {}
    if args.grid:
        try:
            overrides = _parse_grid_spec(args.grid)
        except ValueError as exc:
            return _fail(str(exc), EXIT_INVALID)

    template = loaded.template
    if args.paper_grid:
        defaults = {"p_d": PAPER_P_D, "p_detect": PAPER_P_DETECT,
                    "strategy": paper_strategies()}
    else:
        # Axes not named in --grid stay at the scenario's own values.
        roster_p_d = tuple(sorted({p.p_d for p in template.pwds}))
        if "p_d" not in overrides and len(roster_p_d) != 1:
            return _fail("residents disagree on p_d; give p_d=... in --grid",
                         EXIT_INVALID)
        defaults = {
            "p_d": roster_p_d,
            "p_detect": (template.watch.p_detect,),
            "strategy": (Strategy(True, template.watch.n_help)
                         if template.watch.enabled else Strategy(False),),
        }
    config = SweepConfig(
        template=template,
        p_d_levels=overrides.get("p_d", defaults["p_d"]),
        p_detect_levels=overrides.get("p_detect", defaults["p_detect"]),
        strategies=overrides.get("strategy", defaults["strategy"]),
        replications=args.reps,
        base_seed=seed)
    problems = config.validate()
    if problems:
        return _fail(problems, EXIT_INVALID)

    total = (len(config.p_d_levels) * len(config.p_detect_levels)
             * len(config.strategies) * config.replications)
    started = time.monotonic()
    last_shown = -1

    def progress(done: int, total_runs: int) -> None:
        nonlocal last_shown
        step = max(1, total_runs // 20)
        if done == total_runs or done - last_shown >= step:
            last_shown = done
            print(f"progress {done}/{total_runs}", file=sys.stderr)

    rows = run_sweep(config, jobs=args.jobs, progress=progress)
    Path(args.out).write_text(rows_to_csv(rows), encoding="utf-8", newline="\n")
    Path(args.aggregate).write_text(aggregates_to_csv(aggregate(rows)),
                                    encoding="utf-8", newline="\n")
    elapsed = time.monotonic() - started
    print(f"{total} runs in {elapsed:.1f}s -> {args.out}, {args.aggregate}",
          file=sys.stderr)
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    dest = Path(args.dir)
    try:
        dest.mkdir(parents=True, exist_ok=True)
        for name in ("demo_map.txt", "demo_scenario.yaml"):
            data = resources.files("ecqsim.data").joinpath(name).read_text("utf-8")
            (dest / name).write_text(data, encoding="utf-8", newline="\n")
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    print(f"wrote {dest / 'demo_scenario.yaml'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecqsim",
        description="Nursing-home assistance simulator and compliance metrics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file and its map")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write the event log here")
    p.add_argument("--report", default=None, help="write the metric report here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter grid")
    p.add_argument("scenario")
    p.add_argument("--paper-grid", action="store_true",
                   help="disorientation levels 0..1, detection 0.5/0.2, "
                        "nowatch plus nhelp=0..5")
    p.add_argument("--grid", default=None,
                   help="override axes, e.g. \"p_d=0,0.5;strategy=nowatch,nhelp=2\"")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="sweep_rows.csv")
    p.add_argument("--aggregate", default="sweep_aggregate.csv")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo", help="copy the bundled demo files")
    p.add_argument("dir")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
