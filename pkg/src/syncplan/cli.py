"""Command line front end.

Exit codes: 0 success, 1 validation failure, 2 empty language at some stage,
3 simulation verdict failure or deadlock.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .agents import validate
from .buchi import to_dot
from .executor import (
    DeadlockError,
    SimulationConfig,
    check_local_satisfaction,
    check_timing,
    simulate,
)
from .globalprod import EmptyLanguageError, SynthesisError
from .pipeline import format_stats, run_synthesis
from .render import render_ascii, render_svg
from .scenario_io import (
    ScenarioFormatError,
    load_scenario,
    load_strategies,
    save_strategies,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_EMPTY = 2
EXIT_VERDICT = 3


def _load(path):
    try:
        return load_scenario(path)
    except (ScenarioFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def cmd_check(args) -> int:
    scenario = _load(args.scenario)
    problems = validate(scenario)
    if problems:
        for p in problems:
            print(f"problem: {p}")
        return EXIT_INVALID
    print(f"scenario '{scenario.name}' is well-formed "
          f"({len(scenario.agents)} agents, services: {', '.join(sorted(scenario.all_services))})")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    scenario = _load(args.scenario)
    problems = validate(scenario)
    if problems:
        for p in problems:
            print(f"problem: {p}")
        return EXIT_INVALID
    try:
        result = run_synthesis(scenario, cap=args.cap, per_class=args.per_class)
    except EmptyLanguageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    paths = save_strategies(result.strategies, args.out)
    for path in paths:
        print(f"wrote {path}")
    print(format_stats(result.stats))
    if args.dot_dir:
        dot_dir = Path(args.dot_dir)
        dot_dir.mkdir(parents=True, exist_ok=True)
        for aid, art in result.artifacts.items():
            stages = [
                ("motion_spec", art.motion_spec),
                ("task_spec", art.task_spec),
                ("motion_product", art.motion_product.automaton),
                ("reduced_motion", art.reduced_motion.automaton),
                ("task_product", art.task_product.automaton),
                ("reduced_task", art.reduced_task.automaton),
            ]
            for stage, automaton in stages:
                out = dot_dir / f"agent{aid}_{stage}.dot"
                out.write_text(to_dot(automaton, f"agent{aid}_{stage}"))
        for group, gp in result.global_products:
            name = "global_" + "_".join(map(str, group))
            (dot_dir / f"{name}.dot").write_text(to_dot(gp.automaton, name))
        print(f"wrote graphs under {dot_dir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    strategies = load_strategies(args.strategies)
    base = scenario.simulation
    base_seed = base.get("seed", 0) if args.seed is None else args.seed
    failures = 0
    all_lines = []
    for run in range(args.runs):
        seed = base_seed + run
        config = SimulationConfig(
            seed=seed,
            duration_lo=base.get("duration", [1.0, 5.0])[0],
            duration_hi=base.get("duration", [1.0, 5.0])[1],
            action_durations={
                k: tuple(v) for k, v in base.get("action_durations", {}).items()
            },
            unrollings=base.get("unrollings", 3) if args.unrollings is None else args.unrollings,
        )
        try:
            result = simulate(scenario, strategies, config)
        except DeadlockError as exc:
            print(f"seed {seed}: {exc}")
            failures += 1
            continue
        timing_issues = [
            issue
            for behavior in result.behaviors.values()
            for issue in check_timing(behavior)
        ]
        verdicts = check_local_satisfaction(scenario, strategies, result)
        row = []
        for aid in sorted(verdicts):
            v = verdicts[aid]
            row.append(f"agent {aid}: motion={'ok' if v.motion else 'FAIL'} task={'ok' if v.task else 'FAIL'}")
            if not v.consistent:
                row.append(f"agent {aid}: oracle/membership disagreement")
                failures += 1
            if not (v.motion and v.task):
                failures += 1
        print(f"seed {seed}: " + "; ".join(row))
        if timing_issues:
            failures += 1
            for issue in timing_issues:
                print(f"seed {seed}: timing violation: {issue}")
        if args.log:
            all_lines.extend(f"run {run} " + line for line in result.log_lines())
    if args.log:
        Path(args.log).write_text("\n".join(all_lines) + "\n")
        print(f"wrote event log {args.log}")
    return EXIT_OK if failures == 0 else EXIT_VERDICT


def cmd_render(args) -> int:
    scenario = _load(args.scenario)
    strategies = load_strategies(args.strategies) if args.strategies else {}
    try:
        if args.format == "ascii":
            text = render_ascii(scenario, strategies)
        else:
            text = render_svg(scenario, strategies)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_stats(args) -> int:
    scenario = _load(args.scenario)
    problems = validate(scenario)
    if problems:
        for p in problems:
            print(f"problem: {p}")
        return EXIT_INVALID
    try:
        result = run_synthesis(scenario, cap=args.cap, per_class=args.per_class)
    except (EmptyLanguageError, SynthesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    print(format_stats(result.stats))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncplan",
        description="Synthesize and execute synchronized strategies for agent teams "
        "with temporal-logic motion and task specifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="run the full synthesis pipeline")
    p.add_argument("scenario")
    p.add_argument("--out", default="strategies", help="directory for strategy files")
    p.add_argument("--cap", type=int, default=2_000_000,
                   help="state budget for materializing the centralized baseline")
    p.add_argument("--per-class", action="store_true",
                   help="synthesize independently per dependency class")
    p.add_argument("--dot-dir", default=None, help="write automaton graphs here")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="execute strategies under random timing")
    p.add_argument("scenario")
    p.add_argument("strategies", nargs="+", help="strategy files")
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (defaults to the scenario's simulation seed)")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--unrollings", type=int, default=None,
                   help="cycle repetitions (defaults to the scenario's setting)")
    p.add_argument("--log", default=None, help="write the event log to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("render", help="draw the workspace and trajectories")
    p.add_argument("scenario")
    p.add_argument("--strategies", nargs="*", default=[], help="strategy files")
    p.add_argument("--format", choices=("ascii", "svg"), default="svg")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("stats", help="print pipeline statistics without writing files")
    p.add_argument("scenario")
    p.add_argument("--cap", type=int, default=2_000_000)
    p.add_argument("--per-class", action="store_true")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
