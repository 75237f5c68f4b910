"""Shared fixtures and random-instance generators."""
from __future__ import annotations

import random
import time

import pytest

from syncplan import ltl
from syncplan.agents import AgentModel, Scenario
from syncplan.buchi import EXPLICIT_MODE, BuchiAutomaton, Silent, TransitionSystem
from syncplan.motion import MotionProduct
from syncplan.pipeline import run_synthesis
from syncplan.scenario_io import load_bundled

ATOMS = ["a", "b", "c"]


def random_formula(rng: random.Random, atoms, depth: int) -> ltl.Formula:
    if depth == 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.7:
            return ltl.atom(rng.choice(atoms))
        return ltl.TRUE_F if roll < 0.85 else ltl.FALSE_F
    kind = rng.choice(
        [ltl.NOT, ltl.AND, ltl.OR, ltl.NEXT, ltl.UNTIL, ltl.EVENTUALLY, ltl.ALWAYS]
    )
    if kind in (ltl.NOT, ltl.NEXT, ltl.EVENTUALLY, ltl.ALWAYS):
        return ltl.Formula(kind, (random_formula(rng, atoms, depth - 1),))
    return ltl.Formula(
        kind,
        (random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)),
    )


def random_word(rng: random.Random, atoms, max_prefix=5, max_period=5):
    def symbol():
        return frozenset(a for a in atoms if rng.random() < 0.5)

    prefix = tuple(symbol() for _ in range(rng.randrange(0, max_prefix + 1)))
    period = tuple(symbol() for _ in range(rng.randrange(1, max_period + 1)))
    return ltl.UltimatelyPeriodicWord(prefix, period)


def random_motion_product(rng: random.Random, max_states=12, services=("a", "b", "c")):
    """Synthetic explicit-label product for reduction soundness suites."""
    n = rng.randrange(2, max_states + 1)
    auto = BuchiAutomaton(EXPLICIT_MODE)
    for i in range(n):
        auto.add_state((i,))
    silent = Silent(1)
    for s in range(n):
        for _ in range(rng.randrange(1, 4)):
            dst = rng.randrange(n)
            if rng.random() < 0.55:
                label = silent
            else:
                label = frozenset(x for x in services if rng.random() < 0.4)
            auto.add_transition(s, label, dst)
    auto.accepting = {s for s in range(n) if rng.random() < 0.35}
    return MotionProduct(auto)


def explicit_agent(agent_id: int, states, actions, transitions, initial=0, props=(), labels=None):
    """Tiny hand-built agent; `actions` maps name -> service iterable or None."""
    ts = TransitionSystem()
    for i, name in enumerate(states):
        ts.add_state(name, (labels or {}).get(name, ()))
    ts.initial = initial
    ts.props = set(props) | {p for lab in ts.labels for p in lab}
    action_labels = {}
    for name, services in actions.items():
        ts.add_action(name)
        if services is None:
            action_labels[name] = Silent(agent_id)
        else:
            action_labels[name] = frozenset(services)
    for src, action, dst in transitions:
        ts.add_transition(src, action, dst)
    if "stay" not in action_labels:
        ts.add_action("stay")
        action_labels["stay"] = Silent(agent_id)
    for s in range(len(ts.states)):
        if (s, "stay") not in ts.trans:
            ts.add_transition(s, "stay", s)
    services = frozenset(
        s for lab in action_labels.values() if isinstance(lab, frozenset) for s in lab
    )
    return AgentModel(agent_id, ts, services, action_labels, "stay")


def make_scenario(agents, motion_texts, task_texts, name="test"):
    services = frozenset(s for a in agents for s in a.services)
    motion = {
        a.agent_id: ltl.parse(motion_texts[a.agent_id], frozenset(a.ts.props))
        for a in agents
    }
    task = {a.agent_id: ltl.parse(task_texts[a.agent_id], services) for a in agents}
    return Scenario(
        agents=list(agents),
        motion_formulas=motion,
        task_formulas=task,
        motion_texts=dict(motion_texts),
        task_texts=dict(task_texts),
        name=name,
    )


def random_scenario(rng: random.Random) -> Scenario:
    """Small random team: grid agents, satisfiable-leaning formula pools."""
    from syncplan.agents import GridSpec, build_grid_agent

    n = rng.choice([1, 2, 2, 3])
    agents = []
    all_services = []
    for aid in range(1, n + 1):
        w, h = rng.choice([(2, 2), (3, 2)])
        rooms = {}
        for x in range(w):
            for y in range(h):
                if rng.random() < 0.5:
                    rooms[(x, y)] = rng.choice(["P", "Q"])
        svcs = [f"s{aid}{k}" for k in range(rng.choice([1, 1, 2]))]
        all_services.extend(svcs)
        cells = [(rng.randrange(w), rng.randrange(h)) for _ in svcs]
        agents.append(
            build_grid_agent(
                GridSpec(
                    aid,
                    w,
                    h,
                    (0, 0),
                    rooms=rooms,
                    service_cells=tuple(
                        (c, frozenset([s])) for c, s in zip(cells, svcs)
                    ),
                )
            )
        )

    def motion_pool(agent):
        pool = ["true"]
        for p in sorted(agent.ts.props):
            pool += [f"G F {p}", f"F {p}"]
        return pool

    def task_pool(agent):
        others = [s for s in all_services if s not in agent.services]
        pool = ["true"]
        for s in sorted(agent.services):
            pool += [f"G F {s}", f"F {s}", f"{s} || !{s}"]
            if others:
                other = rng.choice(others)
                pool += [f"G F ({s} && {other})", f"F ({s} && {other})", f"G (!{s} || {other})"]
        return pool

    motion = {a.agent_id: rng.choice(motion_pool(a)) for a in agents}
    task = {a.agent_id: rng.choice(task_pool(a)) for a in agents}
    return make_scenario(agents, motion, task, name="fuzz")


@pytest.fixture(scope="session")
def three_robots():
    return load_bundled("three_robots")


@pytest.fixture(scope="session")
def three_robots_result(three_robots):
    """One timed pipeline run shared by the structural and acceptance tests."""
    started = time.monotonic()
    result = run_synthesis(three_robots, cap=2_000_000)
    result.stats["elapsed_seconds"] = time.monotonic() - started
    return result


@pytest.fixture(scope="session")
def two_pairs():
    return load_bundled("two_pairs")


@pytest.fixture(scope="session")
def asymmetry():
    return load_bundled("asymmetry")
