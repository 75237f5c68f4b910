"""Scenario and strategy files.

Scenarios are strict JSON documents: unknown keys are rejected so typos
surface immediately.  Agents come either as grid descriptions or as explicit
transition systems; stay self-loops are added automatically when missing.
Strategy files hold one step record per line with a stable field order, so
synthesis output reloads losslessly for simulation.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from . import ltl
from .agents import AgentModel, GridSpec, Scenario, build_grid_agent
from .buchi import Silent, TransitionSystem
from .globalprod import Strategy, StrategyStep


class ScenarioFormatError(ValueError):
    pass


def _require_keys(obj: dict, where: str, required, optional=()):
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ScenarioFormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ScenarioFormatError(f"{where}: missing keys {sorted(missing)}")


def _cell(value, where: str):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ScenarioFormatError(f"{where}: expected a cell [x, y]")
    return (value[0], value[1])


def _load_grid_agent(agent_id: int, data: dict, where: str, declared_services) -> AgentModel:
    _require_keys(
        data,
        where,
        required=("width", "height", "initial"),
        optional=("obstacles", "walls", "one_way", "rooms", "service_cells", "stay_name"),
    )
    rooms = {}
    for room, rect in data.get("rooms", {}).items():
        if not (isinstance(rect, list) and len(rect) == 4):
            raise ScenarioFormatError(f"{where}.rooms.{room}: expected [x0, y0, x1, y1]")
        x0, y0, x1, y1 = rect
        for x in range(x0, x1 + 1):
            for y in range(y0, y1 + 1):
                rooms[(x, y)] = room
    service_cells = []
    for i, entry in enumerate(data.get("service_cells", [])):
        _require_keys(entry, f"{where}.service_cells[{i}]", required=("cell", "services"))
        service_cells.append(
            (_cell(entry["cell"], f"{where}.service_cells[{i}].cell"), frozenset(entry["services"]))
        )
    try:
        spec = GridSpec(
            agent_id=agent_id,
            width=data["width"],
            height=data["height"],
            initial=_cell(data["initial"], f"{where}.initial"),
            obstacles=frozenset(_cell(c, f"{where}.obstacles") for c in data.get("obstacles", [])),
            walls=frozenset(
                frozenset((_cell(pair[0], f"{where}.walls"), _cell(pair[1], f"{where}.walls")))
                for pair in data.get("walls", [])
            ),
            one_way=frozenset(
                (_cell(pair[0], f"{where}.one_way"), _cell(pair[1], f"{where}.one_way"))
                for pair in data.get("one_way", [])
            ),
            rooms=rooms,
            service_cells=tuple(service_cells),
            stay_name=data.get("stay_name", "stay"),
        )
        agent = build_grid_agent(spec)
    except ValueError as exc:
        raise ScenarioFormatError(f"{where}: {exc}") from exc
    agent.services = frozenset(agent.services | declared_services)
    return agent


def _load_explicit_agent(agent_id: int, data: dict, where: str, declared_services, stay_name) -> AgentModel:
    _require_keys(
        data,
        where,
        required=("states", "initial", "actions", "transitions"),
        optional=("propositions",),
    )
    ts = TransitionSystem()
    for i, st in enumerate(data["states"]):
        _require_keys(st, f"{where}.states[{i}]", required=("name",), optional=("labels",))
        ts.add_state(st["name"], st.get("labels", ()))
    names = {name: idx for idx, name in enumerate(ts.states)}
    if data["initial"] not in names:
        raise ScenarioFormatError(f"{where}: unknown initial state {data['initial']!r}")
    ts.initial = names[data["initial"]]
    ts.props = set(data.get("propositions", [])) | {p for labels in ts.labels for p in labels}

    labels = {}
    services = set(declared_services)
    for i, act in enumerate(data["actions"]):
        _require_keys(act, f"{where}.actions[{i}]", required=("name",), optional=("services", "silent"))
        ts.add_action(act["name"])
        if act.get("silent", False):
            labels[act["name"]] = Silent(agent_id)
        else:
            provided = frozenset(act.get("services", []))
            labels[act["name"]] = provided
            services |= provided
    for i, tr in enumerate(data["transitions"]):
        if not (isinstance(tr, list) and len(tr) == 3):
            raise ScenarioFormatError(f"{where}.transitions[{i}]: expected [src, action, dst]")
        src, action, dst = tr
        if src not in names or dst not in names:
            raise ScenarioFormatError(f"{where}.transitions[{i}]: unknown state")
        if action not in labels:
            raise ScenarioFormatError(f"{where}.transitions[{i}]: unknown action {action!r}")
        ts.add_transition(names[src], action, names[dst])

    if stay_name not in labels:
        ts.add_action(stay_name)
        labels[stay_name] = Silent(agent_id)
    for s in range(len(ts.states)):
        if (s, stay_name) not in ts.trans:
            ts.add_transition(s, stay_name, s)
    return AgentModel(agent_id, ts, frozenset(services), labels, stay_name)


def scenario_from_dict(data: dict) -> Scenario:
    _require_keys(
        data,
        "scenario",
        required=("agents", "motion_formulas", "task_formulas"),
        optional=("name", "propositions", "simulation"),
    )
    agents = []
    for i, entry in enumerate(data["agents"]):
        where = f"agents[{i}]"
        _require_keys(
            entry,
            where,
            required=("id",),
            optional=("grid", "explicit_ts", "services", "stay_name"),
        )
        agent_id = entry["id"]
        if not isinstance(agent_id, int):
            raise ScenarioFormatError(f"{where}.id: expected an integer")
        declared = frozenset(entry.get("services", []))
        stay_name = entry.get("stay_name", "stay")
        if ("grid" in entry) == ("explicit_ts" in entry):
            raise ScenarioFormatError(f"{where}: exactly one of 'grid' or 'explicit_ts' required")
        if "grid" in entry:
            grid = dict(entry["grid"])
            grid.setdefault("stay_name", stay_name)
            agent = _load_grid_agent(agent_id, grid, f"{where}.grid", declared)
        else:
            agent = _load_explicit_agent(
                agent_id, entry["explicit_ts"], f"{where}.explicit_ts", declared, stay_name
            )
        extra = set(data.get("propositions", []))
        agent.ts.props = set(agent.ts.props) | extra
        agents.append(agent)

    agents.sort(key=lambda a: a.agent_id)
    all_services = frozenset(s for a in agents for s in a.services)
    motion = {}
    task = {}
    motion_texts = {}
    task_texts = {}
    for kind, store, texts, alphabet_of in (
        ("motion_formulas", motion, motion_texts, lambda a: frozenset(a.ts.props)),
        ("task_formulas", task, task_texts, lambda a: all_services),
    ):
        entries = data[kind]
        if not isinstance(entries, dict):
            raise ScenarioFormatError(f"{kind}: expected an object keyed by agent id")
        for agent in agents:
            key = str(agent.agent_id)
            if key not in entries:
                raise ScenarioFormatError(f"{kind}: missing formula for agent {key}")
            text = entries[key]
            try:
                store[agent.agent_id] = ltl.parse(text, alphabet_of(agent))
            except ltl.LtlSyntaxError as exc:
                raise ScenarioFormatError(f"{kind}[{key}]: {exc}") from exc
            texts[agent.agent_id] = text
        unknown = set(entries) - {str(a.agent_id) for a in agents}
        if unknown:
            raise ScenarioFormatError(f"{kind}: formulas for unknown agents {sorted(unknown)}")

    simulation = data.get("simulation", {})
    if simulation:
        _require_keys(
            simulation,
            "simulation",
            required=(),
            optional=("seed", "duration", "unrollings", "action_durations"),
        )
    return Scenario(
        agents=agents,
        motion_formulas=motion,
        task_formulas=task,
        motion_texts=motion_texts,
        task_texts=task_texts,
        name=data.get("name", "scenario"),
        simulation=dict(simulation),
    )


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def strategy_to_dict(strategy: Strategy) -> dict:
    def steps(part):
        return [
            {"state": s.state, "action": s.action, "sync": sorted(s.sync)} for s in part
        ]

    return {
        "agent": strategy.agent_id,
        "prefix": steps(strategy.prefix),
        "cycle": steps(strategy.cycle),
    }


def strategy_text(strategy: Strategy) -> str:
    """One step record per line, stable field order."""
    data = strategy_to_dict(strategy)
    lines = ["{", f'  "agent": {data["agent"]},']
    for part in ("prefix", "cycle"):
        records = [
            json.dumps(r, sort_keys=False, separators=(", ", ": ")) for r in data[part]
        ]
        body = ",\n    ".join(records)
        tail = "," if part == "prefix" else ""
        if records:
            lines.append(f'  "{part}": [\n    {body}\n  ]{tail}')
        else:
            lines.append(f'  "{part}": []{tail}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def strategy_from_dict(data: dict) -> Strategy:
    _require_keys(data, "strategy", required=("agent", "prefix", "cycle"))

    def steps(part):
        out = []
        for i, rec in enumerate(data[part]):
            _require_keys(rec, f"strategy.{part}[{i}]", required=("state", "action", "sync"))
            out.append(
                StrategyStep(rec["state"], rec["action"], frozenset(rec["sync"]))
            )
        return tuple(out)

    return Strategy(data["agent"], steps("prefix"), steps("cycle"))


def save_strategies(strategies: dict, directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for aid in sorted(strategies):
        path = directory / f"strategy_agent_{aid}.json"
        path.write_text(strategy_text(strategies[aid]))
        paths.append(path)
    return paths


def load_strategies(paths) -> dict:
    out = {}
    for path in paths:
        data = json.loads(Path(path).read_text())
        st = strategy_from_dict(data)
        out[st.agent_id] = st
    return out


def bundled_scenario_path(name: str) -> Path:
    """Path of a packaged example scenario, e.g. 'three_robots'."""
    return Path(resources.files("syncplan.data") / f"{name}.json")


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
