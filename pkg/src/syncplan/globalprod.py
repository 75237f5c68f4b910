"""Team-level product, accepting-lasso selection, and strategy extraction.

Joint transitions are enumerated as dependency closures of single seed moves:
a coalition consists of exactly the agents pulled in transitively by the
dependency sets of the chosen per-agent transitions, so nobody synchronizes
without a reason.  The joint label is the union of the members' own service
contributions and every member's transition must agree with that label on the
services its own task automaton can distinguish.

Strategy extraction projects a global accepting lasso onto each agent and
replays the recorded witnesses down through the reduced products until plain
transition-system steps with synchronization requests remain.  Candidate
lassos must wind the acceptance counter through every position, and the
expanded strategies must keep every agent's produced word either infinite or
ending in silence its task automaton tolerates; candidates failing these
checks are discarded and the search continues.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import lcm

from .buchi import (
    EXPLICIT_MODE,
    BuchiAutomaton,
    Lasso,
    Silent,
    _bfs,
    _good_components,
    _walk_backward,
    _walk_forward,
    find_accepting_lasso,
    language_empty,
)
from .taskprod import ReducedTaskMotionProduct


class EmptyLanguageError(RuntimeError):
    """A pipeline stage produced an automaton with an empty language."""

    def __init__(self, stage: str, agent_id=None):
        self.stage = stage
        self.agent_id = agent_id
        where = stage if agent_id is None else f"{stage} stage of agent {agent_id}"
        super().__init__(f"no accepting run exists ({where})")


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategyStep:
    state: str
    action: str
    sync: frozenset


@dataclass(frozen=True)
class Strategy:
    agent_id: int
    prefix: tuple
    cycle: tuple

    def steps(self):
        return self.prefix + self.cycle


@dataclass
class GlobalProduct:
    """Product over all reduced task-and-motion automata plus a team counter.

    State tags are (component state tuple, counter); the counter walks
    1..N+1, advancing when the agent at the current position moves into its
    accepting set.  `tr_back[tid]` is ("local", position, transition id) or
    ("joint", coalition ids, {position: transition id}).
    """

    automaton: BuchiAutomaton
    products: list
    agent_ids: list

    def position_of(self, agent_id: int) -> int:
        return self.agent_ids.index(agent_id)


def build_global_product(products) -> GlobalProduct:
    products = sorted(products, key=lambda p: p.origin.agent_id)
    agent_ids = [p.origin.agent_id for p in products]
    id2pos = {aid: pos for pos, aid in enumerate(agent_ids)}
    n = len(products)
    autos = [p.automaton for p in products]
    own = [p.origin.own_services for p in products]
    fsyn = [p.origin.foreign_syntactic for p in products]

    silent_out = []
    joint_out = []
    for a in autos:
        s_out = {}
        j_out = {}
        for tid, t in enumerate(a.transitions):
            if isinstance(t.label, Silent):
                s_out.setdefault(t.src, []).append(tid)
            else:
                j_out.setdefault(t.src, []).append(tid)
        silent_out.append(s_out)
        joint_out.append(j_out)

    def dep_of(pos, tid):
        return autos[pos].tr_dep.get(tid, frozenset((agent_ids[pos],)))

    def joint_moves_at(qs):
        """Complete closed coalition assignments, deduplicated across seeds."""
        results = []
        seen = set()
        for seed_pos in range(n):
            for seed_tid in joint_out[seed_pos].get(qs[seed_pos], ()):
                stack = [{seed_pos: seed_tid}]
                while stack:
                    assign = stack.pop()
                    need = set()
                    for pos, tid in assign.items():
                        for aid in dep_of(pos, tid):
                            other = id2pos.get(aid)
                            if other is None:
                                need = None
                                break
                            if other not in assign:
                                need.add(other)
                        if need is None:
                            break
                    if need is None:
                        continue
                    if need:
                        pos = min(need)
                        for tid in joint_out[pos].get(qs[pos], ()):
                            ext = dict(assign)
                            ext[pos] = tid
                            stack.append(ext)
                        continue
                    sigma = frozenset()
                    for pos, tid in assign.items():
                        sigma |= autos[pos].transitions[tid].label & own[pos]
                    consistent = all(
                        autos[pos].transitions[tid].label == sigma & (own[pos] | fsyn[pos])
                        for pos, tid in assign.items()
                    )
                    if not consistent:
                        continue
                    coalition = frozenset(agent_ids[pos] for pos in assign)
                    targets = tuple(
                        autos[pos].transitions[assign[pos]].dst if pos in assign else qs[pos]
                        for pos in range(n)
                    )
                    key = (coalition, sigma, targets)
                    if key in seen:
                        continue
                    seen.add(key)
                    results.append((sigma, coalition, dict(assign), targets))
        results.sort(key=lambda r: (tuple(sorted(r[0])), tuple(sorted(r[1])), r[3]))
        return results

    def advance(j, moved_positions, targets):
        if j == n + 1:
            return 1
        pos = j - 1
        if pos in moved_positions and targets[pos] in autos[pos].accepting:
            return j + 1
        return j

    product = BuchiAutomaton(EXPLICIT_MODE)
    ids = {}

    def state_id(key):
        if key not in ids:
            ids[key] = product.add_state(key)
            qs, j = key
            if j == n and qs[n - 1] in autos[n - 1].accepting:
                product.accepting.add(ids[key])
        return ids[key]

    start = (tuple(a.initial for a in autos), 1)
    product.initial = state_id(start)
    queue = deque([start])
    seen_states = {start}

    def push(src_key, label, dst_key, dep, back):
        tid = product.add_transition(state_id(src_key), label, state_id(dst_key))
        product.tr_dep[tid] = dep
        product.tr_back[tid] = back
        if dst_key not in seen_states:
            seen_states.add(dst_key)
            queue.append(dst_key)

    while queue:
        key = queue.popleft()
        qs, j = key
        for pos in range(n):
            for tid in silent_out[pos].get(qs[pos], ()):
                t = autos[pos].transitions[tid]
                targets = tuple(t.dst if p == pos else qs[p] for p in range(n))
                j2 = advance(j, {pos}, targets)
                push(
                    key,
                    Silent(agent_ids[pos]),
                    (targets, j2),
                    frozenset((agent_ids[pos],)),
                    ("local", pos, tid),
                )
        for sigma, coalition, assign, targets in joint_moves_at(qs):
            j2 = advance(j, set(assign), targets)
            push(key, sigma, (targets, j2), coalition, ("joint", coalition, assign))

    return GlobalProduct(product, products, agent_ids)


def _cycle_states(a, lasso):
    states = []
    cur = a.initial
    for tid in lasso.prefix:
        cur = a.transitions[tid].dst
    states.append(cur)
    for tid in lasso.cycle:
        cur = a.transitions[tid].dst
        states.append(cur)
    return states


def _counter_winds(gp: GlobalProduct, lasso: Lasso) -> bool:
    """The cycle must pass the top counter value, which forces every agent to
    enter its accepting set within the cycle."""
    a = gp.automaton
    top = len(gp.products) + 1
    return any(a.state_tags[s][1] == top for s in _cycle_states(a, lasso))


def _agent_alive_edges(gp, members):
    """Per agent, in-component transitions whose replay provides services."""
    a = gp.automaton
    alive = {aid: [] for aid in gp.agent_ids}
    for tid, t in enumerate(a.transitions):
        if t.src not in members or t.dst not in members:
            continue
        back = a.tr_back[tid]
        if back[0] == "joint":
            for aid in a.tr_dep[tid]:
                alive[aid].append(tid)
        elif _witness_emits(gp.products[back[1]], back[2]):
            alive[gp.agent_ids[back[1]]].append(tid)
    return alive


def _witness_emits(product, low_tid) -> bool:
    """Would replaying this transition make the agent provide services?"""
    bar = product.origin.automaton
    for w in product.automaton.tr_witness.get(low_tid, ()):
        for step in list(w.steps) + list(w.loop):
            if not isinstance(bar.transitions[step].label, Silent):
                return True
    return False


def _component_capabilities(gp, comp, comps, good_comps):
    """Which agents each component can serve, and which it can host at all.

    An agent is *served* when the component holds a transition whose replay
    makes it provide services; it is *hostable* when it is served or can park
    forever at a silent spot its task automaton tolerates.  Components that
    cannot host every agent admit no valid lasso and are skipped outright;
    among the rest, better-served components are searched first.
    """
    a = gp.automaton
    emit_cache = [dict() for _ in gp.products]

    def emits(pos, low_tid):
        cache = emit_cache[pos]
        if low_tid not in cache:
            cache[low_tid] = _witness_emits(gp.products[pos], low_tid)
        return cache[low_tid]

    served = {c: set() for c in good_comps}
    for tid, t in enumerate(a.transitions):
        c = comp[t.src]
        if c not in served or comp[t.dst] != c:
            continue
        back = a.tr_back[tid]
        if back[0] == "joint":
            served[c] |= a.tr_dep[tid]
        elif emits(back[1], back[2]):
            served[c].add(gp.agent_ids[back[1]])

    silence_caches = [p.origin.__dict__.setdefault("_silence_cache", {}) for p in gp.products]

    def parkable(pos, hat_states):
        product = gp.products[pos]
        bar_tags = product.origin.automaton.state_tags
        for hat_state in hat_states:
            for bar_state in product.automaton.state_tags[hat_state]:
                psi = bar_tags[bar_state][1]
                if _accepts_silence(product.origin.task_spec, psi, silence_caches[pos]):
                    return True
        return False

    hostable = {}
    for c in good_comps:
        members = comps[c]
        agents = set(served[c])
        for pos, aid in enumerate(gp.agent_ids):
            if aid in agents:
                continue
            hat_states = {a.state_tags[s][0][pos] for s in members}
            if parkable(pos, hat_states):
                agents.add(aid)
        hostable[c] = agents
    return served, hostable


def _candidate_lassos(gp: GlobalProduct):
    """Deterministic stream of accepting lassos, most promising first."""
    a = gp.automaton
    base = find_accepting_lasso(a)
    if base is None:
        raise EmptyLanguageError("global")
    yield base

    n = len(gp.products)
    comp, comps, good_comps = _good_components(a)
    dist, parent = _bfs(a, a.initial)
    served, hostable = _component_capabilities(gp, comp, comps, good_comps)
    everyone = set(gp.agent_ids)
    anchors = sorted(
        (-len(served[comp[s]]), dist[s], s)
        for s in range(a.n_states)
        if s in a.accepting
        and dist[s] is not None
        and comp[s] in good_comps
        and hostable[comp[s]] == everyone
    )
    for _score, _d, v in anchors:
        members = set(comps[comp[v]])
        fwd, fpar = _bfs(a, v, allowed=members)
        bwd, bpar = _bfs(a, v, allowed=members, reverse=True)
        prefix = tuple(_walk_forward(a, parent, a.initial, v))

        tops = sorted(
            h
            for h in members
            if a.state_tags[h][1] == n + 1
            and h != v
            and fwd[h] is not None
            and bwd[h] is not None
        )
        # the routed cycle deliberately serves every agent, so it is by far
        # the most likely candidate to survive the validity checks; plain
        # counter-winding cycles follow as shorter-but-riskier alternatives
        alive = _agent_alive_edges(gp, members)
        route = _routed_cycle(gp, v, members, tops, alive)
        if route:
            yield Lasso(prefix, tuple(route))
        for h in sorted(tops, key=lambda h: (fwd[h] + bwd[h], h))[:8]:
            cyc = _walk_forward(a, fpar, v, h) + _walk_backward(a, bpar, v, h)
            yield Lasso(prefix, tuple(cyc))


def _routed_cycle(gp, v, members, top_states, alive_edges):
    """Greedy cycle: wind the counter, then visit a word-keeping edge per agent."""
    a = gp.automaton
    route = []
    cur = v
    if not top_states:
        return None

    dist, par = _bfs(a, cur, allowed=members)
    best = None
    for s in top_states:
        if dist[s] is not None and (best is None or dist[s] < dist[best]):
            best = s
    if best is None:
        return None
    route.extend(_walk_forward(a, par, cur, best))
    cur = best

    alive_sets = {aid: set(edges) for aid, edges in alive_edges.items()}
    for aid in sorted(gp.agent_ids):
        if any(tid in alive_sets[aid] for tid in route):
            continue
        dist, par = _bfs(a, cur, allowed=members)
        best = None
        for tid in alive_edges.get(aid, []):
            src = a.transitions[tid].src
            if dist[src] is None:
                continue
            key = (dist[src], tid)
            if best is None or key < best[0]:
                best = (key, tid, src)
        if best is None:
            continue
        _key, tid, src = best
        route.extend(_walk_forward(a, par, cur, src))
        route.append(tid)
        cur = a.transitions[tid].dst

    dist, par = _bfs(a, cur, allowed=members)
    if dist[v] is None:
        return None
    route.extend(_walk_forward(a, par, cur, v))
    return route


def _variant_for(witnesses, origin):
    for w in witnesses:
        if w.src == origin:
            return w
    raise AssertionError(f"no witness variant starts at state {origin}")


@dataclass
class _Expansion:
    prefix_emit: list
    passes: list  # [(emitted steps, state after the pass)]
    split: int
    absorbed: tuple  # (approach steps, loop steps, anchor) or None


class _AgentExpander:
    """Replays one agent's projected run down to transition-system steps."""

    MAX_PASSES = 64

    def __init__(self, product: ReducedTaskMotionProduct, agent_id: int):
        self.agent_id = agent_id
        self.hat = product.automaton
        self.tm = product.origin
        self.bar = self.tm.automaton
        self.rm = self.tm.rm
        self.ddot = self.rm.automaton
        self.mp = self.rm.origin
        self.agent = self.mp.agent

    def _pass(self, hat_steps, state, emit):
        bar_orig, p_orig = state
        bar_steps = []
        for hat_tid, sync in hat_steps:
            w = _variant_for(self.hat.tr_witness[hat_tid], bar_orig)
            assert not w.absorbing, "task-level witnesses are plain paths"
            bar_steps.append((w.steps[0], sync))
            bar_steps.extend((s, None) for s in w.steps[1:])
            bar_orig = w.dst
        absorbed = None
        for bar_tid, sync in bar_steps:
            rm_tid, _task_tid = self.bar.tr_back[bar_tid]
            w = _variant_for(self.ddot.tr_witness[rm_tid], p_orig)
            if w.absorbing:
                if absorbed is None:
                    absorbed = w
                continue
            emit.append((w.steps[0], sync))
            emit.extend((s, None) for s in w.steps[1:])
            p_orig = w.dst
        return (bar_orig, p_orig), absorbed

    def expand(self, hat_prefix, hat_cycle) -> _Expansion:
        state = (self.bar.initial, self.mp.automaton.initial)
        prefix_emit = []
        state, _ = self._pass(hat_prefix, state, prefix_emit)
        passes = []
        seen = {state: 0}
        while True:
            emit = []
            nxt, absorbed = self._pass(hat_cycle, state, emit)
            if not emit:
                assert absorbed is not None, "a cycle pass must emit or absorb"
                approach = [(tid, None) for tid in absorbed.steps]
                loop = [(tid, None) for tid in absorbed.loop]
                return _Expansion(
                    prefix_emit, passes, len(passes), (approach, loop, absorbed.dst)
                )
            passes.append((emit, nxt))
            if nxt in seen:
                return _Expansion(prefix_emit, passes, seen[nxt], None)
            if len(passes) > self.MAX_PASSES:
                raise SynthesisError("cycle expansion failed to close")
            seen[nxt] = len(passes)
            state = nxt

    def materialize(self, expansion: _Expansion, shift: int, period: int):
        """Returns (strategy, trailing task-product state of the cycle)."""
        if expansion.absorbed is not None:
            approach, loop, anchor = expansion.absorbed
            emitted_prefix = list(expansion.prefix_emit)
            for emit, _state in expansion.passes:
                emitted_prefix.extend(emit)
            emitted_prefix.extend(approach)
            return self._to_strategy(emitted_prefix, list(loop)), anchor
        j = expansion.split
        k = len(expansion.passes) - j
        assert k >= 1 and shift >= j and period % k == 0

        def emit_at(idx):
            return expansion.passes[idx if idx < j else j + (idx - j) % k][0]

        def state_at(idx):
            return expansion.passes[idx if idx < j else j + (idx - j) % k][1]

        prefix = list(expansion.prefix_emit)
        for idx in range(shift):
            prefix.extend(emit_at(idx))
        cycle = []
        for idx in range(shift, shift + period):
            cycle.extend(emit_at(idx))
        trailing_bar = state_at(shift + period - 1)[0]
        return self._to_strategy(prefix, cycle), trailing_bar

    def _to_strategy(self, prefix_emit, cycle_emit) -> Strategy:
        assert cycle_emit, "strategies need a nonempty cycle"
        singleton = frozenset((self.agent_id,))
        auto = self.mp.automaton

        def convert(emitted):
            steps = []
            for p_tid, sync in emitted:
                t = auto.transitions[p_tid]
                s_idx, _q = auto.state_tags[t.src]
                steps.append(
                    StrategyStep(
                        self.agent.ts.states[s_idx],
                        auto.tr_back[p_tid],
                        sync if sync is not None else singleton,
                    )
                )
            return steps

        # replay sanity: transitions must chain and the cycle must close
        chain = [tid for tid, _ in prefix_emit + cycle_emit]
        for first, second in zip(chain, chain[1:]):
            assert auto.transitions[first].dst == auto.transitions[second].src
        cyc = [tid for tid, _ in cycle_emit]
        assert auto.transitions[cyc[-1]].dst == auto.transitions[cyc[0]].src
        return Strategy(self.agent_id, tuple(convert(prefix_emit)), tuple(convert(cycle_emit)))


def _project_agent(gp: GlobalProduct, lasso: Lasso, pos: int):
    a = gp.automaton
    aid = gp.agent_ids[pos]

    def kept(tids):
        steps = []
        for tid in tids:
            dep = a.tr_dep[tid]
            if aid not in dep:
                continue
            back = a.tr_back[tid]
            low_tid = back[2] if back[0] == "local" else back[2][pos]
            steps.append((low_tid, frozenset(dep)))
        return steps

    return kept(lasso.prefix), kept(lasso.cycle)


def _accepts_silence(spec: BuchiAutomaton, state: int, cache: dict) -> bool:
    """Can the task automaton accept the empty service set forever from here?"""
    if state in cache:
        return cache[state]
    sub = BuchiAutomaton(spec.mode)
    for s in range(spec.n_states):
        sub.add_state()
    sub.initial = state
    sub.accepting = set(spec.accepting)
    empty = frozenset()
    for t in spec.transitions:
        if t.label.accepts(empty):
            sub.add_transition(t.src, t.label, t.dst)
    result = not language_empty(sub)
    cache[state] = result
    return result


def _expand_lasso(gp: GlobalProduct, lasso: Lasso):
    """Project and replay one lasso.

    Returns (strategies, None) on success, or (None, agent id) naming an
    agent whose word would die even though its task does not tolerate
    eternal silence.
    """
    expansions = {}
    expanders = {}
    for pos, product in enumerate(gp.products):
        aid = gp.agent_ids[pos]
        hat_prefix, hat_cycle = _project_agent(gp, lasso, pos)
        if not hat_cycle:
            return None, aid
        expander = _AgentExpander(product, aid)
        expanders[aid] = expander
        expansions[aid] = expander.expand(hat_prefix, hat_cycle)

    live = [e for e in expansions.values() if e.absorbed is None]
    shift = max((e.split for e in live), default=0)
    period = 1
    for e in live:
        period = lcm(period, len(e.passes) - e.split)

    strategies = {}
    for aid in sorted(expansions):
        expander = expanders[aid]
        strategy, trailing_bar = expander.materialize(expansions[aid], shift, period)
        agent = expander.agent
        alive = any(not agent.is_silent(step.action) for step in strategy.cycle)
        if not alive:
            psi_state = expander.bar.state_tags[trailing_bar][1]
            cache = expander.tm.__dict__.setdefault("_silence_cache", {})
            if not _accepts_silence(expander.tm.task_spec, psi_state, cache):
                return None, aid
        strategies[aid] = strategy
    return strategies, None


def _unhostable_agent(gp: GlobalProduct):
    """An agent no reachable accepting component can serve or park, if any."""
    a = gp.automaton
    comp, comps, good_comps = _good_components(a)
    if not good_comps:
        return None
    dist, _ = _bfs(a, a.initial)
    reachable = {
        comp[s]
        for s in range(a.n_states)
        if dist[s] is not None and comp[s] in good_comps and s in a.accepting
    }
    if not reachable:
        return None
    _served, hostable = _component_capabilities(gp, comp, comps, reachable)
    for aid in sorted(gp.agent_ids):
        if all(aid not in hostable[c] for c in reachable):
            return aid
    return None


def synthesize(gp: GlobalProduct) -> dict:
    """Per-agent strategies realizing one accepting run of the global product."""
    blocked = {}
    for lasso in _candidate_lassos(gp):
        if not _counter_winds(gp, lasso):
            continue
        strategies, failed = _expand_lasso(gp, lasso)
        if strategies is not None:
            return strategies
        blocked[failed] = blocked.get(failed, 0) + 1
    if blocked:
        worst = max(sorted(blocked), key=lambda aid: blocked[aid])
        raise EmptyLanguageError("task", worst)
    starved = _unhostable_agent(gp)
    if starved is not None:
        raise EmptyLanguageError("task", starved)
    raise SynthesisError(
        "the global product accepts runs, but none winds the acceptance counter"
    )


def minimize_synchronizations(strategies: dict, scenario) -> dict:
    """Drop pointless stay steps and pointless coalition requests.

    Stay steps with singleton requests vanish (keeping at least one cycle
    step); a coalition request downgrades to a singleton when every member's
    matching step executes a silent action.
    """
    slim = {}
    for aid, st in strategies.items():
        agent = scenario.agent(aid)
        stay = agent.stay_action
        prefix = tuple(s for s in st.prefix if not (s.action == stay and len(s.sync) == 1))
        cycle = tuple(s for s in st.cycle if not (s.action == stay and len(s.sync) == 1))
        if not cycle:
            cycle = (st.cycle[0],)
        slim[aid] = Strategy(aid, prefix, cycle)

    occurrences = {}
    for aid, st in slim.items():
        for part, steps in (("prefix", st.prefix), ("cycle", st.cycle)):
            for idx, step in enumerate(steps):
                if len(step.sync) > 1:
                    occurrences.setdefault((step.sync, part), {}).setdefault(aid, []).append(idx)

    downgrade = set()
    for (coalition, part), members in occurrences.items():
        if set(members) != set(coalition):
            continue
        counts = {len(v) for v in members.values()}
        if len(counts) != 1:
            continue
        for k in range(counts.pop()):
            steps_k = []
            for aid in sorted(coalition):
                st = slim[aid]
                steps = st.prefix if part == "prefix" else st.cycle
                steps_k.append((aid, members[aid][k]))
            if all(
                scenario.agent(aid).is_silent(
                    (slim[aid].prefix if part == "prefix" else slim[aid].cycle)[idx].action
                )
                for aid, idx in steps_k
            ):
                downgrade.update((aid, part, idx) for aid, idx in steps_k)

    if not downgrade:
        return slim
    out = {}
    for aid, st in slim.items():
        def rewrite(part, steps):
            return tuple(
                StrategyStep(s.state, s.action, frozenset((aid,)))
                if (aid, part, idx) in downgrade
                else s
                for idx, s in enumerate(steps)
            )

        out[aid] = Strategy(aid, rewrite("prefix", st.prefix), rewrite("cycle", st.cycle))
    return out


def compute_dependency_classes(task_products) -> list:
    """Finest partition closing the who-depends-on-whom relation."""
    parent = {tm.agent_id: tm.agent_id for tm in task_products}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for tm in task_products:
        deps = tm.automaton.tr_dep
        assert deps is not None
        for dep in deps.values():
            for other in dep:
                if other in parent:
                    union(tm.agent_id, other)
    classes = {}
    for aid in parent:
        classes.setdefault(find(aid), set()).add(aid)
    return [frozenset(classes[root]) for root in sorted(classes)]
