"""Formula-to-automaton translation.

On-the-fly tableau expansion into a generalized acceptance automaton, then
counter-based degeneralization into a plain Buchi automaton, followed by a
bisimulation quotient and co-accessibility pruning to keep sizes modest.
Transitions carry propositional guards, not exploded symbol subsets.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import ltl
from .buchi import (
    GUARD_MODE,
    BuchiAutomaton,
    Guard,
    prune_non_coaccessible,
    quotient_bisimulation,
    reachable_fragment,
)


def _key(f: ltl.Formula) -> str:
    return ltl.formula_text(f)


def _is_literal(f: ltl.Formula) -> bool:
    if f.kind in (ltl.TRUE, ltl.FALSE, ltl.ATOM):
        return True
    return f.kind == ltl.NOT and f.children[0].kind == ltl.ATOM


def _negate_literal(f: ltl.Formula) -> ltl.Formula:
    if f.kind == ltl.NOT:
        return f.children[0]
    return ltl.lnot(f)


@dataclass
class _Node:
    nid: int
    incoming: set
    new: set
    old: set
    next: set


class _Tableau:
    """Node expansion over negation-normal-form formulas."""

    def __init__(self):
        self.nodes: list = []
        self.counter = 1  # node id 0 is the virtual initial node

    def fresh(self, incoming, new, old, nxt) -> _Node:
        node = _Node(self.counter, set(incoming), set(new), set(old), set(nxt))
        self.counter += 1
        return node

    def expand(self, node: _Node):
        stack = [node]
        while stack:
            cur = stack.pop()
            if not cur.new:
                match = None
                for existing in self.nodes:
                    if existing.old == cur.old and existing.next == cur.next:
                        match = existing
                        break
                if match is not None:
                    match.incoming |= cur.incoming
                    continue
                self.nodes.append(cur)
                stack.append(self.fresh({cur.nid}, cur.next, set(), set()))
                continue
            f = min(cur.new, key=_key)
            cur.new.discard(f)
            if f in cur.old:
                stack.append(cur)
                continue
            if _is_literal(f):
                if f.kind == ltl.FALSE or _negate_literal(f) in cur.old:
                    continue  # contradiction, drop this node
                cur.old.add(f)  # `true` included: fulfillment checks look it up
                stack.append(cur)
                continue
            a = f.children[0]
            b = f.children[1] if len(f.children) > 1 else None
            if f.kind == ltl.AND:
                cur.old.add(f)
                cur.new |= {a, b} - cur.old
                stack.append(cur)
            elif f.kind == ltl.NEXT:
                cur.old.add(f)
                cur.next.add(a)
                stack.append(cur)
            elif f.kind == ltl.ALWAYS:
                cur.old.add(f)
                cur.new |= {a} - cur.old
                cur.next.add(f)
                stack.append(cur)
            elif f.kind in (ltl.OR, ltl.UNTIL, ltl.RELEASE, ltl.EVENTUALLY):
                left = self.fresh(cur.incoming, cur.new, cur.old | {f}, cur.next)
                right = self.fresh(cur.incoming, cur.new, cur.old | {f}, cur.next)
                if f.kind == ltl.OR:
                    left.new |= {a} - left.old
                    right.new |= {b} - right.old
                elif f.kind == ltl.UNTIL:
                    left.new |= {a} - left.old
                    left.next.add(f)
                    right.new |= {b} - right.old
                elif f.kind == ltl.RELEASE:
                    left.new |= {b} - left.old
                    left.next.add(f)
                    right.new |= {x for x in (a, b)} - right.old
                else:  # eventually: a or X F a
                    left.next.add(f)
                    right.new |= {a} - right.old
                stack.append(right)
                stack.append(left)
            else:
                raise ValueError(f"unexpected kind in normal form: {f.kind}")


def _liveness_obligations(f: ltl.Formula):
    """Subformulas whose postponement must not last forever (until, eventually)."""
    seen = []
    stack = [f]
    visited = set()
    while stack:
        g = stack.pop()
        if g in visited:
            continue
        visited.add(g)
        if g.kind in (ltl.UNTIL, ltl.EVENTUALLY):
            seen.append(g)
        stack.extend(g.children)
    return sorted(seen, key=_key)


def _guard_of(node: _Node) -> Guard:
    pos = {g.name for g in node.old if g.kind == ltl.ATOM}
    neg = {g.children[0].name for g in node.old if g.kind == ltl.NOT}
    return Guard(frozenset(pos), frozenset(neg))


def translate(f: ltl.Formula) -> BuchiAutomaton:
    """Automaton over guard-labeled transitions accepting exactly models of f."""
    g = ltl.to_nnf(f)
    tableau = _Tableau()
    tableau.expand(tableau.fresh({0}, {g}, set(), set()))
    nodes = tableau.nodes
    obligations = _liveness_obligations(g)

    # generalized automaton: state 0 is initial, states 1.. are tableau nodes
    ids = {0: 0}
    gba = BuchiAutomaton(GUARD_MODE)
    gba.add_state("init")
    for node in nodes:
        ids[node.nid] = gba.add_state(None)
    for node in nodes:
        guard = _guard_of(node)
        for src in sorted(node.incoming):
            if src in ids:
                gba.add_transition(ids[src], guard, ids[node.nid])
    gba = reachable_fragment(gba)

    sets = []
    for ob in obligations:
        fulfilled = ob.children[-1]
        members = {0}
        for node in nodes:
            if ob not in node.old or fulfilled in node.old:
                members.add(ids[node.nid])
        sets.append(members)
    ba = _degeneralize(gba, sets)
    ba = quotient_bisimulation(ba)
    ba = prune_non_coaccessible(ba)
    ba = reachable_fragment(ba)
    return ba


def _degeneralize(gba: BuchiAutomaton, sets) -> BuchiAutomaton:
    """Counter construction; with no obligation sets every state accepts."""
    if not sets:
        ba = BuchiAutomaton(GUARD_MODE)
        for s in range(gba.n_states):
            ba.add_state(gba.state_tags[s])
        ba.initial = gba.initial
        ba.accepting = set(range(gba.n_states))
        for t in gba.transitions:
            ba.add_transition(t.src, t.label, t.dst)
        return ba
    k = len(sets)
    ba = BuchiAutomaton(GUARD_MODE)
    ids = {}

    def state_id(q, i):
        key = (q, i)
        if key not in ids:
            ids[key] = ba.add_state(key)
            if i == 0 and q in sets[0]:
                ba.accepting.add(ids[key])
        return ids[key]

    ba.initial = state_id(gba.initial, 0)
    work = [(gba.initial, 0)]
    seen = {(gba.initial, 0)}
    while work:
        q, i = work.pop()
        j = (i + 1) % k if q in sets[i] else i
        for tid in gba.out_transitions(q):
            t = gba.transitions[tid]
            key = (t.dst, j)
            ba.add_transition(state_id(q, i), t.label, state_id(t.dst, j))
            if key not in seen:
                seen.add(key)
                work.append(key)
    return ba
