"""Explicit-state automata: Buchi automata, transition systems, lasso search.

Two transition-label conventions coexist.  Specification automata obtained
from formulas carry propositional guards (conjunctions of literals) and are
evaluated against concrete symbol sets.  Product automata built later in the
pipeline carry explicit labels: either a concrete service set (a frozenset,
possibly empty) or a per-agent silent symbol.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

GUARD_MODE = "guard"
EXPLICIT_MODE = "explicit"


class AlphabetMismatchError(ValueError):
    """Word symbols are incompatible with the automaton's label mode."""


@dataclass(frozen=True)
class Guard:
    """Conjunction of literals over named atoms; empty guard means `true`."""

    pos: frozenset = frozenset()
    neg: frozenset = frozenset()

    def accepts(self, symbol) -> bool:
        return self.pos <= symbol and not (self.neg & symbol)

    def text(self) -> str:
        lits = sorted(self.pos) + ["!" + a for a in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


TRUE_GUARD = Guard()


@dataclass(frozen=True)
class Silent:
    """Silent label of one agent; distinct from the empty service set."""

    agent: int

    def text(self) -> str:
        return f"eps_{self.agent}"


def label_text(label) -> str:
    if isinstance(label, Guard) or isinstance(label, Silent):
        return label.text()
    return "{" + ",".join(sorted(label)) + "}"


def label_sort_key(label):
    if isinstance(label, Silent):
        return (0, label.agent, ())
    if isinstance(label, Guard):
        return (2, 0, (tuple(sorted(label.pos)), tuple(sorted(label.neg))))
    return (1, 0, tuple(sorted(label)))


@dataclass(frozen=True)
class Transition:
    src: int
    label: object
    dst: int


@dataclass(frozen=True)
class Witness:
    """Path of lower-level transitions abbreviated by one reduced transition.

    `steps` chain from state `src` to state `dst` of the finer automaton.
    A nonempty `loop` marks an absorbing witness: `steps` lead to an
    accepting state (`dst`) at which `loop` cycles silently forever.
    """

    steps: tuple
    src: int
    dst: int
    loop: tuple = ()

    @property
    def absorbing(self) -> bool:
        return bool(self.loop)

    def rank(self):
        return (1 if self.loop else 0, len(self.steps) + len(self.loop), self.steps, self.loop)


class BuchiAutomaton:
    """Nondeterministic automaton over infinite words, state ids are dense ints.

    Besides the core structure a few optional per-transition annotation slots
    are carried through the rebuild operations below: witness variants
    (`tr_witness`), dependency coalitions (`tr_dep`) and generic back
    references (`tr_back`).  `state_tags` holds one arbitrary payload per
    state (product tuples, merge classes, display names).
    """

    def __init__(self, mode=GUARD_MODE):
        self.mode = mode
        self.initial = 0
        self.accepting: set = set()
        self.transitions: list = []
        self.state_tags: list = []
        self.tr_witness: dict = {}
        self.tr_dep: dict = {}
        self.tr_back: dict = {}
        self._out = None
        self._inn = None

    @property
    def n_states(self) -> int:
        return len(self.state_tags)

    def add_state(self, tag=None) -> int:
        self.state_tags.append(tag)
        self._out = None
        self._inn = None
        return len(self.state_tags) - 1

    def add_transition(self, src: int, label, dst: int) -> int:
        self.transitions.append(Transition(src, label, dst))
        self._out = None
        self._inn = None
        return len(self.transitions) - 1

    def _index(self):
        if self._out is None:
            out = [[] for _ in range(self.n_states)]
            inn = [[] for _ in range(self.n_states)]
            for tid, t in enumerate(self.transitions):
                out[t.src].append(tid)
                inn[t.dst].append(tid)
            self._out = out
            self._inn = inn

    def out_transitions(self, state: int) -> list:
        self._index()
        return self._out[state]

    def in_transitions(self, state: int) -> list:
        self._index()
        return self._inn[state]

    def copy_shell(self) -> "BuchiAutomaton":
        b = BuchiAutomaton(self.mode)
        b.initial = self.initial
        return b


@dataclass(frozen=True)
class Lasso:
    """Finite witness of an accepting run: a prefix path and a cycle."""

    prefix: tuple
    cycle: tuple

    def states(self, automaton: BuchiAutomaton):
        seq = [automaton.initial]
        for tid in self.prefix + self.cycle:
            seq.append(automaton.transitions[tid].dst)
        return seq


class TransitionSystem:
    """Finite state machine with named actions, deterministic per (state, action)."""

    def __init__(self):
        self.states: list = []
        self.initial = 0
        self.actions: list = []
        self.props: set = set()
        self.labels: list = []
        self.trans: dict = {}
        self.conflicts: list = []
        self._succ = None

    def add_state(self, name: str, labels=()) -> int:
        self.states.append(name)
        self.labels.append(frozenset(labels))
        self._succ = None
        return len(self.states) - 1

    def add_action(self, name: str):
        if name not in self.actions:
            self.actions.append(name)

    def add_transition(self, src: int, action: str, dst: int):
        key = (src, action)
        if key in self.trans and self.trans[key] != dst:
            self.conflicts.append((src, action, self.trans[key], dst))
            return
        self.trans[key] = dst
        self._succ = None

    def state_index(self, name: str) -> int:
        return self.states.index(name)

    def successors(self, state: int):
        """Outgoing (action, target) pairs in declared action order."""
        if self._succ is None:
            succ = [[] for _ in self.states]
            for action in self.actions:
                for s in range(len(self.states)):
                    if (s, action) in self.trans:
                        succ[s].append((action, self.trans[(s, action)]))
            self._succ = succ
        return self._succ[state]


def validate_lasso(a: BuchiAutomaton, lasso: Lasso):
    """Structural checks: contiguity, closed cycle, accepting visit."""
    cur = a.initial
    for tid in lasso.prefix:
        t = a.transitions[tid]
        assert t.src == cur, "prefix not contiguous"
        cur = t.dst
    start = cur
    assert lasso.cycle, "cycle must be nonempty"
    hit = start in a.accepting
    for tid in lasso.cycle:
        t = a.transitions[tid]
        assert t.src == cur, "cycle not contiguous"
        cur = t.dst
        hit = hit or cur in a.accepting
    assert cur == start, "cycle not closed"
    assert hit, "cycle misses accepting states"


def strongly_connected_components(a: BuchiAutomaton):
    """Iterative Tarjan; returns (component id per state, component members)."""
    n = a.n_states
    index = [None] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comp = [None] * n
    comps = []
    counter = 0
    for root in range(n):
        if index[root] is not None:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            outs = a.out_transitions(v)
            while pi < len(outs):
                w = a.transitions[outs[pi]].dst
                pi += 1
                if index[w] is None:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                members = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = len(comps)
                    members.append(w)
                    if w == v:
                        break
                comps.append(sorted(members))
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comp, comps


def _good_components(a: BuchiAutomaton):
    """Component ids that contain an accepting state and an internal edge."""
    comp, comps = strongly_connected_components(a)
    internal = set()
    for t in a.transitions:
        if comp[t.src] == comp[t.dst]:
            internal.add(comp[t.src])
    good = {c for c in internal if any(s in a.accepting for s in comps[c])}
    return comp, comps, good


def _bfs(a: BuchiAutomaton, source: int, allowed=None, reverse=False):
    """Deterministic BFS; returns (dist, parent transition id) arrays."""
    n = a.n_states
    dist = [None] * n
    parent = [None] * n
    if allowed is not None and source not in allowed:
        return dist, parent
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        tids = a.in_transitions(v) if reverse else a.out_transitions(v)
        for tid in tids:
            t = a.transitions[tid]
            w = t.src if reverse else t.dst
            if allowed is not None and w not in allowed:
                continue
            if dist[w] is None:
                dist[w] = dist[v] + 1
                parent[w] = tid
                queue.append(w)
    return dist, parent


def _walk_forward(a, parent, source, target):
    path = []
    cur = target
    while cur != source:
        tid = parent[cur]
        path.append(tid)
        cur = a.transitions[tid].src
    path.reverse()
    return path


def _walk_backward(a, parent, source, target):
    # parent from a reverse BFS rooted at `source`: chains target -> source
    path = []
    cur = target
    while cur != source:
        tid = parent[cur]
        path.append(tid)
        cur = a.transitions[tid].dst
    return path


def language_empty(a: BuchiAutomaton) -> bool:
    """True iff no accepting run exists from the initial state."""
    comp, _comps, good = _good_components(a)
    if not good:
        return True
    dist, _ = _bfs(a, a.initial)
    return not any(dist[s] is not None and comp[s] in good for s in range(a.n_states))


def _shortest_accepting_cycle(a, v, comp, comps):
    """Shortest cycle through `v` inside its component that visits acceptance."""
    members = set(comps[comp[v]])
    fwd, fpar = _bfs(a, v, allowed=members)
    bwd, bpar = _bfs(a, v, allowed=members, reverse=True)
    best = None
    for x in comps[comp[v]]:
        if x not in a.accepting:
            continue
        if x == v:
            for tid in a.out_transitions(v):
                w = a.transitions[tid].dst
                if w not in members or bwd[w] is None:
                    continue
                cand_len = 1 + bwd[w]
                key = (cand_len, x, tid)
                if best is None or key < best[0]:
                    path = [tid] + _walk_backward(a, bpar, v, w)
                    best = (key, path)
        else:
            if fwd[x] is None or bwd[x] is None:
                continue
            key = (fwd[x] + bwd[x], x, -1)
            if best is None or key < best[0]:
                path = _walk_forward(a, fpar, v, x) + _walk_backward(a, bpar, v, x)
                best = (key, path)
    if best is None:
        return None
    return best[0][0], best[1]


def find_accepting_lasso(a: BuchiAutomaton):
    """Deterministic minimal lasso, or None when the language is empty.

    Minimizes prefix length, then cycle length, then breaks ties by smallest
    state id; all searches are breadth-first with transition ids fixing order.
    """
    comp, comps, good = _good_components(a)
    if not good:
        return None
    dist, parent = _bfs(a, a.initial)
    candidates = [s for s in range(a.n_states) if dist[s] is not None and comp[s] in good]
    if not candidates:
        return None
    dmin = min(dist[s] for s in candidates)
    best = None
    for v in sorted(s for s in candidates if dist[s] == dmin):
        res = _shortest_accepting_cycle(a, v, comp, comps)
        if res is None:
            continue
        clen, cycle = res
        key = (clen, v)
        if best is None or key < best[0]:
            best = (key, v, cycle)
    if best is None:
        return None
    _, v, cycle = best
    prefix = _walk_forward(a, parent, a.initial, v)
    lasso = Lasso(tuple(prefix), tuple(cycle))
    validate_lasso(a, lasso)
    return lasso


def _label_matches(a: BuchiAutomaton, label, symbol) -> bool:
    if a.mode == GUARD_MODE:
        if isinstance(symbol, Silent):
            raise AlphabetMismatchError("silent symbol fed to a guard-labeled automaton")
        return label.accepts(symbol)
    if isinstance(label, Silent) or isinstance(symbol, Silent):
        return label == symbol
    return label == symbol


def word_position_count(word) -> int:
    return len(word.prefix) + len(word.period)


def check_lasso_membership(a: BuchiAutomaton, word) -> bool:
    """Does the automaton accept prefix . period^omega?

    Builds the synchronous product with the lasso-shaped word automaton and
    tests emptiness.
    """
    symbols = list(word.prefix) + list(word.period)
    n = len(symbols)
    loop_to = len(word.prefix)
    product = BuchiAutomaton(mode=EXPLICIT_MODE)
    ids = {}

    def state_id(pos, q):
        key = (pos, q)
        if key not in ids:
            ids[key] = product.add_state(key)
            if q in a.accepting:
                product.accepting.add(ids[key])
        return ids[key]

    start = state_id(0, a.initial)
    product.initial = start
    queue = deque([(0, a.initial)])
    seen = {(0, a.initial)}
    while queue:
        pos, q = queue.popleft()
        nxt = pos + 1 if pos + 1 < n else loop_to
        for tid in a.out_transitions(q):
            t = a.transitions[tid]
            if not _label_matches(a, t.label, symbols[pos]):
                continue
            key = (nxt, t.dst)
            product.add_transition(state_id(pos, q), True, state_id(nxt, t.dst))
            if key not in seen:
                seen.add(key)
                queue.append(key)
    return not language_empty(product)


def _merge_tag(tags):
    tuple_tags = [t for t in tags if isinstance(t, tuple)]
    if len(tuple_tags) == len(tags) and tags:
        merged = sorted({x for t in tuple_tags for x in t})
        return tuple(merged)
    return tags[0] if tags else None


def _keep_best_witnesses(variant_lists):
    by_src = {}
    for variants in variant_lists:
        for w in variants:
            cur = by_src.get(w.src)
            if cur is None or w.rank() < cur.rank():
                by_src[w.src] = w
    return tuple(by_src[s] for s in sorted(by_src))


def rebuild(a: BuchiAutomaton, keep, class_of=None) -> BuchiAutomaton:
    """New automaton over `keep` (sorted), optionally quotienting by classes.

    `class_of` maps every old state to its representative; representatives
    must be members of `keep`.  Parallel duplicate transitions collapse, with
    witness variants merged per original source and other annotations taken
    from the first contributor.
    """
    keep = sorted(keep)
    if class_of is None:
        class_of = {s: s for s in keep}
    remap = {old: new for new, old in enumerate(keep)}
    b = BuchiAutomaton(a.mode)
    groups = {}
    for s in range(a.n_states):
        if class_of.get(s) is not None:
            groups.setdefault(class_of[s], []).append(s)
    for old in keep:
        b.add_state(_merge_tag([a.state_tags[m] for m in groups.get(old, [old])]))
    b.initial = remap[class_of[a.initial]]
    for old in keep:
        if any(m in a.accepting for m in groups.get(old, [old])):
            b.accepting.add(remap[old])
    bucket = {}
    order = []
    for tid, t in enumerate(a.transitions):
        src = class_of.get(t.src)
        dst = class_of.get(t.dst)
        if src is None or dst is None:
            continue
        key = (remap[src], t.label, remap[dst])
        if key not in bucket:
            bucket[key] = []
            order.append(key)
        bucket[key].append(tid)
    for key in order:
        src, label, dst = key
        new_tid = b.add_transition(src, label, dst)
        olds = bucket[key]
        variants = [a.tr_witness[o] for o in olds if o in a.tr_witness]
        if variants:
            b.tr_witness[new_tid] = _keep_best_witnesses(variants)
        for o in olds:
            if o in a.tr_dep:
                b.tr_dep[new_tid] = a.tr_dep[o]
                break
        for o in olds:
            if o in a.tr_back:
                b.tr_back[new_tid] = a.tr_back[o]
                break
    return b


def prune_non_coaccessible(a: BuchiAutomaton) -> BuchiAutomaton:
    """Keep states from which acceptance is reachable, plus the initial state."""
    n = a.n_states
    coacc = set(a.accepting)
    queue = deque(sorted(a.accepting))
    while queue:
        v = queue.popleft()
        for tid in a.in_transitions(v):
            s = a.transitions[tid].src
            if s not in coacc:
                coacc.add(s)
                queue.append(s)
    keep = coacc | {a.initial}
    if len(keep) == n:
        return a
    return rebuild(a, keep)


def _signature_side(pairs, state):
    out = []
    for label, other, dep in pairs:
        marker = "self" if other == state else other
        out.append((label_sort_key(label), marker, dep))
    return frozenset(out)


def merge_duplicate_states(a: BuchiAutomaton) -> BuchiAutomaton:
    """Merge states with identical incoming and outgoing edge sets.

    The signature covers edge labels, endpoint states (self-loops compared
    symbolically), dependency annotations and the acceptance flag; merging is
    a single pass, not a full bisimulation quotient.
    """
    sigs = {}
    for s in range(a.n_states):
        outs = [
            (a.transitions[t].label, a.transitions[t].dst, a.tr_dep.get(t))
            for t in a.out_transitions(s)
        ]
        ins = [
            (a.transitions[t].label, a.transitions[t].src, a.tr_dep.get(t))
            for t in a.in_transitions(s)
        ]
        key = (s in a.accepting, _signature_side(outs, s), _signature_side(ins, s))
        sigs.setdefault(key, []).append(s)
    class_of = {}
    changed = False
    for group in sigs.values():
        rep = min(group)
        for s in group:
            class_of[s] = rep
            if s != rep:
                changed = True
    if not changed:
        return a
    keep = sorted(set(class_of.values()))
    return rebuild(a, keep, class_of)


def quotient_bisimulation(a: BuchiAutomaton) -> BuchiAutomaton:
    """Quotient by forward bisimulation respecting acceptance; language-safe."""
    block = [1 if s in a.accepting else 0 for s in range(a.n_states)]
    while True:
        sigs = {}
        for s in range(a.n_states):
            items = frozenset(
                (label_sort_key(a.transitions[t].label), block[a.transitions[t].dst])
                for t in a.out_transitions(s)
            )
            sigs.setdefault((block[s], items), []).append(s)
        new_block = [0] * a.n_states
        for i, (_, members) in enumerate(sorted(sigs.items(), key=lambda kv: min(kv[1]))):
            for s in members:
                new_block[s] = i
        if new_block == block:
            break
        block = new_block
    groups = {}
    for s in range(a.n_states):
        groups.setdefault(block[s], []).append(s)
    class_of = {}
    for members in groups.values():
        rep = min(members)
        for s in members:
            class_of[s] = rep
    keep = sorted(set(class_of.values()))
    if len(keep) == a.n_states:
        return a
    return rebuild(a, keep, class_of)


def reachable_fragment(a: BuchiAutomaton) -> BuchiAutomaton:
    dist, _ = _bfs(a, a.initial)
    keep = {s for s in range(a.n_states) if dist[s] is not None}
    if len(keep) == a.n_states:
        return a
    return rebuild(a, keep)


def to_dot(a: BuchiAutomaton, name: str = "automaton") -> str:
    """Graphviz rendering; accepting states doubled, silent edges as eps_i."""
    lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
    lines.append('  __init [shape=point,label=""];')
    for s in range(a.n_states):
        shape = "doublecircle" if s in a.accepting else "circle"
        tag = a.state_tags[s]
        label = f"{s}" if tag is None else f"{s}\\n{tag}"
        lines.append(f'  s{s} [shape={shape},label="{label}"];')
    lines.append(f"  __init -> s{a.initial};")
    for tid, t in enumerate(a.transitions):
        text = label_text(t.label)
        if tid in a.tr_dep:
            text += " Dep" + "{" + ",".join(str(i) for i in sorted(a.tr_dep[tid])) + "}"
        attrs = [f'label="{text}"']
        if tid in a.tr_witness:
            span = max(len(w.steps) + len(w.loop) for w in a.tr_witness[tid])
            attrs.append(f'tooltip="witness length {span}"')
        lines.append(f'  s{t.src} -> s{t.dst} [{",".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
