"""Two-way alternating parity tree automata, bottom-up tree automata and cost automata.

Transitions are intensional: an automaton carries a function from (state, label)
to a positive Boolean formula whose atoms move to a neighbouring node.
Directions: 0 stays, -1 goes to the parent, i >= 1 to the i-th child,
"↓" to any child and "↕" to any neighbour.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from itertools import combinations, product

from .errors import AlphabetMismatch, DegreeExceeded, StateLimitExceeded
from .parity import ADAM, EVE, Arena, eve_wins, reachable, solve

INFINITY = math.inf
ANY = "↕"
DOWN = "↓"


# formulas


class Formula:
    __slots__ = ("_hash",)

    def __eq__(self, other):
        return type(self) is type(other) and hash(self) == hash(other) and self._fields() == other._fields()

    def __hash__(self):
        return self._hash


class Move(Formula):
    """Atom sending a copy in `state` towards `direction` (Dia: Eve picks, Box: Adam picks)."""

    __slots__ = ("direction", "state", "action", "priority")

    def __init__(self, direction, state, action=None, priority=None):
        self.direction = direction
        self.state = state
        self.action = action
        self.priority = priority
        self._hash = hash((type(self).__name__, direction, state, action, priority))

    def _fields(self):
        return (self.direction, self.state, self.action, self.priority)

    def __repr__(self):
        extra = "" if self.action is None and self.priority is None else f",{self.action},{self.priority}"
        return f"{self.symbol}{self.direction}{self.symbol_end}({self.state!r}{extra})"


class Dia(Move):
    __slots__ = ()
    symbol, symbol_end = "<", ">"


class Box(Move):
    __slots__ = ()
    symbol, symbol_end = "[", "]"


class Junction(Formula):
    __slots__ = ("parts",)

    def __init__(self, parts=()):
        self.parts = tuple(parts)
        self._hash = hash((type(self).__name__, self.parts))

    def _fields(self):
        return self.parts


class And(Junction):
    __slots__ = ()

    def __repr__(self):
        return "true" if not self.parts else "(" + " & ".join(map(repr, self.parts)) + ")"


class Or(Junction):
    __slots__ = ()

    def __repr__(self):
        return "false" if not self.parts else "(" + " | ".join(map(repr, self.parts)) + ")"


TRUE = And(())
FALSE = Or(())


def _flatten(kind, parts):
    out = []
    for p in parts:
        if type(p) is kind:
            out.extend(p.parts)
        else:
            out.append(p)
    seen = set()
    unique = []
    for p in out:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def conj(parts) -> Formula:
    parts = _flatten(And, parts)
    if FALSE in parts:
        return FALSE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts) -> Formula:
    parts = _flatten(Or, parts)
    if TRUE in parts:
        return TRUE
    return parts[0] if len(parts) == 1 else Or(parts)


def dualize(f: Formula, shift: int = 1) -> Formula:
    if isinstance(f, And):
        return Or(dualize(p, shift) for p in f.parts)
    if isinstance(f, Or):
        return And(dualize(p, shift) for p in f.parts)
    kind = Box if isinstance(f, Dia) else Dia
    priority = None if f.priority is None else f.priority + shift
    return kind(f.direction, f.state, f.action, priority)


def map_states(f: Formula, rename) -> Formula:
    if isinstance(f, Junction):
        return type(f)(map_states(p, rename) for p in f.parts)
    return type(f)(f.direction, rename(f.state), f.action, f.priority)


def atoms_of(f: Formula):
    if isinstance(f, Junction):
        for p in f.parts:
            yield from atoms_of(p)
    else:
        yield f


# two-way alternating automata


class TwoWayAutomaton:
    """A 2ATA: finite state list, initial state, transition function and priorities."""

    def __init__(self, states, initial, transition, priority, m, alphabet=None, name: str = ""):
        # `states` may be a callable for automata whose state set grows with the inputs seen
        self._states = states if callable(states) else tuple(states)
        self.initial = initial
        self._transition = transition
        self._priority = priority
        self.m = m
        self.alphabet = alphabet
        self.name = name
        self._memo = {}
        self._low = None
        self.parts = None
        self.origin = None
        self.inner = None
        self.view = None

    @property
    def states(self) -> tuple:
        return tuple(self._states()) if callable(self._states) else self._states

    def delta(self, state, label) -> Formula:
        key = (state, label)
        f = self._memo.get(key)
        if f is None:
            f = self._transition(state, label)
            self._memo[key] = f
        return f

    def omega(self, state) -> int:
        if callable(self._priority):
            return self._priority(state)
        return self._priority.get(state, 0)

    @property
    def min_priority(self) -> int:
        if self._low is None:
            self._low = min((self.omega(s) for s in self.states), default=0)
        return self._low

    def prepare(self, tree) -> bool:
        """Hook run before a game on `tree`; returns whether transitions may have changed."""
        changed = False
        for p in self.parts or ():
            changed |= p.prepare(tree)
        if self.inner is not None:
            changed |= self.inner.prepare(tree)
        if self.view is not None:
            changed |= self.view.observe(tree)
        if changed:
            self._memo.clear()
            self._low = None
        return changed

    def describe(self, labels=(), limit: int = 6) -> str:
        lines = [f"automaton {self.name or '?'}: {len(self.states)} states, m={self.m}, initial {self.initial!r}"]
        for s in self.states[:limit * 4]:
            lines.append(f"  state {s!r} priority {self.omega(s)}")
        shown = 0
        for s in self.states:
            for label in labels:
                if shown >= limit:
                    break
                lines.append(f"  delta({s!r}, {label!r}) = {self.delta(s, label)!r}")
                shown += 1
        return "\n".join(lines)


class CostAutomaton(TwoWayAutomaton):
    """Single-counter dist-and-parity automaton; atoms carry an action and a priority."""


def _alphabet_check(*automata):
    known = {a.alphabet for a in automata if a.alphabet is not None}
    if len(known) > 1:
        raise AlphabetMismatch(f"automata read different alphabets: {sorted(map(repr, known))}")
    if len({a.m for a in automata}) > 1:
        raise AlphabetMismatch("automata expect different branching degrees")


def intersect(*automata) -> TwoWayAutomaton:
    if len(automata) == 1:
        return automata[0]
    _alphabet_check(*automata)
    init = ("∩", "init")

    def states():
        return [init] + [(i, s) for i, a in enumerate(automata) for s in a.states]

    def transition(state, label):
        if state == init:
            return conj(map_states(a.delta(a.initial, label), lambda s, i=i: (i, s))
                        for i, a in enumerate(automata))
        i, inner = state
        return map_states(automata[i].delta(inner, label), lambda s: (i, s))

    def priority(state):
        if state == init:
            return min(a.min_priority for a in automata)
        return automata[state[0]].omega(state[1])

    alphabet = next((a.alphabet for a in automata if a.alphabet is not None), None)
    out = TwoWayAutomaton(states, init, transition, priority, automata[0].m, alphabet,
                          " & ".join(a.name or "?" for a in automata))
    out.parts = tuple(automata)
    return out


def complement(a: TwoWayAutomaton) -> TwoWayAutomaton:
    """Swap the roles of Eve and Adam and shift every priority by one."""
    kind = CostAutomaton if isinstance(a, CostAutomaton) else TwoWayAutomaton
    out = kind(a._states, a.initial, lambda s, label: dualize(a.delta(s, label)),
               lambda s: a.omega(s) + 1, a.m, a.alphabet, f"not({a.name})")
    if a.origin is not None:
        flipped = {"nta": "conta", "conta": "nta"}[a.origin[0]]
        out.origin = (flipped, a.origin[1])
    out.inner = a
    return out


# acceptance games


def neighbours(t, v: int, direction) -> list:
    if direction == 0:
        return [v]
    if direction == -1:
        return [] if t.parent[v] is None else [t.parent[v]]
    if direction == DOWN:
        return list(t.children[v])
    if direction == ANY:
        up = [] if t.parent[v] is None else [t.parent[v]]
        return up + list(t.children[v])
    kids = t.children[v]
    return [kids[direction - 1]] if 1 <= direction <= len(kids) else []


def _position_priority(a, f):
    if isinstance(f, Move):
        return f.priority if f.priority is not None else a.omega(f.state)
    return a.min_priority


def acceptance_arena(a: TwoWayAutomaton, t, threshold=None) -> tuple:
    """Arena of the acceptance game; with a threshold, positions carry the counter."""
    arena = Arena()
    win, lose = arena.sinks()

    def key(f, v, c):
        return (f, v, c)

    start_f = a.delta(a.initial, t.labels[0])
    start = arena.add(key(start_f, 0, 0), _owner(start_f), _position_priority(a, start_f))
    stack = [(start_f, 0, 0)]
    while stack:
        f, v, c = stack.pop()
        i = arena.index[key(f, v, c)]
        targets = []
        if isinstance(f, Junction):
            targets = [(p, v, c) for p in f.parts]
        else:
            nc = c
            if threshold is not None:
                if f.action == "ic":
                    nc = c + 1
                elif f.action == "r":
                    nc = 0
            if threshold is not None and nc > threshold:
                targets = None
            else:
                targets = [(a.delta(f.state, t.labels[w]), w, nc) for w in neighbours(t, v, f.direction)]
        if targets is None:
            arena.edge(i, lose)
            continue
        for g, w, nc in targets:
            k = key(g, w, nc)
            j = arena.index.get(k)
            if j is None:
                j = arena.add(k, _owner(g), _position_priority(a, g))
                stack.append((g, w, nc))
            arena.edge(i, j)
    arena.close_dead_ends()
    return arena, start


def _owner(f) -> int:
    return ADAM if isinstance(f, (And, Box)) else EVE


def accepts(a: TwoWayAutomaton, t) -> bool:
    if a.m is not None and t.max_degree() > a.m:
        raise DegreeExceeded(f"tree degree {t.max_degree()} exceeds {a.m}")
    a.prepare(t)
    arena, start = acceptance_arena(a, t)
    return eve_wins(arena, start)


def cost_value(c: TwoWayAutomaton, t):
    """Least n such that Eve wins while every checked counter value stays <= n."""
    if c.m is not None and t.max_degree() > c.m:
        raise DegreeExceeded(f"tree degree {t.max_degree()} exceeds {c.m}")
    c.prepare(t)
    plain, start = acceptance_arena(c, t)
    if not eve_wins(plain, start):
        return INFINITY
    counting = sum(1 for k in plain.keys if isinstance(k[0], Move) and k[0].action == "ic")
    # a play that repeats no position checks at most `counting` increments; the
    # whole arena size is the fallback bound before declaring the value infinite
    low, high = 0, None
    n = 0
    while n < counting:  # galloping search: values are usually small
        if wins_threshold(c, t, n):
            high = n
            break
        low = n + 1
        n = 2 * n + 1
    if high is None:
        if wins_threshold(c, t, counting):
            high = counting
        elif wins_threshold(c, t, len(plain)):
            low, high = counting + 1, len(plain)
        else:
            return INFINITY
    while low < high:  # winning is monotone in the threshold
        mid = (low + high) // 2
        if wins_threshold(c, t, mid):
            high = mid
        else:
            low = mid + 1
    return low


def wins_threshold(c: TwoWayAutomaton, t, n: int) -> bool:
    arena, start = acceptance_arena(c, t, threshold=n)
    return eve_wins(arena, start)


_ACTION = re.compile(r"ic|r|ε|e")


def parse_actions(text) -> list:
    if not isinstance(text, str):
        return list(text)
    tokens = _ACTION.findall(text)
    if "".join(tokens) != text:
        raise ValueError(f"not an action word: {text!r}")
    return ["ε" if x == "e" else x for x in tokens]


def checked_values(actions) -> list:
    """Counter value reached by the checks of each reset-delimited block, in order."""
    out = []
    counter, last = 0, None
    for a in parse_actions(actions):
        if a == "ic":
            counter += 1
            last = counter
        elif a == "r":
            if last is not None:
                out.append(last)
            counter, last = 0, None
    if last is not None:
        out.append(last)
    return out


def cost_dist(actions) -> int:
    return max(checked_values(actions), default=0)


# bottom-up automata


class Nta:
    """Nondeterministic bottom-up automaton on finite ordered trees of degree <= m.

    `step(label, child_states)` returns the set of states possible at a node.
    """

    deterministic = False

    def __init__(self, step, accepting, m: int, name: str = ""):
        self._step = step
        self._accepting = accepting
        self.m = m
        self.name = name
        self._memo = {}

    def step(self, label, children: tuple) -> frozenset:
        key = (label, children)
        out = self._memo.get(key)
        if out is None:
            out = frozenset(self._step(label, children))
            self._memo[key] = out
        return out

    def accepting(self, state) -> bool:
        return self._accepting(state)

    def run(self, t) -> list:
        """Possible states at every node, computed bottom-up."""
        out = [None] * len(t)
        for v in reversed(list(t.preorder())):
            options = [out[c] for c in t.children[v]]
            states = set()
            for combo in product(*options):
                states |= self.step(t.labels[v], tuple(combo))
            out[v] = frozenset(states)
        return out

    def accepts(self, t) -> bool:
        if t.max_degree() > self.m:
            raise DegreeExceeded(f"tree degree {t.max_degree()} exceeds {self.m}")
        return any(self.accepting(q) for q in self.run(t)[0])


class ExplicitNta(Nta):
    """Hand-written automaton: transitions {(label, child_states): states}."""

    def __init__(self, transitions: dict, accepting, m: int, name: str = ""):
        table = {k: frozenset(v) if isinstance(v, (set, frozenset, list, tuple)) else frozenset([v])
                 for k, v in transitions.items()}
        accept = frozenset(accepting)
        super().__init__(lambda label, kids: table.get((label, kids), frozenset()),
                         accept.__contains__, m, name)
        self.labels = sorted({k[0] for k in table}, key=repr)


class ProductNta(Nta):
    def __init__(self, parts):
        self.parts = tuple(parts)
        self.deterministic = all(p.deterministic for p in self.parts)

        def step(label, kids):
            options = []
            for i, p in enumerate(self.parts):
                options.append(p.step(label, tuple(k[i] for k in kids)))
            return set(product(*options))

        super().__init__(step, lambda q: all(p.accepting(s) for p, s in zip(self.parts, q)),
                         min(p.m for p in self.parts), "×".join(p.name for p in self.parts))


class ProjectedNta(Nta):
    """Reads a label by guessing one of its preimages for the base automaton."""

    def __init__(self, base: Nta, preimages):
        self.base = base
        self.preimages = preimages

        def step(label, kids):
            out = set()
            for pre in preimages(label):
                out |= base.step(pre, kids)
            return out

        super().__init__(step, base.accepting, base.m, f"∃{base.name}")


class ComplementNta(Nta):
    """Complement by subset construction (deterministic base: flip acceptance)."""

    deterministic = True

    def __init__(self, base: Nta):
        self.base = base
        if base.deterministic:
            super().__init__(base.step, lambda q: not base.accepting(q), base.m, f"¬{base.name}")
            return

        def step(label, kids):
            out = set()
            for combo in product(*kids):
                out |= base.step(label, tuple(combo))
            return {frozenset(out)}

        super().__init__(step, lambda q: not any(base.accepting(s) for s in q), base.m, f"¬{base.name}")


def project(n: Nta, relabel=None, preimages=None, labels=None) -> Nta:
    """Projection along a label map, given either its preimage function or a finite domain."""
    if preimages is None:
        if relabel is None:
            return n
        table = {}
        for x in labels:
            table.setdefault(relabel(x), []).append(x)
        preimages = lambda g: table.get(g, ())
    return ProjectedNta(n, preimages)


def taggings(label):
    """All tagged variants of a label (tags any subset of its facts)."""
    from .treelike import Label
    facts = sorted(label.facts)
    for mask in range(1 << len(facts)):
        tags = [f for i, f in enumerate(facts) if mask >> i & 1]
        yield Label(label.names, label.facts, tags)


def erase_tags(label):
    return label.erase_tags()


# 2ATA to NTA


@dataclass(frozen=True)
class Exit:
    state: object
    priority: int
    kind: str  # "dia" or "box": how the copy left through the parent edge


class _EagerSummary:
    """State of the eager summary automaton: entry state -> minimal exit sets, for all states."""

    __slots__ = ("table", "_hash")

    def __init__(self, table: tuple):
        self.table = table
        self._hash = hash(table)

    def options(self, s) -> frozenset:
        return dict(self.table)[s]

    def __eq__(self, other):
        return isinstance(other, _EagerSummary) and self._hash == other._hash and self.table == other.table

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "S" + repr(sorted(((repr(s), len(o)) for s, o in self.table)))


class _LazySummary:
    """State of the lazy summary automaton: the subtree itself, with entries computed on demand."""

    __slots__ = ("nta", "label", "kids", "_cache", "_hash")

    def __init__(self, nta, label, kids):
        self.nta = nta
        self.label = label
        self.kids = kids
        self._cache = {}
        self._hash = hash((label, kids))

    def options(self, s) -> frozenset:
        out = self._cache.get(s)
        if out is None:
            out = self.nta._options(self.label, self.kids, s)
            self._cache[s] = out
        return out

    def __eq__(self, other):
        return (isinstance(other, _LazySummary) and self._hash == other._hash
                and self.label == other.label and self.kids == other.kids)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"L{self._hash & 0xffff:x}"


class SummaryNta(Nta):
    """Deterministic bottom-up automaton equivalent to a 2ATA on finite trees.

    The state reached at a node maps automaton states s to the minimal sets E of
    exits (state, max priority, kind) such that Eve, entering the node in s, can
    make every play either stay below and win, or leave through an exit in E.
    Eager states tabulate every entry state; lazy states compute entries on demand
    and are only suitable for membership.
    """

    deterministic = True

    def __init__(self, a: TwoWayAutomaton, lazy: bool = False):
        self.a = a
        self.lazy = lazy
        self.low = a.min_priority
        if lazy:
            step = lambda label, kids: {_LazySummary(self, label, kids)}
        else:
            step = lambda label, kids: {_EagerSummary(tuple((s, self._options(label, kids, s))
                                                            for s in self.a.states))}
        super().__init__(step, self._root_accepts, a.m, f"nta({a.name})")

    def eager(self) -> "SummaryNta":
        return self if not self.lazy else SummaryNta(self.a)

    def _root_accepts(self, q) -> bool:
        return any(all(e.kind == "box" for e in E) for E in q.options(self.a.initial))

    def _options(self, label, kids, s) -> frozenset:
        arena, start, exits = self._local_arena(label, kids, s)
        region = reachable(arena, start)
        if not _has_even_cycle(arena, region):
            return frozenset(_reachability_sets(arena, start, region, exits))
        universe = sorted(exits, key=repr)
        return frozenset(_minimal_winning_sets(arena, start, region, exits, universe))

    def _local_arena(self, label, kids, entry):
        a = self.a
        arena = Arena()
        arena.sinks()
        exits = {}

        def prio(f):
            return _position_priority(a, f)

        def node(key, owner, priority):
            j = arena.index.get(key)
            if j is None:
                j = arena.add(key, owner, priority)
                todo.append(key)
            return j

        todo = []
        f0 = a.delta(entry, label)
        start = node(("f", f0, self.low), _owner(f0), prio(f0))
        while todo:
            key = todo.pop()
            i = arena.index[key]
            kind = key[0]
            if kind == "f":
                _, f, r = key
                r2 = max(r, arena.priority[i])
                if isinstance(f, Junction):
                    for p in f.parts:
                        arena.edge(i, node(("f", p, r), _owner(p), prio(p)))
                    continue
                d = f.direction
                if d in (-1, ANY):
                    x = Exit(f.state, r2, "box" if isinstance(f, Box) else "dia")
                    exits[x] = node(("x", x), EVE, self.low)
                    arena.edge(i, exits[x])
                if d == 0:
                    g = a.delta(f.state, label)
                    arena.edge(i, node(("f", g, r2), _owner(g), prio(g)))
                if d in (DOWN, ANY):
                    targets = range(len(kids))
                elif isinstance(d, int) and 1 <= d <= len(kids):
                    targets = [d - 1]
                else:
                    targets = []
                for c in targets:
                    arena.edge(i, node(("g", c, f.state, r2), EVE, self.low))
            elif kind == "g":
                _, c, s, r = key
                for E in sorted(kids[c].options(s), key=lambda e: sorted(map(repr, e))):
                    arena.edge(i, node(("e", c, s, E, r), ADAM, self.low))
            elif kind == "e":
                _, c, s, E, r = key
                for x in sorted(E, key=repr):
                    arena.edge(i, node(("ret", x.state, x.priority, max(r, x.priority)), EVE, x.priority))
            elif kind == "ret":
                _, s, p, r = key
                g = a.delta(s, label)
                arena.edge(i, node(("f", g, r), _owner(g), prio(g)))
            # exits stay dead ends here; they are wired per candidate set
        return arena, start, exits


def _has_even_cycle(arena: Arena, region: set) -> bool:
    """Is there a cycle in the region whose largest priority is even?"""
    for p in sorted({arena.priority[v] for v in region if arena.priority[v] % 2 == 0}):
        nodes = {v for v in region if arena.priority[v] <= p}
        for component in _cycles(arena, nodes):
            if any(arena.priority[v] == p for v in component):
                return True
    return False


def _cycles(arena: Arena, nodes: set) -> list:
    """Strongly connected components of the subgraph on `nodes` that contain a cycle (Tarjan)."""
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(arena.succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            w = next(it, None)
            if w is None:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    component = []
                    while True:
                        x = stack.pop()
                        on.discard(x)
                        component.append(x)
                        if x == v:
                            break
                    if len(component) > 1 or v in arena.succ[v]:
                        out.append(component)
                continue
            if w not in nodes:
                continue
            if w not in index:
                index[w] = low[w] = counter
                counter += 1
                stack.append(w)
                on.add(w)
                work.append((w, iter(arena.succ[w])))
            elif w in on:
                low[v] = min(low[v], index[w])
    return out


def _antichain(sets) -> list:
    out = []
    for s in sorted(set(sets), key=len):
        if not any(o <= s for o in out):
            out.append(s)
    return out


def _reachability_sets(arena: Arena, start: int, region: set, exits: dict) -> list:
    """Minimal exit sets by a least fixpoint, valid when every infinite play is lost by Eve."""
    win, lose = arena.index[("__win__",)], arena.index[("__lose__",)]
    exit_of = {j: x for x, j in exits.items()}
    family = {v: [] for v in region}
    family[win] = [frozenset()]
    for j, x in exit_of.items():
        family[j] = [frozenset([x])]
    pred = {v: [] for v in region}
    for v in region:
        for w in arena.succ[v]:
            if w in pred:
                pred[w].append(v)
    todo = set(region) - {win, lose} - set(exit_of)
    queue = list(todo)
    while queue:
        v = queue.pop()
        todo.discard(v)
        succ = arena.succ[v]
        if arena.owner[v] == EVE:
            new = _antichain(s for w in succ for s in family[w])
        elif not succ:
            new = [frozenset()]
        else:
            new = [frozenset()]
            for w in succ:
                new = _antichain(a | b for a in new for b in family[w])
                if not new:
                    break
        if new != family[v]:
            family[v] = new
            for u in pred[v]:
                if u not in todo and u not in exit_of and u not in (win, lose):
                    todo.add(u)
                    queue.append(u)
    return family[start]


def _minimal_winning_sets(arena: Arena, start: int, region: set, exits: dict, universe: list) -> list:
    """All minimal exit sets E for which Eve wins from start, by transversal search."""
    win, lose = arena.index[("__win__",)], arena.index[("__lose__",)]
    exit_nodes = {exits[x]: x for x in universe}
    region = set(region) | {win, lose}

    def wins(allowed: frozenset) -> bool:
        saved = {}
        for j, x in exit_nodes.items():
            saved[j] = arena.succ[j]
            arena.succ[j] = [win if x in allowed else lose]
        dead = [v for v in region if not arena.succ[v]]
        for v in dead:
            arena.succ[v] = [lose if arena.owner[v] == EVE else win]
        try:
            eve, _ = solve(arena, region)
            return start in eve
        finally:
            for j, s in saved.items():
                arena.succ[j] = s
            for v in dead:
                arena.succ[v] = []

    everything = frozenset(universe)
    if not wins(everything):
        return []
    found = []

    def shrink(E: frozenset) -> frozenset:
        for x in sorted(E, key=repr):
            if wins(E - {x}):
                E = E - {x}
        return E

    found.append(shrink(everything))
    while True:
        grown = False
        for hitting in _transversals(found):
            candidate = everything - hitting
            if any(m <= candidate for m in found):
                continue
            if wins(candidate):
                found.append(shrink(candidate))
                grown = True
                break
        if not grown:
            return found


def _transversals(family) -> list:
    """Minimal hitting sets of a family of sets."""
    current = [frozenset()]
    for s in family:
        nxt = []
        for t in current:
            if t & s:
                nxt.append(t)
            else:
                nxt.extend(t | {x} for x in s)
        nxt = sorted(set(nxt), key=len)
        minimal = []
        for t in nxt:
            if not any(m <= t for m in minimal):
                minimal.append(t)
        current = minimal
    return current


def state_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    return int(os.environ.get("GOMQ_STATE_CAP", "16"))


def to_nta(a: TwoWayAutomaton, cap: int | None = None, lazy: bool = False) -> Nta:
    """Equivalent bottom-up automaton; states are only built for the labels actually read.

    Lazy automata answer membership without tabulating every entry state and
    ignore the state cap; eager ones are needed for emptiness and finiteness.
    """
    if a.origin is not None:
        kind, n = a.origin
        n = n if lazy else eager(n, cap)
        return n if kind == "nta" else ComplementNta(n)
    if a.parts:
        return ProductNta([to_nta(p, cap, lazy) for p in a.parts])
    if lazy:
        return SummaryNta(a, lazy=True)
    limit = state_cap(cap)
    if len(a.states) > limit:
        raise StateLimitExceeded(f"{len(a.states)} states exceed the cap of {limit}")
    return SummaryNta(a)


def eager(n: Nta, cap: int | None = None) -> Nta:
    """Eager counterpart of an automaton assembled from lazy summary automata."""
    if isinstance(n, SummaryNta):
        if not n.lazy:
            return n
        limit = state_cap(cap)
        if len(n.a.states) > limit:
            raise StateLimitExceeded(f"{len(n.a.states)} states exceed the cap of {limit}")
        return n.eager()
    if isinstance(n, ProductNta):
        return ProductNta([eager(p, cap) for p in n.parts])
    if isinstance(n, ProjectedNta):
        return ProjectedNta(eager(n.base, cap), n.preimages)
    if isinstance(n, ComplementNta):
        return ComplementNta(eager(n.base, cap))
    return n


class _NtaView:
    """NTA states and child-state tuples used when reading an NTA as a top-down 2ATA.

    With a label list every tuple over the reachable states is available; otherwise
    only the tuples met while running the NTA on observed trees are offered, which
    is enough for membership of those trees and keeps high branching degrees cheap.
    """

    def __init__(self, n: Nta, labels=None):
        self.n = n
        self.pool = set()
        self.tuples = {}
        self.full = labels is not None
        if self.full:
            self.pool |= reachable_states(n, labels)[0]

    def observe(self, tree) -> bool:
        before = (len(self.pool), sum(map(len, self.tuples.values())))
        run = self.n.run(tree)
        for v, states in enumerate(run):
            self.pool |= states
            kids = [sorted(run[c], key=repr) for c in tree.children[v]]
            self.tuples.setdefault(tree.labels[v], set()).update(product(*kids))
        return before != (len(self.pool), sum(map(len, self.tuples.values())))

    def candidates(self, label):
        if self.full:
            pool = sorted(self.pool, key=repr)
            return [kids for k in range(self.n.m + 1) for kids in product(pool, repeat=k)]
        return sorted(self.tuples.get(label, ()), key=repr)


def nta_as_ata(n: Nta, labels=None) -> TwoWayAutomaton:
    """The NTA as a 2ATA: Eve guesses child states consistent with a transition."""
    view = _NtaView(n, labels)
    root, bottom = ("nta", "root"), ("nta", "⊥")

    def transition(state, label):
        if state == bottom:
            return FALSE
        if state == root:
            return disj(transition(q, label) for q in sorted(view.pool, key=repr) if n.accepting(q))
        options = []
        for kids in view.candidates(label):
            if state in n.step(label, kids):
                parts = [Dia(i + 1, q) for i, q in enumerate(kids)]
                if len(kids) < n.m:
                    parts.append(Box(len(kids) + 1, bottom))
                options.append(conj(parts))
        return disj(options)

    out = TwoWayAutomaton(lambda: (root, bottom) + tuple(sorted(view.pool, key=repr)), root, transition,
                          lambda s: 0, n.m, None, f"ata({n.name})")
    out.origin = ("nta", n)
    out.view = view
    return out


# finiteness


@dataclass(frozen=True)
class Empty:
    def __str__(self):
        return "Empty"


@dataclass(frozen=True)
class Finite:
    max_height: int

    def __str__(self):
        return f"Finite({self.max_height})"


@dataclass(frozen=True)
class Infinite:
    def __str__(self):
        return "Infinite"


def reachable_states(n: Nta, labels, limit: int = 100_000) -> tuple:
    """Productive states and every transition between them (semi-naive bottom-up)."""
    labels = list(labels)
    known = set()
    edges = set()
    frontier = set()
    for label in labels:
        for q in n.step(label, ()):
            edges.add((label, (), q))
            frontier.add(q)
    known |= frontier
    while frontier:
        new = set()
        pool = sorted(known, key=repr)
        fresh = frontier
        for k in range(1, n.m + 1):
            for kids in product(pool, repeat=k):
                if not any(q in fresh for q in kids):
                    continue
                for label in labels:
                    for q in n.step(label, kids):
                        edges.add((label, kids, q))
                        if q not in known:
                            new.add(q)
        known |= new
        frontier = new
        if len(known) > limit:
            raise StateLimitExceeded(f"more than {limit} reachable states")
    return known, edges


def nta_finiteness(n: Nta, labels=None):
    labels = labels if labels is not None else getattr(n, "labels", None)
    if labels is None:
        raise ValueError("a label enumeration is needed")
    known, edges = reachable_states(n, labels)
    useful = {q for q in known if n.accepting(q)}
    if not useful:
        return Empty()
    changed = True
    while changed:
        changed = False
        for _, kids, q in edges:
            if q in useful:
                for c in kids:
                    if c not in useful:
                        useful.add(c)
                        changed = True
    graph = {q: set() for q in useful}
    for _, kids, q in edges:
        if q in useful:
            for c in kids:
                graph[c].add(q)
    # a cycle among useful states pumps arbitrarily high accepted trees
    colour = {}
    order = []

    def visit(x):
        stack = [(x, iter(graph[x]))]
        colour[x] = 1
        while stack:
            y, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[y] = 2
                order.append(y)
                stack.pop()
            elif colour.get(nxt) == 1:
                return True
            elif nxt not in colour:
                colour[nxt] = 1
                stack.append((nxt, iter(graph[nxt])))
        return False

    for q in sorted(useful, key=repr):
        if q not in colour and visit(q):
            return Infinite()
    height = {}
    incoming = {q: [] for q in useful}
    for _, kids, q in edges:
        if q in useful:
            incoming[q].append(kids)
    for q in reversed(order):  # reversed post-order puts children before parents
        best = 0
        for kids in incoming[q]:
            if kids:
                best = max(best, 1 + max(height[c] for c in kids))
        height[q] = best
    return Finite(max(height[q] for q in useful if n.accepting(q)))


def accepted_trees_by_height(n: Nta, labels, max_height: int) -> dict:
    """Number of accepted trees of each exact height, counted by classes of run-state sets."""
    labels = list(labels)
    upto = {-1: {}}  # height bound -> {state set: number of trees of at most that height}
    out = {}
    for h in range(max_height + 1):
        exact = {}
        if h == 0:
            for label in labels:
                key = n.step(label, ())
                exact[key] = exact.get(key, 0) + 1
        else:
            below, lower = upto[h - 1], upto[h - 2]
            classes = sorted(below, key=repr)
            for k in range(1, n.m + 1):
                for combo in product(classes, repeat=k):
                    total = 1
                    for c in combo:
                        total *= below[c]
                    shorter = 1
                    for c in combo:
                        shorter *= lower.get(c, 0)
                    if total == shorter:
                        continue
                    for label in labels:
                        states = set()
                        for kids in product(*combo):
                            states |= n.step(label, kids)
                        key = frozenset(states)
                        exact[key] = exact.get(key, 0) + total - shorter
        merged = dict(upto[h - 1])
        for key, c in exact.items():
            merged[key] = merged.get(key, 0) + c
        upto[h] = merged
        out[h] = sum(c for key, c in exact.items() if any(n.accepting(q) for q in key))
    return out
