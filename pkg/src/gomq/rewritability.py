"""Automata for FO-rewritability, bounded search engines and rewriting extraction.

All automata read encoded trees over the name pool u0..u{2w-1}, where w is the
data schema width (at least one), and have branching degree 2**width.
Atom states are `Atom`s whose arguments are `Constant`s named after pool names.
"""
from __future__ import annotations

import time
from collections import defaultdict, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, count, product

from .automata import (
    ANY,
    DOWN,
    FALSE,
    TRUE,
    Box,
    CostAutomaton,
    Dia,
    Empty,
    Finite,
    Infinite,
    ProjectedNta,
    TwoWayAutomaton,
    complement,
    conj,
    cost_value,
    disj,
    intersect,
    nta_as_ata,
    nta_finiteness,
    taggings,
    to_nta,
)
from .chase import certain_boolean, datalog_rewriting, enumerate_guarded_supports, reasoner
from .errors import BudgetExceeded, DomainTooLarge, NonGuardedOntology, SchemaClash, StateLimitExceeded
from .logic import (
    Aq0,
    Atom,
    Constant,
    Cq,
    Database,
    Omq,
    Relation,
    Schema,
    Tgd,
    Variable,
    canonical_form,
    canonical_key,
    freeze,
    generalize,
    is_guarded,
    maps_into,
    sort_atoms,
)
from .treelike import count_labels, encode_database, enumerate_labels, exact_treewidth, name_pool

SINK = "sink"


def tree_width_bound(schema: Schema) -> int:
    """Number of names per node (the encoding width)."""
    return max(1, schema.width())


def branching(schema: Schema) -> int:
    return 2 ** schema.width()


def _require_guarded(omq: Omq):
    if not isinstance(omq.query, Aq0):
        raise TypeError("expected an atomic 0-ary query")
    for r in omq.ontology:
        if not is_guarded(r):
            raise NonGuardedOntology(f"rule is not guarded: {r!r}")


def _key(atom: Atom) -> tuple:
    return (atom.relation, tuple(c.name for c in atom.args))


def _pool_atoms(relations, w: int) -> list:
    names = [Constant(n) for n in name_pool(w)]
    return [Atom(r, args) for r, ar in sorted(relations) for args in product(names, repeat=ar)]


# consistency and structure


def build_consistency_ata(schema: Schema, tagged: bool = False) -> TwoWayAutomaton:
    """Checks every node locally on the way down; with `tagged`, also looks for a tag."""
    w = tree_width_bound(schema)

    def local_ok(label) -> bool:
        if len(label.names) > w or not label.tags <= label.facts:
            return False
        return all(set(args) <= label.names for _, args in label.facts)

    def transition(state, label):
        if state == "seek":
            return TRUE if label.tags else Dia(DOWN, "seek")
        check = Box(DOWN, "check") if local_ok(label) else FALSE
        if state == "start":
            return conj([check, transition("seek", label)])
        return check

    initial = "start" if tagged else "check"
    states = ("start", "check", "seek") if tagged else ("check",)
    return TwoWayAutomaton(states, initial, transition, {"seek": 1}, branching(schema),
                           name="C_S" + ("[tagged]" if tagged else ""))


def build_structure_ata(schema: Schema) -> TwoWayAutomaton:
    """Simple (one fact per node, no fact repeated) and well-coloured trees.

    A repeated fact has its two occurrences below a common node whose names
    cover the fact; that node checks that at most one branch (or itself) holds it.
    """
    w = tree_width_bound(schema)
    relations = [(r.name, r.arity) for r in schema]
    m = branching(schema)

    def over(names):
        return [(r, args) for r, ar in relations for args in product(sorted(names), repeat=ar)]

    def transition(state, label):
        if state == "kid":
            return TRUE
        if state != "walk":
            alpha = state[1]
            if not set(alpha[1]) <= label.names:
                return TRUE
            return FALSE if alpha in label.facts else Box(DOWN, state)
        if len(label.facts) > 1:
            return FALSE
        parts = [Box(DOWN, "walk")]
        if not label.facts:
            parts.append(Dia(2, "kid"))
        for alpha in over(label.names):
            gone = ("absent", alpha)
            if alpha in label.facts:
                parts.append(Box(DOWN, gone))
            else:
                parts.extend(disj([Box(i, gone), Box(j, gone)]) for i, j in combinations(range(1, m + 1), 2))
        return conj(parts)

    states = ("walk", "kid") + tuple(("absent", a) for a in over(name_pool(w)))
    return TwoWayAutomaton(states, "walk", transition, {}, m, name="R_S")


# satisfaction and cost


class _Supports:
    """Non-trivial minimal guarded supports of an atom over a node's names, memoized."""

    def __init__(self, omq: Omq):
        self.onto = omq.ontology
        self.schema = omq.full_schema()
        self.memo = {}

    def __call__(self, alpha: Atom, names) -> list:
        key = (alpha, frozenset(names))
        out = self.memo.get(key)
        if out is None:
            universe = [Constant(n) for n in sorted(names)]
            found = enumerate_guarded_supports(alpha, universe, self.onto, schema=self.schema)
            out = [sort_atoms(s) for s in found if s != frozenset([alpha])]
            self.memo[key] = out
        return out


def _atom_states(omq: Omq) -> tuple:
    w = tree_width_bound(omq.data_schema)
    return tuple(_pool_atoms([(r.name, r.arity) for r in omq.full_schema()], w))


def build_satisfaction_ata(omq: Omq, minus: bool = False) -> TwoWayAutomaton:
    """Accepts consistent trees whose decoding entails the query.

    In state R(a) Eve wins at once if the fact is at the node, may walk to a
    neighbour, or may pick a guarded support over the node's names, each of whose
    members Adam can challenge. Every state has priority 1, so endless play loses.
    With `minus`, tagged facts do not count as present.
    """
    _require_guarded(omq)
    supports = _Supports(omq)

    def transition(state, label):
        names = {c.name for c in state.args}
        if not names <= label.names:
            return FALSE
        key = _key(state)
        if key in label.facts and not (minus and key in label.tags):
            return TRUE
        options = [conj(Dia(0, b) for b in s) for s in supports(state, label.names)]
        options.append(Dia(ANY, state))
        return disj(options)

    return TwoWayAutomaton(_atom_states(omq), omq.goal, transition, lambda s: 1,
                           branching(omq.data_schema), name="A_Q" + ("[minus]" if minus else ""))


def build_cost_automaton(omq: Omq) -> CostAutomaton:
    """Same game as the satisfaction automaton, with every support challenge counted."""
    _require_guarded(omq)
    supports = _Supports(omq)

    def transition(state, label):
        if state == SINK:
            return Dia(0, SINK, "ε", 0)
        names = {c.name for c in state.args}
        if not names <= label.names:
            return Dia(0, state, "ic", 1)
        if _key(state) in label.facts:
            return Dia(0, SINK, "ε", 1)
        options = [conj(Dia(0, b, "ic", 1) for b in s) for s in supports(state, label.names)]
        options.append(Dia(ANY, state, "ε", 1))
        return disj(options)

    return CostAutomaton(_atom_states(omq) + (SINK,), omq.goal, transition, lambda s: 0, None, name="H_Q")


# minimality and the combined automaton


def build_removal_ata(omq: Omq) -> TwoWayAutomaton:
    """Tagged trees with at least one tag whose untagged part still entails the query."""
    return intersect(build_consistency_ata(omq.data_schema, tagged=True), build_satisfaction_ata(omq, minus=True))


def build_minimality_ata(omq: Omq) -> TwoWayAutomaton:
    """Accepts t iff no nonempty tagging of t is accepted by the removal automaton."""
    removal = build_removal_ata(omq)
    projected = ProjectedNta(to_nta(removal, lazy=True), taggings)
    out = complement(nta_as_ata(projected))
    out.name = "M_Q"
    out.removal = removal
    out.projected = projected
    return out


def build_bq(omq: Omq) -> TwoWayAutomaton:
    schema = omq.data_schema
    out = intersect(build_consistency_ata(schema), build_structure_ata(schema), build_satisfaction_ata(omq),
                    build_minimality_ata(omq))
    out.name = "B_Q"
    return out


# verdicts and reports


@dataclass
class Record:
    key: bytes
    facts: list
    entails: bool
    min_subset: int | None


@dataclass
class OracleReport:
    records: list
    budgets: dict
    complete: bool = True
    levels: dict = field(default_factory=dict)

    @property
    def maximum(self) -> int:
        return max((r.min_subset for r in self.records if r.entails), default=0)

    def running_max(self) -> dict:
        out, best = {}, 0
        for n in range(self.budgets["max_facts"] + 1):
            best = max(best, self.levels.get(n, 0))
            out[n] = best
        return out

    def growing(self) -> bool:
        run = self.running_max()
        top = self.budgets["max_facts"]
        return top >= 1 and run[top] > run[top - 1]

    def witnesses(self) -> list:
        """Smallest databases at which the running maximum goes up."""
        out, best = [], 0
        for r in sorted((r for r in self.records if r.entails), key=lambda r: (len(r.facts), r.key)):
            if r.min_subset > best:
                best = r.min_subset
                out.append(r)
        return out

    def to_json(self) -> dict:
        return {
            "complete": self.complete,
            "budgets": self.budgets,
            "maximum": self.maximum,
            "records": [{"facts": [repr(f) for f in r.facts], "entails": r.entails, "min_subset": r.min_subset}
                        for r in self.records],
        }


STATUSES = ("FoRewritable", "NotFoRewritable", "EvidenceFo", "EvidenceNotFo", "Unknown")


@dataclass
class Verdict:
    status: str
    engine: str
    bound: int | None = None
    witnesses: list = field(default_factory=list)  # [(facts, min_subset)]
    budgets: dict = field(default_factory=dict)
    runtime_ms: int = 0
    notes: list = field(default_factory=list)
    rewriting: object = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "engine": self.engine,
            "bound": self.bound,
            "witnesses": [{"facts": [repr(f) for f in facts], "min_subset": size} for facts, size in self.witnesses],
            "budgets": self.budgets,
            "runtime_ms": self.runtime_ms,
            "notes": list(self.notes),
        }


# unfolding search


def _unify(xs, ys) -> dict:
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for x, y in zip(xs, ys):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry, key=lambda t: t.sort_key())] = min(rx, ry, key=lambda t: t.sort_key())
    return {x: find(x) for x in parent}


def _apply(atoms, sigma) -> frozenset:
    return frozenset(a.substitute(sigma) for a in atoms) if sigma else frozenset(atoms)


def _state_key(leaves, pending) -> tuple:
    marked = [Atom("?" + a.relation, a.args) for a in pending]
    return canonical_form(list(leaves) + marked)


def unfoldings(omq: Omq, max_facts: int, max_constants: int, limit: int = 200_000) -> tuple:
    """Data atom sets obtained by unfolding the query through a Datalog program for the ontology.

    Unfolding is breadth-first over partial proofs (data leaves plus atoms still
    to prove); a data atom may also be merged with an existing leaf of the same
    relation. Returns (databases, complete) with databases frozen and deduplicated
    up to isomorphism.
    """
    program = datalog_rewriting(omq.ontology)
    by_head = defaultdict(list)
    for r in program:
        by_head[r.head[0].relation].append(r)
    data = omq.data_schema.names()
    var_limit = max_constants + max((len(r.body_vars) for r in program), default=0)
    fresh = count()
    start = (frozenset(), frozenset([omq.goal]))
    seen = {_state_key(*start)}
    queue = deque([start])
    found = {}
    complete = True

    def variables(atoms):
        return {t for a in atoms for t in a.args}

    while queue:
        leaves, pending = queue.popleft()
        if not pending:
            if len(variables(leaves)) <= max_constants:
                db = freeze(leaves)
                found.setdefault(canonical_key(db), db)
            continue
        alpha = min(pending, key=Atom.sort_key)
        rest = pending - {alpha}
        successors = []
        if alpha.relation in data:
            if alpha in leaves:
                successors.append((leaves, rest))
            else:
                successors.append((leaves | {alpha}, rest))
                for beta in leaves:
                    if beta.relation == alpha.relation:
                        sigma = _unify(alpha.args, beta.args)
                        successors.append((_apply(leaves, sigma), _apply(rest, sigma)))
        for rule in by_head.get(alpha.relation, ()):
            ren = {v: Variable(f"v{next(fresh)}") for a in rule.body + rule.head for v in a.variables()}
            head = rule.head[0].substitute(ren)
            sigma = _unify(head.args, alpha.args)
            body = {b.substitute(ren).substitute(sigma) for b in rule.body}
            successors.append((_apply(leaves, sigma), _apply(rest, sigma) | body))
        for leaves2, pending2 in successors:
            pending2 = pending2 - leaves2
            if len(leaves2) > max_facts or len(pending2) > 2 * max_facts + 2:
                continue
            if len(variables(leaves2) | variables(pending2)) > var_limit:
                continue
            key = _state_key(leaves2, pending2)
            if key in seen:
                continue
            seen.add(key)
            queue.append((leaves2, pending2))
        if len(seen) > limit:
            complete = False
            break
    dbs = sorted(found.values(), key=lambda d: (len(d), canonical_key(d)))
    return dbs, complete


def min_entailing_subset(db: Database, omq: Omq, memo: dict | None = None) -> int | None:
    """Size of a smallest entailing subset, by subsets of growing size."""
    memo = {} if memo is None else memo
    engine = reasoner(omq.ontology)
    facts = sort_atoms(db.facts)
    for size in range(len(facts) + 1):
        for subset in combinations(facts, size):
            key = canonical_key(subset)
            hit = memo.get(key)
            if hit is None:
                hit = engine.entails(subset, omq.goal)
                memo[key] = hit
            if hit:
                return size
    return None


def _bounded(db: Database, schema: Schema) -> bool:
    cap = max(0, schema.width() - 1)
    try:
        return exact_treewidth(db, cap=cap) is not None
    except DomainTooLarge:
        return False


def _record(args) -> Record:
    db, omq = args
    size = min_entailing_subset(db, omq)
    return Record(canonical_key(db), sort_atoms(db.facts), size is not None, size)


def oracle_condition2(omq: Omq, max_facts: int = 6, max_constants: int = 7, jobs: int = 1,
                      limit: int = 200_000) -> OracleReport:
    """Minimal entailing subset sizes over bounded tree-width candidate databases."""
    _require_guarded(omq)
    dbs, complete = unfoldings(omq, max_facts, max_constants, limit)
    dbs = [d for d in dbs if _bounded(d, omq.data_schema)]
    if jobs > 1 and len(dbs) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_record, [(d, omq) for d in dbs]))
    else:
        memo = {}
        records = []
        for d in dbs:
            size = min_entailing_subset(d, omq, memo)
            records.append(Record(canonical_key(d), sort_atoms(d.facts), size is not None, size))
    levels = {}
    for r in records:
        if r.entails:
            levels[len(r.facts)] = max(levels.get(len(r.facts), 0), r.min_subset)
    budgets = {"max_facts": max_facts, "max_constants": max_constants}
    return OracleReport(records, budgets, complete, levels)


# rewriting extraction


@dataclass
class Rewriting:
    disjuncts: list  # Boolean Cqs
    bound: int
    verified: bool

    def __str__(self):
        if not self.disjuncts:
            return "false"
        return "\n| ".join(", ".join(map(repr, d.atoms)) for d in self.disjuncts)


def extract_ucq_rewriting(omq: Omq, k: int, max_constants: int | None = None, verified: bool = False) -> Rewriting:
    """Entailing databases of at most k facts read as CQs, without hom-redundant disjuncts."""
    _require_guarded(omq)
    if max_constants is None:
        max_constants = max(1, k * max(1, omq.data_schema.width()))
    dbs, _ = unfoldings(omq, k, max_constants)
    dbs = [d for d in dbs if certain_boolean(d, omq)]
    kept = []
    for d in dbs:  # smaller first, so a more general disjunct is kept before what it covers
        if any(maps_into(generalize(e), d.facts) for e in kept):
            continue
        kept = [e for e in kept if not maps_into(generalize(d), e.facts)] + [d]
    disjuncts = [Cq((), generalize(d)) for d in kept]
    return Rewriting(disjuncts, k, verified)


# engines


def _levels_report(values: dict, max_facts: int) -> tuple:
    run, best = {}, 0
    for n in range(max_facts + 1):
        best = max(best, values.get(n, 0))
        run[n] = best
    growing = max_facts >= 1 and run[max_facts] > run[max_facts - 1]
    return run, growing


def decide_forew(omq: Omq, engine: str = "oracle", max_facts: int = 6, max_constants: int = 7,
                 state_cap: int | None = None, jobs: int = 1) -> Verdict:
    started = time.perf_counter()
    notes = []
    if not isinstance(omq.query, Aq0) or not omq.is_guarded():
        from .treeify import to_guarded_aq0
        omq, steps = to_guarded_aq0(omq)
        notes.extend(steps)
    budgets = {"max_facts": max_facts, "max_constants": max_constants}
    if engine == "oracle":
        verdict = _oracle_engine(omq, budgets, jobs)
    elif engine == "cost":
        verdict = _cost_engine(omq, budgets)
    elif engine == "automata":
        verdict = _automata_engine(omq, state_cap)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    verdict.notes = notes + verdict.notes
    verdict.runtime_ms = int((time.perf_counter() - started) * 1000)
    return verdict


def _oracle_engine(omq: Omq, budgets: dict, jobs: int) -> Verdict:
    report = oracle_condition2(omq, budgets["max_facts"], budgets["max_constants"], jobs)
    witnesses = [(r.facts, r.min_subset) for r in report.witnesses()]
    notes = [] if report.complete else ["unfolding search hit its state limit; report is partial"]
    if report.growing():
        return Verdict("EvidenceNotFo", "oracle", None, witnesses, budgets, notes=notes)
    bound = report.maximum
    rewriting = extract_ucq_rewriting(omq, bound, budgets["max_constants"])
    return Verdict("EvidenceFo", "oracle", bound, witnesses, budgets, notes=notes, rewriting=rewriting)


def _cost_engine(omq: Omq, budgets: dict) -> Verdict:
    h = build_cost_automaton(omq)
    dbs, complete = unfoldings(omq, budgets["max_facts"], budgets["max_constants"])
    values, witnesses, best = {}, [], -1
    for db in dbs:
        if not _bounded(db, omq.data_schema) or not certain_boolean(db, omq):
            continue
        value = cost_value(h, encode_database(db, omq.data_schema.width()))
        values[len(db)] = max(values.get(len(db), 0), value)
        if value > best:
            best = value
            witnesses.append((sort_atoms(db.facts), value))
    _, growing = _levels_report(values, budgets["max_facts"])
    notes = ["witness sizes are derivation costs"] + ([] if complete else ["candidate search is partial"])
    if growing:
        return Verdict("EvidenceNotFo", "cost", None, witnesses, budgets, notes=notes)
    return Verdict("EvidenceFo", "cost", max(best, 0), witnesses, budgets, notes=notes)


def _automata_engine(omq: Omq, state_cap: int | None, label_limit: int = 4096) -> Verdict:
    schema = omq.data_schema
    w = tree_width_bound(schema)
    relations = [(r.name, r.arity) for r in schema]
    budgets = {"state_cap": state_cap}
    total = count_labels(relations, w)
    if total > label_limit:
        return Verdict("Unknown", "automata", budgets=budgets,
                       notes=[f"alphabet has {total} labels, above the limit of {label_limit}"])
    try:
        n = to_nta(build_bq(omq), cap=state_cap)
        result = nta_finiteness(n, list(enumerate_labels(relations, w)))
    except (StateLimitExceeded, BudgetExceeded) as exc:
        return Verdict("Unknown", "automata", budgets=budgets, notes=[str(exc)])
    if isinstance(result, Infinite):
        return Verdict("NotFoRewritable", "automata", budgets=budgets, notes=[str(result)])
    return Verdict("FoRewritable", "automata", budgets=budgets, notes=[str(result)])


# hardness gadget


def _rename(rules, mapping: dict) -> list:
    def ren(a):
        return Atom(mapping.get(a.relation, a.relation), a.args)
    return [Tgd([ren(a) for a in r.body], [ren(a) for a in r.head]) for r in rules]


def _fresh(name: str, taken: set) -> str:
    out = name
    while out in taken:
        out += "_"
    taken.add(out)
    return out


def gen_hardness_instance(q1: Omq, q2: Omq) -> Omq:
    """Q' over S + {R, A, B}: Q1 is contained in Q2 iff Q' is FO-rewritable.

    Adds the rules R(x,y), A(y) -> A(x) and A(x), B(x), G1 -> G2 to both
    ontologies, with the auxiliary predicates of Q1 renamed apart from Q2's and
    the gadget predicates renamed apart from everything else.
    """
    if q1.data_schema != q2.data_schema:
        raise SchemaClash("both OMQs must share the data schema")
    _require_guarded(q1)
    _require_guarded(q2)
    data = q1.data_schema.names()
    aux2 = set(q2.full_schema().names()) - data
    taken = set(data) | aux2
    mapping = {}
    for name in sorted(set(q1.full_schema().names()) - data):
        mapping[name] = _fresh(name, taken) if name in aux2 else name
        taken.add(mapping[name])
    r, a, b = (_fresh(x, taken) for x in ("R", "A", "B"))
    x, y = Variable("x"), Variable("y")
    g1 = Atom(mapping.get(q1.query.name, q1.query.name))
    g2 = Atom(q2.query.name)
    gadget = [Tgd([Atom(r, (x, y)), Atom(a, (y,))], [Atom(a, (x,))]),
              Tgd([Atom(a, (x,)), Atom(b, (x,)), g1], [g2])]
    schema = q1.data_schema.union(Schema([Relation(r, 2), Relation(a, 1), Relation(b, 1)]))
    rules = _rename(q1.ontology, mapping) + list(q2.ontology) + gadget
    return Omq(schema, rules, Aq0(q2.query.name))
