"""Entailment for guarded rules, derivation trees and derivation cost.

The reasoner is a restricted chase over guarded bags in which every bag
created by an existential rule is summarised by its type: the rule that
fired plus the parent's atoms over the frontier.  Bags of equal type derive
the same atoms over their frontier, so each type is evaluated once and its
result reused (this is blocking by type, done with a memo table).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from .errors import BudgetExceeded, NonGuardedOntology
from .logic import (
    Atom,
    AtomIndex,
    Constant,
    Database,
    Null,
    Omq,
    Tgd,
    Variable,
    homomorphisms,
    is_guarded,
    sort_atoms,
)

INFINITY = math.inf


class GuardedReasoner:
    """Computes all atoms entailed over the terms of a finite atom set."""

    def __init__(self, rules):
        rules = tuple(rules)
        for r in rules:
            if not is_guarded(r):
                raise NonGuardedOntology(f"rule is not guarded: {r!r}")
        self.rules = rules
        self.datalog = [(r.body, h) for r in rules if not r.existentials for h in r.head]
        self.existential = [r for r in rules if r.existentials]
        self.frontiers = [tuple(sorted(r.frontier)) for r in self.existential]
        self.memo = {}
        self.settled = set()
        self._serial = {}

    def closure(self, atoms) -> frozenset:
        atoms = frozenset(atoms)
        while True:
            self._dirty = False
            result = self._saturate(atoms)
            for key in [k for k in self.memo if k not in self.settled]:
                grown = self._saturate_child(key)
                if grown != self.memo[key]:
                    self.memo[key] = grown
                    self._dirty = True
            if not self._dirty:
                break
        self.settled.update(self.memo)
        return result

    def entails(self, atoms, target: Atom) -> bool:
        return target in self.closure(atoms)

    def _lookup(self, key) -> frozenset:
        if key not in self.memo:
            self.memo[key] = frozenset()
            self._serial[key] = len(self._serial)
            self._dirty = True
        return self.memo[key]

    def _child_key(self, index: int, h: dict, facts: AtomIndex):
        terms = tuple(h[v] for v in self.frontiers[index])
        slot = {}
        for t in terms:
            slot.setdefault(t, Variable(f"#{len(slot)}"))
        pattern = tuple(slot[t] for t in terms)
        inherited = frozenset(
            a.substitute(slot) for a in facts.atoms if all(t in slot for t in a.args)
        )
        back = {p: t for t, p in slot.items()}
        return (index, pattern, inherited), back

    def _saturate_child(self, key) -> frozenset:
        index, pattern, inherited = key
        rule = self.existential[index]
        serial = self._serial[key]
        mapping = dict(zip(self.frontiers[index], pattern))
        for z in sorted(rule.existentials):
            mapping[z] = Null(f"{serial}.{z.name}")
        start = set(inherited) | {a.substitute(mapping) for a in rule.head}
        placeholders = set(pattern)
        closed = self._saturate(start)
        return frozenset(a for a in closed if all(t in placeholders for t in a.args))

    def _saturate(self, start) -> frozenset:
        facts = AtomIndex(start)
        changed = True
        while changed:
            changed = False
            for body, head in self.datalog:
                for h in list(homomorphisms(body, facts)):
                    if facts.add(head.substitute(h)):
                        changed = True
            for index, rule in enumerate(self.existential):
                for h in list(homomorphisms(rule.body, facts)):
                    if next(homomorphisms(rule.head, facts, h), None) is not None:
                        continue
                    key, back = self._child_key(index, h, facts)
                    for a in self._lookup(key):
                        if facts.add(a.substitute(back)):
                            changed = True
        return frozenset(facts.atoms)


@lru_cache(maxsize=256)
def _reasoner_for(rules: tuple) -> GuardedReasoner:
    return GuardedReasoner(rules)


def reasoner(rules) -> GuardedReasoner:
    return _reasoner_for(tuple(rules))


def saturate(db, rules) -> frozenset:
    """All facts entailed by the database under guarded rules (over adom)."""
    facts = db.facts if isinstance(db, Database) else frozenset(db)
    return reasoner(rules).closure(facts)


def entail_atom(db, onto, target: Atom) -> bool:
    facts = db.facts if isinstance(db, Database) else frozenset(db)
    return reasoner(onto).entails(facts, target)


def certain_boolean(db, omq: Omq) -> bool:
    return entail_atom(db, omq.ontology, omq.goal)


def naive_saturate(atoms, rules, max_rounds: int = 64) -> tuple:
    """Restricted breadth-first chase for arbitrary rules.

    Returns (atoms, terminated). Only meant for rule sets whose chase is
    known to stop, such as frontier-guarded rules without existential
    recursion.
    """
    facts = AtomIndex(atoms)
    fresh = 0
    for _ in range(max_rounds):
        additions = []
        for rule in rules:
            for h in list(homomorphisms(rule.body, facts)):
                if next(homomorphisms(rule.head, facts, h), None) is not None:
                    continue
                mapping = dict(h)
                for z in sorted(rule.existentials):
                    mapping[z] = Null(fresh)
                    fresh += 1
                additions.append([a.substitute(mapping) for a in rule.head])
                for a in additions[-1]:
                    facts.add(a)
        if not additions:
            return frozenset(facts.atoms), True
    return frozenset(facts.atoms), False


def entails(db, rules, target: Atom, max_rounds: int = 64) -> bool:
    """Entailment that falls back to the plain chase for non-guarded rule sets."""
    rules = tuple(rules)
    if all(is_guarded(r) for r in rules):
        return entail_atom(db, rules, target)
    facts = db.facts if isinstance(db, Database) else frozenset(db)
    closed, done = naive_saturate(facts, rules, max_rounds)
    if target in closed:
        return True
    if not done:
        raise BudgetExceeded("chase did not terminate within the round bound")
    return False


# Datalog rewriting


def datalog_saturate(atoms, program) -> frozenset:
    """Least fixpoint of single-head, existential-free rules."""
    facts = AtomIndex(atoms)
    changed = True
    while changed:
        changed = False
        for rule in program:
            for h in list(homomorphisms(rule.body, facts)):
                if facts.add(rule.head[0].substitute(h)):
                    changed = True
    return frozenset(facts.atoms)


@lru_cache(maxsize=64)
def _datalog_rewriting(rules: tuple, budget: int) -> tuple:
    program = {Tgd(r.body, [h]) for r in rules if not r.existentials for h in r.head}
    existential = [r for r in rules if r.existentials]
    if existential:
        engine = reasoner(rules)
        body_relations = {(a.relation, a.arity) for r in rules for a in r.body}
        for r in existential:
            frontier = sorted(r.frontier)
            pool = [
                Atom(name, args)
                for name, arity in sorted(body_relations)
                for args in product(frontier, repeat=arity)
            ]
            for extra, derived in _minimal_contexts(engine, r.head, frontier, pool, budget):
                program.add(Tgd(r.body + tuple(extra), [derived]))
    return tuple(sorted(program, key=Tgd.sort_key))


def _minimal_contexts(engine, head, frontier, pool, budget):
    """Pairs (T, beta): T minimal among pool subsets with beta derived from head+T."""
    found = {}
    layer = [()]
    visited = 0
    while layer:
        following = []
        for chosen in layer:
            visited += 1
            if visited > budget:
                raise BudgetExceeded("datalog rewriting exceeded its context budget")
            context = frozenset(chosen)
            closed = engine.closure(set(head) | context)
            frontier_terms = set(frontier)
            for beta in closed:
                if beta in context or not all(t in frontier_terms for t in beta.args):
                    continue
                known = found.setdefault(beta, [])
                if not any(k <= context for k in known):
                    known.append(context)
            start = pool.index(chosen[-1]) + 1 if chosen else 0
            for a in pool[start:]:
                if a not in closed:
                    following.append(chosen + (a,))
        layer = following
    for beta, contexts in found.items():
        for context in contexts:
            yield sort_atoms(context), beta


def datalog_rewriting(rules, budget: int = 200000) -> tuple:
    """An equivalent Datalog program for entailment of facts over constants.

    Existential rules are replaced by rules body + T -> beta where T ranges
    over minimal sets of atoms over the frontier that make the created bag
    return beta.
    """
    return _datalog_rewriting(tuple(rules), budget)


# guarded supports


def k_q(omq: Omq) -> int:
    schema = omq.full_schema()
    w = schema.width()
    return len(schema) * w ** w


def _minimize(sets) -> list:
    out = []
    for s in sorted(set(sets), key=len):
        if not any(o <= s for o in out):
            out.append(s)
    return out


def _add_minimal(family: list, candidate: frozenset) -> bool:
    for s in family:
        if s <= candidate:
            return False
    family[:] = [s for s in family if not candidate <= s]
    family.append(candidate)
    return True


@lru_cache(maxsize=64)
def _provenance(program: tuple, relations: tuple, size: int, cap: int) -> dict:
    """Minimal why-provenance of every atom over `size` anonymous constants."""
    names = [Constant(f"~{i}") for i in range(size)]
    universe = [Atom(r, args) for r, ar in relations for args in product(names, repeat=ar)]
    prov = {a: [frozenset([a])] for a in universe}
    instances = []
    for rule in program:
        variables = sorted(rule.body_vars)
        for values in product(names, repeat=len(variables)):
            h = dict(zip(variables, values))
            instances.append(([b.substitute(h) for b in rule.body], rule.head[0].substitute(h)))
    changed = True
    while changed:
        changed = False
        for body, head in instances:
            combos = [frozenset()]
            for b in body:
                combos = _minimize(x | y for x in combos for y in prov[b])
                if len(combos) > cap:
                    raise BudgetExceeded("support enumeration exceeded its cap")
            for s in combos:
                if head not in s and _add_minimal(prov[head], s):
                    changed = True
    return prov


def enumerate_guarded_supports(target: Atom, universe, onto, max_size: int | None = None,
                               schema=None, cap: int = 20000) -> list:
    """All subset-minimal guarded fact sets over `universe` entailing `target`."""
    universe = sorted(set(universe))
    if not set(target.args) <= set(universe):
        return []
    rules = tuple(onto)
    relations = {a.relation: a.arity for r in rules for a in r.body + r.head}
    relations.setdefault(target.relation, target.arity)
    if schema is not None:
        relations.update({r.name: r.arity for r in schema})
    relations = tuple(sorted(relations.items()))
    program = datalog_rewriting(rules)
    prov = _provenance(program, relations, len(universe), cap)
    anon = {c: Constant(f"~{i}") for i, c in enumerate(universe)}
    back = {v: k for k, v in anon.items()}
    pool = [Atom(r, args) for r, ar in relations for args in product(universe, repeat=ar)]
    candidates = []
    for s in prov[target.substitute(anon)]:
        s = frozenset(a.substitute(back) for a in s)
        terms = {t for a in s for t in a.args}
        if any(terms <= set(a.args) for a in s):
            candidates.append(s)
        else:
            candidates.extend(s | {g} for g in pool if terms <= set(g.args))
    result = _minimize(candidates)
    if max_size is not None:
        result = [s for s in result if len(s) <= max_size]
    return sorted(result, key=lambda s: (len(s), [a.sort_key() for a in sort_atoms(s)]))


# derivation trees


@dataclass
class DerivationTree:
    label: Atom
    children: list = field(default_factory=list)

    @property
    def height(self) -> int:
        return 1 + max(c.height for c in self.children) if self.children else 0

    def leaves(self):
        if not self.children:
            yield self.label
        for c in self.children:
            yield from c.leaves()

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


def _levels(db: Database, omq: Omq) -> dict:
    """Least derivation height of every derivable fact (level-set iteration)."""
    engine = reasoner(omq.ontology)
    level = {f: 0 for f in db.facts}
    current = set(db.facts)
    height = 0
    while True:
        height += 1
        grown = set(current)
        for g in sort_atoms(current):
            scope = set(g.args)
            pool = [f for f in current if set(f.args) <= scope]
            grown |= engine.closure(pool)
        fresh = grown - current
        if not fresh:
            return level
        for f in fresh:
            level[f] = height
        current = grown


def min_derivation_height(db: Database, omq: Omq):
    """cost(D, Q): least height of a derivation tree, INFINITY if none exists."""
    goal = omq.goal
    if goal in db.facts:
        return 0
    if not certain_boolean(db, omq):
        return INFINITY
    return _levels(db, omq).get(goal, INFINITY)


def build_derivation_tree(db: Database, omq: Omq) -> DerivationTree | None:
    if not certain_boolean(db, omq):
        return None
    engine = reasoner(omq.ontology)
    level = _levels(db, omq)

    def grow(alpha: Atom) -> DerivationTree:
        h = level[alpha]
        if h == 0:
            return DerivationTree(alpha)
        lower = [f for f in level if level[f] < h]
        for g in sort_atoms(lower):
            pool = sort_atoms(f for f in lower if set(f.args) <= set(g.args))
            if not engine.entails(pool, alpha):
                continue
            chosen = list(pool)
            for f in pool:
                if f == g:
                    continue
                trial = [x for x in chosen if x != f]
                if engine.entails(trial, alpha):
                    chosen = trial
            return DerivationTree(alpha, [grow(f) for f in chosen])
        raise AssertionError(f"no support found for {alpha!r}")

    return grow(omq.goal)


def validate_derivation_tree(tree: DerivationTree, db: Database, omq: Omq) -> list:
    """Return the list of violated conditions (empty when the tree is valid)."""
    problems = []
    engine = reasoner(omq.ontology)
    adom = db.adom
    bound = k_q(omq)
    if tree.label != omq.goal:
        problems.append("root is not the query predicate")
    for node in tree.nodes():
        if not set(node.label.args) <= adom:
            problems.append(f"{node.label!r} leaves the active domain")
        if not node.children:
            if node.label not in db.facts:
                problems.append(f"leaf {node.label!r} is not a database fact")
            continue
        labels = [c.label for c in node.children]
        if len(labels) > bound:
            problems.append(f"{node.label!r} has more than k_Q children")
        terms = {t for a in labels for t in a.args}
        if not any(terms <= set(a.args) for a in labels):
            problems.append(f"children of {node.label!r} are not guarded")
        if not engine.entails(labels, node.label):
            problems.append(f"children of {node.label!r} do not entail it")
    return problems


@dataclass
class CostReport:
    costs: dict
    omq: Omq

    def probe(self) -> list:
        return [self.costs[name] for name in self.costs]

    def growing(self) -> bool:
        values = [v for v in self.probe() if v != INFINITY]
        return len(values) >= 2 and all(a < b for a, b in zip(values, values[1:]))


def cost_report(databases: dict, omq: Omq) -> CostReport:
    return CostReport({name: min_derivation_height(db, omq) for name, db in databases.items()}, omq)
