"""Relational vocabulary: terms, atoms, databases, queries, rules and OMQs.

Also hosts the generic homomorphism search and the canonical labeling used
to deduplicate structures up to isomorphism.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


class Term:
    __slots__ = ("name", "_hash")
    kind = -1

    def __init__(self, name):
        self.name = name
        self._hash = hash((self.kind, name))

    def __eq__(self, other):
        return type(other) is type(self) and other.name == self.name

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.kind, self.name)

    def __repr__(self):
        return str(self.name)


class Constant(Term):
    __slots__ = ()
    kind = 0


class Variable(Term):
    __slots__ = ()
    kind = 1


class Null(Term):
    __slots__ = ()
    kind = 2

    def __repr__(self):
        return f"_:n{self.name}"


class Atom:
    """A relation name applied to a tuple of terms."""

    __slots__ = ("relation", "args", "_hash")

    def __init__(self, relation: str, args=()):
        self.relation = relation
        self.args = tuple(args)
        self._hash = hash((relation, self.args))

    def __eq__(self, other):
        return (
            isinstance(other, Atom)
            and self._hash == other._hash
            and self.relation == other.relation
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return (self.relation, tuple(a.sort_key() for a in self.args))

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    @property
    def arity(self) -> int:
        return len(self.args)

    def terms(self) -> frozenset:
        return frozenset(self.args)

    def variables(self) -> frozenset:
        return frozenset(a for a in self.args if isinstance(a, Variable))

    def substitute(self, mapping: Mapping) -> "Atom":
        return Atom(self.relation, tuple(mapping.get(a, a) for a in self.args))

    def is_fact(self) -> bool:
        return all(isinstance(a, Constant) for a in self.args)

    def __repr__(self):
        if not self.args:
            return self.relation
        return f"{self.relation}({','.join(map(repr, self.args))})"


def fact(relation: str, *names: str) -> Atom:
    return Atom(relation, tuple(Constant(n) for n in names))


def atom(relation: str, *names: str) -> Atom:
    return Atom(relation, tuple(Variable(n) for n in names))


def sort_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms, key=Atom.sort_key)


@dataclass(frozen=True, order=True)
class Relation:
    name: str
    arity: int

    def __repr__(self):
        return f"{self.name}/{self.arity}"


class Schema:
    """A finite set of relation symbols with fixed arities."""

    def __init__(self, relations: Iterable[Relation]):
        table = {}
        for rel in relations:
            if rel.name in table and table[rel.name] != rel.arity:
                raise ValueError(f"relation {rel.name} declared with two arities")
            table[rel.name] = rel.arity
        self._arity = table

    @classmethod
    def of(cls, **arities: int) -> "Schema":
        return cls(Relation(n, a) for n, a in arities.items())

    @property
    def relations(self) -> list:
        return [Relation(n, a) for n, a in sorted(self._arity.items())]

    def names(self) -> frozenset:
        return frozenset(self._arity)

    def arity(self, name: str) -> int:
        return self._arity[name]

    def __contains__(self, name) -> bool:
        return name in self._arity

    def __len__(self):
        return len(self._arity)

    def __iter__(self):
        return iter(self.relations)

    def __eq__(self, other):
        return isinstance(other, Schema) and self._arity == other._arity

    def __hash__(self):
        return hash(frozenset(self._arity.items()))

    def width(self) -> int:
        return max(self._arity.values(), default=0)

    def union(self, other: "Schema") -> "Schema":
        return Schema(list(self) + list(other))

    def __repr__(self):
        return "Schema(" + ", ".join(map(repr, self.relations)) + ")"


class Database:
    """A finite set of facts."""

    def __init__(self, facts: Iterable[Atom] = ()):
        self.facts = frozenset(facts)
        for f in self.facts:
            if not f.is_fact():
                raise ValueError(f"{f!r} is not a fact")

    @property
    def adom(self) -> frozenset:
        return frozenset(a for f in self.facts for a in f.args)

    def restrict(self, constants: Iterable) -> "Database":
        keep = set(constants)
        return Database(f for f in self.facts if set(f.args) <= keep)

    def __iter__(self):
        return iter(sort_atoms(self.facts))

    def __len__(self):
        return len(self.facts)

    def __contains__(self, item):
        return item in self.facts

    def __eq__(self, other):
        return isinstance(other, Database) and self.facts == other.facts

    def __hash__(self):
        return hash(self.facts)

    def __sub__(self, other):
        return Database(self.facts - set(other))

    def __or__(self, other):
        return Database(self.facts | set(other))

    def __repr__(self):
        return "{" + ", ".join(map(repr, self)) + "}"


@dataclass(frozen=True)
class Cq:
    answer_vars: tuple
    atoms: tuple
    equalities: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "answer_vars", tuple(self.answer_vars))
        object.__setattr__(self, "atoms", tuple(sort_atoms(set(self.atoms))))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        missing = set(self.answer_vars) - self.variables()
        if missing:
            raise ValueError(f"answer variables {missing} not used in the query")

    def variables(self) -> frozenset:
        out = set()
        for a in self.atoms:
            out |= a.variables()
        for x, y in self.equalities:
            out.update((x, y))
        return frozenset(out)

    def normalized(self) -> tuple:
        """Return (atoms, answer_vars, representative map) with equalities resolved."""
        rep = _union_find(self.equalities)
        atoms = tuple(sort_atoms({a.substitute(rep) for a in self.atoms}))
        answer = tuple(rep.get(v, v) for v in self.answer_vars)
        return atoms, answer, rep

    def is_boolean(self) -> bool:
        return not self.answer_vars

    def __repr__(self):
        body = ", ".join(map(repr, self.atoms))
        eqs = "".join(f", {x!r} = {y!r}" for x, y in self.equalities)
        return f"q({','.join(map(repr, self.answer_vars))}) := {body}{eqs}"


@dataclass(frozen=True)
class Ucq:
    disjuncts: tuple

    def __post_init__(self):
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        if not self.disjuncts:
            raise ValueError("a UCQ needs at least one disjunct")
        arities = {len(d.answer_vars) for d in self.disjuncts}
        if len(arities) != 1:
            raise ValueError("disjuncts disagree on the number of answer variables")

    @property
    def arity(self) -> int:
        return len(self.disjuncts[0].answer_vars)


@dataclass(frozen=True)
class Aq0:
    name: str

    def __repr__(self):
        return f"atom {self.name}"


def _union_find(pairs) -> dict:
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for x, y in pairs:
        rx, ry = find(x), find(y)
        if rx != ry:
            lo, hi = sorted((rx, ry), key=Term.sort_key)
            parent[hi] = lo
    return {x: find(x) for x in parent}


class Tgd:
    """An existential rule body -> exists z. head."""

    def __init__(self, body: Iterable[Atom], head: Iterable[Atom]):
        self.body = tuple(sort_atoms(set(body)))
        self.head = tuple(sort_atoms(set(head)))
        if not self.body:
            raise ValueError("rule body must be nonempty")
        if not self.head:
            raise ValueError("rule head must be nonempty")
        body_vars = set().union(*(a.variables() for a in self.body))
        head_vars = set().union(*(a.variables() for a in self.head))
        self.body_vars = frozenset(body_vars)
        self.frontier = frozenset(body_vars & head_vars)
        self.existentials = frozenset(head_vars - body_vars)

    def __eq__(self, other):
        return isinstance(other, Tgd) and (self.body, self.head) == (other.body, other.head)

    def __hash__(self):
        return hash((self.body, self.head))

    def sort_key(self):
        return (tuple(a.sort_key() for a in self.body), tuple(a.sort_key() for a in self.head))

    def relations(self) -> dict:
        return {a.relation: a.arity for a in self.body + self.head}

    def __repr__(self):
        head = ", ".join(map(repr, self.head))
        if self.existentials:
            names = ",".join(map(repr, sorted(self.existentials)))
            head = f"exists {names}. {head}"
        return f"{', '.join(map(repr, self.body))} -> {head}"


@dataclass(frozen=True)
class Guarded:
    guard: Atom


@dataclass(frozen=True)
class FrontierGuarded:
    guard: Atom


@dataclass(frozen=True)
class Neither:
    pass


def classify_tgd(tgd: Tgd):
    for a in tgd.body:
        if tgd.body_vars <= a.variables():
            return Guarded(a)
    for a in tgd.body:
        if tgd.frontier <= a.variables():
            return FrontierGuarded(a)
    return Neither()


def is_guarded(tgd: Tgd) -> bool:
    return isinstance(classify_tgd(tgd), Guarded)


def is_frontier_guarded(tgd: Tgd) -> bool:
    return not isinstance(classify_tgd(tgd), Neither)


def signature(rules: Iterable[Tgd]) -> Schema:
    rels = {}
    for r in rules:
        rels.update(r.relations())
    return Schema(Relation(n, a) for n, a in rels.items())


def ontology_width(rules: Iterable[Tgd]) -> int:
    """Maximum number of variables in a rule body."""
    return max((len(r.body_vars) for r in rules), default=0)


@dataclass(frozen=True)
class Omq:
    data_schema: Schema
    ontology: tuple
    query: object

    def __post_init__(self):
        object.__setattr__(self, "ontology", tuple(self.ontology))

    def sig(self) -> Schema:
        return signature(self.ontology)

    def full_schema(self) -> Schema:
        full = self.data_schema.union(self.sig())
        if isinstance(self.query, Aq0) and self.query.name not in full:
            full = full.union(Schema([Relation(self.query.name, 0)]))
        return full

    @property
    def goal(self) -> Atom:
        if not isinstance(self.query, Aq0):
            raise TypeError("OMQ query is not atomic")
        return Atom(self.query.name, ())

    def is_guarded(self) -> bool:
        return all(is_guarded(r) for r in self.ontology)

    def is_frontier_guarded(self) -> bool:
        return all(is_frontier_guarded(r) for r in self.ontology)


# homomorphisms


class AtomIndex:
    """Lookup structure for matching patterns against a set of atoms."""

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.by_relation = defaultdict(set)
        self.by_position = defaultdict(set)
        self.atoms = set()
        for a in atoms:
            self.add(a)

    def add(self, a: Atom) -> bool:
        if a in self.atoms:
            return False
        self.atoms.add(a)
        self.by_relation[a.relation].add(a.args)
        for i, t in enumerate(a.args):
            self.by_position[(a.relation, i, t)].add(a.args)
        return True

    def __contains__(self, a):
        return a in self.atoms

    def candidates(self, relation: str, fixed: list):
        best = self.by_relation.get(relation, ())
        for pos, term in fixed:
            options = self.by_position.get((relation, pos, term), ())
            if len(options) < len(best):
                best = options
            if not best:
                break
        return best


def homomorphisms(pattern: Iterable[Atom], target, partial: Mapping | None = None) -> Iterator[dict]:
    """Yield every extension of `partial` mapping the pattern's variables into the target.

    Non-variable pattern terms must map to themselves. The target may be an
    AtomIndex, a Database or any iterable of atoms.
    """
    if not isinstance(target, AtomIndex):
        target = AtomIndex(target.facts if isinstance(target, Database) else target)
    remaining = list(pattern)
    mapping = dict(partial or {})
    yield from _extend(remaining, target, mapping)


def _bound_positions(a: Atom, mapping: dict) -> list:
    fixed = []
    for i, t in enumerate(a.args):
        if isinstance(t, Variable):
            if t in mapping:
                fixed.append((i, mapping[t]))
        else:
            fixed.append((i, t))
    return fixed


def _extend(remaining: list, index: AtomIndex, mapping: dict):
    if not remaining:
        yield dict(mapping)
        return
    # most constrained atom first
    best_i, best_cands, best_fixed = None, None, None
    for i, a in enumerate(remaining):
        fixed = _bound_positions(a, mapping)
        cands = index.candidates(a.relation, fixed)
        if best_cands is None or len(cands) < len(best_cands):
            best_i, best_cands, best_fixed = i, cands, fixed
            if not cands:
                return
    a = remaining[best_i]
    rest = remaining[:best_i] + remaining[best_i + 1:]
    fixed = dict(best_fixed)
    for args in list(best_cands):
        if any(args[p] != t for p, t in fixed.items()):
            continue
        added = []
        ok = True
        for t, value in zip(a.args, args):
            if not isinstance(t, Variable):
                continue
            seen = mapping.get(t)
            if seen is None:
                mapping[t] = value
                added.append(t)
            elif seen != value:
                ok = False
                break
        if ok:
            yield from _extend(rest, index, mapping)
        for t in added:
            del mapping[t]


def find_homomorphism(q, target, partial: Mapping | None = None):
    """Return a homomorphism from the CQ (or atom collection) into the target, or None."""
    if isinstance(q, Cq):
        atoms, _, rep = q.normalized()
        variables = q.variables()
    else:
        atoms, rep = tuple(q), {}
        variables = set().union(*(a.variables() for a in atoms)) if atoms else set()
    start = {}
    for v, value in (partial or {}).items():
        r = rep.get(v, v)
        if start.get(r, value) != value:
            return None
        start[r] = value
    for h in homomorphisms(atoms, target, start):
        out = {}
        for v in variables:
            r = rep.get(v, v)
            if r in h:
                out[v] = h[r]
        return out
    return None


def evaluate_ucq(q, target) -> set:
    """Answers of a CQ or UCQ over a database, as tuples of terms."""
    disjuncts = q.disjuncts if isinstance(q, Ucq) else (q,)
    index = AtomIndex(target.facts if isinstance(target, Database) else target)
    answers = set()
    for d in disjuncts:
        atoms, answer_vars, _ = d.normalized()
        for h in homomorphisms(atoms, index):
            answers.add(tuple(h[v] for v in answer_vars))
    return answers


def maps_into(source: Iterable[Atom], target: Iterable[Atom], fixed: Iterable = ()) -> bool:
    """Is there a homomorphism from source to target that is the identity on `fixed`?"""
    start = {v: v for v in fixed}
    return find_homomorphism(tuple(source), AtomIndex(target), start) is not None


# canonical labeling


def _term_key(t):
    return (t.kind, t.name)


def canonical_form(atoms: Iterable[Atom], fixed: Iterable = ()) -> tuple:
    """Canonical encoding of an atom set up to renaming of all terms outside `fixed`.

    Colour refinement splits terms by their occurrence pattern; remaining ties
    are broken by individualising each member of the first ambiguous cell and
    keeping the lexicographically least encoding.
    """
    atoms = list(set(atoms))
    fixed = frozenset(fixed)
    terms = sorted({t for a in atoms for t in a.args if t not in fixed}, key=_term_key)
    occurrences = defaultdict(list)
    for a in atoms:
        for pos, t in enumerate(a.args):
            if t not in fixed:
                occurrences[t].append((a, pos))
    colors = {t: 0 for t in terms}
    return _search(atoms, terms, occurrences, colors, fixed)


def _arg_code(t, colors, fixed):
    if t in fixed:
        return ("c", t.kind, t.name)
    return ("#", colors[t])


def _refine(terms, occurrences, colors, fixed):
    cells = len(set(colors.values()))
    while True:
        signatures = {}
        for t in terms:
            occ = sorted(
                (a.relation, pos, tuple(_arg_code(x, colors, fixed) for x in a.args))
                for a, pos in occurrences[t]
            )
            signatures[t] = (colors[t], tuple(occ))
        ranking = {s: i for i, s in enumerate(sorted(set(signatures.values())))}
        colors = {t: ranking[signatures[t]] for t in terms}
        new_cells = len(ranking)
        if new_cells == cells:
            return colors
        cells = new_cells


def _search(atoms, terms, occurrences, colors, fixed):
    colors = _refine(terms, occurrences, colors, fixed)
    cells = defaultdict(list)
    for t in terms:
        cells[colors[t]].append(t)
    ambiguous = [c for c in sorted(cells) if len(cells[c]) > 1]
    if not ambiguous:
        return tuple(sorted((a.relation, tuple(_arg_code(x, colors, fixed) for x in a.args)) for a in atoms))
    cell = ambiguous[0]
    best = None
    for chosen in cells[cell]:
        split = {t: (c, 0 if t == chosen else 1) if c == cell else (c, 0) for t, c in colors.items()}
        ranking = {s: i for i, s in enumerate(sorted(set(split.values())))}
        result = _search(atoms, terms, occurrences, {t: ranking[s] for t, s in split.items()}, fixed)
        if best is None or result < best:
            best = result
    return best


def canonical_key(db) -> bytes:
    facts = db.facts if isinstance(db, Database) else db
    return repr(canonical_form(facts)).encode()


def cq_key(q: Cq) -> bytes:
    atoms, answer, _ = q.normalized()
    labelled = list(atoms) + [Atom("#answer", answer)]
    return repr(canonical_form(labelled)).encode()


def freeze(atoms: Iterable[Atom], prefix: str = "") -> Database:
    """Turn a variable-based atom set into a database by reading variables as constants."""
    mapping = {}
    for a in atoms:
        for t in a.args:
            if not isinstance(t, Constant):
                mapping[t] = Constant(prefix + str(t.name))
    return Database(a.substitute(mapping) for a in atoms)


def generalize(db: Database) -> tuple:
    """Read a database as a Boolean CQ body (constants become variables)."""
    mapping = {c: Variable(c.name) for c in db.adom}
    return tuple(sort_atoms(f.substitute(mapping) for f in db.facts))
