"""Frontier-guarded to guarded translation and query reductions.

Every input OMQ is funnelled into the (guarded, 0-ary atomic query) shape the
decision engines expect:

* a UCQ with answer variables is closed off with fresh unary markers and a
  fresh 0-ary goal (`reduce_ucq_to_aq0`);
* non-guarded rule bodies are replaced by their strictly acyclic
  treeifications, each unfolded into guarded rules over auxiliary predicates
  (`translate_fg_to_g`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

from .errors import CombinatorialBudgetExceeded, NotFrontierGuarded, NotStrictlyAcyclic, QueryTooLarge
from .logic import (
    Aq0,
    Atom,
    AtomIndex,
    Cq,
    Omq,
    Relation,
    Schema,
    Tgd,
    Ucq,
    Variable,
    Neither,
    canonical_form,
    classify_tgd,
    cq_key,
    find_homomorphism,
    is_guarded,
    ontology_width,
    sort_atoms,
)

VARIABLE_LIMIT = 12


# acyclicity


@dataclass
class JoinTree:
    """Atoms arranged in a tree whose variable sets satisfy running intersection."""

    atoms: tuple
    parent: list

    @property
    def root(self) -> int:
        return self.parent.index(None)

    def children(self, i: int) -> list:
        return [j for j, p in enumerate(self.parent) if p == i]

    def bags(self) -> list:
        return [a.variables() for a in self.atoms]


def _atoms_of(q) -> tuple:
    if isinstance(q, Cq):
        atoms, answer, _ = q.normalized()
        return atoms, answer
    return tuple(sort_atoms(set(q))), ()


def _check_size(atoms, limit):
    n = len(set().union(*(a.variables() for a in atoms))) if atoms else 0
    if limit is not None and n > limit:
        raise QueryTooLarge(f"query has {n} variables, limit is {limit}")


def _spanning_tree(atoms: tuple, root: int) -> list:
    """Maximum-weight spanning tree of the intersection graph, grown from root."""
    vars_ = [a.variables() for a in atoms]
    parent = [None] * len(atoms)
    inside = {root}
    while len(inside) < len(atoms):
        best = None
        for j in range(len(atoms)):
            if j in inside:
                continue
            for i in sorted(inside):
                key = (-len(vars_[i] & vars_[j]), j, i)
                if best is None or key < best:
                    best = key
        _, j, i = best
        parent[j] = i
        inside.add(j)
    return parent


def _running_intersection(atoms: tuple, parent: list) -> bool:
    vars_ = [a.variables() for a in atoms]
    for v in set().union(*vars_):
        tops = [i for i in range(len(atoms)) if v in vars_[i] and (parent[i] is None or v not in vars_[parent[i]])]
        if len(tops) != 1:
            return False
    return True


def join_tree(q, strict: bool = False, limit: int | None = VARIABLE_LIMIT) -> JoinTree | None:
    """A join tree witnessing (strict) acyclicity, or None.

    A hypergraph is acyclic exactly when a maximum-weight spanning tree of its
    intersection graph is a join tree, so one tree suffices.  For the strict
    variant the root is an atom covering all answer variables; the smallest
    such atom is preferred so that the answer variables stay unquantified as
    long as possible.
    """
    atoms, answer = _atoms_of(q)
    _check_size(atoms, limit)
    if not atoms:
        return JoinTree((), [])
    if strict:
        covering = [i for i, a in enumerate(atoms) if set(answer) <= a.variables()]
        if not covering:
            return None
        root = min(covering, key=lambda i: (len(atoms[i].variables()), i))
    else:
        root = 0
    parent = _spanning_tree(atoms, root)
    return JoinTree(atoms, parent) if _running_intersection(atoms, parent) else None


def is_acyclic_cq(q, limit: int | None = VARIABLE_LIMIT) -> bool:
    return join_tree(q, False, limit) is not None


def is_strictly_acyclic_cq(q, limit: int | None = VARIABLE_LIMIT) -> bool:
    return join_tree(q, True, limit) is not None


# strictly guarded formulas


@dataclass(frozen=True)
class Leaf:
    atom: Atom

    def free(self) -> frozenset:
        return self.atom.variables()


@dataclass(frozen=True)
class Exists:
    variables: tuple
    guard: Atom
    body: tuple

    def free(self) -> frozenset:
        return self.guard.variables() - set(self.variables)


def flatten(form) -> list:
    if isinstance(form, Leaf):
        return [form.atom]
    out = [form.guard]
    for sub in form.body:
        out.extend(flatten(sub))
    return out


def render(form) -> str:
    if isinstance(form, Leaf):
        return repr(form.atom)
    inner = " ∧ ".join([repr(form.guard)] + [render(s) for s in form.body])
    if not form.variables:
        return inner
    names = ",".join(map(repr, form.variables))
    return f"∃{names} ({inner})" if form.body else f"∃{names} {inner}"


def to_strictly_guarded(q: Cq):
    """Nest a strictly acyclic CQ along its join tree."""
    tree = join_tree(q, strict=True)
    if tree is None or not tree.atoms:
        raise NotStrictlyAcyclic(f"{q!r} is not strictly acyclic")
    _, answer, _ = q.normalized()

    def build(i, outer):
        here = tree.atoms[i].variables()
        quantified = tuple(sorted(here - outer))
        body = tuple(build(c, here) for c in tree.children(i))
        if not quantified and not body:
            return Leaf(tree.atoms[i])
        return Exists(quantified, tree.atoms[i], body)

    return build(tree.root, frozenset(answer))


# treeification


def _partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _cover_atoms(atoms, schema: Schema, taken: set) -> list:
    """Atoms that can glue a cycle: they join variables no single atom covers."""
    present = sorted(set().union(*(a.variables() for a in atoms)))
    covered = [a.variables() for a in atoms]
    out = []
    counter = 0
    for rel in schema:
        for size in range(2, min(rel.arity, len(present)) + 1):
            for chosen in combinations(present, size):
                if any(set(chosen) <= c for c in covered):
                    continue
                for slots in permutations(range(rel.arity), size):
                    args = [None] * rel.arity
                    for v, s in zip(chosen, slots):
                        args[s] = v
                    for s in range(rel.arity):
                        if args[s] is None:
                            counter += 1
                            while f"w{counter}" in taken:
                                counter += 1
                            args[s] = Variable(f"w{counter}")
                    out.append(Atom(rel.name, args))
    return out


def _member(x: tuple, atoms, ans: tuple) -> Cq:
    eqs = [(xi, ai) for xi, ai in zip(x, ans) if xi != ai]
    return Cq(x, atoms, eqs)


def _contained(q_atoms, q_answer, atoms, ans) -> bool:
    """Does q map into the atoms, sending its answer tuple to ans?"""
    partial = {}
    for v, a in zip(q_answer, ans):
        if partial.get(v, a) != a:
            return False
        partial[v] = a
    index = atoms if isinstance(atoms, AtomIndex) else AtomIndex(atoms)
    return find_homomorphism(q_atoms, index, partial) is not None


def _minimal(q_atoms, q_answer, atoms, ans) -> bool:
    for a in atoms:
        rest = [b for b in atoms if b != a]
        used = set().union(*(b.variables() for b in rest)) if rest else set()
        if not set(ans) <= used:
            continue
        if join_tree(_answer_cq(rest, ans), strict=True, limit=None) and _contained(q_atoms, q_answer, rest, ans):
            return False
    return True


def _answer_cq(atoms, ans) -> Cq:
    return Cq(tuple(dict.fromkeys(ans)), atoms)


def treeification(q: Cq, target_schema: Schema, max_extra: int = 2, budget: int = 200_000) -> list:
    """Minimal strictly acyclic CQs over the target schema contained in q.

    Candidates are homomorphic images of q, optionally glued by up to
    `max_extra` atoms over the target schema (and never more than 3|q| atoms
    in total).  Members subsumed by another member are dropped, so the result
    is equivalent as a union to the full set while staying small.
    """
    q_atoms, q_answer, _ = q.normalized()
    x = tuple(q.answer_vars)
    _check_size(q_atoms, VARIABLE_LIMIT)
    variables = sorted(set().union(*(a.variables() for a in q_atoms)))
    taken = {v.name for v in variables} | {v.name for v in x}
    max_atoms = 3 * len(q_atoms)
    found = {}
    spent = 0

    def offer(atoms, ans):
        if _minimal(q_atoms, q_answer, atoms, ans):
            member = _member(x, atoms, ans)
            found.setdefault(cq_key(member), member)

    for part in _partitions(variables):
        rep = {}
        for block in part:
            answers = [v for v in q_answer if v in block]
            head = answers[0] if answers else min(block)
            for v in block:
                rep[v] = head
        image = sort_atoms({a.substitute(rep) for a in q_atoms})
        ans = tuple(rep[v] for v in q_answer)
        spent += 1
        if join_tree(_answer_cq(image, ans), strict=True, limit=None):
            offer(image, ans)
            continue
        extras = _cover_atoms(image, target_schema, taken)
        frontier = [()]
        for depth in range(1, max_extra + 1):
            grown = []
            for chosen in frontier:
                start = chosen[-1] + 1 if chosen else 0
                for j in range(start, len(extras)):
                    spent += 1
                    if spent > budget:
                        raise CombinatorialBudgetExceeded(f"treeification examined more than {budget} candidates")
                    pick = chosen + (j,)
                    atoms = image + [extras[k] for k in pick]
                    if len(atoms) > max_atoms:
                        continue
                    if join_tree(_answer_cq(atoms, ans), strict=True, limit=None):
                        offer(atoms, ans)
                    else:
                        grown.append(pick)
            frontier = grown

    members = sorted(found.values(), key=lambda m: (len(m.atoms), cq_key(m)))
    forms = [m.normalized()[:2] for m in members]
    indexes = [AtomIndex(atoms) for atoms, _ in forms]
    relations = [frozenset(a.relation for a in atoms) for atoms, _ in forms]

    def maps(j, i):
        return relations[j] <= relations[i] and _contained(*forms[j], indexes[i], forms[i][1])

    def subsumed(i):
        for j in range(len(forms)):
            # among equivalent members keep the earliest
            if j != i and maps(j, i) and (j < i or not maps(i, j)):
                return True
        return False

    return [m for i, m in enumerate(members) if not subsumed(i)]


# unfolding into guarded rules


class Unfolder:
    """Allocates auxiliary predicates, one per subformula up to isomorphism."""

    def __init__(self, taken: set, prefix: str = "T"):
        self.taken = set(taken)
        self.prefix = prefix
        self.names = {}
        self.origins = {}
        self.counter = 0

    def predicate(self, form) -> Atom:
        atoms = flatten(form)
        free = sorted(form.free())
        best = None
        for order in permutations(free):
            key = canonical_form(atoms + [Atom("#free", order)])
            if best is None or key < best[0]:
                best = (key, order)
        key, order = best if best else (canonical_form(atoms + [Atom("#free", ())]), ())
        if key not in self.names:
            self.counter += 1
            name = f"{self.prefix}{self.counter}"
            while name in self.taken:
                self.counter += 1
                name = f"{self.prefix}{self.counter}"
            self.taken.add(name)
            self.names[key] = name
            self.origins[name] = render(form)
        return Atom(self.names[key], order)

    def emit(self, form, rules: list) -> Atom:
        head = self.predicate(form)
        if isinstance(form, Leaf):
            body = [form.atom]
        else:
            body = [form.guard] + [self.emit(sub, rules) for sub in form.body]
        rule = Tgd(body, [head])
        if rule not in rules:
            rules.append(rule)
        return head


def unfold_strictly_acyclic(rule: Tgd, unfolder: Unfolder | None = None) -> list:
    """Guarded rules equivalent to a rule with a strictly acyclic body."""
    if unfolder is None:
        unfolder = Unfolder({a.relation for a in rule.body + rule.head})
    frontier = tuple(sorted(rule.frontier))
    chi = to_strictly_guarded(Cq(frontier, rule.body))
    rules = []
    top = unfolder.emit(chi, rules)
    final = Tgd([top], rule.head)
    if final not in rules:
        rules.insert(0, final)
    return rules


# whole-OMQ translations


@dataclass
class Translation:
    omq: Omq
    origins: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _names(omq: Omq) -> set:
    out = set(omq.full_schema().names())
    q = omq.query
    for d in (q.disjuncts if isinstance(q, Ucq) else (q,) if isinstance(q, Cq) else ()):
        out |= {a.relation for a in d.atoms}
    return out


def _fresh(name: str, taken: set) -> str:
    out = name
    while out in taken:
        out += "_"
    taken.add(out)
    return out


def translate_fg_to_g(omq: Omq, max_extra: int = 2, budget: int = 200_000) -> Translation:
    """Guarded OMQ over S ∪ {C} agreeing with the input on acyclic databases."""
    if not isinstance(omq.query, Aq0):
        raise ValueError("translate_fg_to_g expects a 0-ary atomic query")
    for r in omq.ontology:
        if isinstance(classify_tgd(r), Neither):
            raise NotFrontierGuarded(f"rule {r!r} is not frontier-guarded")
    taken = _names(omq)
    width = ontology_width(omq.ontology)
    c = _fresh("C", taken)
    target = omq.full_schema().union(Schema([Relation(c, width)]))
    unfolder = Unfolder(taken)
    rules, notes = [], []
    for r in omq.ontology:
        if is_guarded(r):
            if r not in rules:
                rules.append(r)
            continue
        frontier = tuple(sorted(r.frontier))
        members = treeification(Cq(frontier, r.body), target, max_extra, budget)
        notes.append(f"rule {r!r}: {len(members)} treeified bodies")
        for m in members:
            atoms, ans, _ = m.normalized()
            sub = dict(zip(frontier, ans))
            head = [a.substitute(sub) for a in r.head]
            for g in unfold_strictly_acyclic(Tgd(atoms, head), unfolder):
                if g not in rules:
                    rules.append(g)
    origins = {c: f"guard cover of arity {width}", **unfolder.origins}
    schema = omq.data_schema.union(Schema([Relation(c, width)]))
    return Translation(Omq(schema, rules, omq.query), origins, notes)


def reduce_ucq_to_aq0(omq: Omq) -> Translation:
    """Close off answer variables with unary markers and funnel every disjunct into a goal."""
    q = omq.query
    if isinstance(q, Aq0):
        return Translation(omq)
    disjuncts = q.disjuncts if isinstance(q, Ucq) else (q,)
    taken = _names(omq)
    arity = len(disjuncts[0].answer_vars)
    markers = [_fresh(f"A_{i + 1}", taken) for i in range(arity)]
    goal = _fresh("G", taken)
    rules = list(omq.ontology)
    for d in disjuncts:
        atoms, ans, _ = d.normalized()
        body = list(atoms) + [Atom(m, (v,)) for m, v in zip(markers, ans)]
        if not body:
            raise ValueError("cannot turn an empty disjunct into a rule")
        rules.append(Tgd(body, [Atom(goal, ())]))
    schema = omq.data_schema.union(Schema([Relation(m, 1) for m in markers]))
    origins = {m: f"marks answer position {i + 1}" for i, m in enumerate(markers)}
    origins[goal] = "goal reached by any disjunct"
    notes = [f"query reduced to atom {goal} with {len(disjuncts)} goal rules"]
    return Translation(Omq(schema, rules, Aq0(goal)), origins, notes)


def to_guarded_aq0(omq: Omq, max_extra: int = 2, budget: int = 200_000) -> tuple:
    """Apply whichever reductions are needed; returns (omq, notes)."""
    notes = []
    if not isinstance(omq.query, Aq0):
        t = reduce_ucq_to_aq0(omq)
        omq = t.omq
        notes.extend(t.notes)
    if not omq.is_guarded():
        t = translate_fg_to_g(omq, max_extra, budget)
        omq = t.omq
        notes.extend(t.notes)
        notes.append(f"translated to guarded rules over {sorted(omq.data_schema.names())}")
    return omq, notes
