"""Brute-force reference implementations used to check the package.

Nothing here shares code with the package beyond the plain data classes.
"""
from __future__ import annotations

from itertools import combinations, permutations, product

from gomq.logic import Atom, Constant, Database, Null, Variable


def all_assignments_hom(atoms, facts):
    """First assignment of variables mapping every atom into facts, by exhaustion."""
    facts = set(facts)
    variables = sorted({t for a in atoms for t in a.args if isinstance(t, Variable)})
    domain = sorted({t for f in facts for t in f.args})
    for values in product(domain, repeat=len(variables)):
        h = dict(zip(variables, values))
        if all(Atom(a.relation, [h.get(t, t) for t in a.args]) in facts for a in atoms):
            return h
    return None


def isomorphic(db1, db2) -> bool:
    f1, f2 = set(db1), set(db2)
    if len(f1) != len(f2):
        return False
    c1 = sorted({t for f in f1 for t in f.args})
    c2 = sorted({t for f in f2 for t in f.args})
    if len(c1) != len(c2):
        return False
    for perm in permutations(c2):
        h = dict(zip(c1, perm))
        if {Atom(f.relation, [h[t] for t in f.args]) for f in f1} == f2:
            return True
    return False


def _matches(body, facts):
    variables = sorted({t for a in body for t in a.args})
    domain = sorted({t for f in facts for t in f.args}, key=lambda t: (t.kind, str(t.name)))
    for values in product(domain, repeat=len(variables)):
        h = dict(zip(variables, values))
        if all(Atom(a.relation, [h[t] for t in a.args]) in facts for a in body):
            yield h


def naive_chase(facts, rules, depth: int):
    """Oblivious chase truncated after `depth` rounds; returns (facts, saturated)."""
    facts = set(facts)
    fired = set()
    counter = [0]
    for _ in range(depth):
        new = set()
        for ri, rule in enumerate(rules):
            for h in list(_matches(rule.body, facts)):
                trigger = (ri, tuple(sorted((v.name, repr(t)) for v, t in h.items())))
                if trigger in fired:
                    continue
                fired.add(trigger)
                ext = dict(h)
                for z in sorted(rule.existentials):
                    counter[0] += 1
                    ext[z] = Null(f"o{counter[0]}")
                for a in rule.head:
                    new.add(Atom(a.relation, [ext[t] for t in a.args]))
        if new <= facts and not new:
            return facts, True
        facts |= new
    return facts, False


def chase_decides(facts, rules, target, depth: int = 8):
    """True/False if the truncated chase settles the question, None otherwise."""
    closed, saturated = naive_chase(facts, rules, depth)
    if target in closed:
        return True
    return False if saturated else None


def entails_by_chase(facts, rules, target, depth: int = 12) -> bool:
    verdict = chase_decides(facts, rules, target, depth)
    if verdict is None:
        raise RuntimeError("chase did not settle within the depth bound")
    return verdict


def guarded(facts) -> bool:
    facts = list(facts)
    terms = {t for f in facts for t in f.args}
    return any(terms <= set(f.args) for f in facts)


def derivation_height(db, rules, goal, max_height: int = 6):
    """Least height of a derivation tree, by explicit guarded-subset enumeration."""
    level = {f: 0 for f in db}
    if goal in level:
        return 0
    constants = sorted({t for f in db for t in f.args})
    relations = {}
    for r in rules:
        for a in r.body + r.head:
            relations[a.relation] = len(a.args)
    space = [Atom(name, args) for name, ar in relations.items() for args in product(constants, repeat=ar)]
    for h in range(1, max_height + 1):
        current = [f for f in level]
        fresh = {}
        for size in range(1, len(current) + 1):
            for subset in combinations(current, size):
                if not guarded(subset):
                    continue
                closed, _ = naive_chase(subset, rules, 12)
                for a in space:
                    if a not in level and a not in fresh and a in closed:
                        fresh[a] = h
        if goal in fresh:
            return h
        if not fresh:
            return None
        level.update(fresh)
    return None


def minimal_guarded_supports(target, universe, rules, relations):
    """All subset-minimal guarded sets over the universe entailing the target."""
    pool = [Atom(name, args) for name, ar in sorted(relations.items())
            for args in product(sorted(universe), repeat=ar)]
    found = []
    for size in range(1, len(pool) + 1):
        for subset in combinations(pool, size):
            s = frozenset(subset)
            if any(f <= s for f in found):
                continue
            if guarded(s) and entails_by_chase(s, rules, target):
                found.append(s)
        if size >= 4:
            break
    return found


def all_databases(relations, constants, max_facts):
    """Every database over the relations and constants with at most max_facts facts."""
    pool = [Atom(name, args) for name, ar in sorted(relations.items())
            for args in product(constants, repeat=ar)]
    for size in range(max_facts + 1):
        for subset in combinations(pool, size):
            yield Database(subset)


def constants(*names):
    return [Constant(n) for n in names]


def treewidth_by_orders(facts) -> int:
    """Treewidth as the best elimination order over all permutations."""
    facts = list(facts)
    vertices = sorted({t for f in facts for t in f.args})
    edges = {v: set() for v in vertices}
    for f in facts:
        for a, b in combinations(set(f.args), 2):
            edges[a].add(b)
            edges[b].add(a)
    best = max(0, len(vertices) - 1)
    for order in permutations(vertices):
        graph = {v: set(n) for v, n in edges.items()}
        worst = 0
        for v in order:
            worst = max(worst, len(graph[v]))
            for a, b in combinations(graph[v], 2):
                graph[a].add(b)
                graph[b].add(a)
            for u in graph[v]:
                graph[u].discard(v)
            del graph[v]
        best = min(best, worst)
    return best


def same_element(parent, names, u, v, a) -> bool:
    """(u, a) and (v, a) denote one element iff every node on the u-v path carries a."""
    def ancestors(x):
        out = [x]
        while parent[x] is not None:
            x = parent[x]
            out.append(x)
        return out
    up, vp = ancestors(u), ancestors(v)
    common = next(x for x in up if x in vp)
    path = up[:up.index(common) + 1] + vp[:vp.index(common)]
    return all(a in names[x] for x in path)


def min_entailing_subset(facts, rules, goal):
    """Smallest number of facts entailing the goal, by chasing every subset."""
    facts = sorted(facts)
    for size in range(len(facts) + 1):
        for subset in combinations(facts, size):
            if entails_by_chase(subset, rules, goal):
                return size
    return None


def running_max_by_exhaustion(relations, n_constants, max_facts, rules, goal, width_cap):
    """Running maximum of minimal entailing subset sizes over all small databases."""
    names = constants(*(f"k{i}" for i in range(n_constants)))
    best = {}
    for db in all_databases(relations, names, max_facts):
        if treewidth_by_orders(db.facts) > width_cap:
            continue
        size = min_entailing_subset(db.facts, rules, goal)
        if size is not None:
            best[len(db)] = max(best.get(len(db), 0), size)
    out, top = {}, 0
    for n in range(max_facts + 1):
        top = max(top, best.get(n, 0))
        out[n] = top
    return out


def acyclic_by_trees(atoms) -> bool:
    """Acyclicity by trying every labelled tree on the atoms as a join tree."""
    atoms = list(dict.fromkeys(atoms))
    n = len(atoms)
    if n <= 2:
        return True
    bags = [a.variables() for a in atoms]
    for code in product(range(n), repeat=n - 2):
        edges = _pruefer_edges(list(code), n)
        adj = {i: set() for i in range(n)}
        for i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        if all(_connected({i for i in range(n) if v in bags[i]}, adj) for v in set().union(*bags)):
            return True
    return False


def _pruefer_edges(code, n):
    degree = [1] * n
    for i in code:
        degree[i] += 1
    edges = []
    for i in code:
        leaf = min(j for j in range(n) if degree[j] == 1)
        edges.append((leaf, i))
        degree[leaf] -= 1
        degree[i] -= 1
    u, v = [j for j in range(n) if degree[j] == 1]
    edges.append((u, v))
    return edges


def _connected(nodes, adj) -> bool:
    if not nodes:
        return True
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w in nodes and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes


def databases_by_first_use(relations, n_constants, max_facts):
    """Fact sets whose sorted listing introduces k0, k1, ... in order.

    The lexicographically least relabelling of any database has this shape,
    so every isomorphism class is covered (some more than once).
    """
    consts = [Constant(f"k{i}") for i in range(n_constants)]
    pool = sorted(Atom(name, args) for name, ar in sorted(relations.items())
                  for args in product(consts, repeat=ar))
    for size in range(max_facts + 1):
        for subset in combinations(pool, size):
            seen = []
            for f in subset:
                for a in f.args:
                    if a not in seen:
                        seen.append(a)
            if seen == consts[:len(seen)]:
                yield subset
