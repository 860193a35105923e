"""Tree decompositions, adornments and the name-based tree encoding of databases.

An encoded tree labels each node with a set of at most w names drawn from a
pool of 2w names, plus facts written over those names.  A name denotes the
same element along any path on which every node carries it.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from math import comb

from .errors import DomainTooLarge, InconsistentTree, InvalidDecomposition, WidthExceeded
from .logic import Atom, Constant, Database, sort_atoms


class TreeDecomposition:
    """Rooted ordered tree (root 0) with one bag of constants per node."""

    def __init__(self, parent, bags):
        self.parent = list(parent)
        self.bags = [frozenset(b) for b in bags]
        self.children = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p is not None:
                self.children[p].append(v)
        if self.parent and self.parent[0] is not None:
            raise InvalidDecomposition("node 0 must be the root")

    def __len__(self):
        return len(self.parent)

    @property
    def width(self) -> int:
        return max(0, max((len(b) for b in self.bags), default=0) - 1)

    def max_degree(self) -> int:
        return max((len(c) for c in self.children), default=0)

    def preorder(self):
        stack = [0] if self.parent else []
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.children[v]))

    def depth(self, v: int) -> int:
        d = 0
        while self.parent[v] is not None:
            v = self.parent[v]
            d += 1
        return d

    def problems(self, db: Database) -> list:
        out = []
        seen = list(self.preorder())
        if len(seen) != len(self.parent):
            out.append("parent pointers do not form a tree rooted at 0")
        for f in db.facts:
            if not any(set(f.args) <= b for b in self.bags):
                out.append(f"fact {f!r} is in no bag")
        for c in set().union(*self.bags) if self.bags else ():
            holders = [v for v in range(len(self)) if c in self.bags[v]]
            tops = [v for v in holders if self.parent[v] is None or c not in self.bags[self.parent[v]]]
            if len(tops) != 1:
                out.append(f"nodes holding {c!r} are not connected")
        return out

    def check(self, db: Database):
        issues = self.problems(db)
        if issues:
            raise InvalidDecomposition("; ".join(issues))

    def __repr__(self):
        return f"TreeDecomposition(parent={self.parent}, bags={[sorted(b) for b in self.bags]})"


# exact treewidth


def primal_graph(db: Database) -> dict:
    graph = {c: set() for c in db.adom}
    for f in db.facts:
        for a, b in combinations(set(f.args), 2):
            graph[a].add(b)
            graph[b].add(a)
    return graph


def _eliminated_degree(graph, index, eliminated: int, v: int) -> int:
    """Number of vertices outside eliminated+v reachable from v through eliminated ones."""
    seen = {v}
    stack = [v]
    found = set()
    while stack:
        x = stack.pop()
        for y in graph[x]:
            if y in seen:
                continue
            seen.add(y)
            if eliminated >> index[y] & 1:
                stack.append(y)
            else:
                found.add(y)
    return len(found)


def exact_treewidth(db: Database, cap: int | None = None, limit: int = 12):
    """Minimum-width decomposition by dynamic programming over eliminated vertex sets.

    Returns (width, decomposition), or None when the width exceeds `cap`.
    """
    graph = primal_graph(db)
    vertices = sorted(graph)
    if len(vertices) > limit:
        raise DomainTooLarge(f"{len(vertices)} constants exceed the limit of {limit}")
    if not vertices:
        return 0, TreeDecomposition([None], [frozenset()])
    index = {v: i for i, v in enumerate(vertices)}
    full = (1 << len(vertices)) - 1
    best = {0: (-1, None)}
    bound = cap if cap is not None else len(vertices)
    # subsets in order of size so that every predecessor is ready
    for size in range(1, len(vertices) + 1):
        for chosen in combinations(range(len(vertices)), size):
            mask = sum(1 << i for i in chosen)
            value, pick = None, None
            for i in chosen:
                rest = mask & ~(1 << i)
                if rest not in best:
                    continue
                degree = _eliminated_degree(graph, index, rest, vertices[i])
                cost = max(best[rest][0], degree)
                if cost > bound:
                    continue
                if value is None or cost < value:
                    value, pick = cost, i
            if value is not None:
                best[mask] = (value, pick)
    if full not in best:
        return None
    width = max(0, best[full][0])
    order = []
    mask = full
    while mask:
        i = best[mask][1]
        order.append(vertices[i])
        mask &= ~(1 << i)
    order.reverse()
    return width, _decomposition_from_order(graph, order)


def _decomposition_from_order(graph, order) -> TreeDecomposition:
    adjacency = {v: set(n) for v, n in graph.items()}
    position = {v: i for i, v in enumerate(order)}
    bags, attach = [], []
    for v in order:
        later = {u for u in adjacency[v] if position[u] > position[v]}
        bags.append(frozenset(later | {v}))
        attach.append(min(later, key=position.get) if later else None)
        for a, b in combinations(later, 2):
            adjacency[a].add(b)
            adjacency[b].add(a)
    # bag i hangs below the bag of its earliest later neighbour; roots are joined
    n = len(order)
    parent_of = [position[a] if a is not None else None for a in attach]
    roots = [i for i in range(n) if parent_of[i] is None]
    for r in roots[:-1]:
        parent_of[r] = roots[-1]
    top = roots[-1]
    renumber = {top: 0}
    queue = [top]
    kids = defaultdict(list)
    for i, p in enumerate(parent_of):
        if p is not None:
            kids[p].append(i)
    while queue:
        x = queue.pop(0)
        for y in sorted(kids[x]):
            renumber[y] = len(renumber)
            queue.append(y)
    parent = [None] * n
    new_bags = [None] * n
    for old, new in renumber.items():
        new_bags[new] = bags[old]
        parent[new] = renumber[parent_of[old]] if parent_of[old] is not None else None
    return TreeDecomposition(parent, new_bags)


# adornments


def default_adornment(db: Database, delta: TreeDecomposition) -> dict:
    """Each fact at the first node (in preorder) whose bag covers it."""
    eta = {v: frozenset() for v in range(len(delta))}
    order = list(delta.preorder())
    for f in sort_atoms(db.facts):
        for v in order:
            if set(f.args) <= delta.bags[v]:
                eta[v] = eta[v] | {f}
                break
    return eta


def is_adornment(db: Database, delta: TreeDecomposition, eta: dict) -> bool:
    covered = set()
    for v in range(len(delta)):
        for f in eta.get(v, ()):
            if f not in db.facts or not set(f.args) <= delta.bags[v]:
                return False
            covered.add(f)
    return covered == set(db.facts)


def is_simple_adorned(delta: TreeDecomposition, eta: dict) -> bool:
    labels = [frozenset(eta.get(v, ())) for v in range(len(delta))]
    black = [x for x in labels if x]
    return all(len(x) <= 1 for x in labels) and len(set(black)) == len(black)


def is_well_colored_adorned(delta: TreeDecomposition, eta: dict) -> bool:
    return all(eta.get(v) or len(delta.children[v]) >= 2 for v in range(len(delta)))


def make_simple_wellcolored(db: Database, delta: TreeDecomposition) -> tuple:
    """Simple, well-coloured adorned decomposition of the same width."""
    delta.check(db)
    if not db.facts:
        raise InvalidDecomposition("the empty database has no black node")
    # step 1: one copy of a node per fact of D[X_v]
    parent, bags, eta = [], [], []
    mapping = {}
    for v in delta.preorder():
        node = len(parent)
        mapping[v] = node
        parent.append(mapping[delta.parent[v]] if delta.parent[v] is not None else None)
        bags.append(delta.bags[v])
        local = sort_atoms(f for f in db.facts if set(f.args) <= delta.bags[v])
        eta.append({local[0]} if local else set())
        for extra in local[1:]:
            parent.append(node)
            bags.append(delta.bags[v])
            eta.append({extra})
    wide = TreeDecomposition(parent, bags)
    # step 2: keep the first occurrence of each label
    seen = set()
    for v in wide.preorder():
        if eta[v]:
            (f,) = eta[v]
            if f in seen:
                eta[v] = set()
            seen.add(f)
    black = {v for v in range(len(wide)) if eta[v]}
    # step 3: black nodes closed under greatest common ancestors
    holds = [False] * len(wide)
    for v in reversed(list(wide.preorder())):
        holds[v] = v in black or any(holds[c] for c in wide.children[v])
    keep = set(black)
    for v in range(len(wide)):
        if sum(holds[c] for c in wide.children[v]) >= 2:
            keep.add(v)
    order = [v for v in wide.preorder() if v in keep]
    renumber = {v: i for i, v in enumerate(order)}
    new_parent = []
    for v in order:
        p = wide.parent[v]
        while p is not None and p not in keep:
            p = wide.parent[p]
        new_parent.append(renumber[p] if p is not None else None)
    out = TreeDecomposition(new_parent, [wide.bags[v] for v in order])
    adornment = {renumber[v]: frozenset(eta[v]) for v in order}
    return out, adornment


def bound_branching(delta: TreeDecomposition, schema_width: int | None = None, eta: dict | None = None):
    """Re-parent children until every node has at most 2^schema_width children.

    A child is moved below a sibling whose bag meets the parent's bag in the
    same set.  Returns the new decomposition (node numbering is preserved).
    """
    if schema_width is None:
        schema_width = max((len(b) for b in delta.bags), default=0)
    m = 2 ** schema_width
    parent = list(delta.parent)
    bags = delta.bags
    while True:
        current = TreeDecomposition(parent, bags)
        crowded = [v for v in range(len(parent)) if len(current.children[v]) > m]
        if not crowded:
            return current
        v = max(crowded, key=lambda x: (current.depth(x), -x))
        groups = defaultdict(list)
        for c in current.children[v]:
            groups[bags[v] & bags[c]].append(c)
        pairs = [g for g in groups.values() if len(g) >= 2]
        if not pairs:
            raise InvalidDecomposition("bags are wider than the schema allows")
        group = min(pairs, key=lambda g: g[0])
        target = min(group, key=lambda c: (len(current.children[c]), c))
        moved = next(c for c in group if c != target)
        parent[moved] = target


# encoded trees


def name_pool(w: int) -> list:
    return [f"u{i}" for i in range(2 * w)]


class Label:
    """Names at a node, facts over those names, and (optionally) tagged facts."""

    __slots__ = ("names", "facts", "tags", "_hash")

    def __init__(self, names=(), facts=(), tags=()):
        self.names = frozenset(names)
        self.facts = frozenset((r, tuple(a)) for r, a in facts)
        self.tags = frozenset((r, tuple(a)) for r, a in tags)
        self._hash = hash((self.names, self.facts, self.tags))

    def __eq__(self, other):
        return (isinstance(other, Label) and self._hash == other._hash
                and (self.names, self.facts, self.tags) == (other.names, other.facts, other.tags))

    def __hash__(self):
        return self._hash

    def erase_tags(self) -> "Label":
        return Label(self.names, self.facts)

    def sort_key(self):
        return (sorted(self.names), sorted(self.facts), sorted(self.tags))

    def __repr__(self):
        facts = ",".join(f"{r}({','.join(a)})" for r, a in sorted(self.facts))
        tags = ",".join(f"{r}#({','.join(a)})" for r, a in sorted(self.tags))
        inner = "{" + ",".join(sorted(self.names)) + "}"
        return f"[{inner} {facts}{' ' + tags if tags else ''}]"


@dataclass
class EncodedTree:
    labels: list
    parent: list
    w: int
    tagged: bool = False
    children: list = field(init=False)

    def __post_init__(self):
        self.children = [[] for _ in self.labels]
        for v, p in enumerate(self.parent):
            if p is not None:
                self.children[p].append(v)

    def __len__(self):
        return len(self.labels)

    def max_degree(self) -> int:
        return max((len(c) for c in self.children), default=0)

    def preorder(self):
        stack = [0] if self.labels else []
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.children[v]))

    def path_to(self, v: int) -> tuple:
        path = []
        while self.parent[v] is not None:
            p = self.parent[v]
            path.append(self.children[p].index(v) + 1)
            v = p
        return tuple(reversed(path))

    def key(self):
        def walk(v):
            return (self.labels[v], tuple(walk(c) for c in self.children[v]))
        return (self.w, self.tagged, walk(0))

    def to_json(self) -> dict:
        def walk(v):
            label = self.labels[v]
            facts = [{"rel": r, "args": list(a), "tagged": False} for r, a in sorted(label.facts)]
            facts += [{"rel": r, "args": list(a), "tagged": True} for r, a in sorted(label.tags)]
            return {"names": sorted(label.names), "facts": facts, "children": [walk(c) for c in self.children[v]]}
        return {"width": self.w, "mode": "lambda" if self.tagged else "gamma", "tree": walk(0)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict, w: int | None = None) -> "EncodedTree":
        if "tree" in data:
            root = data["tree"]
            w = data.get("width", w)
            tagged = data.get("mode") == "lambda"
        else:
            root, tagged = data, False
        labels, parent = [], []

        def walk(node, p):
            nonlocal tagged
            v = len(labels)
            facts = [(f["rel"], tuple(f["args"])) for f in node.get("facts", []) if not f.get("tagged")]
            tags = [(f["rel"], tuple(f["args"])) for f in node.get("facts", []) if f.get("tagged")]
            tagged = tagged or bool(tags)
            labels.append(Label(node.get("names", []), facts, tags))
            parent.append(p)
            for child in node.get("children", []):
                walk(child, v)

        walk(root, None)
        if w is None:
            w = max(1, max(len(l.names) for l in labels))
        return cls(labels, parent, w, tagged)

    @classmethod
    def loads(cls, text: str) -> "EncodedTree":
        return cls.from_json(json.loads(text))


def encode(db: Database, delta: TreeDecomposition, eta: dict, w: int, simple: bool = False) -> EncodedTree:
    """Write an adorned decomposition as a labelled tree over 2w names."""
    if max((len(b) for b in delta.bags), default=0) > w:
        raise WidthExceeded(f"decomposition width {delta.width} exceeds {w - 1}")
    if simple and any(len(eta.get(v, ())) > 1 for v in range(len(delta))):
        raise InvalidDecomposition("simple encoding needs at most one fact per node")
    pool = name_pool(w)
    names = {}
    assigned = [None] * len(delta)
    for v in delta.preorder():
        p = delta.parent[v]
        local = {}
        if p is not None:
            for c in delta.bags[v] & delta.bags[p]:
                local[c] = assigned[p][c]
        blocked = set(assigned[p].values()) if p is not None else set()
        for c in sorted(delta.bags[v] - set(local)):
            free = next(n for n in pool if n not in blocked and n not in local.values())
            local[c] = free
        assigned[v] = local
    labels = []
    for v in range(len(delta)):
        local = assigned[v]
        facts = [(f.relation, tuple(local[a] for a in f.args)) for f in eta.get(v, ())]
        labels.append(Label(local.values(), facts))
    return EncodedTree(labels, list(delta.parent), w)


def check_consistent(t: EncodedTree) -> bool:
    return not consistency_problems(t)


def consistency_problems(t: EncodedTree) -> list:
    problems = []
    for v, label in enumerate(t.labels):
        path = t.path_to(v)
        if len(label.names) > t.w:
            problems.append((path, f"{len(label.names)} names exceed the bound {t.w}"))
        for r, args in label.facts | label.tags:
            if not set(args) <= label.names:
                problems.append((path, f"fact {r}{args} uses a name missing at the node"))
        if not label.tags <= label.facts:
            problems.append((path, "tagged fact without its untagged copy"))
    if t.tagged and not any(l.tags for l in t.labels):
        problems.append(((), "no tagged fact in the tree"))
    return problems


@dataclass
class Decoded:
    database: Database
    decomposition: TreeDecomposition
    adornment: dict
    minus: Database
    element: dict  # (node, name) -> Constant


def name_classes(t: EncodedTree) -> dict:
    """Map each (node, name) to the topmost node of its equivalence class."""
    top = {}
    for v in t.preorder():
        p = t.parent[v]
        for a in t.labels[v].names:
            if p is not None and a in t.labels[p].names:
                top[(v, a)] = top[(p, a)]
            else:
                top[(v, a)] = v
    return top


def decode(t: EncodedTree) -> Decoded:
    problems = consistency_problems(t)
    if problems:
        path, message = problems[0]
        raise InconsistentTree(f"node {list(path)}: {message}", path)
    top = name_classes(t)

    def constant(v, a):
        return Constant(f"{a}_{top[(v, a)]}")

    facts, tagged, eta, bags = set(), set(), {}, []
    element = {}
    for v, label in enumerate(t.labels):
        bags.append(frozenset(constant(v, a) for a in label.names))
        for a in label.names:
            element[(v, a)] = constant(v, a)
        here = {Atom(r, [constant(v, a) for a in args]) for r, args in label.facts}
        eta[v] = frozenset(here)
        facts |= here
        tagged |= {Atom(r, [constant(v, a) for a in args]) for r, args in label.tags}
    db = Database(facts)
    return Decoded(db, TreeDecomposition(t.parent, bags), eta, Database(facts - tagged), element)


def is_simple(t: EncodedTree) -> bool:
    d = decode(t)
    return is_simple_adorned(d.decomposition, d.adornment)


def is_well_colored(t: EncodedTree) -> bool:
    d = decode(t)
    return is_well_colored_adorned(d.decomposition, d.adornment)


def encode_database(db: Database, schema_width: int, simple: bool = True) -> EncodedTree:
    """Exact decomposition, simple well-coloured adornment, bounded branching, encoding."""
    w = max(1, schema_width)
    found = exact_treewidth(db, cap=w - 1)
    if found is None:
        raise WidthExceeded("database tree-width exceeds the schema bound")
    _, delta = found
    delta, eta = make_simple_wellcolored(db, delta)
    delta = bound_branching(delta, schema_width=max(schema_width, 1))
    return encode(db, delta, eta, w, simple=simple)


# label alphabet


def labels_over(relations, names, tagged: bool = False):
    """All labels whose names are exactly `names`."""
    names = sorted(names)
    atoms = [(r, args) for r, ar in relations for args in product(names, repeat=ar)]
    if not tagged:
        for mask in range(1 << len(atoms)):
            yield Label(names, [atoms[i] for i in range(len(atoms)) if mask >> i & 1])
        return
    for states in product((0, 1, 2), repeat=len(atoms)):
        facts = [a for a, s in zip(atoms, states) if s]
        tags = [a for a, s in zip(atoms, states) if s == 2]
        yield Label(names, facts, tags)


def enumerate_labels(relations, w: int, tagged: bool = False, tag_relations=None):
    """All locally admissible labels: at most w names from the pool, facts over them."""
    pool = name_pool(w)
    relations = sorted((r.name, r.arity) if hasattr(r, "name") else tuple(r) for r in relations)
    for size in range(w + 1):
        for names in combinations(pool, size):
            yield from labels_over(relations, names, tagged)


def count_labels(relations, w: int, tagged: bool = False) -> int:
    relations = [(r.name, r.arity) if hasattr(r, "name") else tuple(r) for r in relations]
    base = 3 if tagged else 2
    return sum(comb(2 * w, j) * base ** sum(j ** ar for _, ar in relations) for j in range(w + 1))


# random trees


def random_tree(rng, relations, w: int, max_nodes: int = 5, max_degree: int = 2,
                consistent: bool = True, fact_rate: float = 0.5, tag_rate: float = 0.0,
                max_facts: int = 2) -> EncodedTree:
    relations = sorted((r.name, r.arity) if hasattr(r, "name") else tuple(r) for r in relations)
    pool = name_pool(w)
    n = rng.randint(1, max_nodes)
    parent = [None]
    for v in range(1, n):
        options = [p for p in range(v) if parent.count(p) < max_degree]
        parent.append(rng.choice(options))
    labels = []
    for _ in range(n):
        limit = w if consistent else w + 1
        names = rng.sample(pool, rng.randint(0, min(limit, len(pool))))
        facts = []
        usable = pool if not consistent else names
        for _ in range(max_facts):
            if rng.random() >= fact_rate:
                continue
            r, ar = rng.choice(relations)
            if ar and not usable:
                continue
            facts.append((r, tuple(rng.choice(usable) for _ in range(ar))))
        tags = [f for f in facts if rng.random() < tag_rate]
        labels.append(Label(names, facts, tags))
    return EncodedTree(labels, parent, w, tagged=tag_rate > 0)


def enumerate_trees(label_list, max_nodes: int, max_degree: int, w: int, tagged: bool = False):
    """Every ordered tree with at most max_nodes nodes labelled from label_list."""
    for shape in tree_shapes(max_nodes, max_degree):
        for labels in product(label_list, repeat=len(shape)):
            yield EncodedTree(list(labels), list(shape), w, tagged)


@lru_cache(maxsize=None)
def tree_shapes(max_nodes: int, max_degree: int) -> tuple:
    """Parent arrays (preorder numbering) of all ordered trees up to max_nodes nodes."""
    shapes = []

    def build(n):
        # ordered trees with exactly n nodes as nested child lists
        if n == 1:
            return [()]
        out = []
        for k in range(1, max_degree + 1):
            for sizes in _compositions(n - 1, k):
                for parts in product(*(build(s) for s in sizes)):
                    out.append(tuple(parts))
        return out

    def flatten(node, p, parent):
        v = len(parent)
        parent.append(p)
        for child in node:
            flatten(child, v, parent)

    for n in range(1, max_nodes + 1):
        for node in build(n):
            parent = []
            flatten(node, None, parent)
            shapes.append(tuple(parent))
    return tuple(shapes)


def _compositions(total: int, parts: int):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
