import random

from hypothesis import given, settings, strategies as st

from gomq.logic import (
    Atom,
    Constant,
    Cq,
    Database,
    FrontierGuarded,
    Guarded,
    Neither,
    Tgd,
    Ucq,
    Variable,
    atom,
    canonical_key,
    classify_tgd,
    evaluate_ucq,
    fact,
    find_homomorphism,
)
from gomq import corpus
from gomq.chase import saturate

from oracles import all_assignments_hom


def v(*names):
    return [Variable(n) for n in names]


def test_classify_guarded_example_rule():
    rule = Tgd([atom("S", "x", "y", "z"), atom("A", "z")], [atom("R", "x", "z")])
    assert classify_tgd(rule) == Guarded(atom("S", "x", "y", "z"))


def test_classify_zero_ary_rule():
    rule = Tgd([Atom("P")], [Atom("P")])
    assert classify_tgd(rule) == Guarded(Atom("P"))


def test_classify_neither():
    rule = Tgd([atom("R", "x", "y"), atom("R", "y", "z")], [atom("T", "x", "z")])
    assert classify_tgd(rule) == Neither()
    # exhaustive coverage check behind the expected value
    variables = set(v("x", "y", "z"))
    assert not any(variables <= a.variables() for a in rule.body)
    assert not any({Variable("x"), Variable("z")} <= a.variables() for a in rule.body)


def test_classify_frontier_guarded():
    rule = Tgd([atom("E", "x", "y"), atom("E", "y", "z")], [atom("T", "x")])
    assert classify_tgd(rule) == FrontierGuarded(atom("E", "x", "y"))


def test_classify_first_guard_in_atom_order():
    rule = Tgd([atom("B", "x", "y"), atom("A", "y", "x")], [atom("T", "x")])
    assert classify_tgd(rule) == Guarded(atom("A", "y", "x"))


def test_example_programs_classify_guarded():
    for name in ("cartwheel", "cartwheel_cq", "cartwheel_fo", "reach", "witness"):
        for rule in corpus.load(name).rules:
            assert isinstance(classify_tgd(rule), Guarded)


def test_homomorphism_example():
    q = Cq((), [atom("S", "x", "y", "z"), atom("B", "y"), atom("A", "z")])
    db = Database([fact("S", "c", "b", "a"), fact("B", "b"), fact("A", "a")])
    expected = all_assignments_hom(q.atoms, db.facts)
    assert expected == {Variable("x"): Constant("c"), Variable("y"): Constant("b"), Variable("z"): Constant("a")}
    assert find_homomorphism(q, db) == expected


def test_homomorphism_empty_query():
    assert find_homomorphism(Cq((), []), Database([fact("A", "a")])) == {}


def test_homomorphism_partial_mismatch():
    q = Cq(v("x"), [atom("A", "x")])
    db = Database([fact("A", "b")])
    assert find_homomorphism(q, db, {Variable("x"): Constant("a")}) is None


def test_homomorphism_respects_equalities():
    q = Cq((), [atom("E", "x", "y")], [(Variable("x"), Variable("y"))])
    assert find_homomorphism(q, Database([fact("E", "a", "b")])) is None
    h = find_homomorphism(q, Database([fact("E", "a", "b"), fact("E", "c", "c")]))
    assert h[Variable("x")] == h[Variable("y")] == Constant("c")


def test_evaluate_ucq():
    db = Database([fact("A", "a"), fact("A", "b")])
    assert evaluate_ucq(Cq(v("x"), [atom("A", "x")]), db) == {(Constant("a"),), (Constant("b"),)}
    assert evaluate_ucq(Cq((), [atom("A", "x")]), db) == {()}
    union = Ucq([Cq(v("x"), [atom("B", "x")]), Cq(v("x"), [atom("A", "x")])])
    assert len(evaluate_ucq(union, db)) == 2


def test_evaluate_example_query_on_chased_d2():
    doc = corpus.load("cartwheel_cq")
    d2 = corpus.cartwheel_database(2)
    chased = Database(a for a in saturate(d2, doc.rules))
    assert evaluate_ucq(doc.query, chased) == {()}
    assert evaluate_ucq(doc.query, d2) == set()


def test_canonical_key_examples():
    assert canonical_key(Database([fact("A", "a")])) == canonical_key(Database([fact("A", "b")]))
    assert canonical_key(Database([fact("E", "a", "b")])) == canonical_key(Database([fact("E", "b", "a")]))
    assert canonical_key(Database([fact("E", "a", "a")])) != canonical_key(Database([fact("E", "a", "b")]))


def _rename(db, rng):
    names = sorted(db.adom)
    shuffled = [Constant(f"k{i}") for i in range(len(names))]
    rng.shuffle(shuffled)
    mapping = dict(zip(names, shuffled))
    return Database(f.substitute(mapping) for f in db.facts)


def test_canonical_key_invariant_under_permutations():
    rng = random.Random(0)
    dbs = [corpus.cartwheel_database(k) for k in (2, 3, 4, 5)]
    dbs += list(corpus.load("reach").databases.values()) + list(corpus.load("witness").databases.values())
    for db in dbs:
        key = canonical_key(db)
        for _ in range(1000):
            assert canonical_key(_rename(db, rng)) == key


facts_strategy = st.lists(
    st.one_of(
        st.tuples(st.just("E"), st.integers(0, 3), st.integers(0, 3)),
        st.tuples(st.just("A"), st.integers(0, 3)),
    ),
    max_size=6,
)


def _build(items):
    out = []
    for item in items:
        out.append(Atom(item[0], [Constant(f"c{i}") for i in item[1:]]))
    return Database(out)


@settings(max_examples=150, deadline=None)
@given(facts_strategy, facts_strategy)
def test_canonical_key_matches_isomorphism(left, right):
    from oracles import isomorphic

    a, b = _build(left), _build(right)
    assert (canonical_key(a) == canonical_key(b)) == isomorphic(a.facts, b.facts)


@settings(max_examples=100, deadline=None)
@given(facts_strategy, st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_homomorphism_closure_transfer(items, image):
    db = _build(items)
    q_atoms = [Atom(f.relation, [Variable(c.name) for c in f.args]) for f in db.facts]
    h = {Constant(f"c{i}"): Constant(f"d{image[i]}") for i in range(4)}
    moved = Database(f.substitute(h) for f in db.facts)
    assert find_homomorphism(Cq((), q_atoms), db) is not None
    assert find_homomorphism(Cq((), q_atoms), moved) is not None


@settings(max_examples=100, deadline=None)
@given(facts_strategy, facts_strategy)
def test_homomorphism_agrees_with_exhaustive_search(pattern, target):
    q_atoms = [Atom(f.relation, [Variable(c.name) for c in f.args]) for f in _build(pattern).facts]
    db = _build(target)
    found = find_homomorphism(Cq((), q_atoms), db)
    assert (found is None) == (all_assignments_hom(q_atoms, db.facts) is None)
    if found is not None:
        assert all(a.substitute(found) in db.facts for a in q_atoms)


def test_guarded_implies_frontier_cover():
    for name in corpus.PROGRAMS:
        for rule in corpus.load(name).rules:
            if isinstance(classify_tgd(rule), Guarded):
                assert any(rule.frontier <= a.variables() for a in rule.body)
