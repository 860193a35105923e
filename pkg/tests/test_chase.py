import random
from itertools import product

import pytest

from gomq import corpus
from gomq.chase import (
    INFINITY,
    build_derivation_tree,
    certain_boolean,
    datalog_rewriting,
    datalog_saturate,
    entail_atom,
    enumerate_guarded_supports,
    k_q,
    min_derivation_height,
    saturate,
    validate_derivation_tree,
)
from gomq.errors import NonGuardedOntology
from gomq.logic import Atom, Constant, Database, Tgd, atom, fact

import oracles


@pytest.fixture(scope="module")
def cartwheel():
    return corpus.load("cartwheel").omq()


def test_dk_entail_and_single_removals_fail(cartwheel):
    for k in range(2, 6):
        db = corpus.cartwheel_database(k)
        assert certain_boolean(db, cartwheel)
        for f in db:
            assert not certain_boolean(db - [f], cartwheel)


def test_empty_database_entails_nothing(cartwheel):
    assert not entail_atom(Database(), cartwheel.ontology, Atom("P"))
    assert not certain_boolean(Database(), cartwheel)


def test_d2_derives_rim_fact(cartwheel):
    d2 = corpus.cartwheel_database(2)
    target = fact("R", "c", "a1")
    assert oracles.chase_decides(d2.facts, cartwheel.ontology, target, depth=3) is True
    assert entail_atom(d2, cartwheel.ontology, target)


def test_non_guarded_rejected():
    rule = Tgd([atom("R", "x", "y"), atom("R", "y", "z")], [atom("T", "x", "z")])
    with pytest.raises(NonGuardedOntology):
        entail_atom(Database(), [rule], Atom("P"))


def _random_database(rng, relations, n_constants, n_facts):
    names = [Constant(f"c{i}") for i in range(n_constants)]
    facts = set()
    for _ in range(n_facts):
        name, arity = rng.choice(relations)
        facts.add(Atom(name, [rng.choice(names) for _ in range(arity)]))
    return Database(facts)


def _relations(doc):
    return [(r.name, r.arity) for r in doc.schema]


@pytest.mark.parametrize("name", ["cartwheel", "reach", "witness", "cartwheel_fo"])
def test_reasoner_agrees_with_truncated_chase(name):
    doc = corpus.load(name)
    rng = random.Random(7)
    full = doc.omq().full_schema()
    checked = 0
    for _ in range(40):
        db = _random_database(rng, _relations(doc), 3, rng.randint(1, 5))
        closed = saturate(db, doc.rules)
        for depth in range(1, 6):
            reference, done = oracles.naive_chase(db.facts, doc.rules, depth)
            reference = {a for a in reference if a.is_fact()}
            # anything the truncated chase finds must be entailed
            assert reference <= set(closed)
            if done:
                assert reference == {a for a in closed}
                checked += 1
                break
    assert checked > 20


@pytest.mark.parametrize("name", ["cartwheel", "reach", "witness"])
def test_homomorphism_monotonicity(name):
    doc = corpus.load(name)
    q = doc.omq()
    rng = random.Random(3)
    for _ in range(40):
        db = _random_database(rng, _relations(doc), 4, rng.randint(1, 6))
        mapping = {Constant(f"c{i}"): Constant(f"c{rng.randint(0, 2)}") for i in range(4)}
        image = Database(f.substitute(mapping) for f in db.facts)
        if certain_boolean(db, q):
            assert certain_boolean(image, q)


@pytest.mark.parametrize("name", ["cartwheel", "reach", "witness"])
def test_datalog_rewriting_matches_reasoner(name):
    doc = corpus.load(name)
    program = datalog_rewriting(doc.rules)
    assert all(not r.existentials and len(r.head) == 1 for r in program)
    rng = random.Random(11)
    for _ in range(40):
        db = _random_database(rng, _relations(doc), 3, rng.randint(1, 5))
        assert set(datalog_saturate(db.facts, program)) == set(saturate(db, doc.rules))


def test_supports_include_rim_step(cartwheel):
    universe = [Constant("c"), Constant("a1"), Constant("a0")]
    supports = enumerate_guarded_supports(fact("R", "c", "a0"), universe, cartwheel.ontology, max_size=k_q(cartwheel))
    assert frozenset([fact("S", "c", "a1", "a0"), fact("A", "a0")]) in supports
    assert frozenset([fact("R", "c", "a0")]) in supports
    for s in supports:
        assert oracles.guarded(s)
        assert len(s) <= k_q(cartwheel)


def test_k_q_example(cartwheel):
    assert k_q(cartwheel) == 5 * 27


@pytest.mark.parametrize("name", ["reach", "witness"])
def test_supports_match_exhaustive_search(name):
    doc = corpus.load(name)
    q = doc.omq()
    relations = {r.name: r.arity for r in q.full_schema()}
    universe = [Constant("a"), Constant("b")]
    targets = [Atom("P"), fact("T", "a")] if name == "reach" else [Atom("P"), fact("M", "a")]
    for target in targets:
        if target.relation not in relations:
            continue
        ours = set(enumerate_guarded_supports(target, universe, q.ontology))
        brute = set(oracles.minimal_guarded_supports(target, universe, q.ontology, relations))
        small = {s for s in ours if len(s) <= 4}
        assert small == brute


def test_cost_values_on_dk(cartwheel):
    # frozen after checking against the exhaustive derivation-tree search
    expected = {2: 1, 3: 2, 4: 3, 5: 4}
    for k, value in expected.items():
        db = corpus.cartwheel_database(k)
        if k <= 3:
            assert oracles.derivation_height(db.facts, cartwheel.ontology, Atom("P"), 4) == value
        assert min_derivation_height(db, cartwheel) == value


def test_cost_single_step_and_infinite(cartwheel):
    direct = Database([fact("S", "c", "b", "a"), fact("A", "a"), fact("B", "b")])
    assert min_derivation_height(direct, cartwheel) == 1
    assert min_derivation_height(Database([fact("A", "a")]), cartwheel) == INFINITY


@pytest.mark.parametrize("name", ["cartwheel", "reach", "witness"])
def test_derivation_trees_valid_and_match_entailment(name):
    doc = corpus.load(name)
    q = doc.omq()
    rng = random.Random(5)
    dbs = list(doc.databases.values())
    dbs += [_random_database(rng, _relations(doc), 3, rng.randint(1, 5)) for _ in range(30)]
    for db in dbs:
        tree = build_derivation_tree(db, q)
        assert (tree is not None) == certain_boolean(db, q)
        if tree is not None:
            assert validate_derivation_tree(tree, db, q) == []
            assert tree.height == min_derivation_height(db, q)
            assert tree.label == Atom("P")


def test_d2_tree_leaves_in_database(cartwheel):
    d2 = corpus.cartwheel_database(2)
    tree = build_derivation_tree(d2, cartwheel)
    assert set(tree.leaves()) <= set(d2.facts)
    assert build_derivation_tree(Database([fact("B", "a")]), cartwheel) is None
