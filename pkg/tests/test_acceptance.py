"""End-to-end acceptance checks, one test per criterion.

`pytest tests/test_acceptance.py` prints a PASS/FAIL line per criterion in the
terminal summary (see conftest.py).
"""
import io
import json
import random
import time
from pathlib import Path

from gomq import corpus
from gomq.automata import (
    Empty,
    ExplicitNta,
    Finite,
    Infinite,
    accepted_trees_by_height,
    accepts,
    checked_values,
    complement,
    cost_dist,
    cost_value,
    intersect,
    nta_finiteness,
    to_nta,
)
from gomq.chase import INFINITY, certain_boolean, min_derivation_height
from gomq.cli import main
from gomq.logic import Atom, AtomIndex, Constant, Database, Tgd, atom, canonical_key, find_homomorphism, generalize
from gomq.logic import is_guarded
from gomq.rewritability import (
    build_consistency_ata,
    build_cost_automaton,
    build_satisfaction_ata,
    build_structure_ata,
    decide_forew,
    gen_hardness_instance,
    oracle_condition2,
)
from gomq.syntax import parse_program
from gomq.treeify import is_acyclic_cq, reduce_ucq_to_aq0, translate_fg_to_g, unfold_strictly_acyclic
from gomq.treelike import (
    EncodedTree,
    _decomposition_from_order,
    check_consistent,
    decode,
    encode,
    enumerate_trees,
    is_adornment,
    is_simple,
    is_simple_adorned,
    is_well_colored,
    is_well_colored_adorned,
    make_simple_wellcolored,
    primal_graph,
    random_tree,
)

import oracles
from test_automata import HAND_BUILT, LABELS, chain
from test_treeify import WORKED, same_up_to_renaming

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def cli(*argv):
    buf = io.StringIO()
    code = main([*argv, "--json"], stream=buf)
    return code, json.loads(buf.getvalue())


def relations_of(schema):
    return [(r.name, r.arity) for r in schema]


def test_criterion_01_example_databases_are_minimal():
    start = time.perf_counter()
    code, data = cli("chase", str(DEMOS / "cartwheel.omq"), "--minimal")
    assert code == 0
    rows = {d["name"]: d for d in data["databases"]}
    assert sorted(rows) == ["D2", "D3", "D4", "D5"]
    q = corpus.load("cartwheel").omq()
    for k in range(2, 6):
        row = rows[f"D{k}"]
        assert row["entails"] and row["size"] == k + 1
        assert len(row["needed"]) == k + 1 and all(n["needed"] for n in row["needed"])
        # independent confirmation by a naive chase
        db = corpus.cartwheel_database(k)
        assert oracles.entails_by_chase(db.facts, q.ontology, q.goal)
        for f in db:
            assert not oracles.entails_by_chase(db.facts - {f}, q.ontology, q.goal)
    assert time.perf_counter() - start < 5


def test_criterion_02_minimal_subsets_keep_growing():
    start = time.perf_counter()
    code, data = cli("decide", str(DEMOS / "cartwheel.omq"), "--engine", "oracle",
                     "--max-facts", "6", "--max-consts", "7")
    assert code == 2 and data["status"] == "EvidenceNotFo"
    sizes = [w["min_subset"] for w in data["witnesses"]]
    assert sizes[:3] == [3, 4, 5]
    assert sizes == sorted(set(sizes))
    q = corpus.load("cartwheel").omq()
    report = oracle_condition2(q, 6, 7)
    by_key = {r.key: r.min_subset for r in report.records}
    for k in (2, 3, 4):
        db = corpus.cartwheel_database(k)
        assert oracles.min_entailing_subset(db.facts, q.ontology, q.goal) == k + 1
        assert by_key[canonical_key(db)] == k + 1
    assert time.perf_counter() - start < 60


def test_criterion_03_bound_and_rewriting_for_fo_variant():
    start = time.perf_counter()
    path = str(DEMOS / "cartwheel_fo.omq")
    _, oracle = cli("oracle", path, "--max-facts", "6", "--max-consts", "7")
    assert oracle["complete"] and oracle["maximum"] == 3 and not oracle["growing"]
    assert all(v == 3 for k, v in oracle["running_max"].items() if int(k) >= 3)
    code, data = cli("rewrite", path)
    assert code == 0 and data["bound"] == 3
    target = [atom("S", "x", "y", "z"), atom("B", "y"), atom("A", "z")]
    disjuncts = [parse_program(f"query: {d}.").omq().query.atoms for d in data["disjuncts"]]
    assert any(
        find_homomorphism(tuple(d), AtomIndex(target), {}) is not None
        and find_homomorphism(tuple(target), AtomIndex(d), {}) is not None
        for d in disjuncts
    )
    assert time.perf_counter() - start < 60


def test_criterion_04_cost_automaton_matches_derivation_height():
    start = time.perf_counter()
    seen_infinite = 0
    for name, seed in (("reach", 41), ("witness", 42)):
        q = corpus.load(name).omq()
        h = build_cost_automaton(q)
        rng = random.Random(seed)
        w = max(1, q.data_schema.width())
        for _ in range(200):
            t = random_tree(rng, relations_of(q.data_schema), w, max_nodes=5, fact_rate=0.7)
            assert check_consistent(t)
            expected = min_derivation_height(decode(t).database, q)
            assert cost_value(h, t) == expected
            seen_infinite += expected == INFINITY
    assert seen_infinite > 0
    assert time.perf_counter() - start < 120


def test_criterion_05_automaton_differentials():
    q = corpus.load("reach").omq()
    relations = relations_of(q.data_schema)
    c, r, a = build_consistency_ata(q.data_schema), build_structure_ata(q.data_schema), build_satisfaction_ata(q)
    rng = random.Random(5)
    for _ in range(500):
        t = random_tree(rng, relations, 2, consistent=rng.random() < 0.7)
        assert accepts(c, t) == check_consistent(t)
    for _ in range(500):
        t = random_tree(rng, relations, 2, max_nodes=5, fact_rate=0.6)
        assert accepts(r, t) == (is_simple(t) and is_well_colored(t))
    for _ in range(500):
        t = random_tree(rng, relations, 2, max_nodes=5, fact_rate=0.7)
        assert accepts(a, t) == certain_boolean(decode(t).database, q)
    pairs = [(c, r), (r, a), (c, a)]
    for i in range(200):
        t = random_tree(rng, relations, 2, max_nodes=4, fact_rate=0.6, consistent=rng.random() < 0.8)
        x, y = pairs[i % 3]
        assert accepts(complement(x), t) != accepts(x, t)
        assert accepts(intersect(x, y), t) == (accepts(x, t) and accepts(y, t))


def test_criterion_06_nta_conversion_is_exact():
    trees = list(enumerate_trees(LABELS, 3, 2, 1))
    unary = parse_program("schema: A/1, B/1.\nrule: A(x) -> T(x).\nrule: T(x), B(x) -> P.\nquery: atom P.\n").omq()
    machine = build_satisfaction_ata(unary)
    assert len(machine.states) <= 12
    automata = [make() for make, _ in HAND_BUILT.values()] + [machine]
    assert len(automata) >= 4
    for a in automata:
        n = to_nta(a)
        for t in trees:
            assert n.accepts(t) == accepts(a, t)


def test_criterion_07_finiteness_verdicts():
    cases = [
        (ExplicitNta({("a", ()): "q"}, {"f"}, 1), Empty()),
        (ExplicitNta({("a", ()): "f"}, {"f"}, 1), Finite(0)),
        (ExplicitNta(chain("a", "b", "c"), {"q2"}, 1), Finite(2)),
        (ExplicitNta({("b", ()): "q", ("a", ("q",)): "q"}, {"q"}, 1), Infinite()),
        (ExplicitNta({("a", ()): "q", ("a", ("q",)): "q", ("b", ()): "f"}, {"f"}, 1), Finite(0)),
        (ExplicitNta({("a", ()): "l", ("b", ("l", "l")): "f"}, {"f"}, 2), Finite(1)),
        (ExplicitNta({("a", ()): "q", ("b", ("q", "q")): "q"}, {"q"}, 2), Infinite()),
    ]
    labels = ["a", "b", "c"]
    for nta, expected in cases:
        assert nta_finiteness(nta, labels) == expected
        counts = accepted_trees_by_height(nta, labels, 6)
        if isinstance(expected, Empty):
            assert all(v == 0 for v in counts.values())
        elif isinstance(expected, Finite):
            assert counts[expected.max_height] > 0
            assert all(counts[h] == 0 for h in counts if h > expected.max_height)
        else:
            assert all(counts[h] > 0 for h in range(2, 7))


def _random_triple(rng, w):
    relations = [("A", 1), ("E", 2), ("S", 3)][:w]
    names = [Constant(f"c{i}") for i in range(rng.randint(1, 5))]
    while True:
        facts = {Atom(r, [rng.choice(names) for _ in range(ar)])
                 for r, ar in (rng.choice(relations) for _ in range(rng.randint(1, 6)))}
        db = Database(facts)
        graph = primal_graph(db)
        order = sorted(graph)
        rng.shuffle(order)
        delta = _decomposition_from_order(graph, order)
        if max(len(b) for b in delta.bags) <= w:
            break
    eta = {v: set() for v in range(len(delta))}
    for f in db:
        eta[rng.choice([v for v in range(len(delta)) if set(f.args) <= delta.bags[v]])].add(f)
    return db, delta, {v: frozenset(s) for v, s in eta.items()}


def test_criterion_08_encoding_round_trip():
    rng = random.Random(8)
    for i in range(1000):
        w = 1 + i % 3
        db, delta, eta = _random_triple(rng, w)
        assert delta.problems(db) == [] and is_adornment(db, delta, eta)
        t = encode(db, delta, eta, w)
        back = decode(EncodedTree.loads(t.dumps()))
        assert oracles.isomorphic(back.database, db)
        out, simple_eta = make_simple_wellcolored(db, delta)
        assert is_simple_adorned(out, simple_eta) and is_well_colored_adorned(out, simple_eta)
        black = sum(1 for v in range(len(out)) if simple_eta[v])
        assert len(db) >= black
        assert len(out) - black < black


def test_criterion_09_treeification():
    rules = unfold_strictly_acyclic(Tgd(WORKED.atoms, [atom("O", "x")]))
    expected = parse_program("""\
rule: Tchi(x) -> O(x).
rule: S(x,x), Tmid(x) -> Tchi(x).
rule: R(x,y), Tend(y) -> Tmid(x).
rule: R(y,z) -> Tend(y).
""").rules
    aux = sorted({a.relation for r in rules for a in r.body + r.head} - {"R", "S", "O"})
    assert len(rules) == 4
    assert same_up_to_renaming(rules, expected, aux, ["Tchi", "Tmid", "Tend"])
    for name in ("two_step_fg", "triangle_fg"):
        q = corpus.load(name).omq()
        tr = translate_fg_to_g(q).omq
        assert all(is_guarded(r) for r in tr.ontology)
        relations = {r.name: r.arity for r in tr.data_schema}
        checked = 0
        for facts in oracles.databases_by_first_use(relations, 3, 5):
            if not is_acyclic_cq(generalize(Database(facts))):
                continue
            checked += 1
            assert oracles.chase_decides(facts, q.ontology, q.goal) == certain_boolean(Database(facts), tr)
        assert checked > 100_000


def _polarity_by_exhaustion(q, max_facts, n_constants):
    relations = {r.name: r.arity for r in q.data_schema}
    run = oracles.running_max_by_exhaustion(relations, n_constants, max_facts, q.ontology, q.goal, 99)
    return run[max_facts] > run[max_facts - 1]


def test_criterion_10_reductions_preserve_polarity():
    compared = 0
    for name in sorted(corpus.PROGRAMS):
        q = corpus.load(name).omq()
        atomic = reduce_ucq_to_aq0(q).omq
        tr = translate_fg_to_g(atomic).omq
        if atomic.is_guarded():
            before = oracle_condition2(atomic, 6, 7)
            after = oracle_condition2(tr, 6, 7)
            if not (before.complete and after.complete):
                continue
            assert before.growing() == after.growing(), name
        else:
            after = oracle_condition2(tr, 5, 3)
            if not after.complete:
                continue
            assert _polarity_by_exhaustion(atomic, 5, 3) == after.growing(), name
        compared += 1
    assert compared >= 7
    u = parse_program("schema: U/1.\nrule: U(x) -> G.\nquery: atom G.\n").omq()
    never = parse_program("schema: U/1.\nquery: atom H.\n").omq()
    assert decide_forew(gen_hardness_instance(u, u), "oracle").status == "EvidenceFo"
    v = decide_forew(gen_hardness_instance(u, never), "oracle")
    assert v.status == "EvidenceNotFo"
    sizes = [size for _, size in v.witnesses]
    assert sizes == sorted(set(sizes)) and len(sizes) >= 3
    for facts, _ in v.witnesses:
        assert {f.relation for f in facts} >= {"A", "B", "U"}
    # past the first witness the family grows along R-chains
    assert all(any(f.relation == "R" for f in facts) for facts, _ in v.witnesses[1:])


def test_criterion_11_distance_values():
    assert sorted(checked_values("icicricricicic")) == [1, 2, 3]
    assert cost_dist("icicricricicic") == 3
    assert set(checked_values("icicricic")) == {2}
    assert cost_dist("icicricic") == 2
