"""Command-line interface: `gomq <command> [options]`.

Exit codes: 0 success, 1 sound negative verdict (decide only), 2 unknown
or budget exhausted (evidence verdicts included), 3 input error.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import automata
from .chase import INFINITY, certain_boolean, min_derivation_height
from .errors import (
    BudgetExceeded,
    CombinatorialBudgetExceeded,
    GomqError,
    InconsistentTree,
    ParseError,
    QueryTooLarge,
    StateLimitExceeded,
)
from .logic import Aq0, FrontierGuarded, Guarded, Ucq, classify_tgd, ontology_width
from .rewritability import (
    build_bq,
    build_consistency_ata,
    build_cost_automaton,
    build_minimality_ata,
    build_removal_ata,
    build_satisfaction_ata,
    build_structure_ata,
    decide_forew,
    extract_ucq_rewriting,
    gen_hardness_instance,
    oracle_condition2,
    tree_width_bound,
)
from .syntax import parse_program, print_program, program_from_omq
from .treeify import reduce_ucq_to_aq0, to_guarded_aq0, translate_fg_to_g
from .treelike import EncodedTree, count_labels, decode, encode_database, enumerate_labels, random_tree

EXIT_OK, EXIT_NEGATIVE, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3

AUTOMATA = {
    "consistency": lambda omq: build_consistency_ata(omq.data_schema),
    "structure": lambda omq: build_structure_ata(omq.data_schema),
    "satisfaction": build_satisfaction_ata,
    "cost": build_cost_automaton,
    "removal": build_removal_ata,
    "minimality": build_minimality_ata,
    "language": build_bq,
}


class Output:
    def __init__(self, as_json: bool, stream=None):
        self.as_json = as_json
        self.stream = stream or sys.stdout

    def emit(self, data, text: str):
        if self.as_json:
            self.stream.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
        else:
            self.stream.write(text.rstrip("\n") + "\n")


def _cost_json(value):
    return "inf" if value == INFINITY else int(value)


def _load(path: str):
    return parse_program(Path(path).read_text(encoding="utf-8"))


def _databases(doc, names):
    if not names:
        return dict(doc.databases)
    return {n: doc.database(n) for n in names}


def _as_guarded(omq):
    if isinstance(omq.query, Aq0) and omq.is_guarded():
        return omq, []
    return to_guarded_aq0(omq)


# commands


def cmd_classify(args, out):
    doc = _load(args.program)
    omq = doc.omq()
    rows = []
    for r in omq.ontology:
        c = classify_tgd(r)
        guard = repr(c.guard) if isinstance(c, (Guarded, FrontierGuarded)) else None
        rows.append({"rule": repr(r), "class": type(c).__name__, "guard": guard})
    if omq.is_guarded():
        kind = "G"
    elif omq.is_frontier_guarded():
        kind = "FG"
    else:
        kind = "other"
    query = "AQ0" if isinstance(omq.query, Aq0) else "UCQ" if isinstance(omq.query, Ucq) else "CQ"
    data = {"rules": rows, "ontology": kind, "query": query, "width": ontology_width(omq.ontology)}
    lines = [f"{row['class']:<16} {row['rule']}" for row in rows]
    lines.append(f"ontology class {kind}, query {query}, width {data['width']}")
    out.emit(data, "\n".join(lines))
    return EXIT_OK


def cmd_chase(args, out):
    doc = _load(args.program)
    omq, notes = _as_guarded(doc.omq())
    rows, lines = [], list(notes)
    for name, db in _databases(doc, args.db).items():
        row = {"name": name, "size": len(db), "entails": certain_boolean(db, omq)}
        line = f"{name}: {'entails' if row['entails'] else 'does not entail'} {omq.query.name} ({len(db)} facts)"
        if args.minimal:
            row["needed"] = [{"fact": repr(f), "needed": not certain_boolean(db - [f], omq)} for f in db]
            spare = [n["fact"] for n in row["needed"] if not n["needed"]]
            line += "; every fact needed" if not spare else f"; removable: {', '.join(spare)}"
        rows.append(row)
        lines.append(line)
    out.emit({"databases": rows, "notes": notes}, "\n".join(lines))
    return EXIT_OK


def cmd_cost(args, out):
    doc = _load(args.program)
    omq, _ = _as_guarded(doc.omq())
    rows = []
    h = build_cost_automaton(omq) if args.engine == "automaton" else None
    for name, db in _databases(doc, args.db).items():
        if h is None:
            value = min_derivation_height(db, omq)
        else:
            value = automata.cost_value(h, encode_database(db, omq.data_schema.width()))
        rows.append({"name": name, "cost": _cost_json(value)})
    out.emit({"engine": args.engine, "databases": rows},
             "\n".join(f"{r['name']}: cost {r['cost']}" for r in rows))
    return EXIT_OK


def cmd_oracle(args, out):
    omq, _ = _as_guarded(_load(args.program).omq())
    report = oracle_condition2(omq, args.max_facts, args.max_consts, args.jobs)
    data = report.to_json()
    data["running_max"] = {str(k): v for k, v in report.running_max().items()}
    data["growing"] = report.growing()
    lines = [f"{len(report.records)} entailing databases, maximum minimal subset {report.maximum}"]
    lines.append("running max by size: " + ", ".join(f"{k}:{v}" for k, v in report.running_max().items()))
    lines.append("still growing at the budget frontier" if report.growing() else "stable at the budget frontier")
    if not report.complete:
        lines.append("search was cut off by its state limit")
    out.emit(data, "\n".join(lines))
    return EXIT_OK


def cmd_encode(args, out):
    doc = _load(args.program)
    omq = doc.omq()
    w = tree_width_bound(omq.data_schema)
    if args.random:
        rng = random.Random(args.seed)
        relations = [(r.name, r.arity) for r in omq.data_schema]
        trees = [random_tree(rng, relations, w) for _ in range(args.random)]
        data = [t.to_json() for t in trees]
        out.emit(data, json.dumps(data, indent=2))
        return EXIT_OK
    names = args.db or sorted(doc.databases)[:1]
    if not names:
        raise GomqError("the program has no databases to encode")
    t = encode_database(doc.database(names[0]), omq.data_schema.width())
    out.emit(t.to_json(), t.dumps())
    return EXIT_OK


def cmd_decode(args, out):
    t = EncodedTree.loads(Path(args.tree).read_text(encoding="utf-8"))
    d = decode(t)
    facts = [repr(f) for f in d.database]
    out.emit({"facts": facts, "constants": len(d.database.adom)}, "\n".join(f + "." for f in facts) or "(empty)")
    return EXIT_OK


def cmd_automaton(args, out):
    omq, _ = _as_guarded(_load(args.program).omq())
    if args.action == "finiteness":
        return _finiteness(omq, args, out)
    a = AUTOMATA[args.which](omq)
    kind = "cost" if isinstance(a, automata.CostAutomaton) else "2ATA"
    if args.action == "build":
        try:
            states = len(a.states)
        except (TypeError, GomqError):
            states = None
        data = {"automaton": args.which, "kind": kind, "states": states, "degree": a.m}
        text = f"{args.which}: {kind} with {states if states is not None else 'lazily built'} states"
        out.emit(data, text + (f", degree bound {a.m}" if a.m is not None else ""))
        return EXIT_OK
    if not args.tree:
        raise GomqError("automaton accepts needs --tree")
    t = EncodedTree.loads(Path(args.tree).read_text(encoding="utf-8"))
    if kind == "cost":
        value = automata.cost_value(a, t)
        data = {"automaton": args.which, "accepted": value != INFINITY, "cost": _cost_json(value)}
        out.emit(data, f"cost {data['cost']}")
    else:
        data = {"automaton": args.which, "accepted": automata.accepts(a, t)}
        out.emit(data, "accepted" if data["accepted"] else "rejected")
    return EXIT_OK


def _finiteness(omq, args, out):
    relations = [(r.name, r.arity) for r in omq.data_schema]
    w = tree_width_bound(omq.data_schema)
    total = count_labels(relations, w)
    try:
        n = automata.to_nta(build_bq(omq), cap=args.state_cap)
        verdict = automata.nta_finiteness(n, list(enumerate_labels(relations, w)))
    except (StateLimitExceeded, BudgetExceeded) as exc:
        out.emit({"verdict": "Unknown", "labels": total, "notes": [str(exc)]}, f"Unknown: {exc}")
        return EXIT_UNKNOWN
    data = {"verdict": type(verdict).__name__, "labels": total}
    if isinstance(verdict, automata.Finite):
        data["max_height"] = verdict.max_height
    out.emit(data, str(verdict))
    return EXIT_OK


def _emit_program(t, out):
    comments = [f"{name}: {origin}" for name, origin in t.origins.items()]
    text = print_program(program_from_omq(t.omq, comments=comments))
    out.emit({"program": text, "origins": t.origins, "notes": t.notes}, text)


def cmd_treeify(args, out):
    omq = _load(args.program).omq()
    notes = []
    if not isinstance(omq.query, Aq0):
        reduced = reduce_ucq_to_aq0(omq)
        omq, notes = reduced.omq, reduced.notes
    t = translate_fg_to_g(omq)
    t.notes = notes + t.notes
    _emit_program(t, out)
    return EXIT_OK


def cmd_reduce(args, out):
    _emit_program(reduce_ucq_to_aq0(_load(args.program).omq()), out)
    return EXIT_OK


def cmd_decide(args, out):
    omq = _load(args.program).omq()
    v = decide_forew(omq, args.engine, args.max_facts, args.max_consts, args.state_cap, args.jobs)
    data = v.to_json()
    data["rewriting"] = [repr(d) for d in v.rewriting.disjuncts] if v.rewriting is not None else None
    lines = [f"{v.status} (engine {v.engine}, {v.runtime_ms} ms)"]
    if v.bound is not None:
        lines.append(f"bound {v.bound}")
    for facts, size in v.witnesses:
        lines.append(f"  witness {size}: " + ", ".join(map(repr, facts)))
    lines.extend(f"  note: {n}" for n in v.notes)
    out.emit(data, "\n".join(lines))
    if v.status == "FoRewritable":
        return EXIT_OK
    if v.status == "NotFoRewritable":
        return EXIT_NEGATIVE
    return EXIT_UNKNOWN


def cmd_rewrite(args, out):
    omq, notes = _as_guarded(_load(args.program).omq())
    k = args.k
    if k is None:
        report = oracle_condition2(omq, args.max_facts, args.max_consts, args.jobs)
        if report.growing():
            data = {"bound": None, "verified": False, "disjuncts": [],
                    "notes": notes + ["minimal entailing subsets still grow at the budget; no bound to use"]}
            out.emit(data, "no rewriting: minimal entailing subsets still grow at the budget")
            return EXIT_UNKNOWN
        k = report.maximum
        notes.append(f"bound {k} taken from the oracle at {args.max_facts} facts")
    r = extract_ucq_rewriting(omq, k, args.max_consts)
    data = {"bound": k, "verified": r.verified, "disjuncts": [repr(d) for d in r.disjuncts], "notes": notes}
    out.emit(data, str(r))
    return EXIT_OK


def cmd_gen_hardness(args, out):
    q1 = _load(args.first).omq()
    q2 = _load(args.second).omq()
    omq = gen_hardness_instance(q1, q2)
    text = print_program(program_from_omq(omq))
    out.emit({"program": text, "origins": {}, "notes": []}, text)
    return EXIT_OK


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--engine", default=None)
    common.add_argument("--max-facts", type=int, default=6)
    common.add_argument("--max-consts", type=int, default=7)
    common.add_argument("--state-cap", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="gomq", description="FO-rewritability analysis for guarded OMQs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    add("classify", cmd_classify, "classify rules and query").add_argument("program")
    p = add("chase", cmd_chase, "decide entailment for the program's databases")
    p.add_argument("program")
    p.add_argument("--db", action="append")
    p.add_argument("--minimal", action="store_true", help="also test every single-fact removal")
    p = add("cost", cmd_cost, "least derivation height per database")
    p.add_argument("program")
    p.add_argument("--db", action="append")
    add("oracle", cmd_oracle, "brute-force minimal entailing subsets").add_argument("program")
    p = add("encode", cmd_encode, "write a database as an encoded tree")
    p.add_argument("program")
    p.add_argument("--db", action="append")
    p.add_argument("--random", type=int, default=0, help="emit this many random trees instead")
    add("decode", cmd_decode, "read an encoded tree back as a database").add_argument("tree")
    p = add("automaton", cmd_automaton, "build automata, test membership, decide finiteness")
    p.add_argument("action", choices=["build", "accepts", "finiteness"])
    p.add_argument("program")
    p.add_argument("--which", choices=sorted(AUTOMATA), default="language")
    p.add_argument("--tree")
    add("treeify", cmd_treeify, "translate frontier-guarded rules into guarded ones").add_argument("program")
    add("reduce", cmd_reduce, "reduce a CQ/UCQ query to a 0-ary atomic one").add_argument("program")
    add("decide", cmd_decide, "decide or gather evidence on FO-rewritability").add_argument("program")
    p = add("rewrite", cmd_rewrite, "extract a UCQ rewriting")
    p.add_argument("program")
    p.add_argument("--k", type=int, default=None)
    p = add("gen-hardness", cmd_gen_hardness, "build the containment-to-rewritability gadget")
    p.add_argument("first")
    p.add_argument("second")
    return parser


ENGINES = {"cost": ("chase", "automaton"), "decide": ("oracle", "cost", "automata")}


def main(argv=None, stream=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.json, stream)
    choices = ENGINES.get(args.command)
    if choices:
        args.engine = args.engine or choices[0]
        if args.engine not in choices:
            parser.error(f"--engine must be one of {', '.join(choices)}")
    try:
        return args.func(args, out)
    except (StateLimitExceeded, BudgetExceeded, CombinatorialBudgetExceeded, QueryTooLarge) as exc:
        _report_error(exc, out)
        return EXIT_UNKNOWN
    except (GomqError, OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        _report_error(exc, out)
        return EXIT_INPUT


def _report_error(exc, out):
    data = {"error": type(exc).__name__, "message": str(exc).strip("'\"")}
    if isinstance(exc, InconsistentTree):
        data["path"] = list(exc.path)
    if isinstance(exc, ParseError):
        data["line"], data["column"] = exc.line, exc.column
    if out.as_json:
        out.emit(data, "")
    else:
        sys.stderr.write(f"error: {data['error']}: {data['message']}\n")


if __name__ == "__main__":
    sys.exit(main())
