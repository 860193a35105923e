import io
import json
from pathlib import Path

import jsonschema
import pytest

from gomq import corpus
from gomq.cli import main
from gomq.schemas import SCHEMAS
from gomq.syntax import parse_program, print_program

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stream=buf)
    return code, buf.getvalue()


def run_json(schema, *argv):
    code, text = run(*argv, "--json")
    data = json.loads(text)
    jsonschema.validate(data, SCHEMAS["error" if code == 3 else schema])
    return code, data


def demo(name):
    return str(DEMOS / f"{name}.omq")


@pytest.mark.parametrize("name", sorted(corpus.PROGRAMS))
def test_print_parse_round_trip(name):
    doc = corpus.load(name)
    again = parse_program(print_program(doc))
    assert again.omq() == doc.omq()
    assert again.databases == doc.databases
    assert print_program(again) == print_program(doc)


@pytest.mark.parametrize("name", sorted(corpus.PROGRAMS))
def test_demo_files_match_corpus(name):
    assert parse_program((DEMOS / f"{name}.omq").read_text()).omq() == corpus.load(name).omq()


@pytest.mark.parametrize("name", sorted(corpus.PROGRAMS))
def test_cheap_commands_emit_valid_json(name):
    path = demo(name)
    for command in ("classify", "chase", "cost"):
        code, _ = run_json(command, command, path)
        assert code == 0
    assert run_json("chase", "chase", path, "--minimal")[0] == 0
    assert run_json("reduce", "reduce", path)[0] == 0
    assert run_json("automaton build", "automaton", "build", path, "--which", "consistency")[0] == 0


def test_classify_reports():
    _, data = run_json("classify", "classify", demo("two_step_fg"))
    assert data["ontology"] == "FG"
    assert any(r["class"] == "FrontierGuarded" for r in data["rules"])
    _, data = run_json("classify", "classify", demo("cartwheel_cq"))
    assert data["query"] == "CQ"


def test_chase_marks_every_fact_needed():
    _, data = run_json("chase", "chase", demo("cartwheel"), "--minimal")
    assert [d["name"] for d in data["databases"]] == ["D2", "D3", "D4", "D5"]
    for d in data["databases"]:
        assert d["entails"] and all(n["needed"] for n in d["needed"])


def test_cost_engines_agree():
    _, chase = run_json("cost", "cost", demo("cartwheel"))
    _, auto = run_json("cost", "cost", demo("cartwheel"), "--engine", "automaton")
    assert chase["databases"] == auto["databases"]
    assert [d["cost"] for d in chase["databases"]] == [1, 2, 3, 4]


def test_oracle_json():
    code, data = run_json("oracle", "oracle", demo("cartwheel_fo"), "--max-facts", "4", "--max-consts", "5")
    assert code == 0 and data["maximum"] == 3 and not data["growing"]


def test_encode_decode_through_files(tmp_path):
    code, tree = run_json("encode", "encode", demo("cartwheel"), "--db", "D3")
    assert code == 0
    path = tmp_path / "d3.json"
    path.write_text(json.dumps(tree))
    _, data = run_json("decode", "decode", str(path))
    assert len(data["facts"]) == 4 and data["constants"] == 4
    code, trees = run_json("encode", "encode", demo("reach"), "--random", "3", "--seed", "1")
    assert code == 0 and len(trees) == 3


def test_decode_inconsistent_tree_exits_3(tmp_path):
    _, tree = run_json("encode", "encode", demo("cartwheel"), "--db", "D2")
    tree["tree"]["facts"].append({"rel": "B", "args": ["ghost"], "tagged": False})
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(tree))
    code, data = run_json("decode", "decode", str(path))
    assert code == 3 and data["error"] == "InconsistentTree" and data["path"] == []


def test_parse_error_exits_3(tmp_path):
    path = tmp_path / "bad.omq"
    path.write_text("schema: A/1.\nrule: A(x) ->\n")
    code, data = run_json("classify", "classify", str(path))
    assert code == 3 and data["error"] == "ParseError" and data["line"] == 3


def test_missing_inputs_exit_3():
    assert run("classify", str(DEMOS / "no_such_file.omq"))[0] == 3
    assert run("chase", demo("cartwheel"), "--db", "D9")[0] == 3


def test_automaton_accepts_and_finiteness(tmp_path):
    _, tree = run_json("encode", "encode", demo("cartwheel"), "--db", "D2")
    path = tmp_path / "d2.json"
    path.write_text(json.dumps(tree))
    _, data = run_json("automaton accepts", "automaton", "accepts", demo("cartwheel"),
                       "--which", "satisfaction", "--tree", str(path))
    assert data["accepted"]
    _, data = run_json("automaton accepts", "automaton", "accepts", demo("cartwheel"),
                       "--which", "cost", "--tree", str(path))
    assert data["cost"] == 1
    code, data = run_json("automaton finiteness", "automaton", "finiteness", demo("empty_ontology"))
    assert code == 0 and data["verdict"] == "Finite"
    code, data = run_json("automaton finiteness", "automaton", "finiteness", demo("cartwheel"))
    assert code == 2 and data["verdict"] == "Unknown"


def test_decide_exit_codes():
    code, data = run_json("decide", "decide", demo("cartwheel"))
    assert code == 2 and data["status"] == "EvidenceNotFo"
    code, data = run_json("decide", "decide", demo("cartwheel_fo"))
    assert code == 2 and data["status"] == "EvidenceFo" and data["rewriting"]
    code, data = run_json("decide", "decide", demo("empty_ontology"), "--engine", "automata")
    assert code == 0 and data["status"] == "FoRewritable"


def test_rewrite():
    code, data = run_json("rewrite", "rewrite", demo("cartwheel_fo"), "--k", "3")
    assert code == 0 and data["bound"] == 3 and data["disjuncts"]
    code, data = run_json("rewrite", "rewrite", demo("cartwheel"), "--max-facts", "4", "--max-consts", "5")
    assert code == 2 and data["disjuncts"] == []


def test_treeify_output_is_guarded():
    code, data = run_json("treeify", "treeify", demo("two_step_fg"))
    assert code == 0
    assert parse_program(data["program"]).omq().is_guarded()
    assert "C" in data["origins"]


def test_reduce_and_hardness_programs_parse():
    _, data = run_json("reduce", "reduce", demo("cartwheel_cq"))
    assert parse_program(data["program"]).omq().query.name == "G"
    code, data = run_json("gen-hardness", "gen-hardness", demo("reach"), demo("reach"))
    assert code == 0 and parse_program(data["program"]).omq().is_guarded()


def test_text_output_is_plain():
    code, text = run("cost", demo("cartwheel"), "--db", "D3")
    assert code == 0 and text.strip() == "D3: cost 2"
