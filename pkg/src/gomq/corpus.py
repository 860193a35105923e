"""Small OMQ programs used by the demos, the CLI smoke tests and the test-suite."""
from __future__ import annotations

from .logic import Database, fact
from .syntax import parse_program

CARTWHEEL = """\
# S(c, a_i, a_{i-1}) spokes around the hub c; R walks the rim back to an A.
schema: S/3, A/1, B/1.
rule: S(x,y,z), A(z) -> R(x,z).
rule: S(x,y,z), R(x,z) -> R(x,y).
rule: S(x,y,z), R(x,z), B(y) -> P.
query: atom P.
db D2 { A(a0). S(c,a1,a0). B(a1). }
db D3 { A(a0). S(c,a1,a0). S(c,a2,a1). B(a2). }
db D4 { A(a0). S(c,a1,a0). S(c,a2,a1). S(c,a3,a2). B(a3). }
db D5 { A(a0). S(c,a1,a0). S(c,a2,a1). S(c,a3,a2). S(c,a4,a3). B(a4). }
"""

CARTWHEEL_CQ = """\
schema: S/3, A/1, B/1.
rule: S(x,y,z), A(z) -> R(x,z).
rule: S(x,y,z), R(x,z) -> R(x,y).
query: q() := S(x,y,z), R(x,z), B(y).
"""

CARTWHEEL_FO = """\
# Same rim rules, but the query rule also asks for A(z): one spoke suffices.
schema: S/3, A/1, B/1.
rule: S(x,y,z), A(z) -> R(x,z).
rule: S(x,y,z), R(x,z) -> R(x,y).
rule: S(x,y,z), R(x,z), B(y), A(z) -> P.
query: atom P.
db D2 { A(a0). S(c,a1,a0). B(a1). }
"""

REACH = """\
schema: E/2, A/1, B/1.
rule: A(x) -> T(x).
rule: E(x,y), T(y) -> T(x).
rule: T(x), B(x) -> P.
query: atom P.
db D1 { A(a). B(a). }
db D3 { A(c). E(b,c). E(a,b). B(a). }
"""

WITNESS = """\
schema: E/2, A/1.
rule: A(x) -> exists y. F(x,y), K(y).
rule: F(x,y), K(y) -> M(x).
rule: E(x,y), M(y) -> M(x).
rule: M(x), E(x,x) -> P.
query: atom P.
db D1 { A(a). E(a,a). }
db D2 { A(b). E(a,b). E(a,a). }
"""

TWO_STEP_FG = """\
schema: E/2, A/1.
rule: E(x,y), E(y,z), A(z) -> T(x).
rule: T(x), A(x) -> P.
query: atom P.
"""

PATH_FG = """\
schema: E/2, A/1, B/1.
rule: A(x) -> T(x).
rule: E(x,y), E(y,z), T(z) -> T(x).
rule: T(x), B(x) -> P.
query: atom P.
"""

TRIANGLE_FG = """\
# A cyclic rule body: only a guard cover makes it acyclic.
schema: E/2, A/1.
rule: E(x,y), E(y,z), E(z,x) -> P.
query: atom P.
"""

EMPTY_ONTOLOGY = """\
schema: P/0.
query: atom P.
"""

PROGRAMS = {
    "cartwheel": CARTWHEEL,
    "cartwheel_cq": CARTWHEEL_CQ,
    "cartwheel_fo": CARTWHEEL_FO,
    "reach": REACH,
    "witness": WITNESS,
    "two_step_fg": TWO_STEP_FG,
    "path_fg": PATH_FG,
    "triangle_fg": TRIANGLE_FG,
    "empty_ontology": EMPTY_ONTOLOGY,
}


def load(name: str):
    return parse_program(PROGRAMS[name])


def cartwheel_database(k: int) -> Database:
    """D_k: A(a0), spokes S(c, a_i, a_{i-1}) for i < k, and B(a_{k-1})."""
    facts = [fact("A", "a0"), fact("B", f"a{k - 1}")]
    facts += [fact("S", "c", f"a{i}", f"a{i - 1}") for i in range(1, k)]
    return Database(facts)
