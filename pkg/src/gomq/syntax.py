"""Text format for OMQ programs.

    schema: S/3, A/1, B/1.
    rule: S(x,y,z), A(z) -> R(x,z).
    rule: A(x) -> exists y. E(x,y).
    query: atom P.
    query: q(x) := R(x,y), B(y) | A(x).
    db D1 { A(a). S(c,b,a). }

Relations start with an uppercase letter, variables and constants with a
lowercase one. `#` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ArityMismatch, ParseError, UndeclaredRelation
from .logic import (
    Aq0,
    Atom,
    Constant,
    Cq,
    Database,
    Omq,
    Relation,
    Schema,
    Tgd,
    Ucq,
    Variable,
    sort_atoms,
)

_TOKEN = re.compile(r"\s+|#[^\n]*|(?P<sym>->|:=|[:,.(){}=|/])|(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)")


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        chunk = m.group(0)
        kind = m.lastgroup
        if kind:
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class ProgramDocument:
    schema: Schema
    rules: list = field(default_factory=list)
    query: object = None
    databases: dict = field(default_factory=dict)
    arities: dict = field(default_factory=dict)
    positions: dict = field(default_factory=dict)
    comments: list = field(default_factory=list)

    def omq(self) -> Omq:
        if self.query is None:
            raise ParseError("program has no query declaration")
        return Omq(self.schema, tuple(self.rules), self.query)

    def database(self, name: str) -> Database:
        if name not in self.databases:
            raise UndeclaredRelation(f"no database named {name}")
        return self.databases[name]


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.arities = {}
        self.declared = {}
        self.doc = ProgramDocument(Schema([]))

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column)

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.tok
        if text is not None and tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        if kind is not None and tok.kind != kind:
            self.fail(f"expected {kind}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def peek(self, text: str) -> bool:
        return self.tok.text == text

    def note_arity(self, name: str, arity: int, tok: Token):
        known = self.arities.get(name)
        if known is None:
            self.arities[name] = arity
        elif known != arity:
            raise ArityMismatch(f"{name} used with arity {arity} but declared {known} "
                                f"(line {tok.line}, column {tok.column})")

    def parse(self) -> ProgramDocument:
        while self.tok.kind != "eof":
            tok = self.take(kind="ident")
            if tok.text == "schema":
                self.take(":")
                self.schema_decl()
            elif tok.text == "rule":
                self.take(":")
                self.doc.positions.setdefault("rules", []).append((tok.line, tok.column))
                self.doc.rules.append(self.rule())
            elif tok.text == "query":
                self.take(":")
                self.doc.positions["query"] = (tok.line, tok.column)
                self.doc.query = self.query()
            elif tok.text == "db":
                self.database()
            else:
                self.fail(f"unknown statement {tok.text!r}", tok)
        self.doc.schema = Schema(Relation(n, a) for n, a in self.declared.items())
        self.doc.arities = dict(self.arities)
        return self.doc

    def schema_decl(self):
        while True:
            tok = self.take(kind="ident")
            if not tok.text[0].isupper():
                self.fail("relation names start with an uppercase letter", tok)
            self.take("/")
            arity = int(self.take(kind="num").text)
            self.note_arity(tok.text, arity, tok)
            self.declared[tok.text] = arity
            if self.peek(","):
                self.take(",")
                continue
            self.take(".")
            return

    def term_list(self, make):
        args = []
        if not self.peek("("):
            return args
        self.take("(")
        if self.peek(")"):
            self.take(")")
            return args
        while True:
            tok = self.take(kind="ident")
            if tok.text[0].isupper():
                self.fail("terms start with a lowercase letter", tok)
            args.append(make(tok.text))
            if self.peek(","):
                self.take(",")
                continue
            self.take(")")
            return args

    def atom(self, make=Variable) -> Atom:
        tok = self.take(kind="ident")
        if not tok.text[0].isupper():
            self.fail("relation names start with an uppercase letter", tok)
        args = self.term_list(make)
        self.note_arity(tok.text, len(args), tok)
        return Atom(tok.text, args)

    def atoms_until(self, stops) -> list:
        out = [self.atom()]
        while self.peek(","):
            self.take(",")
            out.append(self.atom())
        if self.tok.text not in stops:
            self.fail(f"expected one of {sorted(stops)}")
        return out

    def rule(self) -> Tgd:
        start = self.tok
        body = self.atoms_until({"->"})
        self.take("->")
        declared = []
        if self.tok.text == "exists":
            self.take()
            while True:
                tok = self.take(kind="ident")
                declared.append(Variable(tok.text))
                if self.peek(","):
                    self.take(",")
                    continue
                self.take(".")
                break
        head = self.atoms_until({"."})
        self.take(".")
        body_vars = set().union(*(a.variables() for a in body))
        head_vars = set().union(*(a.variables() for a in head))
        if set(declared) & body_vars:
            self.fail("existential variable also occurs in the body", start)
        loose = head_vars - body_vars - set(declared)
        if loose:
            names = ", ".join(sorted(v.name for v in loose))
            self.fail(f"head variable(s) {names} neither in the body nor existential", start)
        return Tgd(body, head)

    def query(self):
        if self.tok.text == "atom":
            self.take()
            tok = self.take(kind="ident")
            if self.peek("("):
                self.take("(")
                self.take(")")
            self.note_arity(tok.text, 0, tok)
            self.take(".")
            return Aq0(tok.text)
        self.take(kind="ident")
        answer = [Variable(v.name) for v in self.term_list(Variable)]
        self.take(":=")
        disjuncts = []
        while True:
            disjuncts.append(self.cq_body(answer))
            if self.peek("|"):
                self.take("|")
                continue
            self.take(".")
            break
        for d in disjuncts:
            for a in d.atoms:
                if a.relation not in self.arities:
                    raise UndeclaredRelation(a.relation)
        return disjuncts[0] if len(disjuncts) == 1 else Ucq(disjuncts)

    def cq_body(self, answer) -> Cq:
        atoms, equalities = [], []
        while True:
            if self.tok.kind == "ident" and self.tok.text[0].islower():
                left = Variable(self.take().text)
                self.take("=")
                right = Variable(self.take(kind="ident").text)
                equalities.append((left, right))
            else:
                atoms.append(self.atom())
            if self.peek(","):
                self.take(",")
                continue
            break
        try:
            return Cq(answer, atoms, equalities)
        except ValueError as err:
            self.fail(str(err))

    def database(self):
        name = self.take(kind="ident").text
        self.take("{")
        facts = []
        while not self.peek("}"):
            tok = self.tok
            f = self.atom(Constant)
            if f.relation not in self.declared:
                raise UndeclaredRelation(f"{f.relation} is not in the data schema "
                                         f"(line {tok.line}, column {tok.column})")
            facts.append(f)
            self.take(".")
        self.take("}")
        self.doc.databases[name] = Database(facts)


def parse_program(text: str) -> ProgramDocument:
    return _Parser(text).parse()


def _atoms_text(atoms) -> str:
    return ", ".join(map(repr, atoms))


def format_rule(rule: Tgd) -> str:
    head = _atoms_text(rule.head)
    if rule.existentials:
        head = "exists " + ",".join(v.name for v in sorted(rule.existentials)) + ". " + head
    return f"rule: {_atoms_text(rule.body)} -> {head}."


def format_cq_body(q: Cq) -> str:
    parts = [repr(a) for a in q.atoms] + [f"{x!r} = {y!r}" for x, y in q.equalities]
    return ", ".join(parts)


def format_query(query) -> str:
    if isinstance(query, Aq0):
        return f"query: atom {query.name}."
    disjuncts = query.disjuncts if isinstance(query, Ucq) else (query,)
    answer = ",".join(v.name for v in disjuncts[0].answer_vars)
    bodies = " | ".join(format_cq_body(d) for d in disjuncts)
    return f"query: q({answer}) := {bodies}."


def format_database(name: str, db: Database) -> str:
    inner = " ".join(f"{f!r}." for f in sort_atoms(db.facts))
    return f"db {name} {{ {inner} }}"


def print_program(doc: ProgramDocument) -> str:
    lines = [f"# {c}" for c in doc.comments]
    if len(doc.schema):
        lines.append("schema: " + ", ".join(f"{r.name}/{r.arity}" for r in doc.schema) + ".")
    lines.extend(format_rule(r) for r in doc.rules)
    if doc.query is not None:
        lines.append(format_query(doc.query))
    lines.extend(format_database(n, db) for n, db in doc.databases.items())
    return "\n".join(lines) + "\n"


def program_from_omq(omq: Omq, databases: dict | None = None, comments=()) -> ProgramDocument:
    return ProgramDocument(omq.data_schema, list(omq.ontology), omq.query,
                           dict(databases or {}), comments=list(comments))
