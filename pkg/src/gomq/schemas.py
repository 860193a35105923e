"""JSON Schema descriptions of every `--json` report the command line emits."""

_FACTS = {"type": "array", "items": {"type": "string"}}
_COST = {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "inf"}]}

ERROR = {
    "type": "object",
    "required": ["error", "message"],
    "properties": {
        "error": {"type": "string"},
        "message": {"type": "string"},
        "path": {"type": "array", "items": {"type": "integer"}},
        "line": {"type": "integer"},
        "column": {"type": "integer"},
    },
}

CLASSIFY = {
    "type": "object",
    "required": ["rules", "ontology", "query", "width"],
    "properties": {
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rule", "class"],
                "properties": {
                    "rule": {"type": "string"},
                    "class": {"enum": ["Guarded", "FrontierGuarded", "Neither"]},
                    "guard": {"type": ["string", "null"]},
                },
            },
        },
        "ontology": {"enum": ["G", "FG", "other"]},
        "query": {"enum": ["AQ0", "CQ", "UCQ"]},
        "width": {"type": "integer", "minimum": 0},
    },
}

CHASE = {
    "type": "object",
    "required": ["databases"],
    "properties": {
        "notes": {"type": "array", "items": {"type": "string"}},
        "databases": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "size", "entails"],
                "properties": {
                    "name": {"type": "string"},
                    "size": {"type": "integer"},
                    "entails": {"type": "boolean"},
                    "needed": {"type": "array", "items": {
                        "type": "object",
                        "required": ["fact", "needed"],
                        "properties": {"fact": {"type": "string"}, "needed": {"type": "boolean"}},
                    }},
                },
            },
        },
    },
}

COST = {
    "type": "object",
    "required": ["engine", "databases"],
    "properties": {
        "engine": {"enum": ["chase", "automaton"]},
        "databases": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "cost"],
                "properties": {"name": {"type": "string"}, "cost": _COST},
            },
        },
    },
}

ORACLE = {
    "type": "object",
    "required": ["complete", "budgets", "maximum", "records", "running_max", "growing"],
    "properties": {
        "complete": {"type": "boolean"},
        "budgets": {"type": "object"},
        "maximum": {"type": "integer"},
        "growing": {"type": "boolean"},
        "running_max": {"type": "object", "additionalProperties": {"type": "integer"}},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["facts", "entails", "min_subset"],
                "properties": {
                    "facts": _FACTS,
                    "entails": {"type": "boolean"},
                    "min_subset": {"type": ["integer", "null"]},
                },
            },
        },
    },
}

_NODE = {
    "type": "object",
    "required": ["names", "facts", "children"],
    "properties": {
        "names": {"type": "array", "items": {"type": "string"}},
        "facts": {"type": "array", "items": {
            "type": "object",
            "required": ["rel", "args"],
            "properties": {"rel": {"type": "string"}, "args": {"type": "array", "items": {"type": "string"}},
                           "tagged": {"type": "boolean"}},
        }},
        "children": {"type": "array"},
    },
}

TREE = {
    "type": "object",
    "required": ["width", "mode", "tree"],
    "properties": {"width": {"type": "integer"}, "mode": {"enum": ["gamma", "lambda"]}, "tree": _NODE},
}

ENCODE = {"oneOf": [TREE, {"type": "array", "items": TREE}]}

DECODE = {
    "type": "object",
    "required": ["facts", "constants"],
    "properties": {"facts": _FACTS, "constants": {"type": "integer"}},
}

AUTOMATON_BUILD = {
    "type": "object",
    "required": ["automaton", "kind", "states", "degree"],
    "properties": {
        "automaton": {"type": "string"},
        "kind": {"enum": ["2ATA", "cost"]},
        "states": {"type": ["integer", "null"]},
        "degree": {"type": ["integer", "null"]},
    },
}

AUTOMATON_ACCEPTS = {
    "type": "object",
    "required": ["automaton", "accepted"],
    "properties": {"automaton": {"type": "string"}, "accepted": {"type": "boolean"}, "cost": _COST},
}

AUTOMATON_FINITENESS = {
    "type": "object",
    "required": ["verdict", "labels"],
    "properties": {
        "verdict": {"enum": ["Empty", "Finite", "Infinite", "Unknown"]},
        "max_height": {"type": "integer"},
        "labels": {"type": "integer"},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

PROGRAM = {
    "type": "object",
    "required": ["program", "origins", "notes"],
    "properties": {
        "program": {"type": "string"},
        "origins": {"type": "object", "additionalProperties": {"type": "string"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

DECIDE = {
    "type": "object",
    "required": ["status", "engine", "bound", "witnesses", "budgets", "runtime_ms"],
    "properties": {
        "status": {"enum": ["FoRewritable", "NotFoRewritable", "EvidenceFo", "EvidenceNotFo", "Unknown"]},
        "engine": {"enum": ["oracle", "cost", "automata"]},
        "bound": {"type": ["integer", "null"]},
        "witnesses": {"type": "array", "items": {
            "type": "object",
            "required": ["facts", "min_subset"],
            "properties": {"facts": _FACTS, "min_subset": {"type": ["integer", "null"]}},
        }},
        "budgets": {"type": "object"},
        "runtime_ms": {"type": "integer", "minimum": 0},
        "notes": {"type": "array", "items": {"type": "string"}},
        "rewriting": {"type": ["array", "null"], "items": {"type": "string"}},
    },
}

REWRITE = {
    "type": "object",
    "required": ["bound", "verified", "disjuncts"],
    "properties": {
        "bound": {"type": ["integer", "null"]},
        "verified": {"type": "boolean"},
        "disjuncts": {"type": "array", "items": {"type": "string"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

SCHEMAS = {
    "error": ERROR,
    "classify": CLASSIFY,
    "chase": CHASE,
    "cost": COST,
    "oracle": ORACLE,
    "encode": ENCODE,
    "decode": DECODE,
    "automaton build": AUTOMATON_BUILD,
    "automaton accepts": AUTOMATON_ACCEPTS,
    "automaton finiteness": AUTOMATON_FINITENESS,
    "treeify": PROGRAM,
    "reduce": PROGRAM,
    "decide": DECIDE,
    "rewrite": REWRITE,
    "gen-hardness": PROGRAM,
}
