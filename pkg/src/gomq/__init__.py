"""First-order rewritability analysis for guarded ontology-mediated queries."""

__version__ = "0.1.0"
