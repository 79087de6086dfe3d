"""Exact satisfiability for linear constraints over probability terms of
propositional, interventional and counterfactual events."""

from .formula import (
    Atom,
    CfAnd,
    CfNot,
    DomainSpec,
    Formula,
    FragmentClass,
    Intervention,
    LinearConstraint,
    PostIntEvent,
    PrimalGraph,
    PropAnd,
    PropNot,
    Term,
    build_primal_graph,
    formula_to_text,
    parse,
    reduce_domain,
    validate_and_classify,
)
from .scm import Scm, evaluate_event, satisfies, term_probability
from . import cf_solver, decomp, lpcore, oracle, prob_solver, reductions

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "CfAnd",
    "CfNot",
    "DomainSpec",
    "Formula",
    "FragmentClass",
    "Intervention",
    "LinearConstraint",
    "PostIntEvent",
    "PrimalGraph",
    "PropAnd",
    "PropNot",
    "Scm",
    "Term",
    "build_primal_graph",
    "cf_solver",
    "decomp",
    "evaluate_event",
    "formula_to_text",
    "lpcore",
    "oracle",
    "parse",
    "prob_solver",
    "reduce_domain",
    "reductions",
    "satisfies",
    "term_probability",
    "validate_and_classify",
]
