"""Instance generators that embed hard problems into constraint formulas.

Used for end-to-end testing: a source instance is satisfiable exactly when
its generated formula is, so solver verdicts can be checked against plain
exhaustive deciders.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from .formula import (
    Atom,
    DomainSpec,
    Formula,
    Intervention,
    LinearConstraint,
    PostIntEvent,
    PropAnd,
    PropEvent,
    Term,
    prop_or,
    validate,
)

ONE = Fraction(1)


@dataclass(frozen=True)
class CnfInstance:
    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError("clauses must have exactly 3 literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError("literal %d out of range" % lit)


def parse_dimacs(text: str) -> CnfInstance:
    num_vars = 0
    clauses: list[tuple[int, int, int]] = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            num_vars = int(parts[2])
            continue
        for token in line.split():
            lit = int(token)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    return CnfInstance(num_vars, tuple(clauses))


@dataclass
class ColoredGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    colors: dict[str, int]


def parse_colored_graph(text: str) -> ColoredGraph:
    """Lines: ``v <name> <color>`` and ``e <u> <v>``; ``#`` comments."""
    vertices: list[str] = []
    colors: dict[str, int] = {}
    edges: list[tuple[str, str]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v":
            vertices.append(parts[1])
            colors[parts[1]] = int(parts[2])
        elif parts[0] == "e":
            edges.append((parts[1], parts[2]))
        else:
            raise ValueError("unknown line %r" % raw)
    return ColoredGraph(tuple(vertices), tuple(edges), colors)


def _literal_atom(lit: int) -> Atom:
    return Atom("V%d" % abs(lit), "1" if lit > 0 else "0")


def _plain_term(event: PropEvent) -> Term:
    return Term(PostIntEvent(Intervention(), event))


def gen_threesat_probbase(cnf: CnfInstance) -> Formula:
    """One equality per clause: the clause disjunction holds surely.

    The generated formula is satisfiable exactly when the CNF is.  The
    bounded-degree guarantee additionally needs every variable to occur
    exactly twice positively and twice negatively; instances violating that
    still reduce correctly, so they only trigger a warning.
    """
    occurrences: dict[int, list[int]] = {v: [0, 0] for v in range(1, cnf.num_vars + 1)}
    for clause in cnf.clauses:
        for lit in clause:
            occurrences[abs(lit)][0 if lit > 0 else 1] += 1
    if any(tuple(counts) != (2, 2) for counts in occurrences.values()):
        warnings.warn(
            "bounded-degree guarantee needs each variable twice positive "
            "and twice negative",
            stacklevel=2,
        )
    variables = tuple("V%d" % v for v in range(1, cnf.num_vars + 1))
    constraints = []
    for clause in cnf.clauses:
        event: PropEvent = _literal_atom(clause[0])
        for lit in clause[1:]:
            event = prop_or(event, _literal_atom(lit))
        constraints.append(LinearConstraint(((ONE, _plain_term(event)),), "=", ONE))
    f = Formula(DomainSpec(("0", "1")), variables, tuple(constraints))
    validate(f)
    return f


def gen_clique_probbase(g: ColoredGraph, k: int) -> Formula:
    """One selector variable per color over the vertex domain.

    Wrong-colored values and non-adjacent value pairs are forced to
    probability zero, so positive mass pins down a multicolored clique.
    """
    if sorted(set(g.colors.values())) != list(range(1, k + 1)):
        raise ValueError("coloring must use colors exactly 1..%d" % k)
    variables = tuple("V%d" % i for i in range(1, k + 1))
    domain = DomainSpec(g.vertices)
    constraints = []
    zero = Fraction(0)
    for i in range(1, k + 1):
        for v in g.vertices:
            if g.colors[v] != i:
                atom = Atom("V%d" % i, v)
                constraints.append(
                    LinearConstraint(((ONE, _plain_term(atom)),), "<=", zero)
                )
    adjacent = {frozenset(e) for e in g.edges}
    for a_idx, a in enumerate(g.vertices):
        for b in g.vertices[a_idx + 1 :]:
            if frozenset((a, b)) in adjacent:
                continue
            i, j = g.colors[a], g.colors[b]
            event = PropAnd(Atom("V%d" % i, a), Atom("V%d" % j, b))
            constraints.append(
                LinearConstraint(((ONE, _plain_term(event)),), "<=", zero)
            )
    f = Formula(domain, variables, tuple(constraints))
    validate(f)
    return f


def gen_threesat_causal(cnf: CnfInstance) -> Formula:
    """Complemented variable pairs with mutual-exclusion interventions.

    Each CNF variable x yields observed variables V (for x) and Vn (for
    !x); forcing either to 1 forces the other to 0, and each clause demands
    total literal mass at least one.  The generated primal graph is a
    perfect matching on the (V, Vn) pairs.
    """
    variables: list[str] = []
    for i in range(1, cnf.num_vars + 1):
        variables.extend(("V%d" % i, "Vn%d" % i))
    zero = Fraction(0)
    constraints = []
    for i in range(1, cnf.num_vars + 1):
        pos, neg = "V%d" % i, "Vn%d" % i
        for a, b in ((pos, neg), (neg, pos)):
            term = Term(PostIntEvent(Intervention(((a, "1"),)), Atom(b, "1")))
            constraints.append(LinearConstraint(((ONE, term),), "=", zero))
    for clause in cnf.clauses:
        weights: dict[str, Fraction] = {}
        for lit in clause:
            name = ("V%d" if lit > 0 else "Vn%d") % abs(lit)
            weights[name] = weights.get(name, Fraction(0)) + ONE
        lhs = tuple(
            (coef, _plain_term(Atom(name, "1"))) for name, coef in weights.items()
        )
        constraints.append(LinearConstraint(lhs, ">=", ONE))
    f = Formula(DomainSpec(("0", "1")), tuple(variables), tuple(constraints))
    validate(f)
    return f
