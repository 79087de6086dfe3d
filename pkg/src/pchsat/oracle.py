"""Brute-force deciders used as independent ground truth.

The full-joint decider puts one LP variable on every complete assignment of
the observed variables, so it is exponential in the variable count and
entirely independent of any decomposition machinery.  The 3-SAT and clique
deciders are plain exhaustive searches.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import FragmentMismatch, TooLarge
from .formula import DomainSpec, Formula, validate_and_classify
from .lpcore import LinRow, RationalLinearProgram, solve_feasibility
from .prob_solver import _event_holds

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_JOINT_CAP = 2 ** 16


@dataclass
class JointDistributionCertificate:
    domain: DomainSpec
    variables: tuple[str, ...]
    probs: dict[tuple[str, ...], Fraction]  # sparse; missing tuples carry 0


@dataclass
class OracleVerdict:
    sat: bool
    certificate: JointDistributionCertificate | None


def prob_joint_oracle(f: Formula, cap: int = DEFAULT_JOINT_CAP) -> OracleVerdict:
    """Feasibility of one distribution over all d^n full assignments."""
    fragment = validate_and_classify(f)
    if fragment.depth != "prob":
        raise FragmentMismatch("the joint oracle handles intervention-free formulas")
    n = len(f.variables)
    total = f.domain.size ** n
    if total > cap:
        raise TooLarge("joint distribution needs %d tuples, cap is %d" % (total, cap))
    tuples = list(itertools.product(f.domain.values, repeat=n))
    variables = list(range(total))
    lower_bounds = {j: ZERO for j in variables}
    rows = [LinRow({j: ONE for j in variables}, "=", ONE)]
    for constraint in f.constraints:
        coeffs: dict[int, Fraction] = {}
        for coef, term in constraint.lhs:
            for j, values in enumerate(tuples):
                if _event_holds(term.event, dict(zip(f.variables, values))):
                    acc = coeffs.get(j, ZERO) + coef
                    if acc:
                        coeffs[j] = acc
                    else:
                        coeffs.pop(j, None)
        rows.append(LinRow(coeffs, constraint.relation, constraint.rhs))
    outcome = solve_feasibility(RationalLinearProgram(variables, rows, lower_bounds))
    if outcome.status != "feasible":
        return OracleVerdict(False, None)
    probs = {
        tuples[j]: p for j, p in outcome.point.items() if p != 0
    }
    return OracleVerdict(True, JointDistributionCertificate(f.domain, f.variables, probs))


def joint_certificate_satisfies(f: Formula, cert: JointDistributionCertificate) -> bool:
    """Direct exact evaluation of the formula under a joint distribution."""
    if set(cert.variables) != set(f.variables):
        return False
    if any(p < 0 for p in cert.probs.values()):
        return False
    if sum(cert.probs.values(), ZERO) != 1:
        return False
    for constraint in f.constraints:
        lhs = ZERO
        for coef, term in constraint.lhs:
            mass = ZERO
            for values, p in cert.probs.items():
                if _event_holds(term.event, dict(zip(cert.variables, values))):
                    mass += p
            lhs += coef * mass
        if constraint.relation == "<=" and not lhs <= constraint.rhs:
            return False
        if constraint.relation == ">=" and not lhs >= constraint.rhs:
            return False
        if constraint.relation == "=" and lhs != constraint.rhs:
            return False
    return True


def truth_table_sat(clauses, num_vars: int | None = None, cap_vars: int = 20) -> bool:
    """Exhaustive satisfiability of a CNF given as signed-literal clauses."""
    if num_vars is None:
        num_vars = max((abs(l) for clause in clauses for l in clause), default=0)
    if num_vars > cap_vars:
        raise TooLarge("truth table limited to %d variables" % cap_vars)
    for bits in range(1 << num_vars):
        assignment = [(bits >> i) & 1 for i in range(num_vars)]
        ok = True
        for clause in clauses:
            if not any(
                assignment[abs(l) - 1] == (1 if l > 0 else 0) for l in clause
            ):
                ok = False
                break
        if ok:
            return True
    return False


def max_clique_exists(vertices, edges, coloring: dict, k: int, cap_vertices: int = 10) -> bool:
    """Is there a k-clique with exactly one vertex of each color 1..k?"""
    if len(vertices) > cap_vertices:
        raise TooLarge("clique search limited to %d vertices" % cap_vertices)
    adjacent = {frozenset(e) for e in edges}
    classes = [[v for v in vertices if coloring[v] == color] for color in range(1, k + 1)]
    if any(not cls for cls in classes):
        return False
    for combo in itertools.product(*classes):
        if all(
            frozenset((a, b)) in adjacent
            for a, b in itertools.combinations(combo, 2)
        ):
            return True
    return False
