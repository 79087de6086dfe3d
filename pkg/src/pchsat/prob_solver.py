"""Satisfiability of intervention-free formulas via bag-marginal programs.

One exact LP variable per (bag content, value tuple) captures the marginal
probability of that bag taking those values.  Rows enforce that every bag
carries a probability distribution, that distributions of adjacent bags
agree on shared variables, and that the formula's constraints hold with
each term summed over the satisfying tuples of a covering bag.  A feasible
point is certified by rebuilding an explicit model whose hidden variables
follow the decomposition (one unconditional hidden variable for the first
introduced variable, one conditional hidden variable per later variable and
positive-mass context).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from . import scm as scm_mod
from .decomp import (
    NiceTreeDecomposition,
    compute_decomposition,
    make_nice,
    nice_from_json,
    nice_to_json,
    verify_nice,
)
from .errors import FragmentMismatch, NoCoveringBag, SupportTooLarge
from .formula import (
    CfAnd,
    CfEvent,
    CfNot,
    DomainSpec,
    Formula,
    PostIntEvent,
    build_primal_graph,
    event_variables,
    mentioned_values,
    reduce_domain,
    validate_and_classify,
)
from .lpcore import (
    DEFAULT_VAR_CAP,
    LinRow,
    LpOutcome,
    RationalLinearProgram,
    solve_feasibility,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class BagMarginalCertificate:
    domain: DomainSpec
    variables: tuple[str, ...]
    decomposition: NiceTreeDecomposition
    # bag content -> {value tuple -> mass}, complete over the domain product
    marginals: dict[tuple[str, ...], dict[tuple[str, ...], Fraction]]
    # (constraint index, term index) -> covering bag content
    bag_assignment: dict[tuple[int, int], tuple[str, ...]]


@dataclass
class ProbVerdict:
    sat: bool
    certificate: BagMarginalCertificate | None
    outcome: LpOutcome
    lp: RationalLinearProgram
    width: int
    solved_formula: Formula


def marginal_var_name(bag: tuple[str, ...], values: tuple[str, ...]) -> str:
    return "p[%s]" % ",".join("%s=%s" % (v, x) for v, x in zip(bag, values))


def _event_holds(event: CfEvent, assignment: dict) -> bool:
    if isinstance(event, PostIntEvent):
        if not event.intervention.empty:
            raise FragmentMismatch("interventions are outside the prob fragment")
        return scm_mod._eval_prop(event.body, assignment)
    if isinstance(event, CfNot):
        return not _event_holds(event.child, assignment)
    if isinstance(event, CfAnd):
        return _event_holds(event.left, assignment) and _event_holds(
            event.right, assignment
        )
    raise TypeError("unexpected event node %r" % (event,))


def _contents_in_preorder(nt: NiceTreeDecomposition) -> list[tuple[str, ...]]:
    contents: list[tuple[str, ...]] = []
    seen = set()
    for i in nt.preorder():
        bag = nt.nodes[i].bag
        if bag and bag not in seen:
            seen.add(bag)
            contents.append(bag)
    return contents


def _adjacent_content_pairs(nt: NiceTreeDecomposition):
    """Distinct (smaller, larger) bag-content pairs of adjacent tree nodes."""
    contents = _contents_in_preorder(nt)
    pos = {c: k for k, c in enumerate(contents)}
    pairs = set()
    for i, node in enumerate(nt.nodes):
        for c in node.children:
            a, b = node.bag, nt.nodes[c].bag
            if a == b or not a and not b:
                continue
            small, large = (a, b) if len(a) < len(b) else (b, a)
            if not small:
                continue  # pairs with the empty bag express plain normalization
            pairs.add((small, large))
    return sorted(pairs, key=lambda p: (pos[p[0]], pos[p[1]]))


def build_lp(
    f: Formula, nt: NiceTreeDecomposition
) -> tuple[RationalLinearProgram, dict[tuple[int, int], tuple[str, ...]]]:
    """Bag-marginal feasibility program plus the term-to-bag assignment."""
    domain = f.domain.values
    contents = _contents_in_preorder(nt)
    pos = {c: k for k, c in enumerate(contents)}

    variables: list[str] = []
    lower_bounds: dict[str, Fraction] = {}
    names: dict[tuple[str, ...], dict[tuple[str, ...], str]] = {}
    for bag in contents:
        names[bag] = {}
        for values in itertools.product(domain, repeat=len(bag)):
            name = marginal_var_name(bag, values)
            names[bag][values] = name
            variables.append(name)
            lower_bounds[name] = ZERO

    rows: list[LinRow] = []
    for bag in contents:
        rows.append(LinRow({n: ONE for n in names[bag].values()}, "=", ONE))
    for small, large in _adjacent_content_pairs(nt):
        extra = next(v for v in large if v not in small)
        if set(small) | {extra} != set(large):  # pragma: no cover - nice invariant
            raise NoCoveringBag("adjacent bags differ by more than one variable")
        at = large.index(extra)
        for values in itertools.product(domain, repeat=len(small)):
            coeffs = {names[small][values]: ONE}
            for x in domain:
                extended = values[:at] + (x,) + values[at:]
                name = names[large][extended]
                coeffs[name] = coeffs.get(name, ZERO) - ONE
            rows.append(LinRow(coeffs, "=", ZERO))

    assignment: dict[tuple[int, int], tuple[str, ...]] = {}
    for ci, constraint in enumerate(f.constraints):
        coeffs: dict[str, Fraction] = {}
        for ti, (coef, term) in enumerate(constraint.lhs):
            needed = set(event_variables(term.event))
            covering = [b for b in contents if needed <= set(b)]
            if not covering:
                raise NoCoveringBag(
                    "no bag covers term variables %s" % sorted(needed)
                )
            bag = min(covering, key=lambda b: (len(b), pos[b]))
            assignment[(ci, ti)] = bag
            for values, name in names[bag].items():
                if _event_holds(term.event, dict(zip(bag, values))):
                    acc = coeffs.get(name, ZERO) + coef
                    if acc:
                        coeffs[name] = acc
                    else:
                        coeffs.pop(name, None)
        rows.append(LinRow(coeffs, constraint.relation, constraint.rhs))

    return RationalLinearProgram(variables, rows, lower_bounds), assignment


def solve(
    f: Formula,
    strategy: str = "greedy-minfill",
    reduce: bool = True,
    exact_limit: int = 12,
    var_cap: int = DEFAULT_VAR_CAP,
) -> ProbVerdict:
    """Decide satisfiability of an intervention-free formula."""
    fragment = validate_and_classify(f)
    if fragment.depth != "prob":
        raise FragmentMismatch(
            "prob solver requires an intervention-free formula, got %s" % fragment.depth
        )
    reduced = reduce_domain(f) if reduce else f
    if not reduced.variables:
        nt = NiceTreeDecomposition([], 0)
        cert = BagMarginalCertificate(reduced.domain, (), nt, {}, {})
        outcome = LpOutcome(status="feasible", point={})
        lp = RationalLinearProgram([], [], {})
        return ProbVerdict(True, cert, outcome, lp, -1, reduced)
    graph = build_primal_graph(reduced)
    nt = make_nice(compute_decomposition(graph, strategy, exact_limit), reduced.variables)
    lp, assignment = build_lp(reduced, nt)
    outcome = solve_feasibility(lp, var_cap)
    if outcome.status != "feasible":
        return ProbVerdict(False, None, outcome, lp, nt.width(), reduced)
    marginals: dict = {}
    for bag in _contents_in_preorder(nt):
        marginals[bag] = {
            values: outcome.point[marginal_var_name(bag, values)]
            for values in itertools.product(reduced.domain.values, repeat=len(bag))
        }
    cert = BagMarginalCertificate(
        reduced.domain, reduced.variables, nt, marginals, assignment
    )
    return ProbVerdict(True, cert, outcome, lp, nt.width(), reduced)


# ---------------------------------------------------------------------------
# Walking a certificate's decomposition


def _bfs_introductions(cert: BagMarginalCertificate):
    """Yield (context bag, full bag, introduced variable) in model order.

    The walk starts at the first introduce node sitting directly above an
    empty leaf and floods the whole tree; each variable is introduced on the
    first edge crossing into its occurrence subtree, conditioned on the bag
    on the near side of that edge.
    """
    nt = cert.decomposition
    if not nt.nodes:
        return
    parents = nt.parents()
    neighbors: dict[int, list[int]] = {}
    for i, node in enumerate(nt.nodes):
        adj = list(node.children)
        if parents.get(i) is not None:
            adj.append(parents[i])
        neighbors[i] = sorted(adj)
    start = None
    for i in nt.preorder():
        node = nt.nodes[i]
        if len(node.bag) == 1 and any(
            not nt.nodes[c].children and not nt.nodes[c].bag for c in node.children
        ):
            start = i
            break
    if start is None:
        raise ValueError("decomposition has no introduce node above an empty leaf")
    seen_vars = set(nt.nodes[start].bag)
    yield (), nt.nodes[start].bag, nt.nodes[start].bag[0]
    visited = {start}
    queue = [start]
    while queue:
        u = queue.pop(0)
        for w in neighbors[u]:
            if w in visited:
                continue
            visited.add(w)
            queue.append(w)
            bag_u, bag_w = nt.nodes[u].bag, nt.nodes[w].bag
            new = [v for v in bag_w if v not in bag_u]
            if len(new) == 1 and new[0] not in seen_vars:
                v = new[0]
                seen_vars.add(v)
                if len(bag_w) == 1:
                    yield (), bag_w, v
                else:
                    yield bag_u, bag_w, v


def reconstruct_scm(
    cert: BagMarginalCertificate, support_cap: int = scm_mod.DEFAULT_SUPPORT_CAP
) -> scm_mod.Scm:
    """Explicit model realizing the certified bag marginals.

    The first variable gets an unconditional hidden variable; every later
    variable V gets one hidden variable per positive-mass value tuple of its
    context bag, distributed as the conditional marginal, with the
    assignment function selecting the matching hidden variable.  Zero-mass
    contexts never occur, so their table entries are pinned to the first
    domain value.
    """
    domain = cert.domain.values
    hidden: list[scm_mod.HiddenVariable] = []
    hidden_dists: list[dict[str, Fraction]] = []
    functions: dict = {}
    order: list[str] = []
    for context_bag, full_bag, v in _bfs_introductions(cert):
        at = full_bag.index(v)
        cases: dict = {}
        if not context_bag:
            context_marg = {(): ONE}
        else:
            context_marg = cert.marginals[context_bag]
        full_marg = cert.marginals[full_bag]
        for values, mass in context_marg.items():
            if mass > 0:
                if context_bag:
                    label = "U[%s|%s]" % (
                        v,
                        ",".join("%s=%s" % p for p in zip(context_bag, values)),
                    )
                else:
                    label = "U[%s]" % v
                dist_h = {
                    x: full_marg[values[:at] + (x,) + values[at:]] / mass
                    for x in domain
                }
                hidden.append(scm_mod.HiddenVariable(label, tuple(domain)))
                hidden_dists.append(dist_h)
                cases[values] = ("hidden", label)
            else:
                cases[values] = ("const", domain[0])
        functions[v] = scm_mod.SelectorFunction(v, context_bag, cases)
        order.append(v)
    if set(order) != set(cert.variables):
        raise ValueError("decomposition walk did not introduce every variable")

    supports = [
        [x for x in domain if dist_h[x] > 0] for dist_h in hidden_dists
    ]
    total = 1
    for s in supports:
        total *= len(s)
        if total > support_cap:
            raise SupportTooLarge(
                "joint hidden support exceeds cap %d" % support_cap
            )
    dist: dict[tuple, Fraction] = {}
    for combo in itertools.product(*supports):
        p = ONE
        for dist_h, x in zip(hidden_dists, combo):
            p *= dist_h[x]
        dist[combo] = p
    return scm_mod.Scm(cert.domain, tuple(order), tuple(hidden), functions, dist)


def joint_probability(cert: BagMarginalCertificate, assignment: dict) -> Fraction:
    """Probability of one full assignment under the certified model.

    Chains the conditional factors along the introduction walk; any
    zero-mass context on the way makes the joint mass zero.
    """
    prob = ONE
    for context_bag, full_bag, _ in _bfs_introductions(cert):
        den = (
            cert.marginals[context_bag][tuple(assignment[v] for v in context_bag)]
            if context_bag
            else ONE
        )
        num = cert.marginals[full_bag][tuple(assignment[v] for v in full_bag)]
        if den == 0:
            return ZERO
        prob *= num / den
    return prob


def verify_certificate(f: Formula, cert: BagMarginalCertificate) -> bool:
    """Exact re-check of every program family against the formula."""
    if set(cert.variables) != set(f.variables):
        return False
    if not set(cert.domain.values) <= set(f.domain.values):
        return False
    if not mentioned_values(f) <= set(cert.domain.values):
        return False
    if not f.variables:
        return not cert.marginals and not f.constraints
    if not verify_nice(cert.decomposition, build_primal_graph(f)):
        return False
    domain = cert.domain.values
    contents = _contents_in_preorder(cert.decomposition)
    if set(contents) != set(cert.marginals):
        return False
    for bag in contents:
        table = cert.marginals[bag]
        expected = set(itertools.product(domain, repeat=len(bag)))
        if set(table) != expected:
            return False
        if any(p < 0 for p in table.values()):
            return False
        if sum(table.values(), ZERO) != 1:
            return False
    for small, large in _adjacent_content_pairs(cert.decomposition):
        extra = next(v for v in large if v not in small)
        at = large.index(extra)
        for values in itertools.product(domain, repeat=len(small)):
            total = sum(
                (
                    cert.marginals[large][values[:at] + (x,) + values[at:]]
                    for x in domain
                ),
                ZERO,
            )
            if total != cert.marginals[small][values]:
                return False
    for ci, constraint in enumerate(f.constraints):
        lhs = ZERO
        for ti, (coef, term) in enumerate(constraint.lhs):
            bag = cert.bag_assignment.get((ci, ti))
            if bag is None or bag not in cert.marginals:
                return False
            if not set(event_variables(term.event)) <= set(bag):
                return False
            for values, mass in cert.marginals[bag].items():
                if _event_holds(term.event, dict(zip(bag, values))):
                    lhs += coef * mass
        if constraint.relation == "<=" and not lhs <= constraint.rhs:
            return False
        if constraint.relation == ">=" and not lhs >= constraint.rhs:
            return False
        if constraint.relation == "=" and lhs != constraint.rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# Certificate serialization


def certificate_to_json(cert: BagMarginalCertificate, model: scm_mod.Scm | None = None) -> dict:
    obj = {
        "kind": "bag-marginal",
        "domain": list(cert.domain.values),
        "variables": list(cert.variables),
        "decomposition": nice_to_json(cert.decomposition),
        "marginals": [
            {
                "bag": list(bag),
                "values": [[list(values), str(p)] for values, p in table.items()],
            }
            for bag, table in cert.marginals.items()
        ],
        "bag_assignment": [
            {"constraint": ci, "term": ti, "bag": list(bag)}
            for (ci, ti), bag in cert.bag_assignment.items()
        ],
    }
    if model is not None:
        obj["model"] = scm_mod.scm_to_json(model)
    return obj


def certificate_from_json(obj: dict) -> BagMarginalCertificate:
    from .errors import CertificateFormatError

    if obj.get("kind") != "bag-marginal":
        raise CertificateFormatError("expected a bag-marginal certificate")
    try:
        marginals = {
            tuple(entry["bag"]): {
                tuple(values): Fraction(p) for values, p in entry["values"]
            }
            for entry in obj["marginals"]
        }
        assignment = {
            (entry["constraint"], entry["term"]): tuple(entry["bag"])
            for entry in obj["bag_assignment"]
        }
        return BagMarginalCertificate(
            DomainSpec(tuple(obj["domain"])),
            tuple(obj["variables"]),
            nice_from_json(obj["decomposition"]),
            marginals,
            assignment,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateFormatError("malformed bag-marginal certificate: %s" % exc)


def certificate_dumps(cert: BagMarginalCertificate) -> str:
    return json.dumps(certificate_to_json(cert), indent=2)


def certificate_loads(text: str) -> BagMarginalCertificate:
    return certificate_from_json(json.loads(text))
