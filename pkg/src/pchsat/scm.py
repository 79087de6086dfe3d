"""Recursive structural causal models with exact rational evaluation.

A model fixes an ordered list of observed variables, finite-range hidden
variables, one assignment function per observed variable, and a sparse
rational distribution over joint hidden values.  Evaluation is exact: given
a hidden tuple, observed values are computed in order (interventions
override the corresponding functions), and term probabilities are sums of
`Fraction` masses over the stored support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import SupportTooLarge
from .formula import (
    Atom,
    CfAnd,
    CfEvent,
    CfNot,
    DomainSpec,
    Formula,
    PostIntEvent,
    PropAnd,
    PropEvent,
    PropNot,
    Intervention,
)

DEFAULT_SUPPORT_CAP = 2 ** 20


@dataclass(frozen=True)
class HiddenVariable:
    name: str
    values: tuple | range

    @property
    def value_count(self) -> int:
        return len(self.values)


class TableFunction:
    """Assignment function given by an explicit total table.

    The table is keyed by the values of the hidden inputs followed by the
    values of the (earlier) observed inputs, in declared order.
    """

    kind = "table"

    def __init__(self, owner, hidden_inputs, endo_inputs, table):
        self.owner = owner
        self.hidden_inputs = tuple(hidden_inputs)
        self.endo_inputs = tuple(endo_inputs)
        self.table = dict(table)

    def evaluate(self, hidden, endo):
        key = tuple(hidden[h] for h in self.hidden_inputs) + tuple(
            endo[v] for v in self.endo_inputs
        )
        return self.table[key]

    def expected_size(self, model: "Scm") -> int:
        ranges = [len(model.hidden_by_name[h].values) for h in self.hidden_inputs]
        ranges += [model.domain.size] * len(self.endo_inputs)
        return math.prod(ranges)


class SelectorFunction:
    """Context-switched function: given the values of a few earlier observed
    variables, either return a fixed constant or forward one hidden
    variable's value.  Compact form of the table "if context then U_ctx"."""

    kind = "selector"

    def __init__(self, owner, context_vars, cases):
        # cases: context value tuple -> ("hidden", name) | ("const", value)
        self.owner = owner
        self.context_vars = tuple(context_vars)
        self.cases = dict(cases)

    def evaluate(self, hidden, endo):
        ref_kind, ref = self.cases[tuple(endo[v] for v in self.context_vars)]
        if ref_kind == "hidden":
            return hidden[ref]
        return ref


class ComponentFunction:
    """Projection-application function over a packed function tuple.

    The hidden variable holds a mixed-radix code of one function per
    observed variable; this function decodes its own component and applies
    it to the predecessor values.
    """

    kind = "component"

    def __init__(self, owner, hidden_name, predecessors, domain_values, stride, size):
        self.owner = owner
        self.hidden_name = hidden_name
        self.predecessors = tuple(predecessors)
        self.domain_values = tuple(domain_values)
        self.stride = stride
        self.size = size

    def evaluate(self, hidden, endo):
        d = len(self.domain_values)
        code = (hidden[self.hidden_name] // self.stride) % self.size
        rank = 0
        for j, var in enumerate(self.predecessors):
            rank += self.domain_values.index(endo[var]) * d ** j
        return self.domain_values[(code // d ** rank) % d]


@dataclass
class Scm:
    domain: DomainSpec
    variables: tuple[str, ...]
    hidden: tuple[HiddenVariable, ...]
    functions: dict
    dist: dict[tuple, Fraction]
    hidden_by_name: dict[str, HiddenVariable] = field(init=False, repr=False)

    def __post_init__(self):
        self.hidden_by_name = {h.name: h for h in self.hidden}

    def validate(self) -> None:
        total = sum(self.dist.values(), Fraction(0))
        if total != 1:
            raise ValueError("hidden distribution sums to %s, expected 1" % total)
        if any(p < 0 for p in self.dist.values()):
            raise ValueError("hidden distribution has a negative mass")
        for v in self.variables:
            fn = self.functions.get(v)
            if fn is None:
                raise ValueError("missing assignment function for %s" % v)
            if fn.kind == "table" and len(fn.table) != fn.expected_size(self):
                raise ValueError("table for %s is not total" % v)


def _eval_prop(e: PropEvent, values: dict) -> bool:
    if isinstance(e, Atom):
        return values[e.variable] == e.value
    if isinstance(e, PropNot):
        return not _eval_prop(e.child, values)
    return _eval_prop(e.left, values) and _eval_prop(e.right, values)


def _compute_assignment(m: Scm, hidden: dict, intervention: Intervention) -> dict:
    forced = intervention.as_dict()
    endo: dict = {}
    for v in m.variables:
        if v in forced:
            endo[v] = forced[v]
        else:
            endo[v] = m.functions[v].evaluate(hidden, endo)
    return endo


def evaluate_event(m: Scm, u: tuple, e: CfEvent | PropEvent) -> bool:
    """Decide whether the event holds for hidden values ``u``."""
    if not isinstance(e, (PostIntEvent, CfNot, CfAnd)):
        e = PostIntEvent(Intervention(), e)
    hidden = dict(zip((h.name for h in m.hidden), u))

    def walk(ev: CfEvent) -> bool:
        if isinstance(ev, PostIntEvent):
            return _eval_prop(ev.body, _compute_assignment(m, hidden, ev.intervention))
        if isinstance(ev, CfNot):
            return not walk(ev.child)
        return walk(ev.left) and walk(ev.right)

    return walk(e)


def term_probability(
    m: Scm, e: CfEvent | PropEvent, support_cap: int = DEFAULT_SUPPORT_CAP
) -> Fraction:
    """Exact probability of an event: total mass of satisfying support tuples."""
    if len(m.dist) > support_cap:
        raise SupportTooLarge(
            "distribution support %d exceeds cap %d" % (len(m.dist), support_cap)
        )
    total = Fraction(0)
    for u, p in m.dist.items():
        if p and evaluate_event(m, u, e):
            total += p
    return total


def satisfies(m: Scm, f: Formula, support_cap: int = DEFAULT_SUPPORT_CAP) -> bool:
    """Exact check that every constraint of the formula holds in the model."""
    if set(m.variables) != set(f.variables):
        raise ValueError("model and formula are over different variable sets")
    if not set(m.domain.values) <= set(f.domain.values):
        raise ValueError("model domain is not contained in the formula domain")
    for c in f.constraints:
        lhs = Fraction(0)
        for coef, term in c.lhs:
            lhs += coef * term_probability(m, term.event, support_cap)
        if c.relation == "<=" and not lhs <= c.rhs:
            return False
        if c.relation == ">=" and not lhs >= c.rhs:
            return False
        if c.relation == "=" and lhs != c.rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# JSON serialization


def _values_to_json(values):
    if isinstance(values, range):
        return {"count": len(values)}
    return list(values)


def _values_from_json(spec):
    if isinstance(spec, dict):
        return range(spec["count"])
    return tuple(spec)


def _nested_table(fn: TableFunction, model: Scm):
    sizes = [model.hidden_by_name[h].values for h in fn.hidden_inputs]
    sizes += [model.domain.values] * len(fn.endo_inputs)

    def build(prefix, remaining):
        if not remaining:
            return fn.table[tuple(prefix)]
        return [build(prefix + [v], remaining[1:]) for v in remaining[0]]

    return build([], sizes)


def _table_from_nested(nested, ranges):
    table = {}

    def walk(prefix, node, remaining):
        if not remaining:
            table[tuple(prefix)] = node
            return
        for v, sub in zip(remaining[0], node):
            walk(prefix + [v], sub, remaining[1:])

    walk([], nested, ranges)
    return table


def _function_to_json(fn, model: Scm):
    if fn.kind == "table":
        return {
            "kind": "table",
            "owner": fn.owner,
            "hidden_inputs": list(fn.hidden_inputs),
            "endo_inputs": list(fn.endo_inputs),
            "table": _nested_table(fn, model),
        }
    if fn.kind == "selector":
        return {
            "kind": "selector",
            "owner": fn.owner,
            "context_vars": list(fn.context_vars),
            "cases": [
                {"context": list(ctx), "ref": list(ref)}
                for ctx, ref in fn.cases.items()
            ],
        }
    return {
        "kind": "component",
        "owner": fn.owner,
        "hidden_name": fn.hidden_name,
        "predecessors": list(fn.predecessors),
        "domain_values": list(fn.domain_values),
        "stride": fn.stride,
        "size": fn.size,
    }


def _function_from_json(obj, domain, hidden_by_name):
    kind = obj["kind"]
    if kind == "table":
        ranges = [hidden_by_name[h].values for h in obj["hidden_inputs"]]
        ranges += [domain.values] * len(obj["endo_inputs"])
        table = _table_from_nested(obj["table"], ranges)
        return TableFunction(obj["owner"], obj["hidden_inputs"], obj["endo_inputs"], table)
    if kind == "selector":
        cases = {
            tuple(c["context"]): (c["ref"][0], c["ref"][1]) for c in obj["cases"]
        }
        return SelectorFunction(obj["owner"], obj["context_vars"], cases)
    return ComponentFunction(
        obj["owner"],
        obj["hidden_name"],
        obj["predecessors"],
        obj["domain_values"],
        obj["stride"],
        obj["size"],
    )


def scm_to_json(m: Scm) -> dict:
    return {
        "domain": list(m.domain.values),
        "variables": list(m.variables),
        "hidden": [
            {"name": h.name, "values": _values_to_json(h.values)} for h in m.hidden
        ],
        "functions": [_function_to_json(m.functions[v], m) for v in m.variables],
        "dist": [[list(u), str(p)] for u, p in m.dist.items()],
    }


def scm_from_json(obj: dict) -> Scm:
    domain = DomainSpec(tuple(obj["domain"]))
    hidden = tuple(
        HiddenVariable(h["name"], _values_from_json(h["values"])) for h in obj["hidden"]
    )
    by_name = {h.name: h for h in hidden}
    functions = {
        fn["owner"]: _function_from_json(fn, domain, by_name) for fn in obj["functions"]
    }
    dist = {tuple(u): Fraction(p) for u, p in obj["dist"]}
    return Scm(domain, tuple(obj["variables"]), hidden, functions, dist)


def scm_dumps(m: Scm) -> str:
    return json.dumps(scm_to_json(m), indent=2)


def scm_loads(text: str) -> Scm:
    return scm_from_json(json.loads(text))
