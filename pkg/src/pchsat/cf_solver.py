"""Satisfiability with interventions via ordering enumeration.

For a fixed total order of the observed variables, a witnessing model can
be assumed to carry a single hidden variable whose value packs, for every
variable, the function computing it from its predecessors.  Over that shape
satisfiability is a feasibility program: one nonnegative variable per
function tuple, total mass one, and each probability term replaced by the
mass of the tuples whose induced evaluation satisfies the event.  The
solver tries every variable order (declaration-lexicographic) and accepts
on the first feasible one; it rejects only after all orders fail.

Function tuples are packed as mixed-radix integers: component i (0-based)
ranges over the d^(d^i) truth tables on the i earlier variables.  Batch
evaluation of events over all tuples runs on integer numpy arrays; the
feasibility decision itself stays on exact rationals.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import scm as scm_mod
from .errors import CertificateFormatError, FunctionSpaceTooLarge
from .formula import (
    CfAnd,
    CfEvent,
    CfNot,
    DomainSpec,
    Formula,
    PostIntEvent,
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

DEFAULT_FUNCTION_SPACE_CAP = 10 ** 6


@dataclass
class FunctionSpace:
    ordering: tuple[str, ...]
    domain: DomainSpec
    sizes: tuple[int, ...]    # sizes[i] = d^(d^i): tables on the i predecessors
    strides: tuple[int, ...]
    total: int


def space_exponent(d: int, n: int) -> int:
    """log_d of the function-tuple count: 1 + d + ... + d^(n-1)."""
    if d == 1:
        return n
    return (d ** n - 1) // (d - 1)


def make_function_space(
    domain: DomainSpec, ordering, cap: int = DEFAULT_FUNCTION_SPACE_CAP
) -> FunctionSpace:
    ordering = tuple(ordering)
    d = domain.size
    n = len(ordering)
    exponent = space_exponent(d, n)
    if d > 1 and exponent * d.bit_length() > 128:
        raise FunctionSpaceTooLarge(
            "function space holds %d^%d tuples, cap is %d" % (d, exponent, cap),
            cardinality=None,
        )
    total = d ** exponent
    if total > cap:
        raise FunctionSpaceTooLarge(
            "function space holds %d tuples (= %d^%d), cap is %d"
            % (total, d, exponent, cap),
            cardinality=total,
        )
    sizes = tuple(d ** (d ** i) for i in range(n))
    strides = []
    acc = 1
    for s in sizes:
        strides.append(acc)
        acc *= s
    return FunctionSpace(ordering, domain, sizes, tuple(strides), total)


def enumerate_function_space(
    f: Formula, ordering, cap: int = DEFAULT_FUNCTION_SPACE_CAP
) -> FunctionSpace:
    ordering = tuple(ordering)
    if sorted(ordering) != sorted(f.variables):
        raise ValueError("ordering must be a permutation of the formula variables")
    return make_function_space(f.domain, ordering, cap)


# ---------------------------------------------------------------------------
# Batch evaluation over all function tuples


def _assignment_codes(fs: FunctionSpace, forced: dict[str, int]) -> np.ndarray:
    """Assignment code (sum of value-index * d^position) induced by every
    function tuple under the given intervention, as one integer array."""
    d = fs.domain.size
    q = np.arange(fs.total, dtype=np.int64)
    rank = np.zeros(fs.total, dtype=np.int64)
    for j, var in enumerate(fs.ordering):
        if var in forced:
            vj = np.full(fs.total, forced[var], dtype=np.int64)
        else:
            cj = (q // fs.strides[j]) % fs.sizes[j]
            vj = (cj // d ** rank) % d
        rank = rank + vj * (d ** j)
    return rank


def _decode_assignment(fs: FunctionSpace, code: int) -> dict[str, str]:
    d = fs.domain.size
    return {
        var: fs.domain.values[(code // d ** j) % d]
        for j, var in enumerate(fs.ordering)
    }


def _leaf_interventions(event: CfEvent):
    if isinstance(event, PostIntEvent):
        yield event.intervention
    elif isinstance(event, CfNot):
        yield from _leaf_interventions(event.child)
    else:
        yield from _leaf_interventions(event.left)
        yield from _leaf_interventions(event.right)


def _event_mask(fs, event: CfEvent, codes_by_gamma, truth_cache) -> np.ndarray:
    if isinstance(event, PostIntEvent):
        key = event.intervention.assignments
        body = event.body
        if body not in truth_cache:
            d = fs.domain.size
            n = len(fs.ordering)
            truth_cache[body] = np.fromiter(
                (
                    scm_mod._eval_prop(body, _decode_assignment(fs, c))
                    for c in range(d ** n)
                ),
                dtype=bool,
                count=d ** n,
            )
        return truth_cache[body][codes_by_gamma[key]]
    if isinstance(event, CfNot):
        return ~_event_mask(fs, event.child, codes_by_gamma, truth_cache)
    return _event_mask(fs, event.left, codes_by_gamma, truth_cache) & _event_mask(
        fs, event.right, codes_by_gamma, truth_cache
    )


def build_lp_for_ordering(f: Formula, fs: FunctionSpace) -> RationalLinearProgram:
    """One mass variable per function tuple; normalization plus the
    formula's constraints with terms summed over their satisfying tuples."""
    value_index = {v: i for i, v in enumerate(fs.domain.values)}
    gammas = {}
    for constraint in f.constraints:
        for _, term in constraint.lhs:
            for intervention in _leaf_interventions(term.event):
                key = intervention.assignments
                if key not in gammas:
                    gammas[key] = {
                        var: value_index[val] for var, val in intervention.assignments
                    }
    codes_by_gamma = {
        key: _assignment_codes(fs, forced) for key, forced in gammas.items()
    }
    truth_cache: dict = {}

    variables = list(range(fs.total))
    lower_bounds = {j: ZERO for j in variables}
    rows = [LinRow({j: ONE for j in variables}, "=", ONE)]
    for constraint in f.constraints:
        coeffs: dict[int, Fraction] = {}
        for coef, term in constraint.lhs:
            mask = _event_mask(fs, term.event, codes_by_gamma, truth_cache)
            for j in np.flatnonzero(mask).tolist():
                acc = coeffs.get(j, ZERO) + coef
                if acc:
                    coeffs[j] = acc
                else:
                    coeffs.pop(j, None)
        rows.append(LinRow(coeffs, constraint.relation, constraint.rhs))
    return RationalLinearProgram(variables, rows, lower_bounds)


# ---------------------------------------------------------------------------
# Canonical model shape


@dataclass
class CanonicalModel:
    space: FunctionSpace
    dist: dict[int, Fraction]

    def to_scm(self) -> scm_mod.Scm:
        hidden = scm_mod.HiddenVariable("U", range(self.space.total))
        functions = {
            var: scm_mod.ComponentFunction(
                var,
                "U",
                self.space.ordering[:j],
                self.space.domain.values,
                self.space.strides[j],
                self.space.sizes[j],
            )
            for j, var in enumerate(self.space.ordering)
        }
        dist = {(q,): p for q, p in self.dist.items()}
        return scm_mod.Scm(
            self.space.domain, self.space.ordering, (hidden,), functions, dist
        )


@dataclass
class CfVerdict:
    sat: bool
    model: CanonicalModel | None
    orderings_tried: int
    lp_variables: int
    lp_rows: int


def solve(
    f: Formula,
    function_space_cap: int = DEFAULT_FUNCTION_SPACE_CAP,
    var_cap: int = DEFAULT_VAR_CAP,
) -> CfVerdict:
    """Try every variable order; accept on the first feasible one."""
    validate_and_classify(f)
    # the tuple count is order-independent, so the cap triggers up front
    make_function_space(f.domain, f.variables, function_space_cap)
    tried = 0
    lp_vars = 0
    lp_rows = 0
    for ordering in itertools.permutations(f.variables):
        fs = make_function_space(f.domain, ordering, function_space_cap)
        lp = build_lp_for_ordering(f, fs)
        lp_vars, lp_rows = len(lp.variables), len(lp.constraints)
        outcome = solve_feasibility(lp, var_cap)
        tried += 1
        if outcome.status == "feasible":
            dist = {j: p for j, p in outcome.point.items() if p != 0}
            return CfVerdict(True, CanonicalModel(fs, dist), tried, lp_vars, lp_rows)
    return CfVerdict(False, None, tried, lp_vars, lp_rows)


def verify_certificate(f: Formula, m: CanonicalModel) -> bool:
    """Shape check against the packed-function-tuple form, then exact
    re-evaluation of the formula on the model."""
    fs = m.space
    if sorted(fs.ordering) != sorted(f.variables):
        return False
    if fs.domain.values != f.domain.values:
        return False
    d = f.domain.size
    n = len(fs.ordering)
    if fs.sizes != tuple(d ** (d ** i) for i in range(n)):
        return False
    expected_strides = []
    acc = 1
    for s in fs.sizes:
        expected_strides.append(acc)
        acc *= s
    if fs.strides != tuple(expected_strides) or fs.total != acc:
        return False
    if not m.dist:
        return False
    if any(not isinstance(q, int) or not 0 <= q < fs.total for q in m.dist):
        return False
    if any(p < 0 for p in m.dist.values()):
        return False
    if sum(m.dist.values(), ZERO) != 1:
        return False
    if len(m.dist) > len(f.constraints) + 2:
        return False
    return scm_mod.satisfies(m.to_scm(), f)


# ---------------------------------------------------------------------------
# Serialization: support atoms spelled out as truth tables


def _component_tables(fs: FunctionSpace, q: int) -> list[list[str]]:
    d = fs.domain.size
    tables = []
    for j in range(len(fs.ordering)):
        code = (q // fs.strides[j]) % fs.sizes[j]
        tables.append(
            [fs.domain.values[(code // d ** r) % d] for r in range(d ** j)]
        )
    return tables


def _q_from_tables(fs: FunctionSpace, tables) -> int:
    d = fs.domain.size
    value_index = {v: i for i, v in enumerate(fs.domain.values)}
    if len(tables) != len(fs.ordering):
        raise CertificateFormatError("expected one function per variable")
    q = 0
    for j, table in enumerate(tables):
        if len(table) != d ** j:
            raise CertificateFormatError(
                "function %d must tabulate %d predecessor tuples" % (j, d ** j)
            )
        code = 0
        for r, val in enumerate(table):
            if val not in value_index:
                raise CertificateFormatError("unknown domain value %r" % (val,))
            code += value_index[val] * d ** r
        q += code * fs.strides[j]
    return q


def model_to_json(m: CanonicalModel) -> dict:
    return {
        "kind": "canonical-scm",
        "domain": list(m.space.domain.values),
        "ordering": list(m.space.ordering),
        "support": [
            {"functions": _component_tables(m.space, q), "p": str(p)}
            for q, p in m.dist.items()
        ],
    }


def model_from_json(obj: dict) -> CanonicalModel:
    if obj.get("kind") != "canonical-scm":
        raise CertificateFormatError("expected a canonical-scm certificate")
    try:
        domain = DomainSpec(tuple(obj["domain"]))
        ordering = tuple(obj["ordering"])
        fs = make_function_space(domain, ordering, cap=int(1e30))
        dist: dict[int, Fraction] = {}
        for entry in obj["support"]:
            q = _q_from_tables(fs, entry["functions"])
            dist[q] = dist.get(q, ZERO) + Fraction(entry["p"])
        return CanonicalModel(fs, dist)
    except CertificateFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateFormatError("malformed canonical-scm certificate: %s" % exc)


def model_dumps(m: CanonicalModel) -> str:
    return json.dumps(model_to_json(m), indent=2)


def model_loads(text: str) -> CanonicalModel:
    return model_from_json(json.loads(text))
