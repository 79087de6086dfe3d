"""Exact rational linear feasibility solving with certificates.

No objective is supported: a program is a conjunction of linear rows over
named variables, optionally with per-variable lower bounds (variables
without a bound are free).  Solving runs a phase-1 simplex on arbitrary
precision rationals with Bland's pivot rule, so every call terminates and
no floating point ever touches the decision path.

A feasible outcome carries a point that satisfies every row and bound
exactly.  An infeasible outcome carries Farkas multipliers: one rational
per row such that combining the rows (each ``<=`` row negated into ``>=``
form, multipliers nonnegative on inequality rows) yields a left-hand side
that is maximized at the lower bounds yet still falls short of the combined
right-hand side — an exact contradiction.

Wide programs with many interchangeable columns (the ordering-enumeration
solver produces these) are shrunk by merging columns with identical
coefficient vectors before pivoting; the merge is exact and the returned
point is re-expanded, with each group's mass placed on its first member.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import LpTooLarge

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_VAR_CAP = 10 ** 6
_MERGE_THRESHOLD = 512


@dataclass
class LinRow:
    coeffs: dict
    rel: str  # '<=', '>=', '='
    rhs: Fraction


@dataclass
class RationalLinearProgram:
    variables: list
    constraints: list[LinRow]
    lower_bounds: dict

    def var_count(self) -> int:
        return len(self.variables)


@dataclass
class LpOutcome:
    status: str  # 'feasible' | 'infeasible'
    point: dict | None = None
    farkas: dict | None = None


def check_point(lp: RationalLinearProgram, point: dict) -> bool:
    """Exact check of every row and lower bound at the given point."""
    for v in lp.variables:
        if v not in point:
            raise ValueError("point does not assign variable %r" % (v,))
    for v, lb in lp.lower_bounds.items():
        if point[v] < lb:
            return False
    for row in lp.constraints:
        lhs = sum((c * point[v] for v, c in row.coeffs.items()), ZERO)
        if row.rel == "<=" and not lhs <= row.rhs:
            return False
        if row.rel == ">=" and not lhs >= row.rhs:
            return False
        if row.rel == "=" and lhs != row.rhs:
            return False
    return True


def farkas_is_valid(lp: RationalLinearProgram, multipliers: dict) -> bool:
    """Exact validity check of an infeasibility certificate.

    With dir = +1 for '>='/'=' rows and -1 for '<=' rows, the certificate
    must satisfy: multipliers nonnegative on inequality rows, the combined
    coefficient s_j = sum_i mu_i * dir_i * a_ij nonpositive for every
    bounded variable and zero for every free variable, and the combined
    right-hand side strictly exceeding the combination's maximum
    sum_j s_j * lb_j.
    """
    s: dict = {}
    t = ZERO
    for i, mu in multipliers.items():
        row = lp.constraints[i]
        direction = -1 if row.rel == "<=" else 1
        if row.rel != "=" and mu < 0:
            return False
        for v, c in row.coeffs.items():
            s[v] = s.get(v, ZERO) + mu * direction * c
        t += mu * direction * row.rhs
    best = ZERO
    for v, coef in s.items():
        if v in lp.lower_bounds:
            if coef > 0:
                return False
            best += coef * lp.lower_bounds[v]
        elif coef != 0:
            return False
    return t > best


def solve_feasibility(
    lp: RationalLinearProgram,
    var_cap: int = DEFAULT_VAR_CAP,
    merge_columns: bool | None = None,
) -> LpOutcome:
    """Phase-1 simplex feasibility with exact certificates."""
    if lp.var_count() > var_cap:
        raise LpTooLarge(
            "linear program has %d variables, cap is %d" % (lp.var_count(), var_cap)
        )
    if merge_columns is None:
        merge_columns = lp.var_count() >= _MERGE_THRESHOLD

    # column layout: one column per bounded variable (shifted by its lower
    # bound), two per free variable (positive and negative parts)
    groups = _merge_groups(lp) if merge_columns else {}
    skip = set()
    for rep, members in groups.items():
        skip.update(members)

    col_of: dict = {}
    free_cols: dict = {}
    ncols = 0
    for v in lp.variables:
        if v in skip:
            continue
        if v in lp.lower_bounds:
            col_of[v] = ncols
            ncols += 1
        else:
            free_cols[v] = (ncols, ncols + 1)
            ncols += 2

    rows = []  # (coeffs dict over columns, rhs, flip, rel)
    for row in lp.constraints:
        coeffs: dict[int, Fraction] = {}
        rhs = row.rhs
        for v, c in row.coeffs.items():
            if c == 0 or v in skip:
                continue
            if v in col_of:
                j = col_of[v]
                coeffs[j] = coeffs.get(j, ZERO) + c
                rhs -= c * lp.lower_bounds[v]
            else:
                jp, jn = free_cols[v]
                coeffs[jp] = coeffs.get(jp, ZERO) + c
                coeffs[jn] = coeffs.get(jn, ZERO) - c
        coeffs = {j: c for j, c in coeffs.items() if c != 0}
        flip = rhs < 0
        rel = row.rel
        if flip:
            coeffs = {j: -c for j, c in coeffs.items()}
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append((coeffs, rhs, flip, rel))

    # slack columns for inequalities, one artificial column per row
    nslack = ncols
    for coeffs, _, _, rel in rows:
        if rel == "<=":
            coeffs[nslack] = ONE
            nslack += 1
        elif rel == ">=":
            coeffs[nslack] = -ONE
            nslack += 1
    art0 = nslack
    tab: list[dict[int, Fraction]] = []
    rhs_col: list[Fraction] = []
    basis: list[int] = []
    for i, (coeffs, rhs, _, _) in enumerate(rows):
        coeffs[art0 + i] = ONE
        tab.append(coeffs)
        rhs_col.append(rhs)
        basis.append(art0 + i)

    # objective: minimize the artificial total  w = W - sum obj[j] * z_j
    obj: dict[int, Fraction] = {}
    w = ZERO
    for i, coeffs in enumerate(tab):
        w += rhs_col[i]
        for j, c in coeffs.items():
            if j < art0:
                acc = obj.get(j, ZERO) + c
                if acc:
                    obj[j] = acc
                else:
                    obj.pop(j, None)

    while True:
        entering = None
        for j, c in obj.items():
            if c > 0 and (entering is None or j < entering):
                entering = j
        if entering is None:
            break
        leaving = None
        for i, coeffs in enumerate(tab):
            a = coeffs.get(entering)
            if a is not None and a > 0:
                ratio = rhs_col[i] / a
                if (
                    leaving is None
                    or ratio < leaving[0]
                    or (ratio == leaving[0] and basis[i] < basis[leaving[1]])
                ):
                    leaving = (ratio, i)
        if leaving is None:  # pragma: no cover - phase-1 objective is bounded
            raise AssertionError("phase-1 simplex reported unbounded objective")
        r = leaving[1]
        pivot_row = tab[r]
        factor = pivot_row[entering]
        if factor != 1:
            tab[r] = pivot_row = {j: c / factor for j, c in pivot_row.items()}
            rhs_col[r] /= factor
        for i, coeffs in enumerate(tab):
            if i == r:
                continue
            a = coeffs.get(entering)
            if a is None or a == 0:
                continue
            for j, c in pivot_row.items():
                acc = coeffs.get(j, ZERO) - a * c
                if acc:
                    coeffs[j] = acc
                else:
                    coeffs.pop(j, None)
            rhs_col[i] -= a * rhs_col[r]
        oa = obj.get(entering)
        if oa:
            for j, c in pivot_row.items():
                acc = obj.get(j, ZERO) - oa * c
                if acc:
                    obj[j] = acc
                else:
                    obj.pop(j, None)
            w -= oa * rhs_col[r]
        basis[r] = entering

    if w != 0:
        multipliers: dict = {}
        for i, (_, _, flip, _) in enumerate(rows):
            y = ONE + obj.get(art0 + i, ZERO)
            rel = lp.constraints[i].rel
            direction = -1 if rel == "<=" else 1
            mu = direction * (-y if flip else y)
            if mu != 0:
                multipliers[i] = mu
        return LpOutcome(status="infeasible", farkas=multipliers)

    col_value = {basis[i]: rhs_col[i] for i in range(len(tab))}
    point: dict = {}
    for v in lp.variables:
        if v in skip:
            point[v] = ZERO
            continue
        if v in col_of:
            point[v] = lp.lower_bounds[v] + col_value.get(col_of[v], ZERO)
        else:
            jp, jn = free_cols[v]
            point[v] = col_value.get(jp, ZERO) - col_value.get(jn, ZERO)
    return LpOutcome(status="feasible", point=point)


def _merge_groups(lp: RationalLinearProgram) -> dict:
    """Group variables with lower bound 0 and identical coefficient columns.

    Returns {representative: [other members]}; interchangeable columns can
    carry their combined mass on the representative alone.
    """
    zero_lb = {v for v, lb in lp.lower_bounds.items() if lb == 0}
    sig: dict = {v: [] for v in zero_lb}
    for i, row in enumerate(lp.constraints):
        for v, c in row.coeffs.items():
            if v in sig and c != 0:
                sig[v].append((i, c))
    groups: dict = {}
    first: dict = {}
    for v in lp.variables:
        if v not in sig:
            continue
        key = tuple(sig[v])
        if key in first:
            groups.setdefault(first[key], []).append(v)
        else:
            first[key] = v
    return groups


# ---------------------------------------------------------------------------
# Diagnostic export


def to_cplex_lp(lp: RationalLinearProgram, name_of=str) -> str:
    """CPLEX LP text with decimal coefficients.  Diagnostic output only;
    decisions always run on the exact rational representation."""
    lines = ["Minimize", " obj: 0", "Subject To"]
    for i, row in enumerate(lp.constraints):
        parts = []
        for v, c in row.coeffs.items():
            val = float(c)
            parts.append("%+.17g %s" % (val, name_of(v)))
        rel = {"<=": "<=", ">=": ">=", "=": "="}[row.rel]
        lines.append(" c%d: %s %s %.17g" % (i, " ".join(parts), rel, float(row.rhs)))
    lines.append("Bounds")
    for v in lp.variables:
        if v in lp.lower_bounds:
            lines.append(" %s >= %.17g" % (name_of(v), float(lp.lower_bounds[v])))
        else:
            lines.append(" %s free" % name_of(v))
    lines.append("End")
    return "\n".join(lines) + "\n"
