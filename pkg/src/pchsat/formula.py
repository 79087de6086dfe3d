"""Data model, parser and pretty-printer for linear probability constraints.

A formula is a finite domain, an ordered list of observed variables, and a
set of linear constraints over probability terms.  Each term wraps an event:
either a plain propositional event, or a Boolean combination of
post-interventional events ``[X=1 & ...] body``.

Events parsed from text are kept in a normal form: any subtree that contains
no intervention is collapsed into a single propositional leaf.  Structural
round-tripping (``parse(print(f)) == f``) is guaranteed for formulas in that
normal form, which includes everything this parser produces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import (
    ConflictingIntervention,
    FormulaSyntaxError,
    UndeclaredValue,
    UndeclaredVariable,
)

# ---------------------------------------------------------------------------
# Event trees


@dataclass(frozen=True)
class Atom:
    variable: str
    value: str


@dataclass(frozen=True)
class PropNot:
    child: "PropEvent"


@dataclass(frozen=True)
class PropAnd:
    left: "PropEvent"
    right: "PropEvent"


PropEvent = Union[Atom, PropNot, PropAnd]


def prop_or(left: PropEvent, right: PropEvent) -> PropEvent:
    """Disjunction sugar: a | b desugars to !(!a & !b)."""
    return PropNot(PropAnd(PropNot(left), PropNot(right)))


@dataclass(frozen=True)
class Intervention:
    """A (possibly empty) conjunction of forced assignments."""

    assignments: tuple[tuple[str, str], ...] = ()

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignments)

    @property
    def empty(self) -> bool:
        return not self.assignments


@dataclass(frozen=True)
class PostIntEvent:
    intervention: Intervention
    body: PropEvent


@dataclass(frozen=True)
class CfNot:
    child: "CfEvent"


@dataclass(frozen=True)
class CfAnd:
    left: "CfEvent"
    right: "CfEvent"


CfEvent = Union[PostIntEvent, CfNot, CfAnd]


def _prop_atoms(e: PropEvent) -> list[Atom]:
    if isinstance(e, Atom):
        return [e]
    if isinstance(e, PropNot):
        return _prop_atoms(e.child)
    return _prop_atoms(e.left) + _prop_atoms(e.right)


def event_leaves(e: CfEvent) -> list[PostIntEvent]:
    if isinstance(e, PostIntEvent):
        return [e]
    if isinstance(e, CfNot):
        return event_leaves(e.child)
    return event_leaves(e.left) + event_leaves(e.right)


def event_atoms(e: CfEvent) -> list[Atom]:
    """All atoms of an event, including those inside interventions."""
    out: list[Atom] = []
    for leaf in event_leaves(e):
        out.extend(Atom(v, x) for v, x in leaf.intervention.assignments)
        out.extend(_prop_atoms(leaf.body))
    return out


def event_variables(e: CfEvent) -> tuple[str, ...]:
    """Variables mentioned by an event, in first-occurrence order."""
    seen: dict[str, None] = {}
    for atom in event_atoms(e):
        seen.setdefault(atom.variable)
    return tuple(seen)


@dataclass(frozen=True)
class Term:
    event: CfEvent

    @property
    def size(self) -> int:
        return len(event_atoms(self.event))


# ---------------------------------------------------------------------------
# Formula-level types


@dataclass(frozen=True)
class DomainSpec:
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("domain must contain at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValueError("domain values must be pairwise distinct")

    @property
    def size(self) -> int:
        return len(self.values)


RELATIONS = ("<=", ">=", "=")


@dataclass(frozen=True)
class LinearConstraint:
    lhs: tuple[tuple[Fraction, Term], ...]
    relation: str
    rhs: Fraction

    def __post_init__(self) -> None:
        if not self.lhs:
            raise ValueError("constraint left-hand side must be nonempty")
        if self.relation not in RELATIONS:
            raise ValueError("relation must be one of %s" % (RELATIONS,))


@dataclass(frozen=True)
class Formula:
    domain: DomainSpec
    variables: tuple[str, ...]
    constraints: tuple[LinearConstraint, ...]

    def var_index(self, name: str) -> int:
        return self.variables.index(name)


@dataclass(frozen=True)
class FragmentClass:
    depth: str    # prob | causal | counterfact
    breadth: str  # base | lin


@dataclass(frozen=True)
class PrimalGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def neighbors(self, v: str) -> tuple[str, ...]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return tuple(out)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|[{}\[\](),;=+\-*/!&|<>])
    """,
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "Token(%r, %r, %d:%d)" % (self.kind, self.text, self.line, self.col)


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(lexeme)
        else:
            tokens.append(_Token("num" if kind == "number" else kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser

# Raw event nodes produced by the grammar before separating the
# propositional level from the interventional level.
_ATOM, _NOT, _AND, _OR, _DO = "atom", "not", "and", "or", "do"


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.domain: DomainSpec | None = None
        self.variables: tuple[str, ...] | None = None
        self.constraints: list[LinearConstraint] = []

    # -- token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.accept(kind, text)
        if tok is None:
            got = self.peek()
            want = text if text is not None else kind
            raise FormulaSyntaxError(
                "expected %r, found %r" % (want, got.text or got.kind), got.line, got.col
            )
        return tok

    def error(self, message: str, tok: _Token | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(message, tok.line, tok.col)

    # -- statements

    def parse_formula(self) -> Formula:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "id" and tok.text == "domain":
                self.parse_domain()
            elif tok.kind == "id" and tok.text == "vars":
                self.parse_vars()
            else:
                self.constraints.append(self.parse_constraint())
        domain = self.domain if self.domain is not None else DomainSpec(("0", "1"))
        variables = self.variables if self.variables is not None else ()
        return Formula(domain, variables, tuple(self.constraints))

    def parse_domain(self) -> None:
        tok = self.expect("id", "domain")
        if self.domain is not None:
            raise self.error("duplicate domain declaration", tok)
        if self.constraints:
            raise self.error("domain must be declared before constraints", tok)
        self.expect("op", "{")
        values = [self.parse_value()]
        while self.accept("op", ","):
            values.append(self.parse_value())
        self.expect("op", "}")
        self.expect("op", ";")
        if len(set(values)) != len(values):
            raise self.error("duplicate domain value", tok)
        self.domain = DomainSpec(tuple(values))

    def parse_vars(self) -> None:
        tok = self.expect("id", "vars")
        if self.variables is not None:
            raise self.error("duplicate vars declaration", tok)
        if self.constraints:
            raise self.error("vars must be declared before constraints", tok)
        names = [self.expect("id").text]
        while self.accept("op", ","):
            names.append(self.expect("id").text)
        self.expect("op", ";")
        if len(set(names)) != len(names):
            raise self.error("duplicate variable name", tok)
        self.variables = tuple(names)

    def parse_value(self) -> str:
        tok = self.peek()
        if tok.kind == "id":
            return self.next().text
        if tok.kind == "num":
            if "." in tok.text or "e" in tok.text or "E" in tok.text:
                raise self.error("domain values must be identifiers or integers", tok)
            return str(int(self.next().text))
        raise self.error("expected a domain value", tok)

    # -- constraints

    def parse_constraint(self) -> LinearConstraint:
        lhs = [self.parse_signed_term(first=True)]
        while True:
            if self.accept("op", "+"):
                coef, term = self.parse_term()
                lhs.append((coef, term))
            elif self.accept("op", "-"):
                coef, term = self.parse_term()
                lhs.append((-coef, term))
            else:
                break
        relation = self.parse_relation()
        rhs = self.parse_signed_rational()
        self.expect("op", ";")
        return LinearConstraint(tuple(lhs), relation, rhs)

    def parse_signed_term(self, first: bool) -> tuple[Fraction, Term]:
        sign = 1
        if first and self.accept("op", "-"):
            sign = -1
        coef, term = self.parse_term()
        return sign * coef, term

    def parse_term(self) -> tuple[Fraction, Term]:
        coef = Fraction(1)
        if self.peek().kind == "num":
            coef = self.parse_rational()
            self.accept("op", "*")
        self.expect("id", "P")
        self.expect("op", "[")
        raw = self.parse_or()
        self.expect("op", "]")
        return coef, Term(self.to_counterfactual(raw))

    def parse_relation(self) -> str:
        tok = self.peek()
        if tok.kind == "op" and tok.text in RELATIONS:
            return self.next().text
        if tok.kind == "op" and tok.text in ("<", ">"):
            raise self.error("strict inequalities are not supported", tok)
        raise self.error("expected a relation (<=, >= or =)", tok)

    def parse_rational(self) -> Fraction:
        tok = self.expect("num")
        value = Fraction(tok.text)
        if self.accept("op", "/"):
            den = self.expect("num")
            if "." in den.text:
                raise self.error("denominator must be an integer", den)
            value /= Fraction(den.text)
        return value

    def parse_signed_rational(self) -> Fraction:
        if self.accept("op", "-"):
            return -self.parse_rational()
        return self.parse_rational()

    # -- events (raw unified grammar)

    def parse_or(self):
        node = self.parse_and()
        while self.accept("op", "|"):
            node = (_OR, node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_unary()
        while self.accept("op", "&"):
            node = (_AND, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.accept("op", "!"):
            return (_NOT, self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        if self.accept("op", "("):
            node = self.parse_or()
            self.expect("op", ")")
            return node
        if self.peek().kind == "op" and self.peek().text == "[":
            tok = self.next()
            intervention = self.parse_intervention(tok)
            return (_DO, intervention, self.parse_unary())
        return (_ATOM, self.parse_atom())

    def parse_intervention(self, open_tok: _Token) -> Intervention:
        assignments: list[tuple[str, str]] = []
        if not (self.peek().kind == "op" and self.peek().text == "]"):
            assignments.append(self.parse_atom_pair())
            while self.accept("op", "&") or self.accept("op", ","):
                assignments.append(self.parse_atom_pair())
        self.expect("op", "]")
        seen: dict[str, str] = {}
        unique: list[tuple[str, str]] = []
        for var, val in assignments:
            if var in seen:
                if seen[var] != val:
                    raise ConflictingIntervention(
                        "%d:%d: intervention assigns %s to both %s and %s"
                        % (open_tok.line, open_tok.col, var, seen[var], val)
                    )
                continue
            seen[var] = val
            unique.append((var, val))
        return Intervention(tuple(unique))

    def parse_atom(self) -> Atom:
        var, val = self.parse_atom_pair()
        return Atom(var, val)

    def parse_atom_pair(self) -> tuple[str, str]:
        tok = self.expect("id")
        self.expect("op", "=")
        value = self.parse_value()
        if self.variables is not None and tok.text not in self.variables:
            raise UndeclaredVariable(
                "%d:%d: variable %s is not declared" % (tok.line, tok.col, tok.text)
            )
        if self.variables is None:
            raise UndeclaredVariable(
                "%d:%d: constraints appear before a vars declaration" % (tok.line, tok.col)
            )
        domain = self.domain if self.domain is not None else DomainSpec(("0", "1"))
        if value not in domain.values:
            raise UndeclaredValue(
                "%d:%d: value %s is not in the domain" % (tok.line, tok.col, value)
            )
        return tok.text, value

    # -- separating the propositional and interventional levels

    def to_counterfactual(self, raw) -> CfEvent:
        if not _contains_do(raw):
            return PostIntEvent(Intervention(), _to_prop(raw))
        kind = raw[0]
        if kind == _DO:
            _, intervention, child = raw
            if _contains_do(child):
                raise FormulaSyntaxError("nested interventions are not allowed")
            return PostIntEvent(intervention, _to_prop(child))
        if kind == _NOT:
            return CfNot(self.to_counterfactual(raw[1]))
        if kind == _AND:
            return CfAnd(self.to_counterfactual(raw[1]), self.to_counterfactual(raw[2]))
        raise FormulaSyntaxError(
            "disjunction between interventional events is not supported"
        )


def _contains_do(raw) -> bool:
    kind = raw[0]
    if kind == _DO:
        return True
    if kind == _ATOM:
        return False
    if kind == _NOT:
        return _contains_do(raw[1])
    return _contains_do(raw[1]) or _contains_do(raw[2])


def _to_prop(raw) -> PropEvent:
    kind = raw[0]
    if kind == _ATOM:
        return raw[1]
    if kind == _NOT:
        return PropNot(_to_prop(raw[1]))
    if kind == _AND:
        return PropAnd(_to_prop(raw[1]), _to_prop(raw[2]))
    if kind == _OR:
        return prop_or(_to_prop(raw[1]), _to_prop(raw[2]))
    raise FormulaSyntaxError("nested interventions are not allowed")


def parse(text: str) -> Formula:
    """Parse formula source text.  Raises FormulaSyntaxError and friends."""
    return _Parser(text).parse_formula()


# ---------------------------------------------------------------------------
# Pretty-printing


def rational_to_text(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def _prop_to_text(e: PropEvent, level: str = "and") -> str:
    if isinstance(e, Atom):
        return "%s=%s" % (e.variable, e.value)
    if isinstance(e, PropNot):
        return "!" + _prop_to_text(e.child, "unary")
    # PropAnd: left-associative, so only the right child needs parentheses
    text = "%s & %s" % (_prop_to_text(e.left, "and"), _prop_to_text(e.right, "unary"))
    if level == "unary":
        return "(%s)" % text
    return text


def event_to_text(e: CfEvent, level: str = "and") -> str:
    if isinstance(e, PostIntEvent):
        if e.intervention.empty:
            return _prop_to_text(e.body, level)
        prefix = "[%s]" % " & ".join("%s=%s" % a for a in e.intervention.assignments)
        return "%s %s" % (prefix, _prop_to_text(e.body, "unary"))
    if isinstance(e, CfNot):
        return "!" + event_to_text(e.child, "unary")
    text = "%s & %s" % (event_to_text(e.left, "and"), event_to_text(e.right, "unary"))
    if level == "unary":
        return "(%s)" % text
    return text


def constraint_to_text(c: LinearConstraint) -> str:
    parts: list[str] = []
    for i, (coef, term) in enumerate(c.lhs):
        mag = abs(coef)
        body = "P[%s]" % event_to_text(term.event)
        if mag != 1:
            body = "%s %s" % (rational_to_text(mag), body)
        if i == 0:
            parts.append(("-" if coef < 0 else "") + body)
        else:
            parts.append(("- " if coef < 0 else "+ ") + body)
    return "%s %s %s;" % (" ".join(parts), c.relation, rational_to_text(c.rhs))


def formula_to_text(f: Formula) -> str:
    lines = ["domain {%s};" % ", ".join(f.domain.values)]
    if f.variables:
        lines.append("vars %s;" % ", ".join(f.variables))
    lines.extend(constraint_to_text(c) for c in f.constraints)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation and fragment classification


def validate(f: Formula) -> None:
    """Check formula invariants; raises on violation.

    Needed for programmatically built formulas; parsed ones already hold.
    """
    if len(set(f.variables)) != len(f.variables):
        raise UndeclaredVariable("variable names must be pairwise distinct")
    domain = set(f.domain.values)
    for c in f.constraints:
        for _, term in c.lhs:
            for leaf in event_leaves(term.event):
                seen: dict[str, str] = {}
                for var, val in leaf.intervention.assignments:
                    if seen.get(var, val) != val:
                        raise ConflictingIntervention(
                            "intervention assigns %s to both %s and %s"
                            % (var, seen[var], val)
                        )
                    seen[var] = val
            for atom in event_atoms(term.event):
                if atom.variable not in f.variables:
                    raise UndeclaredVariable(
                        "variable %s is not declared" % atom.variable
                    )
                if atom.value not in domain:
                    raise UndeclaredValue(
                        "value %s is not in the domain" % atom.value
                    )


def validate_and_classify(f: Formula) -> FragmentClass:
    """Validate and return the least fragment containing the formula."""
    validate(f)
    depth = "prob"
    for c in f.constraints:
        for _, term in c.lhs:
            leaves = event_leaves(term.event)
            if any(not leaf.intervention.empty for leaf in leaves):
                if isinstance(term.event, PostIntEvent) and depth != "counterfact":
                    depth = "causal"
                else:
                    depth = "counterfact"
    breadth = "base"
    for c in f.constraints:
        coefs = sorted(coef for coef, _ in c.lhs)
        if len(c.lhs) == 1 and coefs == [Fraction(1)]:
            continue
        if len(c.lhs) == 2 and coefs == [Fraction(-1), Fraction(1)] and c.rhs == 0:
            continue
        breadth = "lin"
        break
    return FragmentClass(depth, breadth)


# ---------------------------------------------------------------------------
# Primal graph


def build_primal_graph(f: Formula) -> PrimalGraph:
    """Variables as vertices; an edge whenever two co-occur in one term."""
    index = {v: i for i, v in enumerate(f.variables)}
    edges: set[tuple[str, str]] = set()
    for c in f.constraints:
        for _, term in c.lhs:
            names = sorted(event_variables(term.event), key=index.__getitem__)
            for i in range(len(names)):
                for j in range(i + 1, len(names)):
                    edges.add((names[i], names[j]))
    ordered = sorted(edges, key=lambda e: (index[e[0]], index[e[1]]))
    return PrimalGraph(f.variables, tuple(ordered))


# ---------------------------------------------------------------------------
# Domain reduction


def mentioned_values(f: Formula) -> set[str]:
    out: set[str] = set()
    for c in f.constraints:
        for _, term in c.lhs:
            out.update(a.value for a in event_atoms(term.event))
    return out


def reduce_domain(f: Formula) -> Formula:
    """Shrink the domain to the mentioned values plus one spare value.

    Unmentioned values are interchangeable, so keeping a single
    representative preserves satisfiability.  The representative is the
    first unmentioned value of the original domain, which keeps the reduced
    domain a subset of the original.  When every value is mentioned the
    formula is returned unchanged (dropping to mentioned-only would change
    the verdict, and there is nothing left to contract).
    """
    used = mentioned_values(f)
    spare = next((v for v in f.domain.values if v not in used), None)
    if spare is None:
        return f
    keep = tuple(v for v in f.domain.values if v in used or v == spare)
    if keep == f.domain.values:
        return f
    return Formula(DomainSpec(keep), f.variables, f.constraints)
