"""Linear predicates over schema variables.

Textual grammar: ``<lincomb> <rel> <const>`` where ``<lincomb>`` is
``[coef*]var (('+'|'-') [coef*]var)*`` and ``<rel>`` is one of
``< <= > >= ==``.  Examples: ``observe0 > 1``, ``new - runCount < 0``,
``2*x + 3.5*y <= 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import PredicateError
from .traces import VariableSchema

RELATIONS = ("<", "<=", ">", ">=", "==")

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "=="}


def _round_sig(x: float, digits: int) -> float:
    if x == 0:
        return 0.0
    return float(f"{x:.{digits}g}")


@dataclass(frozen=True)
class Predicate:
    """A comparison ``sum_i coef_i * var_i  <rel>  constant``."""

    terms: tuple[tuple[float, str], ...]
    relation: str
    constant: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise PredicateError(f"unknown relation {self.relation!r}")
        merged: dict[str, float] = {}
        order: list[str] = []
        for coef, var in self.terms:
            coef = float(coef)
            if not np.isfinite(coef):
                raise PredicateError(f"non-finite coefficient for {var!r}")
            if var not in merged:
                merged[var] = 0.0
                order.append(var)
            merged[var] += coef
        kept = tuple((merged[v], v) for v in order if merged[v] != 0.0)
        if not kept:
            raise PredicateError("predicate has no variable with a nonzero coefficient")
        if not np.isfinite(self.constant):
            raise PredicateError("non-finite constant")
        object.__setattr__(self, "terms", kept)
        object.__setattr__(self, "constant", float(self.constant))

    def variables(self) -> tuple[str, ...]:
        return tuple(var for _, var in self.terms)

    def check_schema(self, schema: VariableSchema) -> None:
        for _, var in self.terms:
            schema.index(var)  # raises KeyError on unknown variables

    def _lhs(self, values: np.ndarray, schema: VariableSchema):
        total = 0.0
        for coef, var in self.terms:
            total = total + coef * values[..., schema.index(var)]
        return total

    def evaluate(self, values: np.ndarray, schema: VariableSchema) -> int:
        """Truth value (0/1) on one concrete state, by exact comparison."""
        return int(self._compare(self._lhs(np.asarray(values), schema)))

    def evaluate_rows(self, rows: np.ndarray, schema: VariableSchema) -> np.ndarray:
        """Vectorized truth values over a (steps x variables) array."""
        return self._compare(self._lhs(rows, schema)).astype(np.uint8)

    def _compare(self, lhs):
        if self.relation == "<":
            return lhs < self.constant
        if self.relation == "<=":
            return lhs <= self.constant
        if self.relation == ">":
            return lhs > self.constant
        if self.relation == ">=":
            return lhs >= self.constant
        return lhs == self.constant

    def display(self) -> str:
        parts = []
        for i, (coef, var) in enumerate(self.terms):
            mag = abs(coef)
            body = var if mag == 1.0 else f"{_format_coef(mag)}*{var}"
            if i == 0:
                parts.append(body if coef > 0 else f"-{body}")
            else:
                parts.append(("+ " if coef > 0 else "- ") + body)
        return f"{' '.join(parts)} {self.relation} {_format_coef(self.constant)}"

    def normalized(self, digits: int = 9) -> "Predicate":
        """Canonical form: variables sorted, scaled so max |coef| is 1, and the
        relation flipped so the first coefficient is positive.

        Classifiers can emit scalar multiples of an existing predicate; the
        canonical form makes those collide.
        """
        terms = sorted(self.terms, key=lambda t: t[1])
        scale = max(abs(c) for c, _ in terms)
        coefs = [c / scale for c, _ in terms]
        const = self.constant / scale
        rel = self.relation
        if coefs[0] < 0:
            coefs = [-c for c in coefs]
            const = -const
            rel = _FLIP[rel]
        rounded = tuple((_round_sig(c, digits), v) for c, (_, v) in zip(coefs, terms))
        return Predicate(rounded, rel, _round_sig(const, digits))

    def normalized_key(self, digits: int = 9) -> tuple:
        norm = self.normalized(digits)
        return (norm.terms, norm.relation, norm.constant)


def _format_coef(x: float) -> str:
    return str(int(x)) if x == int(x) and abs(x) < 1e15 else repr(float(x))


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|==|<|>|\*|\+|-))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            col = len(text) - len(rest) + 1
            raise PredicateError(f"unexpected character {rest[0]!r} at column {col}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return tokens


def parse_predicate(text: str, schema: VariableSchema | None = None) -> Predicate:
    """Parse the predicate grammar; errors carry 1-based column positions."""
    tokens = _tokenize(text)
    if not tokens:
        raise PredicateError("empty predicate")
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else ("end", "", len(text) + 1)

    terms: list[tuple[float, str]] = []
    sign = 1.0
    if peek()[0] == "op" and peek()[1] in ("+", "-"):
        sign = -1.0 if peek()[1] == "-" else 1.0
        i += 1
    while True:
        kind, value, col = peek()
        coef = sign
        if kind == "number":
            coef = sign * float(value)
            i += 1
            kind, value, col = peek()
            if kind == "op" and value == "*":
                i += 1
                kind, value, col = peek()
            if kind != "ident":
                raise PredicateError(f"expected variable at column {col}")
        if kind != "ident":
            raise PredicateError(f"expected variable at column {col}")
        terms.append((coef, value))
        i += 1
        kind, value, col = peek()
        if kind == "op" and value in ("+", "-"):
            sign = 1.0 if value == "+" else -1.0
            i += 1
            continue
        break

    kind, value, col = peek()
    if kind != "op" or value not in RELATIONS:
        raise PredicateError(f"expected relation at column {col}")
    relation = value
    i += 1

    kind, value, col = peek()
    csign = 1.0
    if kind == "op" and value in ("+", "-"):
        csign = -1.0 if value == "-" else 1.0
        i += 1
        kind, value, col = peek()
    if kind != "number":
        raise PredicateError(f"expected numeric constant at column {col}")
    constant = csign * float(value)
    i += 1
    kind, value, col = peek()
    if kind != "end":
        raise PredicateError(f"trailing input at column {col}")

    pred = Predicate(tuple(terms), relation, constant)
    if schema is not None:
        try:
            pred.check_schema(schema)
        except KeyError as exc:
            raise PredicateError(str(exc.args[0])) from None
    return pred
