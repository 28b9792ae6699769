"""Predicate abstraction: map concrete states and traces to bit-string symbols.

Bit i of an abstract symbol is the truth value of predicate i, so symbols
render as strings like "01".  Abstraction is pure and stateless.
"""

from __future__ import annotations

import numpy as np

from .errors import PredicateError
from .predicates import Predicate
from .traces import ConcreteTrace, TraceSet, VariableSchema


class PredicateSet:
    """An ordered, duplicate-free collection of predicates."""

    def __init__(self, predicates=()):
        self._predicates: list[Predicate] = []
        self._keys: set[tuple] = set()
        for p in predicates:
            self._append(p)

    def _append(self, predicate: Predicate) -> None:
        key = predicate.normalized_key()
        if key in self._keys:
            raise PredicateError(f"duplicate predicate: {predicate.display()}")
        self._predicates.append(predicate)
        self._keys.add(key)

    def contains_equivalent(self, predicate: Predicate) -> bool:
        return predicate.normalized_key() in self._keys

    def extended(self, predicate: Predicate) -> "PredicateSet":
        """A new set with `predicate` appended; the original is unchanged."""
        return PredicateSet(self._predicates + [predicate])

    def __len__(self) -> int:
        return len(self._predicates)

    def __iter__(self):
        return iter(self._predicates)

    def __getitem__(self, i: int) -> Predicate:
        return self._predicates[i]

    def displays(self) -> list[str]:
        return [p.display() for p in self._predicates]


def abstract_state(pset: PredicateSet, values, schema: VariableSchema) -> str:
    """Bit string for one concrete state; empty set yields the empty symbol."""
    return "".join(str(p.evaluate(values, schema)) for p in pset)


def abstract_trace(pset: PredicateSet, trace: ConcreteTrace, schema: VariableSchema) -> tuple[str, ...]:
    rows = trace.states
    if len(pset) == 0:
        return ("",) * len(trace)
    bits = np.stack([p.evaluate_rows(rows, schema) for p in pset], axis=1)
    digits = bits + ord("0")
    return tuple(row.tobytes().decode("ascii") for row in digits.astype(np.uint8))


def abstract_trace_set(pset: PredicateSet, traceset: TraceSet) -> list[tuple[str, ...]]:
    return [abstract_trace(pset, t, traceset.schema) for t in traceset]
