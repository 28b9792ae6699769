"""Concrete system traces: schema, containers, the on-disk format, and summary stats.

Trace file format: a header line of comma-separated variable names (a name may
carry the suffix ``:bool``), then one state per line as comma-separated numeric
values; a blank line separates traces.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import TraceFormatError

VARIABLE_KINDS = ("bool", "int", "real")


@dataclass(frozen=True)
class VariableSchema:
    """Ordered variable names with per-variable kinds."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise TraceFormatError("schema must declare at least one variable")
        if len(self.names) != len(self.kinds):
            raise TraceFormatError("schema names and kinds differ in length")
        if len(set(self.names)) != len(self.names):
            raise TraceFormatError("schema variable names must be unique")
        for name in self.names:
            if not name:
                raise TraceFormatError("schema variable names must be non-empty")
        for kind in self.kinds:
            if kind not in VARIABLE_KINDS:
                raise TraceFormatError(f"unknown variable kind {kind!r}")

    @property
    def arity(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def header(self) -> str:
        parts = []
        for name, kind in zip(self.names, self.kinds):
            parts.append(f"{name}:bool" if kind == "bool" else name)
        return ",".join(parts)


@dataclass(frozen=True, eq=False)
class ConcreteTrace:
    """A non-empty sequence of concrete states, one row per step."""

    states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=np.float64)
        if arr.ndim != 2:
            raise TraceFormatError("a trace must be a 2-D array (steps x variables)")
        if arr.shape[0] == 0:
            raise TraceFormatError("a trace must contain at least one state")
        arr.flags.writeable = False
        object.__setattr__(self, "states", arr)

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, i: int) -> np.ndarray:
        return self.states[i]

    def __iter__(self):
        return iter(self.states)


@dataclass(frozen=True, eq=False)
class TraceSet:
    """An immutable batch of traces conforming to one schema."""

    schema: VariableSchema
    traces: tuple[ConcreteTrace, ...]

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        if not self.traces:
            raise TraceFormatError("a trace set must contain at least one trace")
        arity = self.schema.arity
        bool_cols = [i for i, kind in enumerate(self.schema.kinds) if kind == "bool"]
        for t, trace in enumerate(self.traces):
            if trace.states.shape[1] != arity:
                raise TraceFormatError(
                    f"trace {t} has {trace.states.shape[1]} variables, schema has {arity}"
                )
            for col in bool_cols:
                values = trace.states[:, col]
                if not np.all((values == 0.0) | (values == 1.0)):
                    raise TraceFormatError(
                        f"trace {t}: boolean variable {self.schema.names[col]!r} "
                        "has a value other than 0/1"
                    )

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def lengths(self) -> list[int]:
        return [len(t) for t in self.traces]

    def extend(self, more: "TraceSet") -> "TraceSet":
        """Concatenate two trace sets over the same variables.

        Kinds are unified pairwise (int widens to real); declared booleans
        must agree on both sides.
        """
        if more.schema.names != self.schema.names:
            raise TraceFormatError("cannot extend with traces of a different schema")
        kinds = []
        for a, b in zip(self.schema.kinds, more.schema.kinds):
            if a == b:
                kinds.append(a)
            elif "bool" in (a, b):
                raise TraceFormatError("cannot extend: boolean declarations differ")
            else:
                kinds.append("real")
        schema = VariableSchema(self.schema.names, tuple(kinds))
        return TraceSet(schema, self.traces + more.traces)


@dataclass(frozen=True)
class TraceStatistics:
    """Coverage and length summary used to judge log adequacy by eye."""

    num_traces: int
    total_states: int
    distinct_states: int
    min_length: int
    max_length: int
    mean_length: float
    length_histogram: dict[int, int]


def trace_statistics(traceset: TraceSet) -> TraceStatistics:
    lengths = traceset.lengths()
    seen: set[tuple[float, ...]] = set()
    for trace in traceset:
        for row in trace.states:
            seen.add(tuple(row))
    hist = dict(sorted(Counter(lengths).items()))
    return TraceStatistics(
        num_traces=len(traceset),
        total_states=sum(lengths),
        distinct_states=len(seen),
        min_length=min(lengths),
        max_length=max(lengths),
        mean_length=sum(lengths) / len(lengths),
        length_histogram=hist,
    )


def _parse_header(line: str, lineno: int) -> tuple[tuple[str, ...], tuple[bool, ...]]:
    names, declared_bool = [], []
    for piece in line.split(","):
        piece = piece.strip()
        if piece.endswith(":bool"):
            name = piece[: -len(":bool")].strip()
            declared_bool.append(True)
        else:
            name = piece
            declared_bool.append(False)
        if not name or any(ch in name for ch in " \t"):
            raise TraceFormatError(f"malformed header at line {lineno}: bad name {piece!r}")
        names.append(name)
    if len(set(names)) != len(names):
        raise TraceFormatError(f"malformed header at line {lineno}: duplicate variable name")
    return tuple(names), tuple(declared_bool)


def parse_traces(text: str, source: str = "<string>") -> TraceSet:
    """Parse the trace file format; errors carry 1-based line numbers."""
    lines = text.splitlines()
    header_idx = None
    for i, line in enumerate(lines):
        if line.strip():
            header_idx = i
            break
    if header_idx is None:
        raise TraceFormatError(f"{source}: empty file")
    names, declared_bool = _parse_header(lines[header_idx], header_idx + 1)
    arity = len(names)

    rows_per_trace: list[list[list[float]]] = []
    current: list[list[float]] = []
    for i in range(header_idx + 1, len(lines)):
        line = lines[i].strip()
        lineno = i + 1
        if not line:
            if current:
                rows_per_trace.append(current)
                current = []
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != arity:
            raise TraceFormatError(f"ragged row at line {lineno}")
        row = []
        for cell in cells:
            try:
                row.append(float(cell))
            except ValueError:
                raise TraceFormatError(
                    f"non-numeric cell at line {lineno}: {cell!r}"
                ) from None
        current.append(row)
    if current:
        rows_per_trace.append(current)
    if not rows_per_trace:
        raise TraceFormatError(f"{source}: no traces in file")

    columns = [np.concatenate([np.array([r[c] for r in rows]) for rows in rows_per_trace])
               for c in range(arity)]
    kinds = []
    for c in range(arity):
        values = columns[c]
        if declared_bool[c]:
            if not np.all((values == 0.0) | (values == 1.0)):
                bad = int(np.argmax(~((values == 0.0) | (values == 1.0))))
                raise TraceFormatError(
                    f"boolean column {names[c]!r} has non-0/1 value (occurrence {bad + 1})"
                )
            kinds.append("bool")
        elif np.all(values == np.floor(values)):
            kinds.append("int")
        else:
            kinds.append("real")
    final_schema = VariableSchema(names, tuple(kinds))
    traces = tuple(ConcreteTrace(np.array(rows, dtype=np.float64)) for rows in rows_per_trace)
    return TraceSet(final_schema, traces)


def load_traces(path) -> TraceSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_traces(fh.read(), source=str(path))


def _format_value(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def dump_traces(traceset: TraceSet) -> str:
    out = [traceset.schema.header()]
    for k, trace in enumerate(traceset):
        for row in trace.states:
            out.append(",".join(_format_value(v) for v in row))
        if k != len(traceset) - 1:
            out.append("")
    return "\n".join(out) + "\n"


def save_traces(traceset: TraceSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_traces(traceset))
