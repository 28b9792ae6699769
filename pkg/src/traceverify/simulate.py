"""Trace samplers.

``HiddenDtmcSimulator`` is a seeded explicit-state Markov chain whose states
carry full variable valuations; it stands in for a live system both as the
ground truth in tests and as the sampling backend for hypothesis testing.
``ExternalCommandSampler`` shells out to a user-supplied generator.

Simulator configuration file: ``vars`` line with the schema header, optional
``length`` policy line, then ``state <id>, v1,...,vn``, ``init <id>, <prob>``
and ``trans <src>, <dst>, <prob>`` lines.  ``#`` starts a comment.
"""

from __future__ import annotations

import shlex
import subprocess
from typing import Protocol

import numpy as np

from .errors import ConfigError, SamplerError, TraceFormatError
from .rng import substream
from .traces import ConcreteTrace, TraceSet, VariableSchema, parse_traces, _format_value

_ROW_TOL = 1e-12


class Sampler(Protocol):
    """Anything that can produce fresh system traces on demand."""

    schema: VariableSchema

    def next_trace(self, min_length: int) -> ConcreteTrace:
        """Return a trace of length >= min_length."""
        ...


class HiddenDtmcSimulator:
    """Explicit DTMC over concrete valuations, sampled with a seeded stream.

    Length policy: ``("exact",)`` emits exactly ``min_length`` states;
    ``("geometric", p)`` keeps extending past ``min_length``, stopping after
    each extra step with probability ``p``.
    """

    def __init__(self, schema, valuations, init, matrix, seed=0, length_policy=("exact",)):
        self.schema = schema
        self.valuations = np.asarray(valuations, dtype=np.float64)
        self.init = np.asarray(init, dtype=np.float64)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.length_policy = tuple(length_policy)
        self.seed = seed
        n = self.valuations.shape[0]
        if self.valuations.ndim != 2 or self.valuations.shape[1] != schema.arity:
            raise ConfigError("every state needs a valuation for every schema variable")
        if self.init.shape != (n,) or self.matrix.shape != (n, n):
            raise ConfigError("initial distribution / matrix shape mismatch")
        if np.any(self.init < 0) or abs(self.init.sum() - 1.0) > _ROW_TOL:
            raise ConfigError("initial distribution must be non-negative and sum to 1")
        if np.any(self.matrix < 0):
            raise ConfigError("transition probabilities must be non-negative")
        bad = np.abs(self.matrix.sum(axis=1) - 1.0) > _ROW_TOL
        if np.any(bad):
            raise ConfigError(f"matrix row {int(np.argmax(bad))} does not sum to 1")
        if self.length_policy[0] not in ("exact", "geometric"):
            raise ConfigError(f"unknown length policy {self.length_policy[0]!r}")
        if self.length_policy[0] == "geometric":
            p = float(self.length_policy[1])
            if not 0.0 < p <= 1.0:
                raise ConfigError("geometric stop probability must be in (0, 1]")
        self._rng = substream(seed, "sampling")
        self._cum_init = np.cumsum(self.init)
        self._cum_rows = np.cumsum(self.matrix, axis=1)

    def _draw(self, cum: np.ndarray) -> int:
        # Clamp guards against cum[-1] landing a few ulp below 1.
        return min(int(np.searchsorted(cum, self._rng.random(), side="right")), len(cum) - 1)

    def next_trace(self, min_length: int) -> ConcreteTrace:
        if min_length < 1:
            raise SamplerError("min_length must be >= 1")
        state = self._draw(self._cum_init)
        states = [state]
        while True:
            if len(states) >= min_length:
                if self.length_policy[0] == "exact":
                    break
                if self._rng.random() < self.length_policy[1]:
                    break
            state = self._draw(self._cum_rows[state])
            states.append(state)
        return ConcreteTrace(self.valuations[states])

    def simulate_batch(self, count: int, length: int) -> TraceSet:
        """Vectorized sampling of `count` traces of exactly `length` states.

        Uses its own draws from the seeded stream; intended for bulk studies
        where per-trace calls would dominate the runtime.
        """
        if count < 1 or length < 1:
            raise SamplerError("count and length must be >= 1")
        current = np.minimum(
            np.searchsorted(self._cum_init, self._rng.random(count), side="right"),
            self.matrix.shape[0] - 1,
        )
        walks = np.empty((count, length), dtype=np.int64)
        walks[:, 0] = current
        n = self.matrix.shape[0]
        for t in range(1, length):
            u = self._rng.random(count)
            rows = self._cum_rows[current]
            current = np.minimum((rows <= u[:, None]).sum(axis=1), n - 1)
            walks[:, t] = current
        traces = tuple(ConcreteTrace(self.valuations[walks[i]]) for i in range(count))
        return TraceSet(self.schema, traces)

    @classmethod
    def load(cls, path, seed=0) -> "HiddenDtmcSimulator":
        schema = None
        length_policy = ("exact",)
        states: dict[int, list[float]] = {}
        init_entries: list[tuple[int, float]] = []
        trans_entries: list[tuple[int, int, float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                keyword, _, rest = line.partition(" ")
                try:
                    if keyword == "vars":
                        from .traces import _parse_header
                        names, declared_bool = _parse_header(rest, lineno)
                        schema = (names, declared_bool)
                    elif keyword == "length":
                        fields = [f.strip() for f in rest.split(",")]
                        if fields[0] == "exact":
                            length_policy = ("exact",)
                        elif fields[0] == "geometric":
                            length_policy = ("geometric", float(fields[1]))
                        else:
                            raise ConfigError(f"unknown length policy {fields[0]!r}")
                    elif keyword == "state":
                        fields = [f.strip() for f in rest.split(",")]
                        states[int(fields[0])] = [float(v) for v in fields[1:]]
                    elif keyword == "init":
                        fields = [f.strip() for f in rest.split(",")]
                        init_entries.append((int(fields[0]), float(fields[1])))
                    elif keyword == "trans":
                        fields = [f.strip() for f in rest.split(",")]
                        trans_entries.append((int(fields[0]), int(fields[1]), float(fields[2])))
                    else:
                        raise ConfigError(f"unknown keyword {keyword!r}")
                except (ValueError, IndexError) as exc:
                    raise ConfigError(f"{path}: line {lineno}: {exc}") from None
        if schema is None:
            raise ConfigError(f"{path}: missing 'vars' line")
        if not states:
            raise ConfigError(f"{path}: no states declared")
        n = len(states)
        if sorted(states) != list(range(n)):
            raise ConfigError(f"{path}: state ids must be contiguous from 0")
        valuations = np.array([states[i] for i in range(n)], dtype=np.float64)
        # Infer kinds from the valuations with the trace-file rules, so traces
        # sampled here merge cleanly with parsed trace files.
        names, declared_bool = schema
        kinds = []
        for c, is_bool in enumerate(declared_bool):
            column = valuations[:, c] if c < valuations.shape[1] else np.array([])
            if is_bool:
                kinds.append("bool")
            elif column.size and np.all(column == np.floor(column)):
                kinds.append("int")
            else:
                kinds.append("real")
        schema = VariableSchema(names, tuple(kinds))
        init = np.zeros(n)
        for idx, p in init_entries:
            if idx not in states:
                raise ConfigError(f"{path}: init references unknown state {idx}")
            init[idx] += p
        matrix = np.zeros((n, n))
        for src, dst, p in trans_entries:
            if src not in states or dst not in states:
                raise ConfigError(f"{path}: trans references unknown state {src}->{dst}")
            matrix[src, dst] += p
        return cls(schema, valuations, init, matrix, seed=seed, length_policy=length_policy)

    def save(self, path) -> None:
        lines = [f"vars {self.schema.header()}"]
        if self.length_policy[0] == "geometric":
            lines.append(f"length geometric,{self.length_policy[1]}")
        for i, row in enumerate(self.valuations):
            lines.append(f"state {i}, " + ",".join(_format_value(v) for v in row))
        for i, p in enumerate(self.init):
            if p > 0:
                lines.append(f"init {i}, {float(p)!r}")
        for i in range(self.matrix.shape[0]):
            for j in range(self.matrix.shape[1]):
                if self.matrix[i, j] > 0:
                    lines.append(f"trans {i}, {j}, {float(self.matrix[i, j])!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


class ExternalCommandSampler:
    """Sampler backed by a user command.

    The command is invoked with the requested minimum length appended as its
    final argument and must print one trace in the trace file format to
    standard output.
    """

    def __init__(self, command: str, schema: VariableSchema | None = None):
        self.command = shlex.split(command)
        if not self.command:
            raise ConfigError("external sampler command is empty")
        self.schema = schema

    def next_trace(self, min_length: int) -> ConcreteTrace:
        argv = self.command + [str(min_length)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, check=True)
        except (OSError, subprocess.CalledProcessError) as exc:
            raise SamplerError(f"external sampler failed: {exc}") from exc
        try:
            ts = parse_traces(proc.stdout, source=" ".join(argv))
        except TraceFormatError as exc:
            raise SamplerError(f"external sampler output unreadable: {exc}") from exc
        if self.schema is None:
            self.schema = ts.schema
        elif ts.schema.names != self.schema.names:
            raise SamplerError("external sampler emitted a different schema")
        trace = ts.traces[0]
        if len(trace) < min_length:
            raise SamplerError(
                f"external sampler returned length {len(trace)} < requested {min_length}"
            )
        return trace


def sample_batch(sampler: Sampler, count: int, min_length: int) -> TraceSet:
    """Draw `count` traces of length >= min_length; deterministic per sampler state."""
    if count < 1:
        raise SamplerError("count must be >= 1")
    collected = []
    for i in range(count):
        try:
            collected.append(sampler.next_trace(min_length))
        except SamplerError as exc:
            raise SamplerError(f"trace {i}: {exc}") from exc
    return TraceSet(sampler.schema, tuple(collected))
