"""Explicit-state DTMC: validation, path probabilities, unbounded reachability.

Reachability uses the standard least-fixed-point construction: backward graph
search first marks states that cannot reach the target (probability 0), then
the remaining unknowns are solved directly (sparse LU) for models up to
``_DIRECT_LIMIT`` states and by value iteration beyond that.

Model file format: ``states <n>``, then ``state <idx> "<tag>" <init_prob>``
lines, ``trans <src> <dst> <prob>`` lines and optional ``step <src> <sym> <dst>``
lines recording the symbol-labelled successor map used to walk abstract traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ModelFormatError, SolverError

_TOL = 1e-12
_DIRECT_LIMIT = 5000
_VI_TOL = 1e-10
_VI_MAX_SWEEPS = 10**6


class Dtmc:
    """States with tags, an initial distribution and sparse transition rows.

    `steps` is an optional map (state, symbol) -> state giving the
    symbol-deterministic successor used when walking abstract traces; the
    termination residual folded into self-loops is not a walkable edge.
    """

    def __init__(self, tags, init, rows, steps=None):
        self.tags = tuple(tags)
        self.init = np.asarray(init, dtype=np.float64)
        self.rows = tuple(dict(r) for r in rows)
        self.steps = dict(steps) if steps else None
        n = len(self.tags)
        if self.init.shape != (n,) or len(self.rows) != n:
            raise ModelFormatError("initial distribution / rows shape mismatch")
        if np.any(self.init < 0) or abs(float(self.init.sum()) - 1.0) > _TOL:
            raise ModelFormatError("initial distribution must sum to 1")
        for i, row in enumerate(self.rows):
            total = 0.0
            for j, p in row.items():
                if not 0 <= j < n:
                    raise ModelFormatError(f"transition {i}->{j} out of range")
                if p < 0 or p > 1 + _TOL:
                    raise ModelFormatError(f"transition {i}->{j} probability {p} out of [0,1]")
                total += p
            if abs(total - 1.0) > _TOL:
                raise ModelFormatError(f"row {i} sums to {total}, not 1")
        if self.steps:
            for (src, sym), dst in self.steps.items():
                if not (0 <= src < n and 0 <= dst < n):
                    raise ModelFormatError(f"step ({src},{sym!r})->{dst} out of range")

    @property
    def n_states(self) -> int:
        return len(self.tags)

    def initial_states(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.init > 0)[0]]

    def successors(self, i: int):
        return self.rows[i].items()

    # -- walking ---------------------------------------------------------

    def initial_state_for(self, symbol: str) -> int | None:
        """The unique initial state tagged `symbol`, if any."""
        found = None
        for i in self.initial_states():
            if self.tags[i] == symbol:
                if found is not None:
                    raise ModelFormatError(f"ambiguous initial state for symbol {symbol!r}")
                found = i
        return found

    def step(self, state: int, symbol: str) -> int | None:
        if self.steps is None:
            raise ModelFormatError("model carries no symbol successor map")
        return self.steps.get((state, symbol))

    def walk(self, symbols) -> tuple[list[int], bool]:
        """Walk an abstract trace through the model.

        Returns (visited states, completed).  `completed` is False when some
        symbol has no outgoing edge (the walk left the model).
        """
        if not symbols:
            return [], False
        state = self.initial_state_for(symbols[0])
        if state is None:
            return [], False
        visited = [state]
        for symbol in symbols[1:]:
            nxt = self.step(state, symbol)
            if nxt is None:
                return visited, False
            visited.append(nxt)
            state = nxt
        return visited, True


def path_probability(model: Dtmc, states, initial_weighted: bool = False) -> float:
    """Product of step probabilities along `states`; 0 on an absent transition.

    With `initial_weighted` the product includes the initial probability of
    the first state (counterexample construction uses this entry point).
    """
    states = list(states)
    if not states:
        raise ModelFormatError("path must be non-empty")
    for s in states:
        if not 0 <= s < model.n_states:
            raise ModelFormatError(f"unknown state {s}")
    prob = float(model.init[states[0]]) if initial_weighted else 1.0
    for a, b in zip(states, states[1:]):
        prob *= model.rows[a].get(b, 0.0)
    return prob


def target_states(model: Dtmc, target) -> frozenset[int]:
    """Normalize a target spec (indices or a predicate on tags) to indices."""
    if callable(target):
        return frozenset(i for i, tag in enumerate(model.tags) if target(tag))
    return frozenset(int(i) for i in target)


def first_bit_target(tag: str) -> bool:
    """Target test for properties whose atom is predicate 0 of the abstraction."""
    return bool(tag) and tag[0] == "1"


def _can_reach(model: Dtmc, targets: frozenset[int]) -> np.ndarray:
    """Backward graph reachability: which states have a path into `targets`."""
    n = model.n_states
    preds: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j, p in model.rows[i].items():
            if p > 0 and i != j:
                preds[j].append(i)
    can = np.zeros(n, dtype=bool)
    stack = list(targets)
    for t in stack:
        can[t] = True
    while stack:
        j = stack.pop()
        for i in preds[j]:
            if not can[i]:
                can[i] = True
                stack.append(i)
    return can


def reach_probability(model: Dtmc, target, return_vector: bool = False, method: str = "auto"):
    """Probability of eventually reaching `target` from the initial distribution.

    Solves x_s = 1 on targets, x_s = 0 where the target is graph-unreachable,
    and the linear reachability system elsewhere; the answer is init . x.
    """
    targets = target_states(model, target)
    n = model.n_states
    x = np.zeros(n)
    for t in targets:
        x[t] = 1.0
    can = _can_reach(model, targets)
    unknown = [i for i in range(n) if can[i] and i not in targets]
    if unknown:
        index = {s: k for k, s in enumerate(unknown)}
        m = len(unknown)
        b = np.zeros(m)
        p_data, p_rows, p_cols = [], [], []
        for s in unknown:
            k = index[s]
            for t, p in model.rows[s].items():
                if p <= 0:
                    continue
                if t in targets:
                    b[k] += p
                elif can[t]:
                    p_rows.append(k)
                    p_cols.append(index[t])
                    p_data.append(p)
        p_mat = sp.csr_matrix((p_data, (p_rows, p_cols)), shape=(m, m))
        if method == "auto":
            method = "direct" if m <= _DIRECT_LIMIT else "iterative"
        if method == "direct":
            a = (sp.identity(m, format="csr") - p_mat).tocsc()
            sol = spla.spsolve(a, b)
        elif method == "iterative":
            # x <- P x + b, monotone from 0; converges to the least fixed point.
            sol = np.zeros(m)
            delta = math.inf
            for _ in range(_VI_MAX_SWEEPS):
                nxt = p_mat.dot(sol) + b
                delta = float(np.max(np.abs(nxt - sol)))
                sol = nxt
                if delta <= _VI_TOL:
                    break
            else:
                raise SolverError(f"value iteration did not converge; residual {delta}")
        else:
            raise ModelFormatError(f"unknown solver method {method!r}")
        for s, k in index.items():
            x[s] = min(max(float(sol[k]), 0.0), 1.0)
    answer = float(np.dot(model.init, x))
    answer = min(max(answer, 0.0), 1.0)
    if return_vector:
        return answer, x
    return answer


@dataclass(frozen=True)
class ReachQuery:
    """Threshold query: probability of eventually reaching the target is <= r."""

    threshold: float
    target: object = first_bit_target

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ModelFormatError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class CheckResult:
    satisfied: bool
    probability: float


def check(model: Dtmc, query: ReachQuery) -> CheckResult:
    """Inclusive comparison: probability == threshold still satisfies."""
    p = reach_probability(model, query.target)
    return CheckResult(satisfied=p <= query.threshold, probability=p)


# -- file formats ---------------------------------------------------------


def save_model(model: Dtmc, path) -> None:
    lines = [f"states {model.n_states}"]
    for i, tag in enumerate(model.tags):
        lines.append(f'state {i} "{tag}" {float(model.init[i])!r}')
    for i, row in enumerate(model.rows):
        for j in sorted(row):
            lines.append(f"trans {i} {j} {float(row[j])!r}")
    if model.steps:
        for (src, sym), dst in sorted(model.steps.items()):
            lines.append(f'step {src} "{sym}" {dst}')
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _unquote(token: str, lineno: int) -> str:
    if len(token) < 2 or not (token.startswith('"') and token.endswith('"')):
        raise ModelFormatError(f"line {lineno}: expected quoted tag, got {token!r}")
    return token[1:-1]


def load_model(path) -> Dtmc:
    n = None
    tags: dict[int, str] = {}
    init: dict[int, float] = {}
    trans: dict[int, dict[int, float]] = {}
    steps: dict[tuple[int, str], int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            try:
                if fields[0] == "states":
                    n = int(fields[1])
                elif fields[0] == "state":
                    idx = int(fields[1])
                    tags[idx] = _unquote(fields[2], lineno)
                    init[idx] = float(fields[3])
                elif fields[0] == "trans":
                    trans.setdefault(int(fields[1]), {})[int(fields[2])] = float(fields[3])
                elif fields[0] == "step":
                    steps[(int(fields[1]), _unquote(fields[2], lineno))] = int(fields[3])
                else:
                    raise ModelFormatError(f"line {lineno}: unknown keyword {fields[0]!r}")
            except (ValueError, IndexError) as exc:
                raise ModelFormatError(f"{path}: line {lineno}: {exc}") from None
    if n is None:
        raise ModelFormatError(f"{path}: missing 'states' line")
    if sorted(tags) != list(range(n)):
        raise ModelFormatError(f"{path}: expected state lines for 0..{n - 1}")
    init_vec = np.array([init[i] for i in range(n)])
    rows = [trans.get(i, {}) for i in range(n)]
    return Dtmc([tags[i] for i in range(n)], init_vec, rows, steps=steps or None)


def to_dot(model: Dtmc, name: str = "dtmc") -> str:
    """GraphViz rendering of the underlying digraph."""
    lines = [f'digraph "{name}" {{', "\trankdir=LR;"]
    for i, tag in enumerate(model.tags):
        label = f"{i}: {tag}" if tag else str(i)
        shape = "doublecircle" if model.init[i] > 0 else "circle"
        lines.append(f'\t{i} [label="{label}", shape={shape}];')
    for i, row in enumerate(model.rows):
        for j in sorted(row):
            lines.append(f'\t{i} -> {j} [label="{row[j]:.6g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
