"""Smallest probabilistic counterexamples for threshold reachability.

A counterexample is a minimal set of most-probable target-reaching paths whose
accumulated probability exceeds the threshold.  Paths are enumerated best-first
over edge weights -ln Pr and counted target-hitting-first (no path visits a
target state before its last step), so the paths denote disjoint cylinder sets
and their probabilities add up.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .dtmc import Dtmc, _can_reach, target_states

_EXPANSION_FACTOR = 16  # heap-pop budget per emitted-path budget


@dataclass(frozen=True)
class AbstractPath:
    """A finite state path with its initial-weighted probability."""

    states: tuple[int, ...]
    probability: float


@dataclass(frozen=True)
class Counterexample:
    """Paths in descending probability; dropping the last one dips below r."""

    paths: tuple[AbstractPath, ...]
    total: float
    threshold: float

    def max_path_length(self) -> int:
        return max(len(p.states) for p in self.paths)

    def path_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(p.states for p in self.paths)


@dataclass(frozen=True)
class Exhausted:
    """Every target-reaching path was enumerated and the mass stayed <= r."""

    total: float


@dataclass(frozen=True)
class Truncated:
    """The path budget ran out before the mass exceeded r."""

    total: float
    paths_seen: int


def _seed_heap(model: Dtmc, targets):
    """Initial frontier; prefixes are only ever extended toward states that can
    still reach the target, so prob-1 cycles among doomed states cannot stall
    the search and heap exhaustion means the full path set was enumerated."""
    can = _can_reach(model, targets)
    heap: list[tuple[float, tuple[int, ...]]] = []
    for s in model.initial_states():
        if can[s]:
            heapq.heappush(heap, (-math.log(float(model.init[s])), (s,)))
    return heap, can


def _extend(model: Dtmc, heap, can, neglog, states):
    for t, p in sorted(model.successors(states[-1])):
        if p > 0.0 and can[t]:
            heapq.heappush(heap, (neglog - math.log(p), states + (t,)))


def enumerate_paths(model: Dtmc, target):
    """Yield target-hitting-first paths in non-increasing probability order.

    Uniform-cost search on -ln Pr; ties break lexicographically on the state
    index sequence.  Prefixes that already reached the target are emitted and
    never extended, so emitted paths are pairwise non-prefixing.
    """
    targets = target_states(model, target)
    heap, can = _seed_heap(model, targets)
    while heap:
        neglog, states = heapq.heappop(heap)
        if states[-1] in targets:
            yield AbstractPath(states, math.exp(-neglog))
            continue
        _extend(model, heap, can, neglog, states)


def build_counterexample(model: Dtmc, target, threshold: float, k_max: int = 10**6):
    """Shortest prefix of the enumeration stream whose mass exceeds `threshold`.

    Returns Exhausted when the full path set sums to <= threshold, and
    Truncated when the budget (k_max emitted paths, with a proportional cap
    on heap expansions for heavy-tailed models) runs out first.
    """
    targets = target_states(model, target)
    heap, can = _seed_heap(model, targets)
    chosen: list[AbstractPath] = []
    total = 0.0
    expansions = 0
    budget = max(100_000, k_max * _EXPANSION_FACTOR)
    while heap:
        expansions += 1
        if len(chosen) >= k_max or expansions > budget:
            return Truncated(total=total, paths_seen=len(chosen))
        neglog, states = heapq.heappop(heap)
        if states[-1] in targets:
            path = AbstractPath(states, math.exp(-neglog))
            chosen.append(path)
            total += path.probability
            if total > threshold:
                return Counterexample(paths=tuple(chosen), total=total, threshold=threshold)
            continue
        _extend(model, heap, can, neglog, states)
    return Exhausted(total=total)


@dataclass(frozen=True)
class MemberResult:
    hit: bool
    out_of_model: bool


def member(cex: Counterexample, model: Dtmc, symbols) -> MemberResult:
    """Does the symbol-deterministic walk of an abstract trace hit a path in C?

    True iff some prefix of the walk equals one of the counterexample's state
    sequences.  Since paths are target-hitting-first, only the walk prefix
    ending at the first target visit can match.
    """
    walked, completed = model.walk(symbols)
    paths = cex.path_set()
    lengths = {len(p) for p in paths}
    for k in sorted(lengths):
        if k <= len(walked) and tuple(walked[:k]) in paths:
            return MemberResult(hit=True, out_of_model=False)
    return MemberResult(hit=False, out_of_model=not completed)
