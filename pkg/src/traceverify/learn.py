"""DTMC learning by state merging on a frequency prefix tree.

The learner builds the prefix tree of the abstract traces (each node labelled
with the number of traces carrying that prefix), then repeatedly merges nodes
that pass a confidence-bound compatibility test on their empirical suffix
distributions.  Merge candidates are visited in order of tree depth and, per
depth, in lexicographic order of the incoming symbol.  Merging redirects the
blue node's incoming edge to the red node and folds the blue subtree's labels
into the red subtree symbol-wise; the blue subtree is then pruned.  The merged
automaton is normalized into a DTMC by dividing edge counts by node labels,
with the leftover (termination) mass assigned to the state's self-loop.

The compatibility test for nodes n1, n2 requires, for every suffix realized in
either subtree of the *original* tree,

    |Pr(n1, s) - Pr(n2, s)| < sqrt(6 e ln L1 / L1) + sqrt(6 e ln L2 / L2)

with natural logarithms, plus agreement on the incoming symbol.  The epsilon
parameter (> 1) scales the bound: larger epsilon merges more aggressively.
Epsilon is selected automatically by a Bayesian information criterion over a
geometric grid.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .dtmc import Dtmc
from .errors import ConfigError, ModelFormatError

__all__ = [
    "Node",
    "PrefixTree",
    "build_prefix_tree",
    "next_symbol_prob",
    "termination_prob",
    "multi_step_prob",
    "compatible",
    "StateMerger",
    "LearnedDTMC",
    "learn_dtmc",
    "bic_score",
    "LearnerConfig",
    "ModelSelection",
    "select_model",
]


class Node:
    """One prefix of the trace set.

    Live fields (mutated by merging): label, endings, edge_counts, successors.
    Snapshot fields (frozen at build time) feed the compatibility test.
    """

    __slots__ = (
        "symbol", "parent", "label", "endings", "edge_counts", "successors",
        "alive", "snap_label", "snap_endings", "snap_children",
    )

    def __init__(self, symbol, parent):
        self.symbol = symbol            # incoming symbol; None for the root
        self.parent = parent
        self.label = 0                  # traces carrying this prefix
        self.endings = 0                # traces ending exactly here
        self.edge_counts = {}           # symbol -> outgoing count
        self.successors = {}            # symbol -> Node (tree child or redirect)
        self.alive = True
        self.snap_label = 0
        self.snap_endings = 0
        self.snap_children = {}

    def tree_child(self, symbol):
        t = self.successors.get(symbol)
        if t is not None and t.parent is self and t.symbol == symbol:
            return t
        return None

    def address(self) -> tuple[str, ...]:
        parts = []
        node = self
        while node.parent is not None:
            parts.append(node.symbol)
            node = node.parent
        return tuple(reversed(parts))

    def depth(self) -> int:
        return len(self.address())

    def __repr__(self):
        return f"Node({'.'.join(self.address()) or '<root>'}, L={self.label})"


@dataclass
class PrefixTree:
    root: Node
    total: int
    alphabet: tuple[str, ...]

    def node(self, path) -> Node:
        node = self.root
        for symbol in path:
            child = node.tree_child(symbol)
            if child is None:
                raise KeyError(f"no node at prefix {list(path)!r}")
            node = child
        return node


def build_prefix_tree(abstract_traces) -> PrefixTree:
    """Organize traces into a tree whose node labels count prefix occurrences."""
    traces = list(abstract_traces)
    if not traces:
        raise ConfigError("cannot build a prefix tree from zero traces")
    root = Node(None, None)
    alphabet = set()
    for trace in traces:
        if not trace:
            raise ConfigError("abstract traces must be non-empty")
        root.label += 1
        node = root
        for symbol in trace:
            alphabet.add(symbol)
            child = node.successors.get(symbol)
            if child is None:
                child = Node(symbol, node)
                node.successors[symbol] = child
            child.label += 1
            node = child
        node.endings += 1
    # Freeze snapshots and derive edge counts from child labels.
    stack = [root]
    while stack:
        node = stack.pop()
        node.snap_label = node.label
        node.snap_endings = node.endings
        node.snap_children = dict(node.successors)
        node.edge_counts = {s: c.label for s, c in node.successors.items()}
        stack.extend(node.successors.values())
    return PrefixTree(root=root, total=root.label, alphabet=tuple(sorted(alphabet)))


def next_symbol_prob(node: Node, symbol: str) -> float:
    """Empirical probability of observing `symbol` next from this node."""
    if node.label <= 0:
        raise ConfigError("node has zero label")
    return node.edge_counts.get(symbol, 0) / node.label


def termination_prob(node: Node) -> float:
    """Residual probability of observing nothing further: 1 - sum of children."""
    if node.label <= 0:
        raise ConfigError("node has zero label")
    return node.endings / node.label


def multi_step_prob(node: Node, suffix) -> float:
    """Product of one-step probabilities along `suffix` through tree children.

    The empty suffix yields the termination probability; an absent step
    yields 0.
    """
    suffix = list(suffix)
    if not suffix:
        return termination_prob(node)
    prob = 1.0
    for symbol in suffix:
        child = node.tree_child(symbol)
        if child is None:
            return 0.0
        prob *= child.label / node.label
        node = child
    return prob


def _bound(label: int, epsilon: float) -> float:
    # Nodes with label 1 contribute 0 (ln 1 = 0); the formula is applied as is.
    return math.sqrt(6.0 * epsilon * math.log(label) / label)


def _snap_step(node: Node | None, symbol: str) -> float:
    if node is None:
        return 0.0
    child = node.snap_children.get(symbol)
    return 0.0 if child is None else child.snap_label / node.snap_label


def _co_compatible(a: Node | None, b: Node | None, pa: float, pb: float, thr: float) -> bool:
    symbols = set()
    if a is not None:
        symbols.update(a.snap_children)
    if b is not None:
        symbols.update(b.snap_children)
    for symbol in sorted(symbols):
        pa2 = pa * _snap_step(a, symbol)
        pb2 = pb * _snap_step(b, symbol)
        if abs(pa2 - pb2) >= thr:
            return False
        if pa2 < thr and pb2 < thr:
            # Deeper products only shrink, so every deeper difference is
            # bounded by max(pa2, pb2) < thr; no need to recurse.
            continue
        ca = a.snap_children.get(symbol) if a is not None else None
        cb = b.snap_children.get(symbol) if b is not None else None
        if not _co_compatible(ca, cb, pa2, pb2, thr):
            return False
    return True


def compatible(n1: Node, n2: Node, epsilon: float) -> bool:
    """Confidence-bound compatibility of two nodes' suffix distributions.

    Statistics come from the original (pre-merge) tree snapshot; the bound
    uses the two nodes' own labels and is constant across the co-traversal.
    """
    if epsilon <= 1.0:
        raise ConfigError("epsilon must be greater than 1")
    if n1.symbol is None or n2.symbol is None or n1.symbol != n2.symbol:
        return False
    thr = _bound(n1.snap_label, epsilon) + _bound(n2.snap_label, epsilon)
    term1 = n1.snap_endings / n1.snap_label
    term2 = n2.snap_endings / n2.snap_label
    if abs(term1 - term2) >= thr:
        return False
    return _co_compatible(n1, n2, 1.0, 1.0, thr)


@dataclass
class LearnedDTMC:
    """Normalized merge result plus the count bookkeeping behind it."""

    dtmc: Dtmc
    addresses: tuple[str, ...]          # original prefix address per state
    labels: tuple[int, ...]             # accumulated node label per state
    endings: tuple[int, ...]            # accumulated ending count per state
    edges: tuple[dict, ...]             # per state: symbol -> (count, target state)

    @property
    def tags(self):
        return self.dtmc.tags

    @property
    def n_states(self) -> int:
        return self.dtmc.n_states

    def continuation_probability(self, state: int, symbol: str) -> float:
        """Next-symbol probability conditioned on the trace continuing."""
        total = sum(count for count, _ in self.edges[state].values())
        if total == 0:
            return 0.0
        entry = self.edges[state].get(symbol)
        return 0.0 if entry is None else entry[0] / total


class StateMerger:
    """Owns a prefix tree and applies merge operations to it."""

    def __init__(self, tree: PrefixTree):
        self.tree = tree
        self.root = tree.root

    def merge(self, red: Node, blue: Node) -> None:
        """Redirect blue's incoming edge to red and fold its subtree into red's.

        Folding sums labels, endings and edge counts symbol-wise through tree
        children; branches that would land inside the pruned blue subtree are
        dropped, matching label arithmetic on prefix strings.
        """
        if not (red.alive and blue.alive):
            raise ConfigError("cannot merge dead nodes")
        if blue.parent is None:
            raise ConfigError("cannot merge the root")
        self._fold(red, blue, blue)
        blue.parent.successors[blue.symbol] = red
        self._prune(blue)

    def _fold(self, a: Node, b: Node, blue_root: Node) -> None:
        a.label += b.label
        a.endings += b.endings
        for symbol, count in b.edge_counts.items():
            a.edge_counts[symbol] = a.edge_counts.get(symbol, 0) + count
        for symbol in sorted(b.successors):
            bc = b.tree_child(symbol)
            if bc is None:
                continue
            ac = a.tree_child(symbol)
            if ac is blue_root:
                # The corresponding prefix lies in the subtree being pruned.
                continue
            if ac is not None:
                self._fold(ac, bc, blue_root)
            elif symbol in a.successors:
                # Previously redirected edge: the prefix string no longer
                # exists, so only the edge count (already added) survives.
                continue
            else:
                bc.parent = a
                a.successors[symbol] = bc

    def _prune(self, node: Node) -> None:
        node.alive = False
        for child in list(node.successors.values()):
            if child.parent is node:
                self._prune(child)

    def live_nodes(self) -> list[Node]:
        """Live nodes except the root, ordered by (depth, address)."""
        found: list[Node] = []
        queue = [self.root]
        while queue:
            node = queue.pop(0)
            children = [node.tree_child(s) for s in sorted(node.successors)]
            children = [c for c in children if c is not None]
            found.extend(children)
            queue.extend(children)
        return found

    def normalize(self) -> LearnedDTMC:
        """Turn the merged automaton into a DTMC.

        Transition probability is edge count over node label; the initial
        distribution normalizes the root's edges; leftover mass (trace
        terminations) goes to the state's self-loop.
        """
        states = self.live_nodes()
        index = {id(n): i for i, n in enumerate(states)}
        n = len(states)
        init = np.zeros(n)
        for symbol in sorted(self.root.edge_counts):
            target = self.root.successors[symbol]
            init[index[id(target)]] += self.root.edge_counts[symbol] / self.root.label
        rows: list[dict[int, float]] = [dict() for _ in range(n)]
        steps: dict[tuple[int, str], int] = {}
        edges: list[dict] = [dict() for _ in range(n)]
        for i, node in enumerate(states):
            for symbol in sorted(node.edge_counts):
                count = node.edge_counts[symbol]
                target = node.successors[symbol]
                j = index[id(target)]
                rows[i][j] = rows[i].get(j, 0.0) + count / node.label
                steps[(i, symbol)] = j
                edges[i][symbol] = (count, j)
            if node.endings:
                rows[i][i] = rows[i].get(i, 0.0) + node.endings / node.label
        tags = tuple(node.symbol for node in states)
        dtmc = Dtmc(tags, init, rows, steps=steps)
        return LearnedDTMC(
            dtmc=dtmc,
            addresses=tuple(".".join(node.address()) for node in states),
            labels=tuple(node.label for node in states),
            endings=tuple(node.endings for node in states),
            edges=tuple(edges),
        )


def learn_dtmc(abstract_traces, epsilon: float) -> LearnedDTMC:
    """Full learning pass: build the tree, merge to a fixpoint, normalize.

    Candidate (blue) nodes are the children of accepted (red) states, visited
    in (depth, incoming symbol, address) order; each candidate merges into the
    first compatible red in promotion order, or is itself promoted.
    """
    if epsilon <= 1.0:
        raise ConfigError("epsilon must be greater than 1")
    tree = build_prefix_tree(abstract_traces)
    merger = StateMerger(tree)
    reds: list[Node] = [tree.root]
    red_ids = {id(tree.root)}
    while True:
        blues = []
        for red in reds:
            for symbol in sorted(red.successors):
                child = red.tree_child(symbol)
                if child is not None and id(child) not in red_ids:
                    blues.append(child)
        if not blues:
            break
        blues.sort(key=lambda n: (n.depth(), n.symbol, n.address()))
        blue = blues[0]
        for red in reds:
            if compatible(red, blue, epsilon):
                merger.merge(red, blue)
                break
        else:
            reds.append(blue)
            red_ids.add(id(blue))
    return merger.normalize()


def bic_score(model: LearnedDTMC | Dtmc, abstract_traces, mu: float = 1.0) -> float:
    """Log-likelihood of the traces under the model structure minus a size penalty.

    The likelihood walks every trace through the model and scores it with the
    empirical (maximum-likelihood) outcome frequencies of the walked states,
    including per-state termination; this reproduces exact trace frequencies
    on an unmerged tree.  Penalty: (mu/2) * states * ln(total symbols).
    """
    dtmc = model.dtmc if isinstance(model, LearnedDTMC) else model
    traces = list(abstract_traces)
    initial: Counter = Counter()
    pairs: Counter = Counter()
    ends: Counter = Counter()
    visits: Counter = Counter()
    total_symbols = 0
    for trace in traces:
        walked, ok = dtmc.walk(trace)
        if not ok:
            raise ModelFormatError("model does not generate a training trace")
        total_symbols += len(trace)
        initial[walked[0]] += 1
        for a, b in zip(walked, walked[1:]):
            pairs[(a, b)] += 1
        for s in walked:
            visits[s] += 1
        ends[walked[-1]] += 1
    n = len(traces)
    loglik = sum(c * math.log(c / n) for c in initial.values())
    loglik += sum(c * math.log(c / visits[s]) for (s, _), c in pairs.items())
    loglik += sum(c * math.log(c / visits[s]) for s, c in ends.items())
    penalty = 0.5 * mu * dtmc.n_states * math.log(total_symbols)
    return loglik - penalty


@dataclass(frozen=True)
class LearnerConfig:
    """Epsilon search space and penalty weight for model selection."""

    epsilon_max: float = 64.0
    bic_penalty: float = 1.0
    epsilon_grid: tuple[float, ...] | None = None

    def grid(self) -> list[float]:
        if self.epsilon_grid is not None:
            values = [float(e) for e in self.epsilon_grid]
            if not values or any(e <= 1.0 for e in values):
                raise ConfigError("all epsilon candidates must exceed 1")
            return values
        values, e = [], 1.1
        while e <= self.epsilon_max:
            values.append(e)
            e *= 2.0
        if not values:
            raise ConfigError("epsilon_max leaves an empty search grid")
        return values


@dataclass(frozen=True)
class ModelCandidate:
    epsilon: float
    bic: float
    n_states: int


@dataclass(frozen=True)
class ModelSelection:
    model: LearnedDTMC
    epsilon: float
    candidates: tuple[ModelCandidate, ...]


def select_model(abstract_traces, config: LearnerConfig = LearnerConfig()) -> ModelSelection:
    """Learn one model per epsilon candidate and keep the best BIC.

    Ties break toward the smaller epsilon, then the smaller model.
    """
    traces = list(abstract_traces)
    scored = []
    for eps in config.grid():
        model = learn_dtmc(traces, eps)
        bic = bic_score(model, traces, mu=config.bic_penalty)
        scored.append((model, ModelCandidate(eps, bic, model.n_states)))
    scored.sort(key=lambda mc: (-mc[1].bic, mc[1].epsilon, mc[1].n_states))
    best_model, best = scored[0]
    return ModelSelection(
        model=best_model,
        epsilon=best.epsilon,
        candidates=tuple(c for _, c in sorted(scored, key=lambda mc: mc[1].epsilon)),
    )
