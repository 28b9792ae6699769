"""Abstraction refinement from spurious transitions.

Ranks the learned model's transitions by how much the model overestimates
their empirical frequency on the trace set, collects the concrete source
states that did / did not follow the transition (the positive and negative
classes), trains a linear separator, minimizes its variables, and emits the
resulting predicate.  Transitions are tried in rank order until one yields an
acceptable, genuinely new predicate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstraction import PredicateSet, abstract_trace, abstract_trace_set
from .errors import PredicateError
from .learn import LearnedDTMC
from .predicates import Predicate, _round_sig
from .svm import LinearClassifier, minimize_features, train_linear_classifier
from .traces import TraceSet


@dataclass(frozen=True)
class TransitionStat:
    """One model transition with its empirical estimate on the trace set."""

    source: int
    dest: int
    model_prob: float
    source_visits: int          # times the walk sat at `source` with a next step
    transition_count: int       # times it then moved to `dest`
    p_diff: float               # model_prob - empirical estimate
    zero_support: bool          # no walk visited `source`; estimate taken as 0


@dataclass
class TransitionCounts:
    source_visits: int
    transition_count: int
    positives: list            # concrete source states that took the transition
    negatives: list            # concrete source states that went elsewhere
    out_of_model: int


def count_transition(source: int, dest: int, traceset: TraceSet,
                     pset: PredicateSet, model: LearnedDTMC) -> TransitionCounts:
    """Walk every trace through the model and count visits to (source, dest).

    Whenever the walk sits at `source` with an observation remaining, the
    source visit counts; the concrete state goes to the positive class if the
    walk then enters `dest`, else to the negative class.  A trace that leaves
    the model mid-walk contributes its remaining steps to `out_of_model`.
    """
    dtmc = model.dtmc
    counts = TransitionCounts(0, 0, [], [], 0)
    for trace in traceset:
        symbols = abstract_trace(pset, trace, traceset.schema)
        walked, completed = dtmc.walk(symbols)
        if not walked:
            counts.out_of_model += len(symbols)
            continue
        for i in range(1, len(walked)):
            if walked[i - 1] == source:
                counts.source_visits += 1
                if walked[i] == dest:
                    counts.transition_count += 1
                    counts.positives.append(trace.state(i - 1))
                else:
                    counts.negatives.append(trace.state(i - 1))
        if not completed:
            counts.out_of_model += len(symbols) - len(walked)
    return counts


def identify_spurious_transitions(traceset: TraceSet, model: LearnedDTMC,
                                  pset: PredicateSet) -> list[TransitionStat]:
    """Every transition of the model, sorted by overestimation, worst first.

    Ties order by (source, dest); transitions whose source was never visited
    on the traces are flagged and ranked last regardless of their difference.
    """
    dtmc = model.dtmc
    stats: list[TransitionStat] = []
    for source in range(dtmc.n_states):
        for dest in sorted(dtmc.rows[source]):
            prob = dtmc.rows[source][dest]
            if prob <= 0.0:
                continue
            counts = count_transition(source, dest, traceset, pset, model)
            if counts.source_visits == 0:
                stats.append(TransitionStat(source, dest, prob, 0, 0, prob, True))
            else:
                empirical = counts.transition_count / counts.source_visits
                stats.append(TransitionStat(
                    source, dest, prob, counts.source_visits,
                    counts.transition_count, prob - empirical, False,
                ))
    supported = [s for s in stats if not s.zero_support]
    unsupported = [s for s in stats if s.zero_support]
    supported.sort(key=lambda s: (-s.p_diff, s.source, s.dest))
    unsupported.sort(key=lambda s: (s.source, s.dest))
    return supported + unsupported


def predicate_from_classifier(clf: LinearClassifier, positives, negatives,
                              accuracy_threshold: float = 0.99) -> Predicate:
    """Readable predicate for the classifier's positive half-space.

    Coefficients are scaled so the largest magnitude is 1 and rounded to three
    significant digits; if rounding breaks the accuracy guarantee the exact
    coefficients are kept.
    """
    scale = float(np.max(np.abs(clf.coefficients)))
    coefs = clf.coefficients / scale
    const = clf.threshold / scale
    rounded = np.array([_round_sig(c, 3) for c in coefs])
    rounded_const = _round_sig(const, 3)
    pos = np.atleast_2d(np.asarray(positives, dtype=np.float64))
    neg = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    ok = int(np.sum(pos @ rounded - rounded_const >= 0.0))
    ok += int(np.sum(neg @ rounded - rounded_const < 0.0))
    if ok / (len(pos) + len(neg)) >= accuracy_threshold:
        coefs, const = rounded, rounded_const
    terms = tuple(
        (float(c), name) for c, name in zip(coefs, clf.feature_names) if c != 0.0
    )
    return Predicate(terms, ">=", float(const))


@dataclass(frozen=True)
class RefinementAttempt:
    """Log record for one transition tried during refinement."""

    source: int
    dest: int
    p_diff: float
    outcome: str                # "predicate" | "skipped-..." | "no-separator"
    positives: int = 0
    negatives: int = 0
    accuracy: float | None = None
    predicate: str | None = None


@dataclass(frozen=True)
class RefinementResult:
    predicate: Predicate | None
    attempts: tuple[RefinementAttempt, ...]


def _distinct_abstract_states(pset: PredicateSet, traceset: TraceSet) -> int:
    seen = set()
    for symbols in abstract_trace_set(pset, traceset):
        seen.update(symbols)
    return len(seen)


def refine(traceset: TraceSet, model: LearnedDTMC, pset: PredicateSet,
           ranked: list[TransitionStat], penalty: float = 1e4,
           accuracy_threshold: float = 0.99) -> RefinementResult:
    """Try ranked transitions until one yields a usable predicate.

    A candidate predicate is rejected (and the next transition tried) when it
    duplicates an existing predicate after normalization or fails to increase
    the number of distinct abstract states realized on the traces; both guards
    keep the outer loop from spinning on an unproductive refinement.
    """
    attempts: list[RefinementAttempt] = []
    base_distinct = _distinct_abstract_states(pset, traceset)
    feature_names = traceset.schema.names
    for stat in ranked:
        if stat.zero_support:
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "skipped-zero-support"))
            continue
        counts = count_transition(stat.source, stat.dest, traceset, pset, model)
        if not counts.positives or not counts.negatives:
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "skipped-one-class",
                len(counts.positives), len(counts.negatives)))
            continue
        pos = np.vstack(counts.positives)
        neg = np.vstack(counts.negatives)
        clf = train_linear_classifier(
            pos, neg, feature_names, penalty=penalty,
            accuracy_threshold=accuracy_threshold)
        if clf is None:
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "no-separator",
                len(pos), len(neg)))
            continue
        reduced = minimize_features(
            clf, pos, neg, penalty=penalty, accuracy_threshold=accuracy_threshold)
        cols = [list(feature_names).index(n) for n in reduced.feature_names]
        predicate = predicate_from_classifier(
            reduced, pos[:, cols], neg[:, cols], accuracy_threshold)
        if pset.contains_equivalent(predicate):
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "skipped-duplicate",
                len(pos), len(neg), reduced.accuracy, predicate.display()))
            continue
        try:
            extended = pset.extended(predicate)
        except PredicateError:
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "skipped-duplicate",
                len(pos), len(neg), reduced.accuracy, predicate.display()))
            continue
        if _distinct_abstract_states(extended, traceset) <= base_distinct:
            attempts.append(RefinementAttempt(
                stat.source, stat.dest, stat.p_diff, "skipped-no-progress",
                len(pos), len(neg), reduced.accuracy, predicate.display()))
            continue
        attempts.append(RefinementAttempt(
            stat.source, stat.dest, stat.p_diff, "predicate",
            len(pos), len(neg), reduced.accuracy, predicate.display()))
        return RefinementResult(predicate=predicate, attempts=tuple(attempts))
    return RefinementResult(predicate=None, attempts=tuple(attempts))
