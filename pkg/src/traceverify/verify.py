"""The verification loop: abstract, learn, check, validate, refine.

Each iteration abstracts the traces with the current predicates, learns a
DTMC, and model-checks the reachability property.  A satisfied check ends the
run as verified (the model is the supporting evidence, valid provided the
model is correct).  Otherwise a smallest counterexample is built and tested
against fresh system samples; a confirmed counterexample ends the run as
violated with the configured error bounds, while a spurious one drives one
refinement step and the loop repeats on the enlarged trace set.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field

from .abstraction import PredicateSet, abstract_trace_set
from .counterexample import Counterexample, Exhausted, Truncated, build_counterexample
from .dtmc import first_bit_target, reach_probability
from .errors import ConfigError, PropertyError
from .learn import LearnedDTMC, LearnerConfig, ModelSelection, select_model
from .predicates import Predicate, parse_predicate
from .refinement import RefinementResult, identify_spurious_transitions, refine
from .simulate import Sampler
from .sprt import ACCEPT_H0, ACCEPT_H1, SprtConfig, SprtTranscript, clamp_delta, test_counterexample
from .traces import TraceSet

VERIFIED = "verified"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

_PROPERTY_RE = re.compile(r"^\s*P\s*<=\s*(?P<r>[0-9.eE+-]+)\s*\[\s*F\s+(?P<pred>.+?)\s*\]\s*$")


@dataclass(frozen=True)
class Property:
    """Safety query: probability of eventually satisfying `condition` is <= threshold."""

    threshold: float
    condition: Predicate
    text: str

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise PropertyError("threshold must lie in [0, 1]")


def parse_property(text: str, schema=None) -> Property:
    """Parse ``P <= <r> [ F <predicate> ]``.

    Only the inclusive-upper-bound form is supported; anything else is a
    parse error with a column position.
    """
    match = _PROPERTY_RE.match(text)
    if match is None:
        stripped = text.lstrip()
        col = len(text) - len(stripped) + 1
        if not stripped.startswith("P"):
            raise PropertyError(f"expected 'P' at column {col}")
        after = stripped[1:].lstrip()
        if not after.startswith("<="):
            col = len(text) - len(after) + 1
            raise PropertyError(f"only 'P <= r [ F ... ]' is supported (column {col})")
        raise PropertyError("malformed property; expected P <= r [ F <predicate> ]")
    try:
        threshold = float(match.group("r"))
    except ValueError:
        raise PropertyError(f"bad threshold {match.group('r')!r}") from None
    if not 0.0 <= threshold <= 1.0:
        raise PropertyError(f"threshold {threshold} outside [0, 1]")
    condition = parse_predicate(match.group("pred"), schema)
    return Property(threshold=threshold, condition=condition, text=text.strip())


def sample_bound(m: int, precision: float, confidence: float) -> int:
    """Per-state visit count needed to learn transition probabilities to
    `precision` with failure probability below `confidence`.

    Smallest integer n with 2 m^2 exp(-2 n precision^2) <= confidence.
    """
    if m < 1:
        raise ConfigError("state count must be >= 1")
    if not 0.0 < precision < 1.0 or not 0.0 < confidence < 1.0:
        raise ConfigError("precision and confidence must lie in (0, 1)")
    return math.ceil(math.log(2.0 * m * m / confidence) / (2.0 * precision**2))


@dataclass(frozen=True)
class VerifyConfig:
    epsilon_max: float = 64.0
    alpha: float = 0.05
    beta: float = 0.05
    delta: float = 0.05
    max_iterations: int = 50
    k_max: int = 10**6
    max_samples: int = 100_000
    seed: int = 0
    svm_penalty: float = 1e4
    svm_accuracy: float = 0.99
    bic_penalty: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        SprtConfig(self.alpha, self.beta, self.delta, self.max_samples)
        LearnerConfig(epsilon_max=self.epsilon_max).grid()


@dataclass
class IterationRecord:
    index: int
    num_predicates: int
    epsilon: float
    states: int
    bic: float
    probability: float
    counterexample_paths: int | None = None
    counterexample_total: float | None = None
    sprt_verdict: str | None = None
    sprt_samples: int | None = None
    sprt_successes: int | None = None
    refinement: RefinementResult | None = None
    timings: dict = field(default_factory=dict)


@dataclass
class VerifyReport:
    verdict: str
    reason: str
    property: Property
    config: VerifyConfig
    predicates: list[str]
    iterations: list[IterationRecord]
    model: LearnedDTMC | None = None
    selection: ModelSelection | None = None
    counterexample: Counterexample | None = None
    transcript: SprtTranscript | None = None
    delta_used: float | None = None
    trace_count: int = 0


def verify_traces(traceset: TraceSet, prop: Property, config: VerifyConfig,
                  sampler: Sampler) -> VerifyReport:
    """Run the full loop until a verdict or an inconclusive stop."""
    prop.condition.check_schema(traceset.schema)
    delta, clamped = clamp_delta(prop.threshold, config.delta)
    if delta <= 0.0:
        raise ConfigError(
            "threshold leaves no room for an indifference region; "
            "hypothesis testing is degenerate"
        )
    sprt_config = SprtConfig(config.alpha, config.beta, delta, config.max_samples)
    learner_config = LearnerConfig(
        epsilon_max=config.epsilon_max, bic_penalty=config.bic_penalty)

    pset = PredicateSet([prop.condition])
    traces = traceset
    iterations: list[IterationRecord] = []
    report = VerifyReport(
        verdict=INCONCLUSIVE, reason="", property=prop, config=config,
        predicates=pset.displays(), iterations=iterations, delta_used=delta,
    )

    def finish(verdict, reason, **kw):
        report.verdict = verdict
        report.reason = reason
        report.predicates = pset.displays()
        report.trace_count = len(traces)
        for key, value in kw.items():
            setattr(report, key, value)
        return report

    for iteration in range(1, config.max_iterations + 1):
        timings = {}
        t0 = time.perf_counter()
        abstract = abstract_trace_set(pset, traces)
        timings["abstraction"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        selection = select_model(abstract, learner_config)
        model = selection.model
        timings["learning"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        probability = reach_probability(model.dtmc, first_bit_target)
        timings["model_checking"] = time.perf_counter() - t0

        best = [c for c in selection.candidates if c.epsilon == selection.epsilon][0]
        record = IterationRecord(
            index=iteration, num_predicates=len(pset), epsilon=selection.epsilon,
            states=model.n_states, bic=best.bic, probability=probability,
            timings=timings,
        )
        iterations.append(record)

        if probability <= prop.threshold:
            return finish(VERIFIED,
                          "model satisfies the property (valid if the model is correct)",
                          model=model, selection=selection)

        t0 = time.perf_counter()
        built = build_counterexample(model.dtmc, first_bit_target,
                                     prop.threshold, config.k_max)
        timings["counterexample"] = time.perf_counter() - t0
        if isinstance(built, Truncated):
            return finish(INCONCLUSIVE,
                          f"counterexample enumeration truncated after "
                          f"{built.paths_seen} paths (mass {built.total:.6g})",
                          model=model, selection=selection)
        if isinstance(built, Exhausted):
            return finish(INCONCLUSIVE,
                          "counterexample enumeration exhausted below the threshold; "
                          "solver and enumerator disagree",
                          model=model, selection=selection)
        cex: Counterexample = built
        record.counterexample_paths = len(cex.paths)
        record.counterexample_total = cex.total

        t0 = time.perf_counter()
        transcript, drawn = test_counterexample(
            cex, sampler, pset, model.dtmc, prop.threshold, sprt_config)
        timings["hypothesis_testing"] = time.perf_counter() - t0
        record.sprt_verdict = transcript.verdict
        record.sprt_samples = transcript.n
        record.sprt_successes = transcript.successes
        if drawn is not None:
            traces = traces.extend(drawn)

        if transcript.verdict == ACCEPT_H0:
            return finish(VIOLATED,
                          "counterexample confirmed by hypothesis testing",
                          model=model, selection=selection, counterexample=cex,
                          transcript=transcript)
        if transcript.verdict != ACCEPT_H1:
            return finish(INCONCLUSIVE,
                          f"hypothesis testing hit the sampling budget "
                          f"({config.max_samples} samples) without a verdict",
                          model=model, selection=selection, counterexample=cex,
                          transcript=transcript)

        t0 = time.perf_counter()
        ranked = identify_spurious_transitions(traces, model, pset)
        result = refine(traces, model, pset, ranked,
                        penalty=config.svm_penalty,
                        accuracy_threshold=config.svm_accuracy)
        timings["refinement"] = time.perf_counter() - t0
        record.refinement = result
        if result.predicate is None:
            return finish(INCONCLUSIVE,
                          "no spurious transition admits a separating predicate; "
                          "verification unsuccessful",
                          model=model, selection=selection, counterexample=cex,
                          transcript=transcript)
        pset = pset.extended(result.predicate)

    return finish(INCONCLUSIVE,
                  f"no verdict within {config.max_iterations} iterations")
