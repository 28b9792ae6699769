"""Sequential probability ratio test for counterexample mass.

H0: the concrete mass of the counterexample exceeds the threshold r (the
counterexample is real).  H1: it does not (spurious).  The test draws fresh
traces, scores each as a Bernoulli success when the abstracted trace walks
into the counterexample, and accumulates the log ratio of the success
likelihood under p1 = r + delta versus p0 = r - delta.  It accepts H0 once the
ratio reaches (1-beta)/alpha and H1 once it falls to beta/(1-alpha); the two
error probabilities are then bounded by alpha and beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .abstraction import PredicateSet, abstract_trace
from .counterexample import Counterexample, member
from .dtmc import Dtmc
from .errors import ConfigError
from .simulate import Sampler
from .traces import TraceSet

ACCEPT_H0 = "accept_h0"
ACCEPT_H1 = "accept_h1"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SprtConfig:
    alpha: float = 0.05
    beta: float = 0.05
    delta: float = 0.05
    max_samples: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5 or not 0.0 < self.beta < 0.5:
            raise ConfigError("alpha and beta must lie in (0, 0.5)")
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if self.max_samples < 0:
            raise ConfigError("max_samples must be >= 0")


def clamp_delta(threshold: float, delta: float) -> tuple[float, bool]:
    """Shrink delta so the indifference region stays inside (0, 1)."""
    limit = min(delta, threshold / 2.0, (1.0 - threshold) / 2.0)
    return limit, limit < delta


@dataclass
class SprtTranscript:
    """Running state of one test; the verdict is set exactly once."""

    p0: float
    p1: float
    upper: float                       # ln((1-beta)/alpha): accept H0 at/above
    lower: float                       # ln(beta/(1-alpha)): accept H1 at/below
    n: int = 0
    successes: int = 0
    log_ratio: float = 0.0
    verdict: str | None = None
    records: list = field(default_factory=list)   # (success, log_ratio) per sample
    out_of_model: int = 0

    def dump(self) -> str:
        lines = ["# index success log_ratio"]
        for i, (success, ratio) in enumerate(self.records, start=1):
            lines.append(f"{i} {int(success)} {ratio!r}")
        lines.append(f"# verdict: {self.verdict or 'none'}")
        lines.append(f"# samples: {self.n}  successes: {self.successes}")
        lines.append(f"# p0: {self.p0!r}  p1: {self.p1!r}")
        lines.append(f"# thresholds: lower {self.lower!r}  upper {self.upper!r}")
        lines.append(f"# out_of_model: {self.out_of_model}")
        return "\n".join(lines) + "\n"


def start_test(threshold: float, config: SprtConfig) -> SprtTranscript:
    delta, _ = clamp_delta(threshold, config.delta)
    p0 = threshold - delta
    p1 = threshold + delta
    if p0 <= 0.0 or p1 >= 1.0:
        raise ConfigError(
            f"degenerate test: p0={p0}, p1={p1}; threshold too close to 0 or 1"
        )
    return SprtTranscript(
        p0=p0,
        p1=p1,
        upper=math.log((1.0 - config.beta) / config.alpha),
        lower=math.log(config.beta / (1.0 - config.alpha)),
    )


def sprt_step(transcript: SprtTranscript, success: bool) -> SprtTranscript:
    """Fold one Bernoulli observation into the running log ratio."""
    if transcript.verdict is not None:
        raise ConfigError("test already reached a verdict")
    if success:
        transcript.successes += 1
        transcript.log_ratio += math.log(transcript.p1 / transcript.p0)
    else:
        transcript.log_ratio += math.log((1.0 - transcript.p1) / (1.0 - transcript.p0))
    transcript.n += 1
    transcript.records.append((success, transcript.log_ratio))
    if transcript.log_ratio >= transcript.upper:
        transcript.verdict = ACCEPT_H0
    elif transcript.log_ratio <= transcript.lower:
        transcript.verdict = ACCEPT_H1
    return transcript


def test_counterexample(
    cex: Counterexample,
    sampler: Sampler,
    pset: PredicateSet,
    model: Dtmc,
    threshold: float,
    config: SprtConfig,
) -> tuple[SprtTranscript, TraceSet | None]:
    """Run the test against live samples; returns the transcript and all traces drawn.

    Samples are at least as long as the longest counterexample path (shorter
    traces cannot witness membership).  Hitting max_samples without a verdict
    leaves the transcript inconclusive.  The drawn traces are returned for
    reuse so sampling effort feeds the next refinement.
    """
    transcript = start_test(threshold, config)
    min_length = cex.max_path_length()
    drawn = []
    while transcript.verdict is None:
        if transcript.n >= config.max_samples:
            transcript.verdict = INCONCLUSIVE
            break
        trace = sampler.next_trace(min_length)
        drawn.append(trace)
        symbols = abstract_trace(pset, trace, sampler.schema)
        result = member(cex, model, symbols)
        if result.out_of_model:
            transcript.out_of_model += 1
        sprt_step(transcript, result.hit)
    traceset = TraceSet(sampler.schema, tuple(drawn)) if drawn else None
    return transcript, traceset
