"""Command-line interface.

Exit codes from `verify`: 0 verified, 1 violated, 2 inconclusive, 3 errors.
Other subcommands exit 0 on success and 3 on errors.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .abstraction import PredicateSet
from .dtmc import ReachQuery, check, load_model, reach_probability, save_model, to_dot, first_bit_target
from .errors import ConfigError, TraceVerifyError
from .learn import LearnerConfig, select_model
from .abstraction import abstract_trace_set
from .predicates import parse_predicate
from .report import export_report
from .simulate import ExternalCommandSampler, HiddenDtmcSimulator, sample_batch
from .traces import load_traces, save_traces, trace_statistics
from .verify import (
    INCONCLUSIVE, VERIFIED, VIOLATED, Property, VerifyConfig, parse_property,
    sample_bound, verify_traces,
)

_EXIT = {VERIFIED: 0, VIOLATED: 1, INCONCLUSIVE: 2}


def _load_property(value: str, schema) -> Property:
    candidate = Path(value)
    if candidate.is_file():
        value = candidate.read_text(encoding="utf-8").strip()
    return parse_property(value, schema)


def _make_sampler(spec: str, schema, seed: int):
    kind, _, rest = spec.partition(":")
    if kind == "builtin":
        sim = HiddenDtmcSimulator.load(rest, seed=seed)
        if sim.schema.names != schema.names:
            raise ConfigError(
                "simulator schema does not match the trace schema: "
                f"{sim.schema.names} vs {schema.names}")
        return sim
    if kind == "exec":
        return ExternalCommandSampler(rest, schema=schema)
    raise ConfigError(f"unknown sampler spec {spec!r}; use builtin:<config> or exec:<cmd>")


@click.group()
def cli():
    """Trace-driven probabilistic verification toolkit."""


@cli.command()
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True),
              help="Trace file with the initial system logs.")
@click.option("--property", "property_text", required=True,
              help="Property string 'P <= r [ F <predicate> ]' or a file containing it.")
@click.option("--sampler", "sampler_spec", required=True,
              help="builtin:<simulator config> or exec:<command>.")
@click.option("--alpha", default=0.05, show_default=True, help="Type-I error bound.")
@click.option("--beta", default=0.05, show_default=True, help="Type-II error bound.")
@click.option("--delta", default=0.05, show_default=True, help="Indifference half-width.")
@click.option("--epsilon-max", default=64.0, show_default=True,
              help="Upper end of the merge-aggressiveness search grid.")
@click.option("--max-iterations", default=50, show_default=True)
@click.option("--k-max", default=10**6, show_default=True,
              help="Counterexample path budget.")
@click.option("--max-samples", default=100_000, show_default=True,
              help="Hypothesis-testing sample budget.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "outdir", default=None, type=click.Path(),
              help="Report directory (reports, model exports, figures).")
@click.option("--figures/--no-figures", default=True, show_default=True)
def verify(traces_path, property_text, sampler_spec, alpha, beta, delta,
           epsilon_max, max_iterations, k_max, max_samples, seed, outdir, figures):
    """Verify a reachability property against logged traces and a live sampler."""
    traceset = load_traces(traces_path)
    prop = _load_property(property_text, traceset.schema)
    config = VerifyConfig(
        epsilon_max=epsilon_max, alpha=alpha, beta=beta, delta=delta,
        max_iterations=max_iterations, k_max=k_max, max_samples=max_samples,
        seed=seed,
    )
    sampler = _make_sampler(sampler_spec, traceset.schema, seed)
    report = verify_traces(traceset, prop, config, sampler)
    click.echo(f"verdict: {report.verdict}")
    click.echo(f"reason: {report.reason}")
    for line in report.predicates:
        click.echo(f"predicate: {line}")
    if outdir:
        written = export_report(report, outdir, traceset=traceset, figures=figures)
        for name, path in sorted(written.items()):
            click.echo(f"wrote {name}: {path}")
    return _EXIT[report.verdict]


@cli.command()
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True))
@click.option("--predicate", "predicate_texts", multiple=True, required=True,
              help="Abstraction predicate; repeat for several.")
@click.option("--epsilon-max", default=64.0, show_default=True)
@click.option("--out", "outdir", default=None, type=click.Path())
def learn(traces_path, predicate_texts, epsilon_max, outdir):
    """Learn a DTMC from traces under a fixed predicate abstraction."""
    traceset = load_traces(traces_path)
    pset = PredicateSet([parse_predicate(t, traceset.schema) for t in predicate_texts])
    abstract = abstract_trace_set(pset, traceset)
    selection = select_model(abstract, LearnerConfig(epsilon_max=epsilon_max))
    click.echo(f"selected epsilon: {selection.epsilon:g}")
    for cand in selection.candidates:
        click.echo(f"  epsilon={cand.epsilon:<8g} states={cand.n_states:<6d} "
                   f"bic={cand.bic:.6f}")
    if outdir:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        save_model(selection.model.dtmc, out / "model.dtmc")
        (out / "model.dot").write_text(to_dot(selection.model.dtmc), encoding="utf-8")
        click.echo(f"wrote {out / 'model.dtmc'} and {out / 'model.dot'}")
    return 0


@cli.command("check")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", required=True, type=float)
@click.option("--solution", is_flag=True, help="Print the per-state solution vector.")
def check_model(model_path, threshold, solution):
    """Model-check P <= r [ F target ] on an explicit-state model.

    The target is every state whose tag has first bit 1 (the property atom is
    predicate 0 of the abstraction that produced the model).
    """
    model = load_model(model_path)
    result = check(model, ReachQuery(threshold, first_bit_target))
    click.echo(f"probability: {result.probability!r}")
    click.echo("satisfied" if result.satisfied else "violated")
    if solution:
        _, vector = reach_probability(model, first_bit_target, return_vector=True)
        for i, value in enumerate(vector):
            click.echo(f"  state {i} ({model.tags[i]}): {value!r}")
    return 0 if result.satisfied else 1


@cli.command()
@click.option("--sampler", "sampler_spec", required=True,
              help="builtin:<simulator config> (sampling needs the seeded simulator).")
@click.option("--count", required=True, type=int)
@click.option("--min-length", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def sample(sampler_spec, count, min_length, seed, out_path):
    """Draw traces from a simulator into a trace file."""
    kind, _, rest = sampler_spec.partition(":")
    if kind != "builtin":
        raise ConfigError("sample requires a builtin:<config> sampler")
    sim = HiddenDtmcSimulator.load(rest, seed=seed)
    traceset = sample_batch(sim, count, min_length)
    save_traces(traceset, out_path)
    click.echo(f"wrote {count} traces to {out_path}")
    return 0


@cli.command()
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True))
@click.option("--out", "outdir", default=None, type=click.Path(),
              help="Also render the trace-length histogram here.")
def stats(traces_path, outdir):
    """Summarize a trace file: coverage and length distribution."""
    traceset = load_traces(traces_path)
    st = trace_statistics(traceset)
    click.echo(f"traces: {st.num_traces}")
    click.echo(f"states logged: {st.total_states} ({st.distinct_states} distinct)")
    click.echo(f"lengths: min {st.min_length} mean {st.mean_length:.2f} max {st.max_length}")
    for length, count in st.length_histogram.items():
        click.echo(f"  length {length}: {count}")
    if outdir:
        from . import plots
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        plots.save_length_histogram(st, out / "trace_lengths.png")
        click.echo(f"wrote {out / 'trace_lengths.png'}")
    return 0


@cli.command("sample-bound")
@click.option("--states", "m", required=True, type=int, help="Model state count.")
@click.option("--precision", required=True, type=float)
@click.option("--confidence", required=True, type=float)
def sample_bound_cmd(m, precision, confidence):
    """Per-state visit count for learning probabilities to a target precision."""
    click.echo(sample_bound(m, precision, confidence))
    return 0


def main(argv=None) -> int:
    try:
        result = cli.main(args=argv, standalone_mode=False)
        return int(result) if isinstance(result, int) else 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 3
    except click.ClickException as exc:
        exc.show()
        return 3
    except TraceVerifyError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
