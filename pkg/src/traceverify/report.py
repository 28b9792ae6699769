"""Report rendering.

Writes the machine-readable report (byte-identical across runs with the same
inputs and seed; wall-clock timings deliberately stay out of it), the human
summary, model exports in the explicit-state and DOT formats, the
counterexample and hypothesis-testing transcripts, the refinement log, and
matplotlib figures.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import plots
from .dtmc import save_model, to_dot
from .traces import TraceSet, trace_statistics
from .verify import VERIFIED, VIOLATED, VerifyReport


def _model_payload(model):
    dtmc = model.dtmc
    return {
        "states": dtmc.n_states,
        "tags": list(dtmc.tags),
        "addresses": list(model.addresses),
        "initial": [[i, float(p)] for i, p in enumerate(dtmc.init) if p > 0],
        "transitions": [
            [i, j, float(dtmc.rows[i][j])]
            for i in range(dtmc.n_states) for j in sorted(dtmc.rows[i])
        ],
    }


def _counterexample_payload(cex, tags):
    return {
        "total_probability": cex.total,
        "threshold": cex.threshold,
        "paths": [
            {
                "states": list(p.states),
                "tags": [tags[s] for s in p.states],
                "probability": p.probability,
            }
            for p in cex.paths
        ],
    }


def report_payload(report: VerifyReport) -> dict:
    """The deterministic machine-readable structure (no wall-clock data)."""
    payload = {
        "verdict": report.verdict,
        "reason": report.reason,
        "property": {
            "text": report.property.text,
            "threshold": report.property.threshold,
            "condition": report.property.condition.display(),
        },
        "predicates": list(report.predicates),
        "seed": report.config.seed,
        "trace_count": report.trace_count,
        "config": {
            "epsilon_max": report.config.epsilon_max,
            "alpha": report.config.alpha,
            "beta": report.config.beta,
            "delta": report.config.delta,
            "delta_used": report.delta_used,
            "max_iterations": report.config.max_iterations,
            "k_max": report.config.k_max,
            "max_samples": report.config.max_samples,
            "svm_penalty": report.config.svm_penalty,
            "svm_accuracy": report.config.svm_accuracy,
            "bic_penalty": report.config.bic_penalty,
        },
        "iterations": [
            {
                "index": r.index,
                "predicates": r.num_predicates,
                "epsilon": r.epsilon,
                "states": r.states,
                "bic": r.bic,
                "probability": r.probability,
                "counterexample_paths": r.counterexample_paths,
                "counterexample_total": r.counterexample_total,
                "sprt": None if r.sprt_verdict is None else {
                    "verdict": r.sprt_verdict,
                    "samples": r.sprt_samples,
                    "successes": r.sprt_successes,
                },
            }
            for r in report.iterations
        ],
    }
    if report.verdict == VIOLATED:
        payload["error_bounds"] = {
            "alpha": report.config.alpha,
            "beta": report.config.beta,
            "delta": report.delta_used,
        }
    if report.model is not None:
        payload["model"] = _model_payload(report.model)
    if report.counterexample is not None:
        payload["counterexample"] = _counterexample_payload(
            report.counterexample, report.model.dtmc.tags)
    if report.transcript is not None:
        payload["sprt"] = {
            "verdict": report.transcript.verdict,
            "samples": report.transcript.n,
            "successes": report.transcript.successes,
            "log_ratio": report.transcript.log_ratio,
            "lower": report.transcript.lower,
            "upper": report.transcript.upper,
            "p0": report.transcript.p0,
            "p1": report.transcript.p1,
            "out_of_model": report.transcript.out_of_model,
        }
    return payload


def render_summary(report: VerifyReport) -> str:
    lines = [
        f"verdict: {report.verdict}",
        f"reason: {report.reason}",
        f"property: {report.property.text}",
        f"predicates ({len(report.predicates)}):",
    ]
    lines.extend(f"  [{i}] {p}" for i, p in enumerate(report.predicates))
    if report.verdict == VERIFIED:
        lines.append("note: the property is verified provided the learned model is a")
        lines.append("      correct model of the system; the exported model is the proof")
        lines.append("      obligation to review or validate.")
    if report.verdict == VIOLATED:
        lines.append(
            f"error bounds: alpha={report.config.alpha} beta={report.config.beta} "
            f"delta={report.delta_used}")
    lines.append("")
    lines.append("iterations:")
    for r in report.iterations:
        lines.append(
            f"  {r.index}: |P|={r.num_predicates} eps={r.epsilon:g} "
            f"states={r.states} P(F target)={r.probability:.6g}")
        if r.counterexample_paths is not None:
            lines.append(
                f"     counterexample: {r.counterexample_paths} paths, "
                f"mass {r.counterexample_total:.6g}; "
                f"sprt {r.sprt_verdict} after {r.sprt_samples} samples")
        if r.refinement is not None and r.refinement.predicate is not None:
            lines.append(f"     new predicate: {r.refinement.predicate.display()}")
        if r.timings:
            spent = " ".join(f"{k}={v:.3f}s" for k, v in r.timings.items())
            lines.append(f"     time: {spent}")
    if report.model is not None:
        lines.append("")
        lines.append(f"final model: {report.model.n_states} states")
        bound = _planner_line(report.model.n_states)
        lines.append(bound)
    return "\n".join(lines) + "\n"


def _planner_line(states: int) -> str:
    from .verify import sample_bound
    n0 = sample_bound(states, 0.05, 0.05)
    return (f"sample planner: learning a {states}-state model to precision 0.05 "
            f"with 95% confidence needs every state visited >= {n0} times")


def render_counterexample(cex, tags) -> str:
    lines = [
        f"# accumulated_probability {cex.total!r}",
        f"# threshold {cex.threshold!r}",
        "# probability  tag-path  state-path",
    ]
    for p in cex.paths:
        tag_path = ">".join(tags[s] for s in p.states)
        state_path = ",".join(str(s) for s in p.states)
        lines.append(f"{p.probability!r} {tag_path} {state_path}")
    return "\n".join(lines) + "\n"


def render_refinement_log(report: VerifyReport) -> str:
    lines = []
    for r in report.iterations:
        if r.refinement is None:
            continue
        lines.append(f"iteration {r.index}:")
        for a in r.refinement.attempts:
            head = (f"  transition {a.source}->{a.dest} p_diff={a.p_diff:.6g} "
                    f"-> {a.outcome}")
            if a.accuracy is not None:
                head += (f" (positives={a.positives} negatives={a.negatives} "
                         f"accuracy={a.accuracy:.4f})")
            elif a.positives or a.negatives:
                head += f" (positives={a.positives} negatives={a.negatives})"
            lines.append(head)
            if a.predicate is not None:
                lines.append(f"    predicate: {a.predicate}")
    if not lines:
        lines = ["no refinement attempts"]
    return "\n".join(lines) + "\n"


def export_report(report: VerifyReport, outdir, traceset: TraceSet | None = None,
                  figures: bool = True) -> dict[str, Path]:
    """Write every artifact into `outdir` and return the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    path = outdir / "report.json"
    payload = report_payload(report)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    written["report"] = path

    path = outdir / "summary.txt"
    path.write_text(render_summary(report), encoding="utf-8")
    written["summary"] = path

    if report.model is not None:
        path = outdir / "model.dtmc"
        save_model(report.model.dtmc, path)
        written["model"] = path
        path = outdir / "model.dot"
        path.write_text(to_dot(report.model.dtmc), encoding="utf-8")
        written["dot"] = path

    if report.counterexample is not None and report.model is not None:
        path = outdir / "counterexample.txt"
        path.write_text(
            render_counterexample(report.counterexample, report.model.dtmc.tags),
            encoding="utf-8")
        written["counterexample"] = path

    if report.transcript is not None:
        path = outdir / "sprt.log"
        path.write_text(report.transcript.dump(), encoding="utf-8")
        written["sprt"] = path

    path = outdir / "refinement.log"
    path.write_text(render_refinement_log(report), encoding="utf-8")
    written["refinement"] = path

    if figures:
        figdir = outdir / "figures"
        figdir.mkdir(exist_ok=True)
        if report.iterations:
            plots.save_iteration_figure(report, figdir / "iterations.png")
            written["iterations_fig"] = figdir / "iterations.png"
        if report.selection is not None:
            plots.save_epsilon_figure(report.selection, figdir / "epsilon.png")
            written["epsilon_fig"] = figdir / "epsilon.png"
        if traceset is not None:
            plots.save_length_histogram(trace_statistics(traceset),
                                        figdir / "trace_lengths.png")
            written["lengths_fig"] = figdir / "trace_lengths.png"
    return written
