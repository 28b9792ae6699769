"""Figure rendering for verification reports.

Uses the object-oriented matplotlib API (no pyplot, no global state) so the
library stays backend-free; figures are written straight to PNG files.
"""

from __future__ import annotations

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

RC = {
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}

_PNG_METADATA = {"Software": "traceverify"}


def _new_figure(width=6.4, height=4.0):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig


def _save(fig: Figure, path) -> None:
    for ax in fig.axes:
        ax.grid(alpha=RC["grid.alpha"])
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)


def save_iteration_figure(report, path) -> None:
    """States, predicates and checked probability per loop iteration."""
    records = report.iterations
    idx = [r.index for r in records]
    fig = _new_figure(6.4, 4.8)
    ax1 = fig.add_subplot(2, 1, 1)
    ax1.plot(idx, [r.states for r in records], "o-", label="model states")
    ax1.plot(idx, [r.num_predicates for r in records], "s--", label="predicates")
    ax1.set_ylabel("count")
    ax1.legend(loc="best")
    ax2 = fig.add_subplot(2, 1, 2, sharex=ax1)
    ax2.plot(idx, [r.probability for r in records], "o-", color="tab:red",
             label="reach probability")
    ax2.axhline(report.property.threshold, color="gray", linestyle=":",
                label="threshold")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("probability")
    ax2.set_ylim(-0.05, 1.05)
    ax2.legend(loc="best")
    _save(fig, path)


def save_length_histogram(statistics, path) -> None:
    """Trace-length histogram from a TraceStatistics summary."""
    fig = _new_figure()
    ax = fig.add_subplot(1, 1, 1)
    lengths = sorted(statistics.length_histogram)
    counts = [statistics.length_histogram[k] for k in lengths]
    ax.bar(lengths, counts, width=0.8, color="tab:blue")
    ax.set_xlabel("trace length")
    ax.set_ylabel("traces")
    ax.set_title(f"{statistics.num_traces} traces, "
                 f"{statistics.distinct_states} distinct states")
    _save(fig, path)


def save_epsilon_figure(selection, path) -> None:
    """Information-criterion score per merge-aggressiveness candidate."""
    fig = _new_figure()
    ax = fig.add_subplot(1, 1, 1)
    eps = [c.epsilon for c in selection.candidates]
    bic = [c.bic for c in selection.candidates]
    ax.plot(eps, bic, "o-")
    ax.axvline(selection.epsilon, color="tab:red", linestyle=":",
               label=f"selected {selection.epsilon:g}")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("BIC score")
    ax.legend(loc="best")
    _save(fig, path)
