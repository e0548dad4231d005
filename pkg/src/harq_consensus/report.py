"""Delimited exports and figure rendering for run traces and sweeps.

CSV writers use fixed column orders and newline conventions so that two
runs with the same seed produce byte-identical files.  Figures render to
files through the Agg backend; they accompany the CSVs, never replace
them.
"""
from __future__ import annotations

import csv
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .engine import RunTrace  # noqa: E402
from .sweep import SweepResult  # noqa: E402


# -- trace CSVs ----------------------------------------------------------------

def write_states_csv(trace: RunTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "node", "y", "z", "ys", "zs", "q_num", "q_den"])
        for rnd, row in enumerate(trace.states):
            for node, (y, z, ys, zs) in enumerate(row, start=1):
                q = Fraction(ys, zs)
                writer.writerow([rnd, node, y, z, ys, zs, q.numerator, q.denominator])


def write_events_csv(trace: RunTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "src", "dst", "ordinal", "r", "kind", "outcome"])
        writer.writerows(trace.events)


def write_metrics_csv(trace: RunTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "consensus_error", "y_total", "z_total"])
        for rnd, err in enumerate(trace.errors):
            y_total, z_total = trace.totals[rnd]
            writer.writerow([rnd, repr(err), y_total, z_total])


def write_trace_csvs(trace: RunTrace, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {
        "states": out / "states.csv",
        "events": out / "events.csv",
        "metrics": out / "metrics.csv",
    }
    write_states_csv(trace, paths["states"])
    write_events_csv(trace, paths["events"])
    write_metrics_csv(trace, paths["metrics"])
    return paths


# -- trace CSV read-back (round-trip contract) ----------------------------------

def read_states_csv(path: str | Path) -> list[tuple[int, int, int, int, int, int, int, int]]:
    with open(path, newline="") as fh:
        return [
            (int(r["round"]), int(r["node"]), int(r["y"]), int(r["z"]),
             int(r["ys"]), int(r["zs"]), int(r["q_num"]), int(r["q_den"]))
            for r in csv.DictReader(fh)
        ]


def read_events_csv(path: str | Path) -> list[tuple[int, int, int, int, int, str, str]]:
    with open(path, newline="") as fh:
        return [
            (int(r["round"]), int(r["src"]), int(r["dst"]), int(r["ordinal"]),
             int(r["r"]), r["kind"], r["outcome"])
            for r in csv.DictReader(fh)
        ]


def read_metrics_csv(path: str | Path) -> list[tuple[int, float, int, int]]:
    with open(path, newline="") as fh:
        return [
            (int(r["round"]), float(r["consensus_error"]),
             int(r["y_total"]), int(r["z_total"]))
            for r in csv.DictReader(fh)
        ]


# -- sweep CSV -------------------------------------------------------------------

def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    cfg = result.config
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "error_rate", "lambda", "median_iters", "mean_iters",
            "min_iters", "max_iters", "failures",
        ])
        for rate in cfg.error_rates:
            for lam in cfg.lambdas:
                cell = result.cells[(rate, lam)]
                writer.writerow([
                    repr(float(rate)), repr(float(lam)),
                    repr(float(cell.median)), repr(float(cell.mean)),
                    repr(float(cell.min)), repr(float(cell.max)),
                    cell.failures,
                ])


def read_sweep_csv(path: str | Path) -> list[tuple[float, float, float, float, float, float, int]]:
    with open(path, newline="") as fh:
        return [
            (float(r["error_rate"]), float(r["lambda"]), float(r["median_iters"]),
             float(r["mean_iters"]), float(r["min_iters"]), float(r["max_iters"]),
             int(r["failures"]))
            for r in csv.DictReader(fh)
        ]


# -- figures ----------------------------------------------------------------------

def plot_error_curve(trace: RunTrace, path: str | Path) -> None:
    """Consensus error per round."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(trace.errors)), trace.errors, marker="o", markersize=3)
    ax.set_xlabel("round")
    ax.set_ylabel("consensus error")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)


def plot_node_outputs(trace: RunTrace, path: str | Path) -> None:
    """Each node's output ratio per round, with the exact average marked."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    rounds = range(len(trace.states))
    for node in range(1, trace.node_count + 1):
        series = [
            row[node - 1][2] / row[node - 1][3] for row in trace.states
        ]
        ax.plot(rounds, series, label=f"node {node}")
    ax.axhline(trace.y_target / trace.node_count, color="black",
               linestyle="--", linewidth=0.8, label="average")
    ax.set_xlabel("round")
    ax.set_ylabel("output ratio")
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)


def write_trace_figures(trace: RunTrace, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {
        "error_curve": out / "error_curve.png",
        "node_outputs": out / "node_outputs.png",
    }
    plot_error_curve(trace, paths["error_curve"])
    plot_node_outputs(trace, paths["node_outputs"])
    return paths


def plot_sweep(result: SweepResult, path: str | Path) -> None:
    """Median iterations versus decay value, one line per error rate."""
    cfg = result.config
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for rate in cfg.error_rates:
        medians = [result.cells[(rate, lam)].median for lam in cfg.lambdas]
        ax.plot(cfg.lambdas, medians, marker="o", markersize=3,
                label=f"error rate {rate:g}")
    ax.set_xlabel("retransmission decay")
    ax.set_ylabel("median rounds to convergence")
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)


def write_sweep_outputs(result: SweepResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"sweep": out / "sweep.csv", "figure": out / "sweep_medians.png"}
    write_sweep_csv(result, paths["sweep"])
    plot_sweep(result, paths["figure"])
    return paths
