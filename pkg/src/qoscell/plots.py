"""Figure rendering for run and sweep outputs.

Figures are a convenience companion to the CSV outputs: the CSVs stay the
contract, the PNGs give a quick visual check of the same numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_cdf(samples_by_label: dict[str, np.ndarray], path, title: str = "") -> None:
    """Empirical rate CDF, one curve per label."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, samples in samples_by_label.items():
        s = np.sort(np.asarray(samples, dtype=float))
        if s.size == 0:
            continue
        ax.step(s, np.arange(1, s.size + 1) / s.size, where="post", label=label)
    ax.set_xlabel("rate (bits/s)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if samples_by_label:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace(trace_rows: list[dict], path, title: str = "") -> None:
    """Objective and max multiplier across association rounds."""
    if not trace_rows:
        return
    it = [r["iteration"] for r in trace_rows]
    obj = [r["objective"] for r in trace_rows]
    mu_max = [max(r["mu"]) if len(r["mu"]) else 0.0 for r in trace_rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.4), sharex=True)
    ax1.plot(it, obj, marker="o", ms=3)
    ax1.set_ylabel("admitted objective")
    ax1.grid(True, alpha=0.3)
    ax2.plot(it, mu_max, marker="o", ms=3, color="tab:red")
    ax2.set_ylabel("max multiplier")
    ax2.set_xlabel("round")
    ax2.grid(True, alpha=0.3)
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(rows: list[dict], axis: str, metric: str, path, title: str = "") -> None:
    """Median metric vs the sweep axis, one line per algorithm with an
    inter-quartile band when available."""
    algos = sorted({r["algorithm"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    plotted = False
    for algo in algos:
        mine = sorted((r for r in rows if r["algorithm"] == algo), key=lambda r: r["value"])
        xs = [r["value"] for r in mine if r.get(f"{metric}_median") is not None]
        med = [r[f"{metric}_median"] for r in mine if r.get(f"{metric}_median") is not None]
        if not xs:
            continue
        lo = [r.get(f"{metric}_p25") for r in mine if r.get(f"{metric}_median") is not None]
        hi = [r.get(f"{metric}_p75") for r in mine if r.get(f"{metric}_median") is not None]
        ax.plot(xs, med, marker="o", label=algo)
        if all(v is not None for v in lo) and all(v is not None for v in hi):
            ax.fill_between(xs, lo, hi, alpha=0.15)
        plotted = True
    ax.set_xlabel(axis.replace("_", " "))
    ax.set_ylabel(metric.replace("_", " "))
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if plotted:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
