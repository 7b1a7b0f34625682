"""Figure rendering for the command-line reports.

Every function writes one PNG next to the delimited output and returns
the path.  The Agg backend is forced so runs work headless; figures are
closed after saving to keep batch runs bounded in memory.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "convergence_plot",
    "km_partial_plot",
    "resolvent_plot",
    "certificate_plot",
    "trajectory_plot",
]

_DPI = 150


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def convergence_plot(run, path: str, xlabel: str = "Carleman level N") -> str:
    """Semilog error curves of a sweep, with the decay bound if present."""
    fig, ax = plt.subplots(figsize=(6, 4))
    series = [("e1", run.e1, "o-"), ("eta2", run.eta2, "s-"), ("eta3", run.eta3, "d-")]
    for name, values, style in series:
        mask = np.isfinite(values) & (values > 0)
        if np.any(mask):
            ax.semilogy(run.sweep[mask], values[mask], style, label=name)
    mask = np.isfinite(run.bound_eta1) & (run.bound_eta1 > 0)
    if np.any(mask):
        ax.semilogy(run.sweep[mask], run.bound_eta1[mask], "k--", label="bound")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def km_partial_plot(cutoffs, values, tails, path: str) -> str:
    """Partial double sums against the cutoff, with tail estimates."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cutoffs, values, "o-", label="partial sum")
    ax.plot(cutoffs, np.asarray(values) + np.asarray(tails), "s--", label="sum + tail")
    ax.set_xlabel("cutoff P")
    ax.set_ylabel("K_M partial value")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def resolvent_plot(probes, path: str) -> str:
    """Measured resolvent norms against the proven bound, log-log."""
    lams = [p.lam for p in probes]
    norms = [p.norm_R for p in probes]
    bounds = [p.bound for p in probes]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(lams, norms, "o-", label="||R(lambda)||")
    ax.loglog(lams, bounds, "k--", label="bound")
    ax.set_xlabel("lambda")
    ax.set_ylabel("norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def certificate_plot(report, path: str) -> str:
    """Largest eigenvalue per certificate on a symmetric log scale."""
    names = [c.name for c in report.certificates]
    values = [c.value for c in report.certificates]
    colors = ["tab:green" if c.passed else "tab:red" for c in report.certificates]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values, color=colors)
    ax.axhline(report.tolerance, color="k", linestyle="--", linewidth=1, label="tolerance")
    ax.set_yscale("symlog", linthresh=max(report.tolerance, 1e-16))
    ax.set_ylabel("lambda_max")
    ax.legend()
    return _save(fig, path)


def trajectory_plot(times, states, path: str, labels=None) -> str:
    """Coordinate magnitudes |u_k(t)| of a level-1 trajectory."""
    states = np.asarray(states)
    fig, ax = plt.subplots(figsize=(6, 4))
    for k in range(states.shape[1]):
        label = None if labels is None else labels[k]
        ax.plot(times, np.abs(states[:, k]), label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("|u_k(t)|")
    ax.grid(True, alpha=0.3)
    if labels is not None and len(labels) <= 12:
        ax.legend(ncol=2, fontsize=8)
    return _save(fig, path)
