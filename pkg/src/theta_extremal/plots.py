"""Figure rendering for solver reports and bubble sweeps.

Figures are written next to the delimited output files; rendering uses the
Agg backend so the CLI stays headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_solve_report(report, path) -> None:
    """Two panels: support weights, and per-restart energies vs closed form."""
    measure = report.best_measure
    fig, (ax_w, ax_e) = plt.subplots(1, 2, figsize=(9, 3.6))

    idx = np.arange(measure.support_size)
    ax_w.bar(idx, measure.weights, color="tab:blue")
    ax_w.set_xlabel("support atom")
    ax_w.set_ylabel("weight")
    ax_w.set_title(f"merged support ({measure.support_size} atoms)")

    energies = np.asarray(report.restart_energies, dtype=float)
    ax_e.plot(np.arange(energies.size), energies, "o", ms=4, label="restart energy")
    ax_e.axhline(report.energy, color="tab:green", lw=1, label="best")
    if report.closed_form is not None:
        ax_e.axhline(report.closed_form, color="tab:red", ls="--", lw=1, label="closed form")
    ax_e.set_xlabel("restart")
    ax_e.set_ylabel("energy")
    ax_e.set_title(f"n={report.n} m={report.m} theta={report.theta:g}")
    ax_e.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(rows, path) -> None:
    """Convergence panels: rel_err vs eps, and R against the target constant."""
    eps = np.array([r.eps for r in rows])
    rel = np.array([r.rel_err for r in rows])
    quotients = np.array([r.R for r in rows])
    target = rows[0].target
    fig, (ax_err, ax_q) = plt.subplots(1, 2, figsize=(9, 3.6))

    ax_err.loglog(eps, rel, "o-", color="tab:blue")
    ax_err.axhline(0.10, color="tab:gray", ls=":", lw=1)
    ax_err.set_xlabel("eps")
    ax_err.set_ylabel("|R - target| / target")
    ax_err.set_title("Rayleigh quotient convergence")
    ax_err.invert_xaxis()

    ax_q.semilogx(eps, quotients, "s-", color="tab:orange", label="R(eps)")
    ax_q.axhline(target, color="tab:red", ls="--", lw=1, label="target")
    ax_q.set_xlabel("eps")
    ax_q.set_ylabel("R")
    ax_q.set_title("quotient vs limit")
    ax_q.legend(fontsize=8)
    ax_q.invert_xaxis()

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
