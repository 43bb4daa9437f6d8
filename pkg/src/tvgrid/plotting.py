"""Figure rendering for the report paths.

Uses the Agg backend so figures render headlessly to files next to the CSV
and JSON output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import ExperimentResult, IncoherenceCheckReport, RankCheckReport

__all__ = ["save_grid_figure", "save_rank_check_figure", "save_incoherence_figure"]


def save_grid_figure(result: ExperimentResult, path, dpi: int = 150) -> None:
    """Median NRMSE against total sampling ratio, one line per method."""
    methods = sorted({c.method for c in result.cells})
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for method in methods:
        pts = sorted((c.rho_total, c.median_nrmse)
                     for c in result.cells if c.method == method)
        ax.plot([100.0 * p[0] for p in pts], [p[1] for p in pts],
                marker="o", label=method)
    ax.set_xlabel("total sampling ratio [%]")
    ax.set_ylabel("median NRMSE")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_rank_check_figure(report: RankCheckReport, path, dpi: int = 150) -> None:
    """Empirical rank-preservation rates next to their predicted floors."""
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    labels = ["row submatrix", "sampled block"]
    empirical = [report.row_success_rate, report.block_success_rate]
    floors = [report.row_floor, report.block_floor]
    pos = range(len(labels))
    ax.bar([p - 0.18 for p in pos], empirical, width=0.36, label="empirical")
    ax.bar([p + 0.18 for p in pos], floors, width=0.36, label="predicted floor")
    ax.set_xticks(list(pos), labels)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("rank preserved fraction")
    ax.set_title(f"{report.trials} trials, rank {report.rank}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_incoherence_figure(report: IncoherenceCheckReport, path, dpi: int = 150) -> None:
    """Empirical bound-satisfaction rates; the floor bar is annotated when the
    prediction is vacuous."""
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    labels = ["row factor", "column factor", "both"]
    rates = [report.u_bound_rate, report.v_bound_rate, report.both_bound_rate]
    ax.bar(labels, rates, width=0.5, label="empirical")
    ax.axhline(report.floor, color="k", linestyle="--",
               label="floor (vacuous)" if report.vacuous else "floor")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("bound satisfied fraction")
    ax.set_title(f"{report.trials} trials, rank {report.rank}, eta={report.eta}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
