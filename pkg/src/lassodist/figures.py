"""Figure rendering for experiment reports.

Each analyzed component gets a histogram panel with the conditional
theoretical density overlaid; the CF grid gets a gap plot. Files land next
to the delimited output with matching names (hist_<k>.png, cf_gaps.png).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import distributions  # noqa: E402
from .harness import ExperimentReport  # noqa: E402

_RC = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _component_figure(comp, kind: str, path: Path) -> None:
    dist = comp.distribution
    fig, ax = plt.subplots()
    label = "x_hat" if kind == "orthogonal" else "z_hat"
    if dist.densities.size:
        widths = np.diff(dist.bin_edges)
        ax.bar(dist.bin_edges[:-1], dist.densities, width=widths, align="edge",
               color="#7fb3d5", edgecolor="none", label="simulated")
        lo, hi = dist.bin_edges[0], dist.bin_edges[-1]
        grid = np.linspace(lo, hi, 400)
        grid = grid[grid != 0]
        atom = comp.point_mass
        dens = distributions.pdf(grid, comp.law) / max(1.0 - atom, 1e-300)
        ax.plot(grid, dens, "k-", lw=1.4, label="theory (conditional)")
    ax.set_xlabel(f"{label}[{comp.component}]")
    ax.set_ylabel("density")
    title = f"component {comp.component}: "
    if comp.ks.distance is not None:
        title += f"KS = {comp.ks.distance:.4f}"
        if comp.ks.insufficient:
            title += " (insufficient samples)"
    else:
        title += "no nonzero samples"
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _cf_gap_figure(report: ExperimentReport, path: Path) -> None:
    rows = report.cf_rows
    idx = np.arange(len(rows))
    fig, ax = plt.subplots()
    floor = 1e-18
    for attr, label, marker in [("gap_exact", "|lhs(gamma) - ecf(A^T b)|", "o"),
                                ("gap_expansion", "|lhs(zero) - gaussian rhs|", "s"),
                                ("gap_mc", "|ecf(A^T b) - gaussian rhs|", "^")]:
        vals = np.array([max(getattr(r, attr), floor) for r in rows])
        ax.semilogy(idx, vals, marker, ms=4, ls="-", lw=0.7, label=label)
    ax.axhline(1e-12, color="grey", ls="--", lw=0.8)
    ax.set_xlabel("grid point")
    ax.set_ylabel("absolute gap")
    ax.set_title("characteristic-function gaps over the frequency grid")
    ax.legend(loc="best", fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_report_figures(report: ExperimentReport, outdir,
                          include_histograms: bool = True) -> list[Path]:
    """Render all report figures into ``outdir`` and return their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    kind = report.model_summary["kind"]
    with plt.rc_context(_RC):
        for comp in report.components if include_histograms else []:
            path = outdir / f"hist_{comp.component}.png"
            _component_figure(comp, kind, path)
            written.append(path)
        path = outdir / "cf_gaps.png"
        _cf_gap_figure(report, path)
        written.append(path)
    return written
