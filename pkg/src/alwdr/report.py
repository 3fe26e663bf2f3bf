"""Benchmark reporting: delimited records, a text summary, and figures.

Figures are rendered with matplotlib to files next to the CSV; the import
happens inside the render call so the solver library never touches a
plotting backend unless a report asks for one.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path

from .pipeline import RunRecord

CSV_COLUMNS = [
    "digest", "algorithm", "delta", "gamma", "eps", "seed",
    "lp_value", "weight", "oracle", "ratio_vs_lp", "ratio_vs_oracle", "wall_ms",
]


def _frac(x: Fraction | None) -> str:
    if x is None:
        return ""
    return f"{x.numerator}/{x.denominator}"


def write_records_csv(records: list[RunRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.digest, r.algorithm, r.delta,
                r.gamma if r.gamma is not None else "",
                _frac(r.eps), r.seed if r.seed is not None else "",
                _frac(r.lp_value), _frac(r.weight), _frac(r.oracle),
                f"{r.ratio_vs_lp:.6f}" if r.ratio_vs_lp is not None else "",
                f"{r.ratio_vs_oracle:.6f}" if r.ratio_vs_oracle is not None else "",
                f"{r.wall_ms:.2f}",
            ])


def write_failures(failures: list[dict], path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(failures, fh, indent=2)


def summarize(records: list[RunRecord]) -> str:
    lines = []
    by_algo: dict[str, list[RunRecord]] = {}
    for r in records:
        by_algo.setdefault(r.algorithm, []).append(r)
    lines.append(f"{'algorithm':<16}{'runs':>6}{'mean r/LP':>12}{'min r/LP':>12}"
                 f"{'mean r/OPT':>12}{'min r/OPT':>12}")
    for algo in sorted(by_algo):
        rs = by_algo[algo]
        lp_ratios = [r.ratio_vs_lp for r in rs if r.ratio_vs_lp is not None]
        opt_ratios = [r.ratio_vs_oracle for r in rs if r.ratio_vs_oracle is not None]

        def fmt(vals, agg):
            return f"{agg(vals):.4f}" if vals else "-"

        lines.append(
            f"{algo:<16}{len(rs):>6}"
            f"{fmt(lp_ratios, lambda v: sum(v) / len(v)):>12}"
            f"{fmt(lp_ratios, min):>12}"
            f"{fmt(opt_ratios, lambda v: sum(v) / len(v)):>12}"
            f"{fmt(opt_ratios, min):>12}"
        )
    return "\n".join(lines) + "\n"


def render_figures(records: list[RunRecord], outdir: Path) -> list[Path]:
    """Ratio histogram and LP-vs-weight scatter as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    written = []
    by_algo: dict[str, list[RunRecord]] = {}
    for r in records:
        by_algo.setdefault(r.algorithm, []).append(r)

    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    plotted = False
    for algo, rs in sorted(by_algo.items()):
        ratios = [r.ratio_vs_lp for r in rs if r.ratio_vs_lp is not None]
        if ratios:
            ax.hist(ratios, bins=20, range=(0.0, 1.02), alpha=0.55, label=algo)
            plotted = True
    if plotted:
        ax.set_xlabel("schedule weight / LP value")
        ax.set_ylabel("runs")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        path = outdir / "ratio_hist.png"
        fig.savefig(path, dpi=150)
        written.append(path)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    plotted = False
    for algo, rs in sorted(by_algo.items()):
        xs = [float(r.lp_value) for r in rs if r.lp_value is not None]
        ys = [float(r.weight) for r in rs if r.lp_value is not None]
        if xs:
            ax.scatter(xs, ys, s=14, alpha=0.6, label=algo)
            plotted = True
    if plotted:
        top = max(max((float(r.lp_value) for r in records
                       if r.lp_value is not None), default=1.0), 1.0)
        ax.plot([0, top], [0, top], lw=0.8, color="gray")
        ax.set_xlabel("LP value")
        ax.set_ylabel("schedule weight")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        path = outdir / "weight_vs_lp.png"
        fig.savefig(path, dpi=150)
        written.append(path)
    plt.close(fig)
    return written
