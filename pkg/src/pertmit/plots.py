"""Figure rendering for sweep reports.

The delimited report file stays the primary artifact; these helpers turn a
report list into the two standard diagnostic views: error against
truncation order (with the analytic bound overlaid when present) and error
against rate (with the series-norm crossing marked).  Files are written
next to the report with a descriptive suffix.
"""

from __future__ import annotations

import statistics
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import MitigationReport


def _median_by(reports, key_of, x_of, y_of) -> dict:
    """Group reports, then reduce y values to a median per x."""
    grouped = defaultdict(lambda: defaultdict(list))
    for report in reports:
        y = y_of(report)
        if y is not None:
            grouped[key_of(report)][x_of(report)].append(y)
    return {
        key: sorted((x, statistics.median(ys)) for x, ys in series.items())
        for key, series in grouped.items()
    }


def plot_error_vs_order(reports: Sequence[MitigationReport], path: str | Path) -> Path:
    """Semilog error curves over truncation order, one line per (n, q, prior)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    curves = _median_by(
        reports,
        key_of=lambda r: (r.n, r.q, r.prior),
        x_of=lambda r: r.w,
        y_of=lambda r: r.d_mitigated,
    )
    bounds = _median_by(
        reports,
        key_of=lambda r: (r.n, r.q, r.prior),
        x_of=lambda r: r.w,
        y_of=lambda r: r.bound,
    )
    for key, points in sorted(curves.items()):
        n, q, prior = key
        xs, ys = zip(*points)
        line, = ax.semilogy(xs, ys, marker="o", label=f"n={n}, q={q:g}, {prior}")
        if key in bounds:
            bx, by = zip(*bounds[key])
            ax.semilogy(bx, by, linestyle="--", color=line.get_color(), alpha=0.6)
    ax.set_xlabel("truncation order w")
    ax.set_ylabel("mitigation error")
    ax.set_title("Error vs truncation order (dashed: analytic bound)")
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_error_vs_rate(reports: Sequence[MitigationReport], path: str | Path) -> Path:
    """Mitigated and uncorrected error against rate, one panel-free view per n.

    When series norms are present, the first rate whose norm reaches 1 is
    marked with a vertical line; past it the series is outside its
    guaranteed-convergence regime.
    """
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    mitigated = _median_by(
        reports, key_of=lambda r: r.n, x_of=lambda r: r.q, y_of=lambda r: r.d_mitigated
    )
    uncorrected = _median_by(
        reports, key_of=lambda r: r.n, x_of=lambda r: r.q, y_of=lambda r: r.d_uncorrected
    )
    norms = _median_by(
        reports, key_of=lambda r: r.n, x_of=lambda r: r.q, y_of=lambda r: r.norm_s
    )
    for n, points in sorted(mitigated.items()):
        xs, ys = zip(*points)
        line, = ax.semilogy(xs, ys, marker="o", label=f"mitigated, n={n}")
        if n in uncorrected:
            ux, uy = zip(*uncorrected[n])
            ax.semilogy(ux, uy, linestyle=":", color=line.get_color(),
                        label=f"uncorrected, n={n}")
        crossing = next((x for x, norm in norms.get(n, []) if norm >= 1.0), None)
        if crossing is not None:
            ax.axvline(crossing, color=line.get_color(), linestyle="--", alpha=0.4)
    ax.set_xlabel("characteristic rate q")
    ax.set_ylabel("trace-distance error")
    ax.set_title("Error vs rate (dashed vertical: series norm reaches 1)")
    if mitigated:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(reports: Sequence[MitigationReport], stem: str | Path) -> list:
    """Render the applicable figures for a report list next to ``stem``.

    The order view needs at least two truncation orders and the rate view
    at least two rates; whichever applies is written and the paths of all
    written files are returned.
    """
    stem = Path(stem)
    written = []
    orders = {r.w for r in reports}
    rates = {r.q for r in reports}
    if len(orders) > 1:
        written.append(
            plot_error_vs_order(reports, stem.with_name(stem.name + "_error_vs_order.png"))
        )
    if len(rates) > 1:
        written.append(
            plot_error_vs_rate(reports, stem.with_name(stem.name + "_error_vs_rate.png"))
        )
    return written
