"""
Static SVG line charts for runs and the potential landscape.
"""
import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "qtunnel"

import numpy as np
from matplotlib.figure import Figure

from app.models.schemas import PotentialReport
from app.physics.quartic_potential import phi


def _reference_lines(ax, report: PotentialReport, horizontal: bool = True) -> None:
    """β₋ 红色虚线，0 与 β₊ 灰色虚线"""
    draw = ax.axhline if horizontal else ax.axvline
    draw(0.0, color="gray", linestyle="--", linewidth=0.8)
    if report.beta_plus is not None:
        draw(report.beta_plus, color="gray", linestyle="--", linewidth=0.8)
    if report.beta_minus is not None:
        draw(report.beta_minus, color="red", linestyle="--", linewidth=1.0, label=f"β₋ = {report.beta_minus:.2f}")


def series_figure(times, mean_x, variance, report: PotentialReport, title: str = "") -> Figure:
    fig = Figure(figsize=(8, 6))
    ax_x, ax_v = fig.subplots(2, 1, sharex=True)
    ax_x.plot(times, mean_x, color="tab:blue", linewidth=1.0)
    _reference_lines(ax_x, report)
    ax_x.set_ylabel("⟨x⟩")
    ax_x.legend(loc="upper right")
    if title:
        ax_x.set_title(title)

    ax_v.plot(times, variance, color="tab:green", linewidth=1.0)
    ax_v.set_xlabel("t")
    ax_v.set_ylabel("V")
    fig.tight_layout()
    return fig


def potential_figure(report: PotentialReport, n: int = 1000) -> Figure:
    params = report.params
    right = max(report.beta_plus or 0.0, report.alpha_plus or 0.0, 1.0)
    x = np.linspace(-0.3 * right - 1.0, 1.3 * right + 1.0, n)
    fig = Figure(figsize=(7, 4))
    ax = fig.subplots()
    ax.plot(x, phi(params, x), color="black", linewidth=1.2)
    _reference_lines(ax, report, horizontal=False)
    for point in report.stationary_points:
        ax.plot([point.x], [point.phi], marker="o", color="tab:orange")
    ax.set_xlabel("x")
    ax.set_ylabel("φ(x)")
    ax.set_title(f"a={params.a:g}, b={params.b:g}, c={params.c:g} ({report.regime_name})")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return fig
