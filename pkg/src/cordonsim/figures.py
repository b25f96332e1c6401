"""Figure rendering for the report path.

One panel per core quantity (inflow, traffic, emissions), baseline vs
modified over the day, with the policy window shaded; ensemble runs get a
lo-hi band. Written to files next to the delimited output, never shown.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ensemble import EnsembleSummary
from .indicators import KPI_NAMES, SimulationResult

PANELS = (
    ("inflow", "Inflow [veh]"),
    ("traffic", "Traffic [veh]"),
    ("emissions", "Emissions [g]"),
)


def _hours(n: int) -> np.ndarray:
    return np.arange(n) * 24.0 / n


def _shade_window(ax, result_config, n: int) -> None:
    policy = result_config.policy
    lo, hi = policy.t_start * 24.0 / n, (policy.t_end + 1) * 24.0 / n
    ax.axvspan(lo, hi, color="0.9", zorder=0, label="policy window")


def render_result_figures(result, out_dir, stem: str = "") -> list:
    """Write inflow/traffic/emissions PNGs for one run or ensemble summary.

    Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = f"{stem}_" if stem else ""
    paths = []
    ensemble = isinstance(result, EnsembleSummary)
    series = result.series if ensemble else result.series()
    n = (series["inflow_base"].mean if ensemble else series["inflow_base"]).size
    hours = _hours(n)
    for key, label in PANELS:
        fig, ax = plt.subplots(figsize=(7, 3.2))
        if not ensemble:
            _shade_window(ax, result.config, n)
        base = series[f"{key}_base"]
        mod = series[f"{key}_mod"]
        if ensemble:
            ax.plot(hours, base.mean, color="0.4", lw=1.2, label="baseline")
            ax.plot(hours, mod.mean, color="C0", lw=1.4, label="modified (mean)")
            ax.fill_between(hours, mod.lo, mod.hi, color="C0", alpha=0.25, lw=0,
                            label="modified (bounds)")
        else:
            ax.plot(hours, base, color="0.4", lw=1.2, label="baseline")
            ax.plot(hours, mod, color="C0", lw=1.4, label="modified")
        ax.set_xlabel("hour of day")
        ax.set_ylabel(label)
        ax.set_xlim(0, 24)
        ax.legend(loc="upper left", fontsize=8, frameon=False)
        fig.tight_layout()
        path = out_dir / f"{prefix}{key}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        paths.append(path)
    return paths


def render_comparison_figures(named_results: dict, out_dir) -> list:
    """Overlay the modified series of several scenarios, one PNG per panel."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for key, label in PANELS:
        fig, ax = plt.subplots(figsize=(7.5, 3.4))
        for i, (name, result) in enumerate(named_results.items()):
            series = result.series()
            hours = _hours(series[f"{key}_mod"].size)
            ax.plot(hours, series[f"{key}_mod"], lw=1.2, color=f"C{i % 10}", label=name)
        ax.set_xlabel("hour of day")
        ax.set_ylabel(label)
        ax.set_xlim(0, 24)
        ax.legend(loc="upper left", fontsize=7, frameon=False, ncol=2)
        fig.tight_layout()
        path = out_dir / f"compare_{key}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        paths.append(path)
    return paths


def render_sweep_figure(param_path: str, rows: list, out_dir) -> Path:
    """KPI-vs-parameter grid from long-form sweep rows (param_value, kpi, value)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_kpi: dict = {name: ([], []) for name in KPI_NAMES}
    for value, kpi, kpi_value in rows:
        by_kpi[kpi][0].append(value)
        by_kpi[kpi][1].append(kpi_value)
    fig, axes = plt.subplots(2, 4, figsize=(13, 5.5), sharex=True)
    for ax, name in zip(axes.ravel(), KPI_NAMES):
        xs, ys = by_kpi[name]
        ax.plot(xs, ys, marker="o", ms=3, lw=1.1, color="C0")
        ax.set_title(name, fontsize=9)
        ax.tick_params(labelsize=7)
    for ax in axes[1]:
        ax.set_xlabel(param_path, fontsize=8)
    fig.tight_layout()
    path = out_dir / "sweep.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
