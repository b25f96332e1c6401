"""Global indicators, scenario comparison, and result serialization.

The KPI block mirrors the daily summary table of a policy report: total
inflow, traffic peaks (whole day and policy hours), daily emissions, the
behavioral counts, and fee revenue, each as absolute value plus delta and
percent delta against the baseline day.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emissions import EmissionSeries, FleetShareSeries
from .scenario import DemandProfile, FleetMix, PolicyParams, ScenarioConfig
from .traffic import TrafficSeries

KPI_NAMES = (
    "daily_inflow",
    "max_traffic_day",
    "max_traffic_policy_hours",
    "daily_emissions",
    "time_shifted",
    "mode_shifted",
    "lost",
    "daily_revenue",
)

TIMESERIES_COLUMNS = (
    "inflow_base",
    "inflow_mod",
    "traffic_base",
    "traffic_mod",
    "emissions_base",
    "emissions_mod",
)


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class KpiValue:
    """One indicator: absolute value, delta vs baseline, percent delta.

    `percent` is None when the baseline is zero (flagged undefined).
    """

    absolute: float
    delta: float
    percent: float | None

    @staticmethod
    def against(absolute: float, baseline: float) -> "KpiValue":
        delta = absolute - baseline
        percent = delta / baseline if baseline != 0.0 else None
        return KpiValue(absolute, delta, percent)

    def to_dict(self) -> dict:
        return {"absolute": self.absolute, "delta": self.delta, "percent": self.percent}


@dataclass(frozen=True)
class KpiBlock:
    values: dict  # KPI name -> KpiValue

    def __getitem__(self, name: str) -> KpiValue:
        return self.values[name]

    def to_dict(self) -> dict:
        return {name: self.values[name].to_dict() for name in KPI_NAMES}


@dataclass(frozen=True)
class SideSeries:
    """Time series of one side (baseline or modified) of a run."""

    inflow: np.ndarray
    starting: np.ndarray
    traffic: TrafficSeries
    emissions: EmissionSeries


@dataclass(frozen=True)
class SimulationResult:
    """Everything one deterministic run produces."""

    config: ScenarioConfig
    draw: dict
    baseline: SideSeries
    modified: SideSeries
    fleet_shares: FleetShareSeries
    behavior: dict
    kpis: KpiBlock

    def series(self) -> dict:
        return {
            "inflow_base": self.baseline.inflow,
            "inflow_mod": self.modified.inflow,
            "starting_base": self.baseline.starting,
            "starting_mod": self.modified.starting,
            "traffic_base": self.baseline.traffic.values,
            "traffic_mod": self.modified.traffic.values,
            "emissions_base": self.baseline.emissions.total,
            "emissions_mod": self.modified.emissions.total,
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "draw": self.draw,
            "kpis": self.kpis.to_dict(),
            "behavior": self.behavior,
            "series": {name: arr.tolist() for name, arr in self.series().items()},
            "solver": {
                "baseline": _solver_info(self.baseline.traffic),
                "modified": _solver_info(self.modified.traffic),
            },
        }


def _solver_info(traffic: TrafficSeries) -> dict:
    return {
        "iterations_used": traffic.iterations_used,
        "converged": traffic.converged,
        "residual": traffic.residual,
    }


def daily_revenue(
    policy: PolicyParams,
    fleet: FleetMix,
    demand: DemandProfile,
    rigid_split_inflow: np.ndarray,
    rigid_split_starting: np.ndarray,
) -> float:
    """Fees collected from rigid vehicles, per class and interval.

    `rigid_split_*` are [window x n_classes] matrices of per-class rigid
    fractions; exempt, shifted, mode-shifted and lost vehicles pay nothing.
    """
    window = slice(policy.t_start, policy.t_end + 1)
    fee_weight = policy.fee_by_class * fleet.class_shares
    per_interval = (
        demand.inflow[window] * (rigid_split_inflow @ fee_weight)
        + demand.starting[window] * (rigid_split_starting @ fee_weight)
    )
    return float(per_interval.sum())


def compute_kpis(
    baseline: SideSeries,
    modified: SideSeries,
    config: ScenarioConfig,
    behavior: dict,
    revenue: float,
) -> KpiBlock:
    """Assemble the indicator block from both sides of a run."""
    window = slice(config.policy.t_start, config.policy.t_end + 1)
    rows = {
        "daily_inflow": (float(modified.inflow.sum()), float(baseline.inflow.sum())),
        "max_traffic_day": (
            float(modified.traffic.values.max()),
            float(baseline.traffic.values.max()),
        ),
        "max_traffic_policy_hours": (
            float(modified.traffic.values[window].max()),
            float(baseline.traffic.values[window].max()),
        ),
        "daily_emissions": (
            float(modified.emissions.total.sum()),
            float(baseline.emissions.total.sum()),
        ),
        "time_shifted": (behavior["total"]["time_shifted"], 0.0),
        "mode_shifted": (behavior["total"]["mode_shifted"], 0.0),
        "lost": (behavior["total"]["lost"], 0.0),
        "daily_revenue": (revenue, 0.0),
    }
    return KpiBlock({name: KpiValue.against(*rows[name]) for name in KPI_NAMES})


# ---------------------------------------------------------------------------
# Scenario comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    names: tuple
    blocks: dict  # name -> KpiBlock
    pairwise: dict  # (a, b) -> {kpi: absolute_b - absolute_a}

    def to_dict(self) -> dict:
        return {
            "scenarios": [
                {"name": name, "kpis": self.blocks[name].to_dict()} for name in self.names
            ],
            "pairwise": [
                {"a": a, "b": b, "difference": diffs}
                for (a, b), diffs in self.pairwise.items()
            ],
        }


def compare_scenarios(results: list) -> Comparison:
    """Align KPI blocks of several named runs; order preserved as given."""
    if len(results) < 2:
        raise ValueError("need at least two named results to compare")
    names = [name for name, _ in results]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate scenario names: {', '.join(dupes)}")
    blocks = {name: block for name, block in results}
    pairwise = {}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            pairwise[(a, b)] = {
                kpi: blocks[b][kpi].absolute - blocks[a][kpi].absolute for kpi in KPI_NAMES
            }
    return Comparison(tuple(names), blocks, pairwise)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    """Render with 6 significant digits, locale-independent."""
    if x is None:
        return ""
    return f"{x:.6g}"


def export_result(result, fmt: str, destination) -> None:
    """Write one run or ensemble summary to CSV (time series) or JSON (KPIs)."""
    destination = Path(destination)
    if fmt == "csv":
        _export_timeseries_csv(result, destination)
    elif fmt == "json":
        _export_kpis_json(result, destination)
    else:
        raise ExportError(f"unknown export format {fmt!r} (use csv or json)")


def _export_timeseries_csv(result, path: Path) -> None:
    from .ensemble import EnsembleSummary  # local import to avoid a cycle

    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        if isinstance(result, EnsembleSummary):
            header = ["t"]
            for name in TIMESERIES_COLUMNS:
                header += [f"{name}_mean", f"{name}_lo", f"{name}_hi"]
            writer.writerow(header)
            series = result.series
            n = series[TIMESERIES_COLUMNS[0]].mean.size
            for t in range(n):
                row = [t]
                for name in TIMESERIES_COLUMNS:
                    s = series[name]
                    row += [_fmt(s.mean[t]), _fmt(s.lo[t]), _fmt(s.hi[t])]
                writer.writerow(row)
        else:
            writer.writerow(["t"] + list(TIMESERIES_COLUMNS))
            series = result.series()
            n = series["inflow_base"].size
            for t in range(n):
                writer.writerow(
                    [t] + [_fmt(float(series[name][t])) for name in TIMESERIES_COLUMNS]
                )


def _export_kpis_json(result, path: Path) -> None:
    from .ensemble import EnsembleSummary

    if isinstance(result, EnsembleSummary):
        payload = {
            "n_draws": result.n_draws,
            "rng_seed": result.rng_seed,
            "percentiles": list(result.percentiles),
            "kpis": result.kpis_to_dict(),
        }
    else:
        payload = {"kpis": result.kpis.to_dict(), "behavior": result.behavior}
    try:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc


def export_comparison_csv(comparison: Comparison, path) -> None:
    """One long-form table: per-scenario KPI rows, then pairwise differences."""
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "kpi", "absolute", "delta", "percent_delta"])
        for name in comparison.names:
            block = comparison.blocks[name]
            for kpi in KPI_NAMES:
                v = block[kpi]
                writer.writerow([name, kpi, _fmt(v.absolute), _fmt(v.delta), _fmt(v.percent)])
        for (a, b), diffs in comparison.pairwise.items():
            for kpi in KPI_NAMES:
                writer.writerow([f"{b}-{a}", kpi, _fmt(diffs[kpi]), "", ""])


def read_timeseries_csv(path) -> dict:
    """Load an exported time-series CSV back into arrays (column name -> array)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        columns: dict = {name: [] for name in reader.fieldnames if name != "t"}
        for row in reader:
            for name in columns:
                columns[name].append(float(row[name]))
    return {name: np.array(vals) for name, vals in columns.items()}
