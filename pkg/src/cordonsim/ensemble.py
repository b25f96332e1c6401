"""Pipeline evaluation as a dependency graph, plus ensemble runs.

Every scenario field is an independent node; each model stage is a
dependent node evaluated in topological order, so a run is a single graph
evaluation and errors carry the name of the stage that failed. Ensembles
re-evaluate the graph once per parameter draw with per-draw decorrelated
RNG substreams and aggregate the outputs pointwise.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import behavior as bh
from .emissions import (
    baseline_fleet_share_series,
    class_rigidity_split,
    emission_series,
    fleet_share_series,
)
from .indicators import (
    KPI_NAMES,
    KpiBlock,
    SideSeries,
    SimulationResult,
    compute_kpis,
    daily_revenue,
)
from .scenario import (
    BehavioralParams,
    DemandProfile,
    FleetMix,
    Parameter,
    PolicyParams,
    ScenarioConfig,
    SolverSettings,
    TimeGrid,
)
from .traffic import SOLVERS


class EvaluationError(RuntimeError):
    """Failure inside one graph node, annotated with the node name."""

    def __init__(self, node: str, cause: Exception):
        self.node = node
        self.cause = cause
        super().__init__(f"node {node!r}: {cause}")


class EnsembleError(RuntimeError):
    def __init__(self, draw_index: int, node: str | None, cause: Exception):
        self.draw_index = draw_index
        self.node = node
        where = f" at node {node!r}" if node else ""
        super().__init__(f"draw {draw_index}{where}: {cause}")


@dataclass(frozen=True)
class Node:
    name: str
    parents: tuple
    fn: object  # None for independent nodes


class EvaluationGraph:
    """Named indices with parent links, evaluated in topological order."""

    def __init__(self):
        self.nodes: dict = {}
        self._order: list | None = None

    def add_input(self, name: str) -> None:
        self.nodes[name] = Node(name, (), None)
        self._order = None

    def add_node(self, name: str, parents, fn) -> None:
        for p in parents:
            if p not in self.nodes:
                raise KeyError(f"node {name!r} references unknown parent {p!r}")
        self.nodes[name] = Node(name, tuple(parents), fn)
        self._order = None

    def order(self) -> list:
        """Topological order; raises on cycles."""
        if self._order is not None:
            return self._order
        state: dict = {}
        order: list = []

        def visit(name: str):
            mark = state.get(name)
            if mark == "done":
                return
            if mark == "active":
                raise ValueError(f"dependency cycle through {name!r}")
            state[name] = "active"
            for p in self.nodes[name].parents:
                visit(p)
            state[name] = "done"
            order.append(name)

        for name in self.nodes:
            visit(name)
        self._order = order
        return order

    def inputs(self) -> list:
        return [n for n, node in self.nodes.items() if node.fn is None]

    def evaluate(self, assignments: dict) -> dict:
        """Compute every node given values for all independent nodes."""
        values = {}
        for name in self.order():
            node = self.nodes[name]
            if node.fn is None:
                if name not in assignments:
                    raise KeyError(f"missing value for independent node {name!r}")
                values[name] = assignments[name]
            else:
                try:
                    values[name] = node.fn(values)
                except EvaluationError:
                    raise
                except Exception as exc:
                    raise EvaluationError(name, exc) from exc
        return values


CONFIG_INPUT_NODES = (
    "time_grid.interval_minutes",
    "time_grid.n_intervals",
    "policy.t_start",
    "policy.t_end",
    "policy.exempt_fraction",
    "policy.fee_by_class",
    "behavior.cost_median",
    "behavior.anticipate_median",
    "behavior.postpone_median",
    "behavior.anticipate_redist_median",
    "behavior.postpone_redist_median",
    "behavior.mode_shift_enabled",
    "behavior.logit_coefficients",
    "fleet.class_shares",
    "fleet.emission_per_km",
    "fleet.km_per_interval",
    "zones.table",
    "solver.mean_dwell",
    "solver.tolerance",
    "solver.max_iterations",
)

EXTRA_INPUT_NODES = ("demand.inflow", "demand.starting", "solver.method")


def _curves_node(stream: str):
    def fn(v):
        return bh.build_acceptance_curves(
            policy=v["policy"],
            fleet=v["fleet"],
            zones=v["zones.table"],
            cost_median=v["behavior.cost_median"],
            anticipate_median=v["behavior.anticipate_median"],
            postpone_median=v["behavior.postpone_median"],
            mean_dwell=v["solver.mean_dwell"],
            logit_coefficients=v["behavior.logit_coefficients"],
            mode_shift_enabled=v["behavior.mode_shift_enabled"],
            stream=stream,
        )

    return fn


def build_pipeline_graph() -> EvaluationGraph:
    """Static evaluation graph of the full what-if pipeline."""
    g = EvaluationGraph()
    for name in CONFIG_INPUT_NODES + EXTRA_INPUT_NODES:
        g.add_input(name)

    g.add_node(
        "policy",
        ("policy.t_start", "policy.t_end", "policy.exempt_fraction", "policy.fee_by_class"),
        lambda v: PolicyParams(
            v["policy.t_start"], v["policy.t_end"],
            v["policy.exempt_fraction"], v["policy.fee_by_class"],
        ),
    )
    g.add_node(
        "fleet",
        ("fleet.class_shares", "fleet.emission_per_km", "fleet.km_per_interval"),
        lambda v: FleetMix(
            v["fleet.class_shares"], v["fleet.emission_per_km"], v["fleet.km_per_interval"]
        ),
    )
    g.add_node(
        "solver",
        ("solver.mean_dwell", "solver.tolerance", "solver.max_iterations"),
        lambda v: SolverSettings(
            v["solver.mean_dwell"], v["solver.tolerance"], v["solver.max_iterations"]
        ),
    )
    g.add_node(
        "demand",
        ("demand.inflow", "demand.starting"),
        lambda v: DemandProfile(v["demand.inflow"], v["demand.starting"]),
    )

    behavior_parents = (
        "policy", "fleet", "zones.table",
        "behavior.cost_median", "behavior.anticipate_median", "behavior.postpone_median",
        "solver.mean_dwell", "behavior.logit_coefficients", "behavior.mode_shift_enabled",
    )
    g.add_node("curves.inflow", behavior_parents, _curves_node("inflow"))
    g.add_node("curves.starting", behavior_parents, _curves_node("starting"))

    for stream in ("inflow", "starting"):
        g.add_node(
            f"shares.{stream}",
            (f"curves.{stream}", "policy", "time_grid.n_intervals"),
            lambda v, s=stream: bh.strategy_shares_series(
                v[f"curves.{s}"], v["policy"], v["time_grid.n_intervals"]
            ),
        )
        g.add_node(
            f"plan.{stream}",
            (f"shares.{stream}", "demand",
             "behavior.anticipate_redist_median", "behavior.postpone_redist_median"),
            lambda v, s=stream: bh.time_shift_plan(
                getattr(v["demand"], s),
                v[f"shares.{s}"],
                v["behavior.anticipate_redist_median"],
                v["behavior.postpone_redist_median"],
            ),
        )

    g.add_node(
        "demand.modified",
        ("demand", "shares.inflow", "shares.starting", "plan.inflow", "plan.starting"),
        lambda v: bh.modified_demand(
            v["demand"], v["shares.inflow"], v["shares.starting"],
            v["plan.inflow"], v["plan.starting"],
        ),
    )
    g.add_node(
        "traffic.baseline",
        ("demand", "solver", "solver.method"),
        lambda v: SOLVERS[v["solver.method"]](
            v["demand"].inflow, v["demand"].starting, v["solver"]
        ),
    )
    g.add_node(
        "traffic.modified",
        ("demand.modified", "solver", "solver.method"),
        lambda v: SOLVERS[v["solver.method"]](
            v["demand.modified"][0], v["demand.modified"][1], v["solver"]
        ),
    )
    g.add_node(
        "shares.combined",
        ("shares.inflow", "shares.starting", "demand"),
        lambda v: bh.combine_shares(v["shares.inflow"], v["shares.starting"], v["demand"]),
    )
    g.add_node(
        "fleet_shares.modified",
        ("policy", "fleet", "shares.combined", "curves.inflow"),
        lambda v: fleet_share_series(
            v["policy"], v["fleet"], v["shares.combined"],
            v["curves.inflow"].p_rigid_by_class,
        ),
    )
    g.add_node(
        "fleet_shares.baseline",
        ("fleet", "time_grid.n_intervals"),
        lambda v: baseline_fleet_share_series(v["fleet"], v["time_grid.n_intervals"]),
    )
    g.add_node(
        "emissions.baseline",
        ("fleet_shares.baseline", "fleet", "traffic.baseline"),
        lambda v: emission_series(v["fleet_shares.baseline"], v["fleet"], v["traffic.baseline"]),
    )
    g.add_node(
        "emissions.modified",
        ("fleet_shares.modified", "fleet", "traffic.modified"),
        lambda v: emission_series(v["fleet_shares.modified"], v["fleet"], v["traffic.modified"]),
    )
    g.add_node(
        "behavior.kpis",
        ("demand", "shares.inflow", "shares.starting"),
        lambda v: bh.behavior_kpis(v["demand"], v["shares.inflow"], v["shares.starting"]),
    )
    g.add_node(
        "revenue",
        ("policy", "fleet", "demand", "curves.inflow", "shares.inflow", "shares.starting"),
        lambda v: _revenue_node(v),
    )
    g.add_node(
        "side.baseline",
        ("demand", "traffic.baseline", "emissions.baseline"),
        lambda v: SideSeries(
            v["demand"].inflow, v["demand"].starting,
            v["traffic.baseline"], v["emissions.baseline"],
        ),
    )
    g.add_node(
        "side.modified",
        ("demand.modified", "traffic.modified", "emissions.modified"),
        lambda v: SideSeries(
            v["demand.modified"][0], v["demand.modified"][1],
            v["traffic.modified"], v["emissions.modified"],
        ),
    )
    g.add_node(
        "behavior.resolved",
        ("behavior.cost_median", "behavior.anticipate_median", "behavior.postpone_median",
         "behavior.anticipate_redist_median", "behavior.postpone_redist_median",
         "behavior.mode_shift_enabled", "behavior.logit_coefficients"),
        lambda v: BehavioralParams(
            cost_median=Parameter("point", value=v["behavior.cost_median"]),
            anticipate_median=Parameter("point", value=v["behavior.anticipate_median"]),
            postpone_median=Parameter("point", value=v["behavior.postpone_median"]),
            anticipate_redist_median=Parameter("point", value=v["behavior.anticipate_redist_median"]),
            postpone_redist_median=Parameter("point", value=v["behavior.postpone_redist_median"]),
            mode_shift_enabled=v["behavior.mode_shift_enabled"],
            logit_coefficients=v["behavior.logit_coefficients"],
        ),
    )
    g.add_node(
        "config",
        ("time_grid.interval_minutes", "policy", "behavior.resolved", "fleet",
         "zones.table", "solver"),
        lambda v: ScenarioConfig(
            TimeGrid(v["time_grid.interval_minutes"]),
            v["policy"], v["behavior.resolved"], v["fleet"], v["zones.table"], v["solver"],
        ),
    )
    g.add_node(
        "kpis",
        ("side.baseline", "side.modified", "config", "behavior.kpis", "revenue"),
        lambda v: compute_kpis(
            v["side.baseline"], v["side.modified"], v["config"],
            v["behavior.kpis"], v["revenue"],
        ),
    )
    g.order()
    return g


def _revenue_node(v) -> float:
    policy = v["policy"]
    fleet = v["fleet"]
    p_class = v["curves.inflow"].p_rigid_by_class
    window = range(policy.t_start, policy.t_end + 1)
    splits = []
    for shares in (v["shares.inflow"], v["shares.starting"]):
        splits.append(
            np.array(
                [class_rigidity_split(float(shares.f_rigid[t]), p_class, fleet) for t in window]
            )
        )
    return daily_revenue(policy, fleet, v["demand"], splits[0], splits[1])


_PIPELINE = build_pipeline_graph()


# ---------------------------------------------------------------------------
# Draws
# ---------------------------------------------------------------------------

def point_draw(behavior: BehavioralParams) -> dict:
    """Deterministic assignment: midpoints/means of distribution parameters."""
    return {f"behavior.{name}": p.point() for name, p in behavior.parameters().items()}


def sample_draw(behavior: BehavioralParams, rng: np.random.Generator) -> dict:
    """One random assignment of every distribution-valued parameter."""
    return {f"behavior.{name}": p.sample(rng) for name, p in behavior.parameters().items()}


def config_assignments(config: ScenarioConfig) -> dict:
    """Map every scenario field onto its independent node."""
    return {
        "time_grid.interval_minutes": config.time_grid.interval_minutes,
        "time_grid.n_intervals": config.time_grid.n_intervals,
        "policy.t_start": config.policy.t_start,
        "policy.t_end": config.policy.t_end,
        "policy.exempt_fraction": config.policy.exempt_fraction,
        "policy.fee_by_class": config.policy.fee_by_class,
        "behavior.cost_median": config.behavior.cost_median.point(),
        "behavior.anticipate_median": config.behavior.anticipate_median.point(),
        "behavior.postpone_median": config.behavior.postpone_median.point(),
        "behavior.anticipate_redist_median": config.behavior.anticipate_redist_median.point(),
        "behavior.postpone_redist_median": config.behavior.postpone_redist_median.point(),
        "behavior.mode_shift_enabled": config.behavior.mode_shift_enabled,
        "behavior.logit_coefficients": config.behavior.logit_coefficients,
        "fleet.class_shares": config.fleet.class_shares,
        "fleet.emission_per_km": config.fleet.emission_per_km,
        "fleet.km_per_interval": config.fleet.km_per_interval,
        "zones.table": config.zones,
        "solver.mean_dwell": config.solver.mean_dwell,
        "solver.tolerance": config.solver.tolerance,
        "solver.max_iterations": config.solver.max_iterations,
    }


def run_single(
    config: ScenarioConfig,
    demand: DemandProfile,
    draw: dict | None = None,
    solver_method: str = "iterative",
) -> SimulationResult:
    """One deterministic evaluation of the pipeline.

    `draw` assigns point values to the distribution-valued behavioral
    parameters; omitted, every parameter collapses to its point value.
    """
    assignments = config_assignments(config)
    assignments.update(draw or point_draw(config.behavior))
    assignments["demand.inflow"] = demand.inflow
    assignments["demand.starting"] = demand.starting
    assignments["solver.method"] = solver_method
    values = _PIPELINE.evaluate(assignments)
    return SimulationResult(
        config=config,
        draw={k: v for k, v in assignments.items() if k.startswith("behavior.") and "median" in k},
        baseline=values["side.baseline"],
        modified=values["side.modified"],
        fleet_shares=values["fleet_shares.modified"],
        behavior=values["behavior.kpis"],
        kpis=values["kpis"],
    )


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarSummary:
    mean: float
    sd: float
    lo: float
    hi: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class SeriesSummary:
    mean: np.ndarray
    sd: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("mean", "sd", "lo", "hi")}


@dataclass(frozen=True)
class EnsembleSummary:
    """Pointwise statistics over independent parameter draws."""

    n_draws: int
    rng_seed: int
    percentiles: tuple
    series: dict  # name -> SeriesSummary
    kpis: dict  # kpi name -> {"absolute": ScalarSummary, "delta": ..., "percent": ...|None}

    def kpis_to_dict(self) -> dict:
        out = {}
        for name, parts in self.kpis.items():
            out[name] = {
                key: (stat.to_dict() if stat is not None else None)
                for key, stat in parts.items()
            }
        return out

    def to_dict(self) -> dict:
        return {
            "n_draws": self.n_draws,
            "rng_seed": self.rng_seed,
            "percentiles": list(self.percentiles),
            "series": {name: s.to_dict() for name, s in self.series.items()},
            "kpis": self.kpis_to_dict(),
        }


def _nearest_rank(sorted_matrix: np.ndarray, q: float) -> np.ndarray:
    n = sorted_matrix.shape[0]
    rank = max(1, math.ceil(q / 100.0 * n))
    return sorted_matrix[rank - 1]

def _summarize(matrix: np.ndarray, lo_q: float, hi_q: float):
    """Mean/sd/nearest-rank bounds along axis 0; exact when all draws agree."""
    ordered = np.sort(matrix, axis=0)
    mean = matrix.mean(axis=0)
    sd = matrix.std(axis=0)
    degenerate = ordered[0] == ordered[-1]
    mean = np.where(degenerate, ordered[0], mean)
    sd = np.where(degenerate, 0.0, sd)
    return mean, sd, _nearest_rank(ordered, lo_q), _nearest_rank(ordered, hi_q)


def run_ensemble(
    config: ScenarioConfig,
    demand: DemandProfile,
    n_draws: int,
    seed: int = 0,
    n_workers: int = 1,
    percentiles: tuple = (2.5, 97.5),
    solver_method: str = "iterative",
) -> EnsembleSummary:
    """Evaluate `n_draws` independent parameter draws and aggregate.

    Draw i always uses RNG substream i, so the summary is independent of
    `n_workers` and scheduling.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    children = np.random.SeedSequence(seed).spawn(n_draws)
    draws = [
        sample_draw(config.behavior, np.random.Generator(np.random.PCG64(child)))
        for child in children
    ]

    def evaluate(i: int) -> SimulationResult:
        try:
            return run_single(config, demand, draws[i], solver_method=solver_method)
        except EvaluationError as exc:
            raise EnsembleError(i, exc.node, exc.cause) from exc
        except Exception as exc:
            raise EnsembleError(i, None, exc) from exc

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(evaluate, range(n_draws)))
    else:
        results = [evaluate(i) for i in range(n_draws)]

    lo_q, hi_q = percentiles
    series = {}
    for name in results[0].series():
        matrix = np.vstack([r.series()[name] for r in results])
        series[name] = SeriesSummary(*_summarize(matrix, lo_q, hi_q))

    kpis = {}
    for name in KPI_NAMES:
        parts = {}
        for part in ("absolute", "delta"):
            col = np.array([[getattr(r.kpis[name], part)] for r in results])
            mean, sd, lo, hi = _summarize(col, lo_q, hi_q)
            parts[part] = ScalarSummary(float(mean[0]), float(sd[0]), float(lo[0]), float(hi[0]))
        percents = [r.kpis[name].percent for r in results]
        if any(p is None for p in percents):
            parts["percent"] = None
        else:
            col = np.array([[p] for p in percents])
            mean, sd, lo, hi = _summarize(col, lo_q, hi_q)
            parts["percent"] = ScalarSummary(float(mean[0]), float(sd[0]), float(lo[0]), float(hi[0]))
        kpis[name] = parts

    return EnsembleSummary(
        n_draws=n_draws,
        rng_seed=seed,
        percentiles=(lo_q, hi_q),
        series=series,
        kpis=kpis,
    )
