"""cordonsim: what-if simulation of area-based urban traffic pricing.

Given a baseline day of vehicle inflows and starting trips, a fleet
composition, and a policy + behavioral parameterization, the engine
computes modified inflow, circulating traffic, emissions, and KPI deltas
for arbitrary scenarios, with ensemble-based uncertainty propagation.
"""
from .behavior import (
    AcceptanceCurves,
    EmptyShiftWindowError,
    StrategyShares,
    TimeShiftPlan,
    acceptance_probability,
    anticipation_probability,
    behavior_kpis,
    build_acceptance_curves,
    dwell_correction,
    mode_shift_probabilities,
    modified_demand,
    postponement_probability,
    rigidity_probabilities,
    strategy_shares,
    strategy_shares_series,
    time_shift_plan,
)
from .emissions import (
    EmissionSeries,
    FleetShareSeries,
    class_rigidity_split,
    emission_series,
    fleet_share_series,
    modified_fleet_shares,
)
from .ensemble import (
    EnsembleError,
    EnsembleSummary,
    EvaluationError,
    EvaluationGraph,
    build_pipeline_graph,
    point_draw,
    run_ensemble,
    run_single,
    sample_draw,
)
from .indicators import (
    KpiBlock,
    KpiValue,
    SimulationResult,
    compare_scenarios,
    compute_kpis,
    daily_revenue,
    export_comparison_csv,
    export_result,
)
from .scenario import (
    BehavioralParams,
    DemandProfile,
    FleetMix,
    InvariantError,
    Parameter,
    PolicyParams,
    ScenarioConfig,
    SchemaError,
    ScenarioError,
    SolverSettings,
    TimeGrid,
    UnitError,
    Zone,
    ZoneTable,
    builtin_bologna_defaults,
    load_demand,
    load_scenario,
    load_scenario_file,
    load_zones,
    synthetic_two_peak_profile,
)
from .scenarios import (
    SCENARIO_NAMES,
    SUITE_NAMES,
    load_builtin_demand,
    load_builtin_scenario,
)
from .traffic import (
    TrafficSeries,
    retention_probability,
    solve_traffic,
    solve_traffic_direct,
)

__version__ = "0.1.0"
