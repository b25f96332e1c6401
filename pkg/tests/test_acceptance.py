"""Acceptance gate: one test per criterion, each at its pinned tolerance.

Run with `pytest -s tests/test_acceptance.py` to see one PASS line per
criterion. These are the exit criteria for the engine; tolerances are fixed
here and nowhere else.
"""
import dataclasses
import json
import math
import time

import numpy as np
import pytest

from cordonsim import behavior as bh
from cordonsim.ensemble import run_ensemble, run_single
from cordonsim.scenario import PolicyParams, load_scenario
from cordonsim.scenarios import SCENARIO_NAMES, builtin_scenario_path, load_builtin_scenario
from cordonsim.traffic import SolverSettings, solve_traffic, solve_traffic_direct

LN2 = math.log(2.0)


def report(name: str) -> None:
    print(f"[PASS] {name}")


def scenario_doc(name: str) -> dict:
    return json.loads(builtin_scenario_path(name).read_text(encoding="utf-8"))


def test_share_closure_1000_draws(a1_config):
    """Closure of strategy shares at every policy interval, 1000 draws, <5 s."""
    rng = np.random.default_rng(2024)
    config = a1_config
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        cost = float(rng.uniform(0.1, 10.0))
        ant = float(rng.uniform(0.0, 36.0))
        post = float(rng.uniform(0.0, 36.0))
        exempt = float(rng.uniform(0.0, 1.0))
        policy = PolicyParams(
            config.policy.t_start, config.policy.t_end, exempt, config.policy.fee_by_class
        )
        curves = bh.build_acceptance_curves(
            policy, config.fleet, config.zones, cost, ant, post,
            config.solver.mean_dwell, config.behavior.logit_coefficients, True,
        )
        series = bh.strategy_shares_series(curves, policy, config.time_grid.n_intervals)
        total = series.stack().sum(axis=0)
        worst = max(worst, float(np.max(np.abs(total - 1.0))))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9, f"closure violated by {worst:.3e}"
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report(f"share closure: 1000 draws, max deviation {worst:.2e}, {elapsed:.2f}s")


def test_subset_oracle_equivalence():
    """Closed strategy-share expression vs brute-force outcome enumeration."""
    from test_behavior import bruteforce_strategy_shares, curves_from_probs

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        p = rng.uniform(0.0, 1.0, size=4)
        exempt = float(rng.uniform(0.0, 1.0))
        policy = PolicyParams(10, 10, exempt, np.array([5.0] * 7))
        curves = curves_from_probs(policy, *p)
        row = bh.strategy_shares(10, curves, policy)
        oracle = bruteforce_strategy_shares(
            dict(zip(("rigid", "anticipate", "postpone", "modeshift"), p)), exempt
        )
        for key, value in oracle.items():
            worst = max(worst, abs(row[key] - value))
    assert worst <= 1e-12, f"max deviation {worst:.3e}"
    report(f"subset-oracle equivalence: 1000 vectors, max deviation {worst:.2e}")


def test_traffic_oracle():
    """Iterative solver vs direct recursion (gamma) and analytic impulse."""
    rng = np.random.default_rng(99)
    gamma = 1e-6
    worst = 0.0
    for i in range(100):
        dwell = int(rng.integers(1, 13))
        settings = SolverSettings(mean_dwell=dwell, tolerance=gamma, max_iterations=10_000)
        inflow = rng.uniform(0, 400, 288)
        starting = rng.uniform(0, 200, 288)
        iterative = solve_traffic(inflow, starting, settings)
        direct = solve_traffic_direct(inflow, starting, settings)
        assert iterative.converged
        worst = max(worst, float(np.max(np.abs(iterative.values - direct.values))))
    assert worst <= gamma, f"max |iterative - direct| = {worst:.3e}"

    impulse = np.zeros(64)
    impulse[0] = 100.0
    settings = SolverSettings(mean_dwell=2, tolerance=gamma, max_iterations=10_000)
    expected = 100.0 * 0.5 ** np.arange(64)
    assert np.allclose(
        solve_traffic(impulse, np.zeros(64), settings).values, expected, atol=gamma
    )
    report(f"traffic oracle: 100 profiles within {gamma:g}, impulse analytic; worst {worst:.2e}")


def test_dwell_correction_series():
    """Closed-form anticipation curve vs the truncated 10^4-term series."""
    from test_behavior import anticipation_series_oracle

    worst = 0.0
    for mean_dwell in (1, 4, 12):
        for median in (1.0, 12.0, 36.0):
            policy = PolicyParams(96, 216, 0.0, np.array([5.0] * 7))
            for t in (96, 97, 120, 180, 216):
                closed = bh.anticipation_probability(t, policy, median, mean_dwell)
                series = anticipation_series_oracle(float(t - 96), median, mean_dwell)
                worst = max(worst, abs(closed - series))
    assert worst <= 1e-9, f"max deviation {worst:.3e}"
    report(f"dwell-correction series identity: max deviation {worst:.2e}")


def test_conservation_across_bundled_scenarios(demand, suite_results):
    """Baseline total = modified total + mode-shifted + lost, per stream."""
    worst = 0.0
    for name in SCENARIO_NAMES:
        result = suite_results[name]
        for stream, base, mod in (
            ("inflow", result.baseline.inflow, result.modified.inflow),
            ("starting", result.baseline.starting, result.modified.starting),
        ):
            counts = result.behavior[stream]
            lhs = float(base.sum())
            rhs = float(mod.sum()) + counts["mode_shifted"] + counts["lost"]
            rel = abs(lhs - rhs) / lhs
            worst = max(worst, rel)
            assert rel <= 1e-6, f"{name}/{stream}: relative gap {rel:.3e}"
    report(f"vehicle conservation: nine scenarios, worst relative gap {worst:.2e}")


def test_fleet_rows_stochastic(suite_results):
    """Every circulating-fleet row sums to 1, exemptions included."""
    worst = 0.0
    for name in SCENARIO_NAMES:
        deviation = float(
            np.max(np.abs(suite_results[name].fleet_shares.shares.sum(axis=1) - 1.0))
        )
        worst = max(worst, deviation)
        assert deviation <= 1e-9, f"{name}: row sum off by {deviation:.3e}"
    assert suite_results["a6"].config.policy.exempt_fraction > 0  # exemption case covered
    report(f"fleet-share rows stochastic: worst deviation {worst:.2e}")


def test_qualitative_signatures(demand, suite_results):
    """Sign patterns of the published scenario tables on the synthetic day."""
    start = time.perf_counter()

    # (a) extending the window removes strictly more daily inflow
    assert (
        suite_results["a2"].kpis["daily_inflow"].delta
        < suite_results["a1"].kpis["daily_inflow"].delta
    )

    # (b) disabling mode shift zeroes the count exactly
    assert suite_results["b3"].kpis["mode_shifted"].absolute == 0.0

    # (c) zero time-shift medians: response only where the required shift is zero
    b2 = load_builtin_scenario("b2")
    boundary_total = 0.0
    for stream, base in (("inflow", demand.inflow), ("starting", demand.starting)):
        curves = bh.build_acceptance_curves(
            b2.policy, b2.fleet, b2.zones,
            b2.behavior.cost_median.point(), 0.0, 0.0,
            b2.solver.mean_dwell, b2.behavior.logit_coefficients, True, stream=stream,
        )
        series = bh.strategy_shares_series(curves, b2.policy, b2.time_grid.n_intervals)
        window = series.in_window()
        assert np.all(series.f_anticipate == 0.0)
        assert np.all(series.f_postpone[window][:-1] == 0.0)
        assert series.f_postpone[b2.policy.t_end] > 0.0
        boundary_total += float(series.f_postpone[b2.policy.t_end] * base[b2.policy.t_end])
    assert suite_results["b2"].kpis["time_shifted"].absolute == pytest.approx(boundary_total)

    # (d) collapsed cost tolerance: revenue under 0.3% of the 5-euro-median case
    doc = scenario_doc("b1")
    doc["behavior"]["cost_median"] = 5.0
    reference = run_single(load_scenario(doc), demand)
    ratio = (
        suite_results["b1"].kpis["daily_revenue"].absolute
        / reference.kpis["daily_revenue"].absolute
    )
    assert ratio < 0.003, f"revenue ratio {ratio:.5f}"

    # (e) fee differentiation tilts the circulating fleet toward Euro-6
    a5 = suite_results["a5"]
    window = slice(a5.config.policy.t_start, a5.config.policy.t_end + 1)
    euro6 = a5.fleet_shares.shares[window, -1]
    assert np.all(euro6 > 0.467)

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(f"qualitative signatures (a)-(e) reproduced, {elapsed:.2f}s")


def test_ensemble_reproducibility(a1_config, demand):
    """Same seed, any worker count: identical summaries; point params: sd=0."""
    reference = run_ensemble(a1_config, demand, n_draws=12, seed=11, n_workers=1)
    for workers in (4, 8):
        other = run_ensemble(a1_config, demand, n_draws=12, seed=11, n_workers=workers)
        assert reference.kpis_to_dict() == other.kpis_to_dict()
        for name, stats in reference.series.items():
            for field in ("mean", "sd", "lo", "hi"):
                assert np.array_equal(
                    getattr(stats, field), getattr(other.series[name], field)
                ), (name, field, workers)

    doc = scenario_doc("a1")
    doc["behavior"]["cost_median"] = 5.5
    point_config = load_scenario(doc)
    summary = run_ensemble(point_config, demand, n_draws=8, seed=1)
    for name, stats in summary.series.items():
        assert np.all(stats.sd == 0.0), name
    for name, parts in summary.kpis.items():
        assert parts["absolute"].sd == 0.0
    report("ensemble reproducibility: workers {1,4,8} identical; point-parameter sd = 0")


def test_monotonicity_sweeps(demand):
    """Daily inflow falls with the fee and rises with the exempt fraction."""
    fee_values = np.linspace(0.0, 10.0, 11)
    inflows = []
    for fee in fee_values:
        doc = scenario_doc("a1")
        doc["behavior"]["cost_median"] = 5.5
        doc["policy"]["fee_by_class"] = [float(fee)] * 7
        inflows.append(
            run_single(load_scenario(doc), demand).kpis["daily_inflow"].absolute
        )
    assert all(b <= a + 1e-9 for a, b in zip(inflows, inflows[1:])), inflows

    exempt_values = np.linspace(0.0, 1.0, 11)
    inflows_fe = []
    for fe in exempt_values:
        doc = scenario_doc("a1")
        doc["behavior"]["cost_median"] = 5.5
        doc["policy"]["exempt_fraction"] = float(fe)
        inflows_fe.append(
            run_single(load_scenario(doc), demand).kpis["daily_inflow"].absolute
        )
    assert all(a <= b + 1e-9 for a, b in zip(inflows_fe, inflows_fe[1:])), inflows_fe
    assert inflows_fe[-1] == pytest.approx(float(demand.inflow.sum()), rel=1e-12)
    report("monotonicity sweeps: fee non-increasing, exemption non-decreasing")
