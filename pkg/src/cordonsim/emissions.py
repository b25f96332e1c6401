"""Fleet composition under the policy and pollutant emission series.

During the pricing window only exempt and rigid vehicles circulate, and
rigidity is cheaper for cleaner (lower-fee) classes, so the Euro-class mix
of circulating traffic tilts toward cleaner vehicles. Emissions follow from
the per-interval mix, a km-per-interval conversion, and per-km rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .behavior import StrategyShares
from .scenario import FleetMix, PolicyParams
from .traffic import TrafficSeries


class EmissionsError(Exception):
    pass


@dataclass(frozen=True)
class FleetShareSeries:
    """Row-stochastic matrix [n_intervals x n_classes] of circulating shares."""

    shares: np.ndarray
    degenerate: np.ndarray  # rows where nobody circulates during the window


@dataclass(frozen=True)
class EmissionSeries:
    per_vehicle: np.ndarray  # grams per vehicle per interval
    total: np.ndarray  # grams per interval


def class_rigidity_split(
    f_rigid_total: float, p_rigid_by_class: np.ndarray, fleet: FleetMix
) -> np.ndarray:
    """Distribute total rigidity across Euro classes.

    Class l takes f_rigid_total * p_l / sum_j P_j p_j, so the fleet-weighted
    split recovers the total exactly.
    """
    if f_rigid_total == 0.0:
        return np.zeros(fleet.n_classes)
    denom = float(np.dot(fleet.class_shares, p_rigid_by_class))
    if denom <= 0.0:
        raise EmissionsError(
            f"all classes fully deterred (sum_j P_j*p_j = 0) yet rigid share "
            f"{f_rigid_total} > 0; inconsistent inputs"
        )
    return f_rigid_total * np.asarray(p_rigid_by_class, dtype=float) / denom


def modified_fleet_shares(
    t: int,
    policy: PolicyParams,
    fleet: FleetMix,
    shares: StrategyShares,
    class_split: np.ndarray,
    paper_raw: bool = False,
) -> tuple[np.ndarray, bool]:
    """Circulating Euro-class shares at interval t, with a degeneracy flag.

    Inside the window the circulating population is exempt + rigid; class l
    contributes P_l*(F_e + F_rigidity_l) of it. The row is divided by its own
    sum so it is a probability distribution even under float rounding.
    `paper_raw` switches to the uncorrected textbook form
    P_l*(F_e + F_rigidity_l/(F_e + f_rigid)), which does not sum to 1 when
    exemptions exist; kept for comparison only.
    """
    if not policy.t_start <= t <= policy.t_end:
        return fleet.class_shares.copy(), False
    f_e = policy.exempt_fraction
    f_rigid = float(shares.f_rigid[t])
    circulating = f_e + f_rigid
    if circulating <= 0.0:
        return fleet.class_shares.copy(), True
    if paper_raw:
        return fleet.class_shares * (f_e + class_split / circulating), False
    raw = fleet.class_shares * (f_e + class_split) / circulating
    return raw / raw.sum(), False


def fleet_share_series(
    policy: PolicyParams,
    fleet: FleetMix,
    shares: StrategyShares,
    p_rigid_by_class: np.ndarray,
) -> FleetShareSeries:
    """Per-interval circulating fleet composition over the whole day."""
    n = shares.f_rigid.size
    matrix = np.tile(fleet.class_shares, (n, 1))
    degenerate = np.zeros(n, dtype=bool)
    for t in range(policy.t_start, policy.t_end + 1):
        split = class_rigidity_split(float(shares.f_rigid[t]), p_rigid_by_class, fleet)
        matrix[t], degenerate[t] = modified_fleet_shares(t, policy, fleet, shares, split)
    return FleetShareSeries(shares=matrix, degenerate=degenerate)


def emission_series(
    fleet_shares: FleetShareSeries, fleet: FleetMix, traffic: TrafficSeries
) -> EmissionSeries:
    """Grams emitted per interval: mix-weighted per-km rate, km per interval,
    times circulating vehicles."""
    per_vehicle = fleet_shares.shares @ fleet.emission_per_km * fleet.km_per_interval
    return EmissionSeries(per_vehicle=per_vehicle, total=per_vehicle * traffic.values)


def baseline_fleet_share_series(fleet: FleetMix, n_intervals: int) -> FleetShareSeries:
    return FleetShareSeries(
        shares=np.tile(fleet.class_shares, (n_intervals, 1)),
        degenerate=np.zeros(n_intervals, dtype=bool),
    )
