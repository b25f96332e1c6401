"""Behavioral response engine.

Turns a pricing policy into per-interval strategy shares (rigidity,
anticipation, postponement, mode shift, lost), redistributes time-shifted
trips before/after the pricing window, and produces the modified demand
vectors. All probabilities come from an exponential acceptance model: the
effort a traveler is willing to absorb is exponentially distributed and
characterized by its median, so P[accept] = exp(-ln2 * required / median).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import (
    BehavioralParams,
    DemandProfile,
    FleetMix,
    PolicyParams,
    ZoneTable,
)

LN2 = math.log(2.0)

STRATEGIES = ("rigid", "anticipate", "postpone", "modeshift")


class BehaviorError(Exception):
    """Inconsistent inputs in the behavioral stage."""


class EmptyShiftWindowError(BehaviorError):
    """Time-shifted vehicles exist but the day has no room on that side."""

    def __init__(self, side: str, total: float):
        self.side = side
        self.total = total
        super().__init__(
            f"{total:.3f} vehicles to redistribute by {side} but the policy window "
            f"leaves no same-day intervals on that side"
        )


def acceptance_probability(required: float, median: float) -> float:
    """P[accept] for an effort `required` against an exponential median.

    Degenerate medians follow the limit of exp(-ln2 * x / m) as m -> 0:
    zero tolerance accepts only zero effort.
    """
    if required == 0.0:
        return 1.0
    if median == 0.0:
        return 0.0
    return math.exp(-LN2 * required / median)


def rigidity_probabilities(
    policy: PolicyParams, fleet: FleetMix, cost_median: float
) -> tuple[np.ndarray, float]:
    """Per-Euro-class and fleet-weighted probability of paying the fee."""
    per_class = np.array(
        [acceptance_probability(fee, cost_median) for fee in policy.fee_by_class]
    )
    overall = float(np.dot(fleet.class_shares, per_class))
    return per_class, overall


def postponement_probability(t: int, policy: PolicyParams, postpone_median: float) -> float:
    """Probability of delaying a trip at interval t until after the window."""
    if not policy.t_start <= t <= policy.t_end:
        raise ValueError(f"t={t} outside policy window [{policy.t_start}, {policy.t_end}]")
    return acceptance_probability(policy.t_end - t, postpone_median)


def dwell_correction(anticipate_median: float, mean_dwell: int) -> float:
    """Correction for the dwell time an anticipated trip must also absorb.

    An anticipating traveler must finish before the window opens, so the
    accepted shift covers the departure advance plus a geometric dwell with
    mean `mean_dwell`. Marginalizing the dwell gives a constant factor
    epsilon = p*e^{-ln2/m} / (1 - (1-p)*e^{-ln2/m}) with p = 1/mean_dwell.
    """
    if anticipate_median == 0.0:
        return 0.0
    p = 1.0 / mean_dwell
    decay = math.exp(-LN2 / anticipate_median)
    return p * decay / (1.0 - (1.0 - p) * decay)


def anticipation_probability(
    t: int, policy: PolicyParams, anticipate_median: float, mean_dwell: int
) -> float:
    """Probability of advancing a trip at interval t to before the window."""
    if not policy.t_start <= t <= policy.t_end:
        raise ValueError(f"t={t} outside policy window [{policy.t_start}, {policy.t_end}]")
    if mean_dwell < 1:
        raise ValueError(f"mean_dwell must be >= 1, got {mean_dwell}")
    if anticipate_median == 0.0:
        return 0.0
    return dwell_correction(anticipate_median, mean_dwell) * math.exp(
        -LN2 * (t - policy.t_start) / anticipate_median
    )


def mode_shift_probabilities(
    zones: ZoneTable, beta: tuple, enabled: bool = True
) -> tuple[np.ndarray, float, float]:
    """Per-zone logit of switching to public transport, plus both
    demand-weighted overall values (inflow weights, starting weights)."""
    if not enabled:
        zeros = np.zeros(len(zones.zones))
        return zeros, 0.0, 0.0
    x = zones.covariate_matrix()
    utility = beta[0] + x @ np.asarray(beta[1:], dtype=float)
    per_zone = 1.0 / (1.0 + np.exp(-utility))
    overall_inflow = float(np.dot(zones.weights("inflow"), per_zone))
    overall_starting = float(np.dot(zones.weights("starting"), per_zone))
    return per_zone, overall_inflow, overall_starting


@dataclass(frozen=True)
class AcceptanceCurves:
    """Marginal acceptance probabilities for one demand stream.

    Time-dependent curves are indexed over the policy window
    [t_start, t_end]; rigidity and mode shift are constant over t.
    """

    p_rigid_by_class: np.ndarray
    p_rigid_overall: float
    p_anticipate: np.ndarray
    p_postpone: np.ndarray
    p_modeshift_by_zone: np.ndarray
    p_modeshift_overall: float
    epsilon: float


def build_acceptance_curves(
    policy: PolicyParams,
    fleet: FleetMix,
    zones: ZoneTable,
    cost_median: float,
    anticipate_median: float,
    postpone_median: float,
    mean_dwell: int,
    logit_coefficients: tuple,
    mode_shift_enabled: bool,
    stream: str = "inflow",
) -> AcceptanceCurves:
    """Evaluate every marginal acceptance curve for one stream.

    `stream` selects which zone weights aggregate the mode-shift logit:
    "inflow" for trips entering the area, "starting" for internal trips.
    """
    p_class, p_rigid = rigidity_probabilities(policy, fleet, cost_median)
    window = np.arange(policy.t_start, policy.t_end + 1)
    p_post = np.array([acceptance_probability(policy.t_end - t, postpone_median) for t in window])
    eps = dwell_correction(anticipate_median, mean_dwell)
    if anticipate_median == 0.0:
        p_ant = np.zeros(window.size)
    else:
        p_ant = eps * np.exp(-LN2 * (window - policy.t_start) / anticipate_median)
    p_zone, overall_in, overall_st = mode_shift_probabilities(
        zones, logit_coefficients, mode_shift_enabled
    )
    p_mode = overall_in if stream == "inflow" else overall_st
    return AcceptanceCurves(
        p_rigid_by_class=p_class,
        p_rigid_overall=p_rigid,
        p_anticipate=p_ant,
        p_postpone=p_post,
        p_modeshift_by_zone=p_zone,
        p_modeshift_overall=p_mode,
        epsilon=eps,
    )


@dataclass(frozen=True)
class StrategyShares:
    """Per-interval fractions of travelers by chosen strategy (full day).

    Inside the window the six fractions sum to 1; outside, f_exempt = 1
    (travelers there are unaffected) and the rest are 0.
    """

    t_start: int
    t_end: int
    f_exempt: np.ndarray
    f_rigid: np.ndarray
    f_anticipate: np.ndarray
    f_postpone: np.ndarray
    f_modeshift: np.ndarray
    f_lost: np.ndarray

    def in_window(self) -> slice:
        return slice(self.t_start, self.t_end + 1)

    def stack(self) -> np.ndarray:
        return np.vstack(
            [self.f_exempt, self.f_rigid, self.f_anticipate,
             self.f_postpone, self.f_modeshift, self.f_lost]
        )


def strategy_shares(t: int, curves: AcceptanceCurves, policy: PolicyParams) -> dict:
    """Resolve the simultaneous choice at one interval.

    Travelers evaluate the four strategies independently; when several are
    acceptable at once, each is picked with equal probability. The share of
    strategy X is therefore a sum over every acceptance subset containing X,
    weighted 1/|subset|. Non-acceptors of everything are lost.
    """
    if not policy.t_start <= t <= policy.t_end:
        raise ValueError(f"t={t} outside policy window")
    i = t - policy.t_start
    probs = {
        "rigid": curves.p_rigid_overall,
        "anticipate": float(curves.p_anticipate[i]),
        "postpone": float(curves.p_postpone[i]),
        "modeshift": curves.p_modeshift_overall,
    }
    non_exempt = 1.0 - policy.exempt_fraction
    shares = {name: 0.0 for name in STRATEGIES}
    lost = non_exempt
    for mask in range(1, 16):
        members = [name for b, name in enumerate(STRATEGIES) if mask >> b & 1]
        weight = 1.0
        for b, name in enumerate(STRATEGIES):
            weight *= probs[name] if mask >> b & 1 else 1.0 - probs[name]
        for name in members:
            shares[name] += non_exempt * weight / len(members)
    for name in STRATEGIES:
        lost *= 1.0 - probs[name]
    return {
        "f_exempt": policy.exempt_fraction,
        "f_rigid": shares["rigid"],
        "f_anticipate": shares["anticipate"],
        "f_postpone": shares["postpone"],
        "f_modeshift": shares["modeshift"],
        "f_lost": lost,
    }


def strategy_shares_series(
    curves: AcceptanceCurves, policy: PolicyParams, n_intervals: int
) -> StrategyShares:
    """Vectorized strategy shares over the whole day."""
    window = slice(policy.t_start, policy.t_end + 1)
    width = policy.t_end - policy.t_start + 1
    probs = np.vstack(
        [
            np.full(width, curves.p_rigid_overall),
            curves.p_anticipate,
            curves.p_postpone,
            np.full(width, curves.p_modeshift_overall),
        ]
    )
    non_exempt = 1.0 - policy.exempt_fraction
    shares_w = np.zeros((4, width))
    for mask in range(1, 16):
        bits = [mask >> b & 1 for b in range(4)]
        weight = np.ones(width)
        for b in range(4):
            weight = weight * (probs[b] if bits[b] else 1.0 - probs[b])
        size = sum(bits)
        for b in range(4):
            if bits[b]:
                shares_w[b] += weight / size
    shares_w *= non_exempt
    lost_w = non_exempt * np.prod(1.0 - probs, axis=0)

    def full(values_in_window, outside=0.0):
        arr = np.full(n_intervals, outside)
        arr[window] = values_in_window
        return arr

    return StrategyShares(
        t_start=policy.t_start,
        t_end=policy.t_end,
        f_exempt=full(np.full(width, policy.exempt_fraction), outside=1.0),
        f_rigid=full(shares_w[0]),
        f_anticipate=full(shares_w[1]),
        f_postpone=full(shares_w[2]),
        f_modeshift=full(shares_w[3]),
        f_lost=full(lost_w),
    )


@dataclass(frozen=True)
class TimeShiftPlan:
    """Totals and per-interval placement of time-shifted vehicles."""

    total_anticipating: float
    total_postponing: float
    redistributed_anticipated: np.ndarray
    redistributed_postponed: np.ndarray


def _exponential_bins(offsets: np.ndarray, median: float) -> np.ndarray:
    """Mass of an exponential tolerance falling in integer offset bins.

    Bin at offset d >= 1 from the window edge holds
    exp(-lam*(d-1)) - exp(-lam*d); a zero median concentrates everything in
    the first bin.
    """
    if offsets.size == 0:
        return np.zeros(0)
    if median == 0.0:
        bins = np.zeros(offsets.size)
        bins[offsets == 1] = 1.0
        return bins
    lam = LN2 / median
    return np.exp(-lam * (offsets - 1)) - np.exp(-lam * offsets)


def time_shift_plan(
    demand: np.ndarray,
    shares: StrategyShares,
    anticipate_redist_median: float,
    postpone_redist_median: float,
) -> TimeShiftPlan:
    """Count time-shifting vehicles and spread them over the free hours.

    Shifted trips stay in the daily total: the exponential bin masses are
    renormalized over the feasible same-day window on each side before
    scaling by the totals.
    """
    n = demand.size
    window = shares.in_window()
    total_a = float(np.dot(shares.f_anticipate[window], demand[window]))
    total_p = float(np.dot(shares.f_postpone[window], demand[window]))

    n_ar = np.zeros(n)
    n_pr = np.zeros(n)
    eps = 1e-12

    before = np.arange(0, shares.t_start)
    if total_a > eps and before.size == 0:
        raise EmptyShiftWindowError("anticipation (before t_start)", total_a)
    if before.size and total_a > eps:
        offsets = shares.t_start - before  # t_start - t, decreasing toward the window
        bins = _exponential_bins(offsets.astype(float), anticipate_redist_median)
        n_ar[before] = bins / bins.sum() * total_a

    after = np.arange(shares.t_end + 1, n)
    if total_p > eps and after.size == 0:
        raise EmptyShiftWindowError("postponement (after t_end)", total_p)
    if after.size and total_p > eps:
        offsets = after - shares.t_end
        bins = _exponential_bins(offsets.astype(float), postpone_redist_median)
        n_pr[after] = bins / bins.sum() * total_p

    return TimeShiftPlan(total_a, total_p, n_ar, n_pr)


def modified_demand(
    demand: DemandProfile,
    shares_inflow: StrategyShares,
    shares_starting: StrategyShares,
    plan_inflow: TimeShiftPlan,
    plan_starting: TimeShiftPlan,
) -> tuple[np.ndarray, np.ndarray]:
    """Modified inflow and starting vectors under the policy.

    Inside the window only exempt and rigid travelers remain; outside,
    the baseline gains the redistributed time-shifted trips.
    """
    modified = []
    for base, shares, plan in (
        (demand.inflow, shares_inflow, plan_inflow),
        (demand.starting, shares_starting, plan_starting),
    ):
        window = shares.in_window()
        out = base + plan.redistributed_anticipated + plan.redistributed_postponed
        out[window] = (shares.f_exempt[window] + shares.f_rigid[window]) * base[window]
        modified.append(out)
    return modified[0], modified[1]


def behavior_kpis(
    demand: DemandProfile,
    shares_inflow: StrategyShares,
    shares_starting: StrategyShares,
) -> dict:
    """Vehicle counts by behavioral outcome, per stream and total."""
    out: dict = {}
    for name, base, shares in (
        ("inflow", demand.inflow, shares_inflow),
        ("starting", demand.starting, shares_starting),
    ):
        window = shares.in_window()
        affected = base[window]
        out[name] = {
            "time_shifted": float(
                np.dot(shares.f_anticipate[window] + shares.f_postpone[window], affected)
            ),
            "mode_shifted": float(np.dot(shares.f_modeshift[window], affected)),
            "lost": float(np.dot(shares.f_lost[window], affected)),
        }
    out["total"] = {
        key: out["inflow"][key] + out["starting"][key]
        for key in ("time_shifted", "mode_shifted", "lost")
    }
    return out


def combine_shares(
    shares_inflow: StrategyShares,
    shares_starting: StrategyShares,
    demand: DemandProfile,
) -> StrategyShares:
    """Demand-weighted blend of the two streams' shares.

    The circulating fleet during the window mixes entering and internal
    vehicles, so the fleet-composition stage needs a single rigidity share
    per interval. Intervals with zero demand fall back to the inflow stream.
    """
    total = demand.inflow + demand.starting
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(total > 0, demand.inflow / np.where(total > 0, total, 1.0), 1.0)
    blend = lambda a, b: w * a + (1.0 - w) * b
    return StrategyShares(
        t_start=shares_inflow.t_start,
        t_end=shares_inflow.t_end,
        f_exempt=blend(shares_inflow.f_exempt, shares_starting.f_exempt),
        f_rigid=blend(shares_inflow.f_rigid, shares_starting.f_rigid),
        f_anticipate=blend(shares_inflow.f_anticipate, shares_starting.f_anticipate),
        f_postpone=blend(shares_inflow.f_postpone, shares_starting.f_postpone),
        f_modeshift=blend(shares_inflow.f_modeshift, shares_starting.f_modeshift),
        f_lost=blend(shares_inflow.f_lost, shares_starting.f_lost),
    )
