"""Domain types and validated ingestion of scenario configuration and baseline data.

All times are normalized at load: clock times ("8:00 AM", "18:00") become
interval indices on the day grid, durations ("1h", "20min") become integer
interval counts. Downstream modules only ever see interval units.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MINUTES_PER_DAY = 1440

DEMAND_HEADER = ["t", "inflow", "starting"]
ZONE_HEADER = [
    "zone_id",
    "weight_inflow",
    "weight_starting",
    "freq",
    "capillarity",
    "fare",
    "time_diff",
]


class ScenarioError(Exception):
    """Base class for ingestion and validation failures."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SchemaError(ScenarioError):
    """A field is missing or has the wrong type/shape."""


class UnitError(SchemaError):
    """A duration or clock time does not convert cleanly to the interval grid."""


class InvariantError(ScenarioError):
    """A well-typed value violates a domain constraint."""


class DemandError(ScenarioError):
    """Demand CSV is malformed or inconsistent with the time grid."""


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


# ---------------------------------------------------------------------------
# Unit parsing
# ---------------------------------------------------------------------------

_DURATION_RE = re.compile(
    r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(h|hr|hrs|hour|hours|m|min|mins|minute|minutes)\s*$",
    re.IGNORECASE,
)
_CLOCK_RE = re.compile(
    r"^\s*([0-9]{1,2}):([0-9]{2})\s*(am|pm)?\s*$", re.IGNORECASE
)


def duration_to_intervals(value, grid: "TimeGrid", field_name: str) -> int:
    """Convert a duration to a whole number of grid intervals.

    Accepts a bare number (already interval units) or a string with a
    minutes/hours suffix such as "20min" or "1.5h".
    """
    if isinstance(value, bool):
        raise SchemaError(field_name, "duration must be a number or unit string")
    if isinstance(value, (int, float)):
        if not math.isfinite(value) or value < 0:
            raise SchemaError(field_name, f"duration must be finite and >= 0, got {value}")
        if float(value) != int(value):
            raise UnitError(field_name, f"{value} is not a whole number of intervals")
        return int(value)
    if isinstance(value, str):
        m = _DURATION_RE.match(value)
        if not m:
            raise SchemaError(field_name, f"cannot parse duration {value!r}")
        amount = float(m.group(1))
        minutes = amount * 60.0 if m.group(2).lower().startswith("h") else amount
        if minutes % grid.interval_minutes != 0:
            raise UnitError(
                field_name,
                f"{value!r} is {minutes:g} minutes, not a multiple of "
                f"the {grid.interval_minutes}-minute interval",
            )
        return int(round(minutes / grid.interval_minutes))
    raise SchemaError(field_name, f"duration must be a number or string, got {type(value).__name__}")


def clock_to_interval(value, grid: "TimeGrid", field_name: str) -> int:
    """Convert a clock time ("8:00 AM", "18:00") or interval index to an index."""
    if isinstance(value, bool):
        raise SchemaError(field_name, "clock time must be an index or time string")
    if isinstance(value, int):
        if not 0 <= value < grid.n_intervals:
            raise InvariantError(
                field_name, f"interval index {value} outside [0, {grid.n_intervals - 1}]"
            )
        return value
    if isinstance(value, float):
        if value != int(value):
            raise UnitError(field_name, f"{value} is not a whole interval index")
        return clock_to_interval(int(value), grid, field_name)
    if isinstance(value, str):
        m = _CLOCK_RE.match(value)
        if not m:
            raise SchemaError(field_name, f"cannot parse clock time {value!r}")
        hours, minutes = int(m.group(1)), int(m.group(2))
        suffix = (m.group(3) or "").lower()
        if suffix:
            if not 1 <= hours <= 12:
                raise SchemaError(field_name, f"hour {hours} invalid with AM/PM")
            hours = hours % 12 + (12 if suffix == "pm" else 0)
        if not (0 <= hours < 24 and 0 <= minutes < 60):
            raise SchemaError(field_name, f"clock time {value!r} out of range")
        total = hours * 60 + minutes
        if total % grid.interval_minutes != 0:
            raise UnitError(
                field_name,
                f"{value!r} is not aligned to the {grid.interval_minutes}-minute grid",
            )
        return total // grid.interval_minutes
    raise SchemaError(field_name, f"clock time must be int or string, got {type(value).__name__}")


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid:
    """One-day grid: interval length in minutes and the interval count."""

    interval_minutes: int
    n_intervals: int = 0

    def __post_init__(self):
        if not isinstance(self.interval_minutes, int) or self.interval_minutes <= 0:
            raise InvariantError("time_grid.interval_minutes", "must be a positive integer")
        if MINUTES_PER_DAY % self.interval_minutes != 0:
            raise InvariantError(
                "time_grid.interval_minutes",
                f"{self.interval_minutes} does not divide {MINUTES_PER_DAY}",
            )
        derived = MINUTES_PER_DAY // self.interval_minutes
        if self.n_intervals == 0:
            object.__setattr__(self, "n_intervals", derived)
        elif self.n_intervals != derived:
            raise InvariantError(
                "time_grid.n_intervals",
                f"must equal 1440/{self.interval_minutes} = {derived}, got {self.n_intervals}",
            )

    def to_dict(self) -> dict:
        return {"interval_minutes": self.interval_minutes, "n_intervals": self.n_intervals}


@dataclass(frozen=True)
class Parameter:
    """Scalar model parameter: a fixed point value or a sampling distribution.

    Deterministic runs use :meth:`point` (uniform ranges collapse to the
    midpoint, normals to the mean); ensembles draw via :meth:`sample`, with
    draws clamped to the declared support and to non-negative values.
    """

    kind: str
    value: float = 0.0
    lower: float = 0.0
    upper: float = 0.0
    mean: float = 0.0
    sd: float = 0.0

    def __post_init__(self):
        if self.kind not in ("point", "uniform", "normal"):
            raise SchemaError("parameter.kind", f"unknown kind {self.kind!r}")
        if self.kind == "uniform" and self.lower > self.upper:
            raise InvariantError("parameter.bounds", f"lower {self.lower} > upper {self.upper}")
        if self.kind == "normal" and self.sd < 0:
            raise InvariantError("parameter.sd", f"sd must be >= 0, got {self.sd}")

    @property
    def stochastic(self) -> bool:
        if self.kind == "uniform":
            return self.upper > self.lower
        return self.kind == "normal" and self.sd > 0

    def point(self) -> float:
        if self.kind == "point":
            return self.value
        if self.kind == "uniform":
            return 0.5 * (self.lower + self.upper)
        return self.mean

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "point":
            return self.value
        if self.kind == "uniform":
            return float(rng.uniform(self.lower, self.upper))
        return max(0.0, float(rng.normal(self.mean, self.sd)))

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "value": self.value}
        if self.kind == "uniform":
            return {"kind": "uniform", "lower": self.lower, "upper": self.upper}
        return {"kind": "normal", "mean": self.mean, "sd": self.sd}


def _parse_parameter(raw, field_name: str, convert=None, require_nonneg=True) -> Parameter:
    """Build a Parameter from a JSON value.

    `convert` maps raw numeric leaves (possibly unit strings) to canonical
    units; used for interval-valued medians.
    """
    def leaf(x, sub: str) -> float:
        if convert is not None:
            return float(convert(x, f"{field_name}.{sub}"))
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchemaError(f"{field_name}.{sub}", f"expected a number, got {x!r}")
        return float(x)

    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        param = Parameter("point", value=leaf(raw, "value"))
    elif isinstance(raw, str) and convert is not None:
        param = Parameter("point", value=leaf(raw, "value"))
    elif isinstance(raw, Mapping):
        kind = raw.get("kind")
        if kind == "point":
            param = Parameter("point", value=leaf(_require(raw, "value", field_name), "value"))
        elif kind in ("uniform", "uniform-range"):
            param = Parameter(
                "uniform",
                lower=leaf(_require(raw, "lower", field_name), "lower"),
                upper=leaf(_require(raw, "upper", field_name), "upper"),
            )
        elif kind == "normal":
            sd_raw = _require(raw, "sd", field_name)
            sd = leaf(sd_raw, "sd") if convert is None else _scale_sd(sd_raw, field_name)
            param = Parameter("normal", mean=leaf(_require(raw, "mean", field_name), "mean"), sd=sd)
        else:
            raise SchemaError(f"{field_name}.kind", f"unknown parameter kind {kind!r}")
    else:
        raise SchemaError(field_name, f"expected number or parameter object, got {raw!r}")

    if require_nonneg:
        support_floor = {"point": param.value, "uniform": param.lower, "normal": param.mean}[param.kind]
        if support_floor < 0:
            raise InvariantError(field_name, f"median must be >= 0, got {support_floor}")
    return param


def _scale_sd(raw, field_name: str) -> float:
    """Spread of a duration parameter: scaled to intervals, no divisibility demand."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise SchemaError(f"{field_name}.sd", "sd of a duration must be given in intervals")


def _require(mapping: Mapping, key: str, parent: str):
    if key not in mapping:
        raise SchemaError(f"{parent}.{key}", "missing required field")
    return mapping[key]


@dataclass(frozen=True)
class PolicyParams:
    """Pricing window, exemption share, and per-class fee schedule."""

    t_start: int
    t_end: int
    exempt_fraction: float
    fee_by_class: np.ndarray

    def __post_init__(self):
        if self.t_start < 0 or self.t_end < self.t_start:
            raise InvariantError(
                "policy.t_start/t_end", f"need 0 <= t_start <= t_end, got [{self.t_start}, {self.t_end}]"
            )
        if not 0.0 <= self.exempt_fraction <= 1.0:
            raise InvariantError("policy.exempt_fraction", f"must lie in [0,1], got {self.exempt_fraction}")
        fees = np.asarray(self.fee_by_class, dtype=float)
        if fees.ndim != 1 or fees.size == 0:
            raise SchemaError("policy.fee_by_class", "must be a non-empty list of fees")
        if np.any(fees < 0) or not np.all(np.isfinite(fees)):
            raise InvariantError("policy.fee_by_class", "fees must be finite and >= 0")
        object.__setattr__(self, "fee_by_class", _freeze(fees))

    def window(self) -> range:
        """Interval indices with the policy active (inclusive of both ends)."""
        return range(self.t_start, self.t_end + 1)

    def in_window(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[self.t_start : self.t_end + 1] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "exempt_fraction": self.exempt_fraction,
            "fee_by_class": self.fee_by_class.tolist(),
        }


@dataclass(frozen=True)
class BehavioralParams:
    """Acceptance medians and mode-choice weights driving traveler response."""

    cost_median: Parameter
    anticipate_median: Parameter
    postpone_median: Parameter
    anticipate_redist_median: Parameter
    postpone_redist_median: Parameter
    mode_shift_enabled: bool = True
    logit_coefficients: tuple = (-1.24, 4.5, -1.45, -0.30, -0.034)

    PARAMETER_FIELDS = (
        "cost_median",
        "anticipate_median",
        "postpone_median",
        "anticipate_redist_median",
        "postpone_redist_median",
    )

    def __post_init__(self):
        coeffs = tuple(float(b) for b in self.logit_coefficients)
        if len(coeffs) != 5:
            raise SchemaError("behavior.logit_coefficients", f"expected 5 coefficients, got {len(coeffs)}")
        object.__setattr__(self, "logit_coefficients", coeffs)

    def parameters(self) -> dict:
        return {name: getattr(self, name) for name in self.PARAMETER_FIELDS}

    def to_dict(self) -> dict:
        doc = {name: getattr(self, name).to_dict() for name in self.PARAMETER_FIELDS}
        doc["mode_shift_enabled"] = self.mode_shift_enabled
        doc["logit_coefficients"] = list(self.logit_coefficients)
        return doc


@dataclass(frozen=True)
class FleetMix:
    """Euro-class composition and per-km emission rates of the baseline fleet."""

    class_shares: np.ndarray
    emission_per_km: np.ndarray
    km_per_interval: float
    pollutant: str = "NOx g"

    def __post_init__(self):
        shares = np.asarray(self.class_shares, dtype=float)
        rates = np.asarray(self.emission_per_km, dtype=float)
        if shares.ndim != 1 or shares.size < 1:
            raise SchemaError("fleet.class_shares", "must be a non-empty list")
        if rates.shape != shares.shape:
            raise InvariantError(
                "fleet.emission_per_km",
                f"length {rates.size} does not match class_shares length {shares.size}",
            )
        if np.any(shares < 0):
            raise InvariantError("fleet.class_shares", "shares must be >= 0")
        if abs(shares.sum() - 1.0) > 1e-9:
            raise InvariantError("fleet.class_shares", f"must sum to 1, got {shares.sum():.12f}")
        if np.any(rates < 0):
            raise InvariantError("fleet.emission_per_km", "rates must be >= 0")
        if not self.km_per_interval > 0:
            raise InvariantError("fleet.km_per_interval", f"must be > 0, got {self.km_per_interval}")
        object.__setattr__(self, "class_shares", _freeze(shares))
        object.__setattr__(self, "emission_per_km", _freeze(rates))

    @property
    def n_classes(self) -> int:
        return int(self.class_shares.size)

    def to_dict(self) -> dict:
        return {
            "class_shares": self.class_shares.tolist(),
            "emission_per_km": self.emission_per_km.tolist(),
            "km_per_interval": self.km_per_interval,
            "pollutant": self.pollutant,
        }


@dataclass(frozen=True)
class Zone:
    """One origin zone: demand weights and public-transport convenience covariates."""

    zone_id: str
    weight_inflow: float
    weight_starting: float
    freq: float
    capillarity: float
    fare: float
    time_diff: float

    def covariates(self) -> tuple:
        return (self.freq, self.capillarity, self.fare, self.time_diff)


@dataclass(frozen=True)
class ZoneTable:
    zones: tuple

    def __post_init__(self):
        if len(self.zones) == 0:
            raise SchemaError("zones", "at least one zone required")
        for w_name in ("weight_inflow", "weight_starting"):
            weights = np.array([getattr(z, w_name) for z in self.zones])
            if np.any(weights < 0):
                raise InvariantError(f"zones.{w_name}", "weights must be >= 0")
            if abs(weights.sum() - 1.0) > 1e-9:
                raise InvariantError(f"zones.{w_name}", f"must sum to 1, got {weights.sum():.12f}")
        for z in self.zones:
            if not 0.0 <= z.capillarity <= 1.0:
                raise InvariantError("zones.capillarity", f"zone {z.zone_id}: must lie in [0,1]")

    def weights(self, stream: str) -> np.ndarray:
        attr = "weight_inflow" if stream == "inflow" else "weight_starting"
        return np.array([getattr(z, attr) for z in self.zones])

    def covariate_matrix(self) -> np.ndarray:
        return np.array([z.covariates() for z in self.zones], dtype=float)

    def to_rows(self) -> list:
        return [
            {
                "zone_id": z.zone_id,
                "weight_inflow": z.weight_inflow,
                "weight_starting": z.weight_starting,
                "freq": z.freq,
                "capillarity": z.capillarity,
                "fare": z.fare,
                "time_diff": z.time_diff,
            }
            for z in self.zones
        ]


@dataclass(frozen=True)
class DemandProfile:
    """Baseline inflow and starting-trip vectors, one value per interval."""

    inflow: np.ndarray
    starting: np.ndarray

    def __post_init__(self):
        inflow = np.asarray(self.inflow, dtype=float)
        starting = np.asarray(self.starting, dtype=float)
        if inflow.shape != starting.shape or inflow.ndim != 1:
            raise InvariantError("demand", "inflow and starting must be 1-D vectors of equal length")
        for name, vec in (("inflow", inflow), ("starting", starting)):
            if np.any(vec < 0) or not np.all(np.isfinite(vec)):
                raise InvariantError(f"demand.{name}", "values must be finite and >= 0")
        object.__setattr__(self, "inflow", _freeze(inflow))
        object.__setattr__(self, "starting", _freeze(starting))

    @property
    def n_intervals(self) -> int:
        return int(self.inflow.size)


@dataclass(frozen=True)
class SolverSettings:
    """Dwell-time assumption and stopping rule for the traffic solver."""

    mean_dwell: int
    tolerance: float = 1e-6
    max_iterations: int = 10_000

    def __post_init__(self):
        if not isinstance(self.mean_dwell, int) or self.mean_dwell < 1:
            raise InvariantError("solver.mean_dwell", f"must be an integer >= 1, got {self.mean_dwell}")
        if not self.tolerance > 0:
            raise InvariantError("solver.tolerance", f"must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise InvariantError("solver.max_iterations", f"must be >= 1, got {self.max_iterations}")

    def to_dict(self) -> dict:
        return {
            "mean_dwell": self.mean_dwell,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
        }


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one what-if run."""

    time_grid: TimeGrid
    policy: PolicyParams
    behavior: BehavioralParams
    fleet: FleetMix
    zones: ZoneTable
    solver: SolverSettings

    def __post_init__(self):
        if self.policy.t_end >= self.time_grid.n_intervals:
            raise InvariantError(
                "policy.t_end",
                f"{self.policy.t_end} outside day grid of {self.time_grid.n_intervals} intervals",
            )
        if self.policy.fee_by_class.size != self.fleet.n_classes:
            raise InvariantError(
                "policy.fee_by_class",
                f"length {self.policy.fee_by_class.size} does not match "
                f"{self.fleet.n_classes} fleet classes",
            )

    def to_dict(self) -> dict:
        return {
            "time_grid": self.time_grid.to_dict(),
            "policy": self.policy.to_dict(),
            "behavior": self.behavior.to_dict(),
            "fleet": self.fleet.to_dict(),
            "zones": self.zones.to_rows(),
            "solver": self.solver.to_dict(),
        }


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_scenario(document) -> ScenarioConfig:
    """Parse and validate a scenario config document (JSON text or mapping).

    Raises SchemaError / UnitError / InvariantError; on success every type
    invariant holds and all times are in interval units.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("document", f"invalid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise SchemaError("document", "scenario config must be a JSON object")

    grid_doc = _section(document, "time_grid")
    interval_minutes = _require(grid_doc, "interval_minutes", "time_grid")
    if isinstance(interval_minutes, bool) or not isinstance(interval_minutes, int):
        raise SchemaError("time_grid.interval_minutes", "must be an integer")
    grid = TimeGrid(interval_minutes, int(grid_doc.get("n_intervals", 0)))

    policy_doc = _section(document, "policy")
    fees_raw = _require(policy_doc, "fee_by_class", "policy")
    if not isinstance(fees_raw, Sequence) or isinstance(fees_raw, (str, bytes)):
        raise SchemaError("policy.fee_by_class", "must be a list of fees")
    policy = PolicyParams(
        t_start=clock_to_interval(_require(policy_doc, "t_start", "policy"), grid, "policy.t_start"),
        t_end=clock_to_interval(_require(policy_doc, "t_end", "policy"), grid, "policy.t_end"),
        exempt_fraction=_number(policy_doc.get("exempt_fraction", 0.0), "policy.exempt_fraction"),
        fee_by_class=[_number(f, "policy.fee_by_class") for f in fees_raw],
    )

    behavior_doc = _section(document, "behavior")
    as_intervals = lambda raw, name: duration_to_intervals(raw, grid, name)
    behavior = BehavioralParams(
        cost_median=_parse_parameter(_require(behavior_doc, "cost_median", "behavior"), "behavior.cost_median"),
        anticipate_median=_parse_parameter(
            _require(behavior_doc, "anticipate_median", "behavior"),
            "behavior.anticipate_median", convert=as_intervals),
        postpone_median=_parse_parameter(
            _require(behavior_doc, "postpone_median", "behavior"),
            "behavior.postpone_median", convert=as_intervals),
        anticipate_redist_median=_parse_parameter(
            _require(behavior_doc, "anticipate_redist_median", "behavior"),
            "behavior.anticipate_redist_median", convert=as_intervals),
        postpone_redist_median=_parse_parameter(
            _require(behavior_doc, "postpone_redist_median", "behavior"),
            "behavior.postpone_redist_median", convert=as_intervals),
        mode_shift_enabled=_boolean(behavior_doc.get("mode_shift_enabled", True), "behavior.mode_shift_enabled"),
        logit_coefficients=tuple(
            _number(b, "behavior.logit_coefficients")
            for b in _require(behavior_doc, "logit_coefficients", "behavior")
        ),
    )

    fleet_doc = _section(document, "fleet")
    fleet = FleetMix(
        class_shares=[_number(v, "fleet.class_shares") for v in _require(fleet_doc, "class_shares", "fleet")],
        emission_per_km=[
            _number(v, "fleet.emission_per_km") for v in _require(fleet_doc, "emission_per_km", "fleet")
        ],
        km_per_interval=_number(_require(fleet_doc, "km_per_interval", "fleet"), "fleet.km_per_interval"),
        pollutant=str(fleet_doc.get("pollutant", "NOx g")),
    )

    if "zones" not in document:
        raise SchemaError("zones", "missing required section")
    zones_raw = document["zones"]
    if not isinstance(zones_raw, Sequence) or isinstance(zones_raw, (str, bytes)):
        raise SchemaError("zones", "must be a list of zone rows")
    zones = ZoneTable(tuple(_parse_zone(row, i) for i, row in enumerate(zones_raw)))

    solver_doc = _section(document, "solver")
    solver = SolverSettings(
        mean_dwell=duration_to_intervals(_require(solver_doc, "mean_dwell", "solver"), grid, "solver.mean_dwell"),
        tolerance=_number(solver_doc.get("tolerance", 1e-6), "solver.tolerance"),
        max_iterations=int(_number(solver_doc.get("max_iterations", 10_000), "solver.max_iterations")),
    )

    return ScenarioConfig(grid, policy, behavior, fleet, zones, solver)


def load_scenario_file(path) -> ScenarioConfig:
    return load_scenario(Path(path).read_text(encoding="utf-8"))


def _section(document: Mapping, key: str) -> Mapping:
    if key not in document:
        raise SchemaError(key, "missing required section")
    value = document[key]
    if not isinstance(value, Mapping):
        raise SchemaError(key, "must be an object")
    return value


def _number(value, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(field_name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SchemaError(field_name, f"expected a finite number, got {value!r}")
    return float(value)


def _boolean(value, field_name: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(field_name, f"expected true/false, got {value!r}")
    return value


def _parse_zone(row, index: int) -> Zone:
    if not isinstance(row, Mapping):
        raise SchemaError(f"zones[{index}]", "zone row must be an object")
    zone_id = str(row.get("zone_id", index))
    weight_inflow = _number(_require(row, "weight_inflow", f"zones[{index}]"), f"zones[{index}].weight_inflow")
    if "weight_starting" in row:
        weight_starting = _number(row["weight_starting"], f"zones[{index}].weight_starting")
    else:
        logger.warning("zone %s lacks weight_starting; falling back to weight_inflow", zone_id)
        weight_starting = weight_inflow
    return Zone(
        zone_id=zone_id,
        weight_inflow=weight_inflow,
        weight_starting=weight_starting,
        freq=_number(_require(row, "freq", f"zones[{index}]"), f"zones[{index}].freq"),
        capillarity=_number(_require(row, "capillarity", f"zones[{index}]"), f"zones[{index}].capillarity"),
        fare=_number(_require(row, "fare", f"zones[{index}]"), f"zones[{index}].fare"),
        time_diff=_number(_require(row, "time_diff", f"zones[{index}]"), f"zones[{index}].time_diff"),
    )


def load_demand(source, grid: TimeGrid) -> DemandProfile:
    """Read a `t,inflow,starting` CSV into a validated DemandProfile.

    `source` may be a path, CSV text, or an open text stream. Rows must cover
    interval indices 0..n-1 contiguously.
    """
    stream, close = _open_csv(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise DemandError("demand", "empty CSV") from None
        if [h.strip() for h in header] != DEMAND_HEADER:
            raise DemandError("demand", f"expected header {','.join(DEMAND_HEADER)}, got {','.join(header)}")
        inflow, starting = [], []
        for i, row in enumerate(reader):
            if len(row) != 3:
                raise DemandError(f"demand.row[{i}]", f"expected 3 columns, got {len(row)}")
            try:
                t, inf, st = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise DemandError(f"demand.row[{i}]", f"non-numeric entry in {row}") from None
            if t != i:
                raise DemandError("demand.t", f"missing or out-of-order interval: expected {i}, got {t}")
            if inf < 0 or st < 0:
                raise DemandError(f"demand.row[{i}]", f"negative value in {row}")
            inflow.append(inf)
            starting.append(st)
    finally:
        if close:
            stream.close()
    if len(inflow) != grid.n_intervals:
        raise DemandError(
            "demand", f"expected {grid.n_intervals} rows for the grid, got {len(inflow)}"
        )
    return DemandProfile(np.array(inflow), np.array(starting))


def load_zones(source) -> ZoneTable:
    """Read a zone-table CSV (`zone_id,weight_inflow,...,time_diff`)."""
    stream, close = _open_csv(source)
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ZONE_HEADER:
            raise SchemaError("zones", f"expected header {','.join(ZONE_HEADER)}")
        rows = []
        for i, row in enumerate(reader):
            parsed = {"zone_id": row["zone_id"]}
            for key in ZONE_HEADER[1:]:
                try:
                    parsed[key] = float(row[key])
                except (TypeError, ValueError):
                    raise SchemaError(f"zones[{i}].{key}", f"non-numeric entry {row[key]!r}") from None
            rows.append(_parse_zone(parsed, i))
    finally:
        if close:
            stream.close()
    return ZoneTable(tuple(rows))


def _open_csv(source):
    if hasattr(source, "read"):
        return source, False
    text = str(source)
    if "\n" in text:
        return io.StringIO(text), True
    return open(text, "r", encoding="utf-8", newline=""), True


def write_demand_csv(profile: DemandProfile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(DEMAND_HEADER) + "\n")
        for t in range(profile.n_intervals):
            fh.write(f"{t},{float(profile.inflow[t])!r},{float(profile.starting[t])!r}\n")


# ---------------------------------------------------------------------------
# Built-in data
# ---------------------------------------------------------------------------

BOLOGNA_CLASS_SHARES = (0.059, 0.012, 0.034, 0.054, 0.198, 0.176, 0.467)
BOLOGNA_EMISSION_G_PER_KM = (
    0.2105847,
    0.217457,
    0.2401457,
    0.247239,
    0.135555,
    0.099559,
    0.068246,
)


def builtin_bologna_defaults() -> tuple:
    """Default fleet mix, behavioral parameters, and solver settings.

    Calibrated for a 5-minute grid: 20-minute mean dwell = 4 intervals,
    1-hour time-shift medians = 12 intervals, 1.5-hour redistribution
    medians = 18 intervals.
    """
    fleet = FleetMix(
        class_shares=BOLOGNA_CLASS_SHARES,
        emission_per_km=BOLOGNA_EMISSION_G_PER_KM,
        km_per_interval=2.5,
    )
    behavior = BehavioralParams(
        cost_median=Parameter("uniform", lower=4.0, upper=7.0),
        anticipate_median=Parameter("point", value=12.0),
        postpone_median=Parameter("point", value=12.0),
        anticipate_redist_median=Parameter("point", value=18.0),
        postpone_redist_median=Parameter("point", value=18.0),
    )
    solver = SolverSettings(mean_dwell=4)
    return fleet, behavior, solver


def synthetic_two_peak_profile(grid: TimeGrid | None = None) -> DemandProfile:
    """Synthetic weekday demand: morning and (heavier) evening peaks.

    Desk-scale stand-in for observed inflow/starting data; peaks sit at
    8:00 and 18:00 so the bundled policy windows straddle them.
    """
    grid = grid or TimeGrid(5)
    t = np.arange(grid.n_intervals, dtype=float)
    scale = grid.n_intervals / 288.0
    morning = np.exp(-0.5 * ((t - 96.0 * scale) / (24.0 * scale)) ** 2)
    evening = np.exp(-0.5 * ((t - 216.0 * scale) / (24.0 * scale)) ** 2)
    inflow = 40.0 + 450.0 * morning + 520.0 * evening
    starting = 30.0 + 320.0 * morning + 360.0 * evening
    return DemandProfile(inflow, starting)
