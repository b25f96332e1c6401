"""Access to the bundled scenario suite and demand fixture.

Nine ready-made configs (a1-a6 vary the policy controls, b1-b3 stress the
behavioral assumptions) plus a null-policy baseline, all on the 5-minute
grid with the default fleet and a synthetic zone table. The demand fixture
is a two-peak weekday at desk scale.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .scenario import DemandProfile, ScenarioConfig, TimeGrid, load_demand, load_scenario

SCENARIO_NAMES = ("a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3")
SUITE_NAMES = ("baseline",) + SCENARIO_NAMES


def builtin_scenario_path(name: str) -> Path:
    if name not in SUITE_NAMES:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {', '.join(SUITE_NAMES)}")
    return Path(str(resources.files("cordonsim") / "scenarios" / f"{name}.json"))


def load_builtin_scenario(name: str) -> ScenarioConfig:
    return load_scenario(builtin_scenario_path(name).read_text(encoding="utf-8"))


def builtin_demand_path() -> Path:
    return Path(str(resources.files("cordonsim") / "data" / "demand_two_peak.csv"))


def load_builtin_demand(grid: TimeGrid | None = None) -> DemandProfile:
    return load_demand(str(builtin_demand_path()), grid or TimeGrid(5))
