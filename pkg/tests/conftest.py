import json
from pathlib import Path

import pytest

from cordonsim.scenario import TimeGrid
from cordonsim.scenarios import (
    builtin_demand_path,
    builtin_scenario_path,
    load_builtin_demand,
    load_builtin_scenario,
)


@pytest.fixture(scope="session")
def grid():
    return TimeGrid(5)


@pytest.fixture(scope="session")
def demand():
    return load_builtin_demand()


@pytest.fixture(scope="session")
def demand_csv_path():
    return str(builtin_demand_path())


@pytest.fixture(scope="session")
def a1_config():
    return load_builtin_scenario("a1")


@pytest.fixture(scope="session")
def a1_document():
    return json.loads(Path(builtin_scenario_path("a1")).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def suite_results(demand):
    """One deterministic run per bundled scenario, shared across tests."""
    from cordonsim.ensemble import run_single
    from cordonsim.scenarios import SUITE_NAMES

    return {
        name: run_single(load_builtin_scenario(name), demand) for name in SUITE_NAMES
    }
