"""Ingestion, unit conversion, and type invariants."""
import io
import json
import math

import numpy as np
import pytest

from cordonsim.scenario import (
    DemandError,
    InvariantError,
    Parameter,
    SchemaError,
    TimeGrid,
    UnitError,
    builtin_bologna_defaults,
    clock_to_interval,
    duration_to_intervals,
    load_demand,
    load_scenario,
    load_zones,
    synthetic_two_peak_profile,
)


def demand_csv(n=288, inflow=100.0, starting=50.0):
    lines = ["t,inflow,starting"] + [f"{t},{inflow},{starting}" for t in range(n)]
    return "\n".join(lines) + "\n"


class TestTimeGrid:
    def test_five_minute_grid(self):
        assert TimeGrid(5).n_intervals == 288

    def test_non_divisor_rejected(self):
        with pytest.raises(InvariantError, match="interval_minutes"):
            TimeGrid(7)

    def test_inconsistent_count_rejected(self):
        with pytest.raises(InvariantError, match="n_intervals"):
            TimeGrid(5, n_intervals=100)


class TestUnits:
    def test_clock_times(self, grid):
        assert clock_to_interval("8:00 AM", grid, "f") == 96
        assert clock_to_interval("6:00 PM", grid, "f") == 216
        assert clock_to_interval("18:00", grid, "f") == 216
        assert clock_to_interval(96, grid, "f") == 96

    def test_clock_off_grid(self, grid):
        with pytest.raises(UnitError):
            clock_to_interval("8:02 AM", grid, "f")

    def test_duration_hours(self, grid):
        assert duration_to_intervals("1h", grid, "f") == 12
        assert duration_to_intervals("1.5h", grid, "f") == 18
        assert duration_to_intervals("20min", grid, "f") == 4
        assert duration_to_intervals(12, grid, "f") == 12

    def test_duration_not_multiple(self, grid):
        with pytest.raises(UnitError):
            duration_to_intervals("7min", grid, "f")


class TestParameter:
    def test_point_and_midpoint(self):
        assert Parameter("point", value=3.0).point() == 3.0
        assert Parameter("uniform", lower=4.0, upper=7.0).point() == 5.5
        assert Parameter("normal", mean=2.0, sd=1.0).point() == 2.0

    def test_bad_bounds(self):
        with pytest.raises(InvariantError):
            Parameter("uniform", lower=7.0, upper=4.0)
        with pytest.raises(InvariantError):
            Parameter("normal", mean=1.0, sd=-0.5)

    def test_sampling_respects_support(self):
        rng = np.random.default_rng(1)
        p = Parameter("uniform", lower=4.0, upper=7.0)
        draws = [p.sample(rng) for _ in range(200)]
        assert all(4.0 <= d <= 7.0 for d in draws)
        clamped = Parameter("normal", mean=0.1, sd=5.0)
        assert all(clamped.sample(rng) >= 0.0 for _ in range(200))


class TestLoadScenario:
    def test_table_row_a1(self, a1_document):
        config = load_scenario(json.dumps(a1_document))
        assert config.policy.t_start == 96
        assert config.policy.t_end == 216
        assert config.policy.exempt_fraction == 0.0
        assert config.policy.fee_by_class.tolist() == [5.0] * 7

    def test_share_sum_violation_names_field(self, a1_document):
        doc = json.loads(json.dumps(a1_document))
        doc["fleet"]["class_shares"] = [0.9] + [0.0] * 6
        with pytest.raises(InvariantError, match="class_shares"):
            load_scenario(doc)

    def test_duration_conversion(self, a1_document):
        doc = json.loads(json.dumps(a1_document))
        doc["behavior"]["anticipate_median"] = "1h"
        assert load_scenario(doc).behavior.anticipate_median.point() == 12.0

    def test_missing_section(self, a1_document):
        doc = {k: v for k, v in a1_document.items() if k != "fleet"}
        with pytest.raises(SchemaError, match="fleet"):
            load_scenario(doc)

    def test_window_order_enforced(self, a1_document):
        doc = json.loads(json.dumps(a1_document))
        doc["policy"]["t_start"], doc["policy"]["t_end"] = "6:00 PM", "8:00 AM"
        with pytest.raises(InvariantError, match="t_start"):
            load_scenario(doc)

    def test_fee_length_must_match_fleet(self, a1_document):
        doc = json.loads(json.dumps(a1_document))
        doc["policy"]["fee_by_class"] = [5.0, 5.0]
        with pytest.raises(InvariantError, match="fee_by_class"):
            load_scenario(doc)

    def test_round_trip(self, a1_config):
        again = load_scenario(a1_config.to_dict())
        assert again.to_dict() == a1_config.to_dict()

    def test_invalid_json_text(self):
        with pytest.raises(SchemaError):
            load_scenario("{not json")


class TestLoadDemand:
    def test_constant_profile(self, grid):
        profile = load_demand(demand_csv(), grid)
        assert profile.inflow.sum() == pytest.approx(28800.0)
        assert profile.starting.sum() == pytest.approx(14400.0)

    def test_missing_interval(self, grid):
        with pytest.raises(DemandError, match="288"):
            load_demand(demand_csv(n=287), grid)

    def test_negative_value(self, grid):
        text = demand_csv().replace("5,100.0", "5,-1.0", 1)
        with pytest.raises(DemandError, match="negative"):
            load_demand(text, grid)

    def test_out_of_order_rows(self, grid):
        lines = demand_csv().splitlines()
        lines[1], lines[2] = lines[2], lines[1]
        with pytest.raises(DemandError, match="interval"):
            load_demand("\n".join(lines), grid)

    def test_wrong_header(self, grid):
        with pytest.raises(DemandError, match="header"):
            load_demand("time,in,out\n0,1,2\n", grid)

    def test_stream_source(self, grid):
        profile = load_demand(io.StringIO(demand_csv()), grid)
        assert profile.n_intervals == 288


class TestZones:
    def test_csv_round(self):
        text = (
            "zone_id,weight_inflow,weight_starting,freq,capillarity,fare,time_diff\n"
            "a,0.6,0.5,1.0,0.4,1.5,10\n"
            "b,0.4,0.5,0.5,0.2,2.0,20\n"
        )
        table = load_zones(text)
        assert [z.zone_id for z in table.zones] == ["a", "b"]
        assert table.weights("inflow").tolist() == [0.6, 0.4]
        assert table.weights("starting").tolist() == [0.5, 0.5]

    def test_weight_sum_enforced(self):
        text = (
            "zone_id,weight_inflow,weight_starting,freq,capillarity,fare,time_diff\n"
            "a,0.6,0.5,1.0,0.4,1.5,10\n"
            "b,0.3,0.5,0.5,0.2,2.0,20\n"
        )
        with pytest.raises(InvariantError, match="weight_inflow"):
            load_zones(text)

    def test_missing_starting_weights_fall_back(self, a1_document, caplog):
        doc = json.loads(json.dumps(a1_document))
        for row in doc["zones"]:
            row.pop("weight_starting")
        with caplog.at_level("WARNING"):
            config = load_scenario(doc)
        assert "weight_starting" in caplog.text
        assert config.zones.weights("starting").tolist() == config.zones.weights("inflow").tolist()


class TestDefaults:
    def test_fleet_shares_sum_to_one(self):
        fleet, _, _ = builtin_bologna_defaults()
        assert abs(fleet.class_shares.sum() - 1.0) <= 1e-9

    def test_euro6_emission_rate(self):
        fleet, _, _ = builtin_bologna_defaults()
        assert fleet.emission_per_km[-1] == 0.068246

    def test_dwell_in_intervals(self):
        _, _, solver = builtin_bologna_defaults()
        assert solver.mean_dwell == 4  # 20 minutes on the 5-minute grid

    def test_behavior_medians(self):
        _, behavior, _ = builtin_bologna_defaults()
        assert behavior.cost_median.to_dict() == {"kind": "uniform", "lower": 4.0, "upper": 7.0}
        assert behavior.anticipate_median.point() == 12.0
        assert behavior.anticipate_redist_median.point() == 18.0
        assert behavior.logit_coefficients == (-1.24, 4.5, -1.45, -0.30, -0.034)


def test_synthetic_profile_shape(grid):
    profile = synthetic_two_peak_profile(grid)
    assert profile.n_intervals == 288
    # peaks near 8:00 and 18:00, evening heavier
    assert 90 <= int(np.argmax(profile.inflow[:144])) <= 102
    assert 210 <= int(np.argmax(profile.inflow)) <= 222
    assert profile.inflow[216] > profile.inflow[96]
