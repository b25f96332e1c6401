"""Command-line interface: exit codes, outputs, thin-shell equivalence."""
import csv
import json
import shutil
from pathlib import Path

import pytest

from cordonsim.cli import main, set_param_path
from cordonsim.ensemble import run_single
from cordonsim.indicators import KPI_NAMES
from cordonsim.scenarios import SUITE_NAMES, builtin_scenario_path


@pytest.fixture()
def workdir(tmp_path, demand_csv_path):
    shutil.copy(demand_csv_path, tmp_path / "demand.csv")
    shutil.copy(builtin_scenario_path("a1"), tmp_path / "a1.json")
    return tmp_path


def read_sweep(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_smoke_matches_library(self, workdir, a1_config, demand):
        out = workdir / "out"
        code = main([
            "run", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"), "--out", str(out),
        ])
        assert code == 0
        assert (out / "timeseries.csv").exists()
        payload = json.loads((out / "kpis.json").read_text())
        expected = run_single(a1_config, demand)
        assert payload["kpis"]["daily_inflow"]["absolute"] == pytest.approx(
            expected.kpis["daily_inflow"].absolute
        )
        for name in ("inflow", "traffic", "emissions"):
            figure = out / f"{name}.png"
            assert figure.exists() and figure.stat().st_size > 0

    def test_no_figures(self, workdir):
        out = workdir / "out"
        code = main([
            "run", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"), "--out", str(out), "--no-figures",
        ])
        assert code == 0
        assert not list(out.glob("*.png"))

    def test_missing_demand_is_io_error(self, workdir):
        code = main([
            "run", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "nope.csv"), "--out", str(workdir / "out"),
        ])
        assert code == 2

    def test_invalid_config_is_validation_error(self, workdir):
        bad = workdir / "bad.json"
        doc = json.loads((workdir / "a1.json").read_text())
        doc["fleet"]["class_shares"] = [0.9] + [0.0] * 6
        bad.write_text(json.dumps(doc))
        code = main([
            "run", "--config", str(bad),
            "--demand", str(workdir / "demand.csv"), "--out", str(workdir / "out"),
        ])
        assert code == 1

    def test_forced_non_convergence_is_exit_3(self, workdir, capsys):
        doc = json.loads((workdir / "a1.json").read_text())
        doc["solver"]["tolerance"] = 1e-30
        doc["solver"]["max_iterations"] = 1
        strict = workdir / "strict.json"
        strict.write_text(json.dumps(doc))
        code = main([
            "run", "--config", str(strict),
            "--demand", str(workdir / "demand.csv"), "--out", str(workdir / "out"),
            "--no-figures",
        ])
        assert code == 3
        assert "converge" in capsys.readouterr().err

    def test_ensemble_run(self, workdir):
        out = workdir / "ens"
        code = main([
            "run", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"), "--out", str(out),
            "--draws", "5", "--seed", "3",
        ])
        assert code == 0
        header = (out / "timeseries.csv").read_text().splitlines()[0]
        assert "inflow_mod_mean" in header and "inflow_mod_hi" in header
        assert (out / "traffic.png").stat().st_size > 0  # band figure rendered


class TestSuite:
    def test_full_suite(self, workdir):
        out = workdir / "suite"
        code = main(["suite", "--demand", str(workdir / "demand.csv"), "--out", str(out)])
        assert code == 0
        for name in SUITE_NAMES:
            assert (out / name / "kpis.json").exists()
            assert (out / name / "timeseries.csv").exists()
        rows = {}
        with open(out / "comparison.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                rows[(row["scenario"], row["kpi"])] = row
        assert float(rows[("b3", "mode_shifted")]["absolute"]) == 0.0
        for kpi in KPI_NAMES:
            assert float(rows[("baseline", kpi)]["delta"]) == 0.0
        assert (out / "compare_traffic.png").exists()


class TestSuiteFailures:
    def test_partial_failure_keeps_going_and_exits_4(self, workdir, monkeypatch, capsys):
        import cordonsim.cli as cli_module

        real = cli_module.builtin_scenario_path

        def broken_b2(name):
            if name == "b2":
                bad = workdir / "broken_b2.json"
                bad.write_text("{\"time_grid\": {}}")
                return bad
            return real(name)

        monkeypatch.setattr(cli_module, "builtin_scenario_path", broken_b2)
        out = workdir / "suite"
        code = main([
            "suite", "--demand", str(workdir / "demand.csv"),
            "--out", str(out), "--no-figures",
        ])
        assert code == 4
        assert "b2 failed" in capsys.readouterr().err
        assert (out / "a1" / "kpis.json").exists()  # other scenarios still ran
        assert (out / "comparison.csv").exists()


class TestServe:
    def test_flag_plumbing(self, workdir, monkeypatch):
        import cordonsim.cli as cli_module

        captured = {}

        def fake_run(app, host, port):
            captured["app"] = app
            captured["host"] = host
            captured["port"] = port

        import uvicorn

        monkeypatch.setattr(uvicorn, "run", fake_run)
        code = main([
            "serve", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"),
            "--port", "9001", "--max-draws", "25",
            "--cors-origin", "http://localhost:5173",
        ])
        assert code == 0
        assert captured["port"] == 9001
        assert captured["app"].state.max_draws == 25


class TestSweep:
    def test_fee_sweep_monotone(self, workdir):
        out = workdir / "sweep_fee"
        code = main([
            "sweep", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"),
            "--param", "policy.fee_by_class", "--from", "0", "--to", "10",
            "--steps", "11", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        rows = read_sweep(out / "sweep.csv")
        inflow = [
            (float(r["param_value"]), float(r["value"]))
            for r in rows if r["kpi"] == "daily_inflow"
        ]
        assert len(inflow) == 11
        values = [v for _, v in sorted(inflow)]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_single_step_runs_at_from(self, workdir):
        out = workdir / "sweep_one"
        code = main([
            "sweep", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"),
            "--param", "policy.exempt_fraction", "--from", "0.25", "--to", "0.9",
            "--steps", "1", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        rows = read_sweep(out / "sweep.csv")
        assert {float(r["param_value"]) for r in rows} == {0.25}

    def test_exemption_sweep_reaches_baseline(self, workdir, demand):
        out = workdir / "sweep_fe"
        code = main([
            "sweep", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"),
            "--param", "policy.exempt_fraction", "--from", "0", "--to", "1",
            "--steps", "5", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        rows = read_sweep(out / "sweep.csv")
        inflow = {
            float(r["param_value"]): float(r["value"])
            for r in rows if r["kpi"] == "daily_inflow"
        }
        values = [inflow[k] for k in sorted(inflow)]
        assert all(a <= b + 1e-9 for a, b in zip(values, values[1:]))
        assert inflow[1.0] == pytest.approx(float(demand.inflow.sum()), rel=1e-12)

    def test_unknown_path_lists_valid(self, workdir, capsys):
        code = main([
            "sweep", "--config", str(workdir / "a1.json"),
            "--demand", str(workdir / "demand.csv"),
            "--param", "policy.nothing", "--from", "0", "--to", "1",
            "--steps", "2", "--out", str(workdir / "x"), "--no-figures",
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "policy.exempt_fraction" in err


class TestSetParamPath:
    def test_scalar(self):
        doc = {"policy": {"exempt_fraction": 0.0}}
        set_param_path(doc, "policy.exempt_fraction", 0.4)
        assert doc["policy"]["exempt_fraction"] == 0.4

    def test_list_broadcast_and_index(self):
        doc = {"policy": {"fee_by_class": [1.0, 2.0, 3.0]}}
        set_param_path(doc, "policy.fee_by_class", 7.0)
        assert doc["policy"]["fee_by_class"] == [7.0, 7.0, 7.0]
        set_param_path(doc, "policy.fee_by_class[1]", 9.0)
        assert doc["policy"]["fee_by_class"] == [7.0, 9.0, 7.0]

    def test_parameter_object_pinned(self):
        doc = {"behavior": {"cost_median": {"kind": "uniform", "lower": 4, "upper": 7}}}
        set_param_path(doc, "behavior.cost_median", 5.0)
        assert doc["behavior"]["cost_median"] == {"kind": "point", "value": 5.0}

    def test_unknown_raises(self):
        with pytest.raises(KeyError):
            set_param_path({"policy": {}}, "policy.fee_by_class[0]", 1.0)
