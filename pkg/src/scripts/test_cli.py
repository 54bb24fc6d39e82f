"""
Tests: scenario configuration, named scenarios, scenario runs, sweeps and exit codes
"""

from functools import partial

import pandas as pd
import pytest

import src.cli.main as cli_main
from src.cli.config_loader import load_config, parse_ini, to_ini
from src.cli.main import main
from src.cli.runner import monotone_in_cost, resolve_solver, run_scenario, sweep, sweep2d
from src.cli.scenarios import SCENARIOS, get_scenario, list_scenarios
from src.cli.validate import ValidationReport, check_conservation, validate
from src.model.types import ModelParams
from src.pmp.sweep import fbs_solve
from src.utils.exceptions import ConfigError
from src.utils.io import read_csv

TWO_CLASS_INI = """
[scenario]
name = hubs
description = hand-written mixing rows

[model]
beta = 0.12
eps2 = 0

[network]
degrees = 10, 2
weights = 0.1, 0.9
mixing = 0.1, 0.9; 0.5, 0.5

[solver]
seed = 7
nlp_starts = 3
"""


class TestParseIni:
    def test_two_class_file(self):
        config = parse_ini(TWO_CLASS_INI)
        assert config.name == "hubs"
        assert config.model.beta == 0.12
        assert config.model.alpha == 0.08
        assert config.solver.seed == 7
        x0, net, params = config.build()
        assert net.mixing.tolist() == [[0.1, 0.9], [0.5, 0.5]]
        assert x0.i.tolist() == [1.0, 1.0]
        assert params.eps2 == 0.0

    def test_defaults_are_base_scenario(self):
        config = parse_ini("[model]\n")
        assert config.params() == ModelParams.base()
        assert config.net().n_classes == 1

    @pytest.mark.parametrize("text, match", [
        ("[plot]\ncolor = red\n", "unknown section"),
        ("[scenario]\nauthor = me\n", "unknown keys"),
        ("[model]\nbeta_typo = 0.1\n", "beta_typo"),
        ("[model]\nalpha = fast\n", "alpha"),
        ("[solver]\ndt = 2\n", "dt"),
        ("[solver]\nsolver = magic\n", "solver"),
        ("[network]\ndegrees = 10, 2\nweights = 0.5, 0.5\np_b_given_a = 0.9\n", "outside"),
        ("[network]\ndegrees = 10, 2\nweights = 0.1, 0.9\n", "mixing rows or p_b_given_a"),
        ("[network]\ndegrees = 10, 2\nweights = 0.1, 0.9\nmixing = 0.1, 0.9; 0.1, 0.9\n", "detailed balance"),
        ("[initial]\ni0 = 0.5\nr0 = 0.2\ntheta0 = 0.2\n", "equal 1"),
        ("not an ini file", "cannot parse"),
    ])
    def test_rejects(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_ini(text)

    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_round_trip(self, name):
        config = get_scenario(name)
        assert parse_ini(to_ini(config)) == config

    def test_load_uses_file_stem(self, tmp_path):
        path = tmp_path / "late-referrals.ini"
        path.write_text("[model]\nbeta = 0.13\n")
        assert load_config(path).name == "late-referrals"

    @pytest.mark.parametrize("name", ["late-referrals.ini", "hubs-to-leaves.ini"])
    def test_shipped_scenario_files(self, name):
        config = load_config(name)
        assert config.name == name.removesuffix(".ini")
        config.build()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.ini")


class TestScenarios:
    def test_base(self):
        x0, net, params = get_scenario("base").build()
        assert params == ModelParams.base()
        assert net.n_classes == 1
        assert x0.i.tolist() == [1.0]

    @pytest.mark.parametrize("name, field, value", [
        ("fig2-beta013", "beta", 0.13),
        ("fig3-alpha009", "alpha", 0.09),
        ("fig4-payouts", "cost_referral", 0.3),
        ("fig5-payouts", "cost_direct", 0.35),
    ])
    def test_single_class_variants(self, name, field, value):
        assert get_scenario(name).params() == ModelParams.base().replace(**{field: value})

    @pytest.mark.parametrize("name, p_b_given_a", [("fig6-disassortative", 0.9), ("fig7-assortative", 0.1)])
    def test_two_class(self, name, p_b_given_a):
        x0, net, params = get_scenario(name).build()
        assert (params.alpha, params.beta, params.gamma, params.delta) == (0.1, 0.1, 0.15, 0.1)
        assert (params.eps1, params.eps2) == (0.08, 0.0)
        assert net.degrees == (10, 2)
        assert net.weights.tolist() == [0.1, 0.9]
        assert net.mixing[0, 1] == pytest.approx(p_b_given_a)

    def test_market_presence(self):
        x0, _, _ = get_scenario("market-presence").build()
        assert (x0.i[0], x0.r[0], x0.theta[0]) == (0.9, 0.05, 0.05)

    def test_unknown(self):
        with pytest.raises(ConfigError, match="Unknown scenario"):
            get_scenario("fig99")

    def test_listing(self):
        table = list_scenarios()
        assert table["name"].tolist() == list(SCENARIOS)
        assert {"alpha", "cost_direct", "degrees", "description"} <= set(table.columns)


class TestOverrides:
    def test_with_value(self):
        base = get_scenario("base")
        assert base.with_value("alpha", 0.09).model.alpha == 0.09
        assert base.with_value("model.beta", 0.13).model.beta == 0.13
        assert base.with_value("seed", 3).solver.seed == 3
        assert base.model.alpha == 0.08

    @pytest.mark.parametrize("parameter, value, match", [
        ("degrees", 3, "not a scalar"),
        ("kappa", 0.1, "unknown parameter"),
        ("model.kappa", 0.1, "unknown parameter"),
        ("alpha", -0.5, "invalid configuration"),
    ])
    def test_with_value_errors(self, parameter, value, match):
        with pytest.raises(ConfigError, match=match):
            get_scenario("base").with_value(parameter, value)

    def test_with_solver_ignores_unset(self):
        config = get_scenario("base").with_solver(seed=None, nlp_starts=4)
        assert config.solver.seed == 42
        assert config.solver.nlp_starts == 4

    def test_solver_resolution(self):
        base = get_scenario("base")
        assert resolve_solver(base) == "crosscheck"
        assert resolve_solver(base, purpose="sweep") == "switch"
        assert resolve_solver(get_scenario("fig6-disassortative")) == "nlp"
        with pytest.raises(ConfigError, match="single-class"):
            resolve_solver(get_scenario("fig7-assortative").with_solver(solver="fbs"))


class TestRunScenario:
    def test_fbs_bundle(self, tmp_path):
        config = get_scenario("base").with_solver(solver="fbs")
        output = run_scenario(config, tmp_path)
        for name in ("scenario.ini", "trajectory.csv", "schedule.csv", "summary.txt", "costate.csv", "lemmas.csv"):
            assert (tmp_path / name).is_file(), name
        assert output.solver == "fbs"
        summary = (tmp_path / "summary.txt").read_text()
        assert summary.startswith("scenario=base solver=fbs profit=")
        assert parse_ini((tmp_path / "scenario.ini").read_text()) == config

    def test_nlp_bundle_two_class(self, tmp_path):
        config = get_scenario("fig6-disassortative").with_solver(nlp_starts=2)
        output = run_scenario(config, tmp_path)
        assert output.solver == "nlp"
        assert (tmp_path / "targeting.csv").is_file()
        assert not (tmp_path / "costate.csv").exists()
        assert len(output.shapes) == 2
        assert "classes=" in output.summary_line()
        assert list(read_csv(tmp_path / "schedule.csv").columns) == ["t", "u_1", "v_1", "u_2", "v_2"]


class TestSweep:
    def test_empty_values(self):
        table = sweep(get_scenario("base"), "cost_referral", [])
        assert table.empty
        assert list(table.columns) == ["parameter", "value", "profit", "label", "status"]
        assert sweep2d(get_scenario("base"), [], [0.3]).empty

    def test_bad_parameter_fails_fast(self):
        with pytest.raises(ConfigError):
            sweep(get_scenario("base"), "nonsense", [0.1])

    def test_two_values(self):
        config = get_scenario("base").with_solver(switch_starts=2)
        table = sweep(config, "cost_referral", [0.25, 0.3])
        assert table["value"].tolist() == [0.25, 0.3]
        assert set(table["parameter"]) == {"cost_referral"}
        assert table["profit"].notna().all()

    def test_monotone_in_cost(self):
        falling = pd.DataFrame({"value": [0.3, 0.2, 0.25], "profit": [0.1, 0.3, 0.2]})
        rising = pd.DataFrame({"value": [0.2, 0.3], "profit": [0.1, 0.2]})
        assert monotone_in_cost(falling)
        assert not monotone_in_cost(rising)


class TestMain:
    def test_scenario_list(self, capsys):
        assert main(["scenario", "list", "--log-level", "WARNING"]) == 0
        assert "fig6-disassortative" in capsys.readouterr().out

    def test_simulate_writes_identical_bytes(self, tmp_path):
        for name in ("a", "b"):
            code = main(["simulate", "--u", "1", "--v", "0", "--out", str(tmp_path / name), "--log-level", "WARNING"])
            assert code == 0
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_simulate_from_schedule_file(self, tmp_path):
        times = [round(0.1 * n, 10) for n in range(100)]
        pd.DataFrame({"t": times, "u_1": 1.0, "v_1": 0.0}).to_csv(tmp_path / "sched.csv", index=False)
        code = main(["simulate", "--schedule", str(tmp_path / "sched.csv"), "--out", str(tmp_path / "out"),
                     "--log-level", "WARNING"])
        assert code == 0
        assert read_csv(tmp_path / "out" / "trajectory.csv")["u_1"].iloc[0] == 1.0

    def test_config_errors_exit_2(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[model]\nalpha = -1\n")
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--u", "1.5", "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--control-dt", "0.3", "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--log-level", "LOUD", "--out", str(tmp_path)]) == 2

    def test_unconverged_sweep_exits_3(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli_main, "fbs_solve", partial(fbs_solve, max_iters=1))
        args = ["pmp", "--out", str(tmp_path), "--log-level", "WARNING"]
        assert main(args) == 3
        assert main(args + ["--lenient"]) == 0
        assert (tmp_path / "costate.csv").is_file()

    def test_sweep_empty_values(self, tmp_path, capsys):
        assert main(["sweep", "--param", "cost_referral", "--values", "", "--out", str(tmp_path),
                     "--log-level", "WARNING"]) == 0
        assert "(no values)" in capsys.readouterr().out
        assert read_csv(tmp_path / "sweep_cost_referral.csv").empty


class TestValidate:
    def test_quick_suite(self, tmp_path):
        report = validate(skip_abm=True, skip_figures=True)
        assert report.skipped == ["figures", "abm"]
        assert report.passed, report.to_frame().to_string()
        assert {"conservation", "balance", "gradient", "lemmas"} == {check.category for check in report.checks}
        lines = report.write_csv(tmp_path / "validation.csv", 42).read_text().splitlines()
        assert lines[:3] == ["# seed=42", "# passed=True", "# skipped=figures abm"]

    def test_failures_by_category(self):
        report = ValidationReport()
        check_conservation(report, seed=0)
        report.add("lemmas", "hamiltonian_constant", False, 0.2)
        assert [check.name for check in report.failures] == ["hamiltonian_constant"]
        assert report.failed_categories() == ["lemmas"]

    def test_zero_tolerance_exits_4(self, tmp_path):
        code = main(["validate", "--skip-abm", "--skip-figures", "--h-tol", "0",
                     "--out", str(tmp_path), "--log-level", "WARNING"])
        assert code == 4
        frame = read_csv(tmp_path / "validation.csv")
        failed = frame.loc[~frame["passed"], "name"].tolist()
        assert failed == ["hamiltonian_constant"]


@pytest.mark.slow
@pytest.mark.parametrize("parameter", ["cost_referral", "cost_direct"])
def test_profit_falls_with_pay_out(parameter):
    table = sweep(get_scenario("base"), parameter, [0.2, 0.25, 0.3, 0.35, 0.4])
    assert monotone_in_cost(table), table.to_string()


@pytest.mark.slow
def test_referral_pay_out_changes_strategy():
    table = sweep(get_scenario("base"), "cost_referral", [0.25, 0.3])
    assert table["label"].tolist() == ["both-phases", "influence-and-exploit"]
