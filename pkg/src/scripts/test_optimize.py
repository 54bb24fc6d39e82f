"""
Tests: strategy labels, gradient check, direct transcription, switching-time
search and the three-way solver agreement
"""

from itertools import combinations_with_replacement

import numpy as np
import pytest

from src.integrate.rk4 import evaluate_profits, integrate, profit
from src.model.types import ControlSchedule, StateVector, SwitchTimes, switch_coverage
from src.optimize.crosscheck import crosscheck
from src.cli.scenarios import get_scenario
from src.optimize import gradient
from src.optimize.gradient import check_gradient
from src.optimize.nlp import nlp_solve
from src.optimize.strategy import (
    ProgramShape,
    StrategyLabel,
    classify,
    classify_classes,
    classify_pair,
    on_intervals,
    program_shape,
    targeting_report,
)
from src.optimize.switch_times import optimize_switch_times
from src.utils.exceptions import DimensionError, ValidationError
from src.utils.io import read_csv


def window(start: int, stop: int, n: int = 100) -> np.ndarray:
    seq = np.zeros(n)
    seq[start:stop] = 1.0
    return seq


def on_off_on(first_stop: int, second_start: int, n: int = 100) -> np.ndarray:
    return window(0, first_stop, n) + window(second_start, n, n)


class TestProgramShape:
    @pytest.mark.parametrize("seq, shape", [
        (np.zeros(100), ProgramShape.OFF),
        (np.ones(100), ProgramShape.ALWAYS_ON),
        (window(0, 40), ProgramShape.INITIAL_ONLY),
        (window(75, 100), ProgramShape.TERMINAL_ONLY),
        (on_off_on(20, 70), ProgramShape.ON_OFF_ON),
        (window(30, 60), ProgramShape.MIDDLE),
    ])
    def test_shapes(self, seq, shape):
        assert program_shape(seq) == shape

    def test_intervals(self):
        assert on_intervals(on_off_on(20, 70).astype(bool)) == [(0, 19), (70, 99)]
        assert on_intervals(np.zeros(5, dtype=bool)) == []

    def test_rejects_relaxed(self):
        with pytest.raises(ValidationError, match="binary"):
            program_shape(np.full(10, 0.5))


class TestClassify:
    @pytest.mark.parametrize("u, v, label", [
        (np.zeros(100), np.zeros(100), StrategyLabel.NONE),
        (np.ones(100), np.ones(100), StrategyLabel.ALWAYS_ON),
        (on_off_on(20, 70), on_off_on(10, 80), StrategyLabel.BOTH_PHASES),
        (window(70, 100), window(0, 30), StrategyLabel.INFLUENCE_AND_EXPLOIT),
        (window(0, 30), window(70, 100), StrategyLabel.EXPLOIT_AND_INFLUENCE),
        (window(40, 60), on_off_on(20, 90), StrategyLabel.INFLUENCE_AND_EXPLOIT),
        (on_off_on(30, 70), window(80, 100), StrategyLabel.EXPLOIT_AND_INFLUENCE),
        # the later program must actually run: direct incentives alone are not a strategy pair
        (np.zeros(100), window(0, 30), StrategyLabel.MIXED),
        (window(0, 30), np.zeros(100), StrategyLabel.MIXED),
        # direct incentives in the middle are not a terminal exploit phase
        (window(0, 30), window(40, 60), StrategyLabel.MIXED),
        (window(0, 30), window(60, 100), StrategyLabel.MIXED),
        # both on at t=0 without a shared terminal phase, or both off at t=0
        (window(0, 90), window(0, 40), StrategyLabel.MIXED),
        (window(80, 100), window(20, 50), StrategyLabel.MIXED),
    ])
    def test_pairs(self, u, v, label):
        assert classify_pair(u, v) == label

    def test_schedule_and_switch_times_agree(self):
        times = SwitchTimes(np.array([[2.0, 7.0, 1.0, 9.0]]), 10.0)
        assert classify(times) == StrategyLabel.BOTH_PHASES
        assert classify(times.to_schedule(0.1).rounded()) == StrategyLabel.BOTH_PHASES

    def test_any_class_counts(self):
        u = np.stack([window(0, 30), np.zeros(100)], axis=1)
        v = np.stack([np.zeros(100), window(70, 100)], axis=1)
        sched = ControlSchedule(0.1, u, v)
        assert classify(sched) == StrategyLabel.EXPLOIT_AND_INFLUENCE
        # each class alone runs a single program
        assert classify_classes(sched) == [StrategyLabel.MIXED, StrategyLabel.MIXED]

    def test_relaxed_schedule_rejected(self):
        with pytest.raises(ValidationError):
            classify(ControlSchedule.constant(1, 10.0, 0.1, 0.5, 0.0))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            classify_pair(np.zeros(10), np.zeros(11))


class TestTargetingReport:
    def test_spend_shares(self, base_params, disassortative):
        sched = ControlSchedule(0.1, np.stack([np.ones(100), np.zeros(100)], axis=1), np.zeros((100, 2)))
        traj = integrate(StateVector.uniform(2), sched, disassortative, base_params)
        report = targeting_report(traj, disassortative, base_params)
        assert report["class"].tolist() == [1, 2]
        assert report["u_shape"].tolist() == ["always-on", "off"]
        assert report["spend_share"].tolist() == pytest.approx([1.0, 0.0])
        assert report["referral_spend"].iloc[0] == pytest.approx(traj.cum_cost[-1, 0], rel=1e-4)


class TestGradient:
    def test_single_class(self, x0, regular, base_params):
        check = check_gradient(x0, regular, base_params, points=3)
        assert check.passed, check
        assert check.components == 200

    def test_base_scenario_default_check(self):
        x0, net, params = get_scenario("base").build()
        check = check_gradient(x0, net, params)
        assert check.points == 10
        assert check.passed, check

    def test_detects_skewed_gradient(self, monkeypatch, x0, regular, base_params):
        exact = gradient.objective_and_gradient

        def skewed(*args, **kwargs):
            value, grad_u, grad_v = exact(*args, **kwargs)
            return value, 1.01 * grad_u, grad_v

        monkeypatch.setattr(gradient, "objective_and_gradient", skewed)
        check = check_gradient(x0, regular, base_params, points=1)
        assert not check.passed
        assert check.worst_component[0] == "u"

    def test_two_class(self, base_params, disassortative):
        check = check_gradient(StateVector.uniform(2), disassortative, base_params, points=2)
        assert check.passed, check


class TestNlp:
    def test_no_boost_gives_all_off(self, x0, regular, base_params):
        flat = base_params.replace(eps1=0.0, eps2=0.0)
        result = nlp_solve(x0, regular, flat, starts=2, max_iters=20)
        assert np.all(result.schedule.u == 0.0)
        assert np.all(result.schedule.v == 0.0)
        assert result.label == StrategyLabel.NONE

    def test_never_below_doing_nothing(self, x0, regular, base_params, off_schedule):
        result = nlp_solve(x0, regular, base_params, starts=2, max_iters=20)
        baseline = profit(integrate(x0, off_schedule, regular, base_params), regular)
        assert result.start_profits[-1] == pytest.approx(baseline, abs=1e-12)
        assert result.profit >= baseline
        assert len(result.start_profits) == 3
        assert result.status in {"converged", "max-iterations", "step-collapse", "baseline"}

    def test_reported_profit_reproduced_by_integration(self, x0, regular, base_params):
        result = nlp_solve(x0, regular, base_params, starts=2, max_iters=20)
        traj = integrate(x0, result.schedule, regular, base_params)
        assert profit(traj, regular) == pytest.approx(result.profit, abs=1e-12)

    def test_same_seed_same_answer(self, base_params, disassortative):
        x0 = StateVector.uniform(2)
        a = nlp_solve(x0, disassortative, base_params, starts=2, max_iters=10, seed=3)
        b = nlp_solve(x0, disassortative, base_params, starts=2, max_iters=10, seed=3)
        assert a.profit == pytest.approx(b.profit, abs=1e-9)
        assert np.array_equal(a.schedule.u, b.schedule.u)

    def test_diagnostics(self, x0, regular, base_params):
        result = nlp_solve(x0, regular, base_params, starts=1, max_iters=5, verify_gradient=True)
        assert 0.0 <= result.diagnostics["interior_fraction"] <= 1.0
        assert result.diagnostics["gradient_ok"]

    def test_export(self, tmp_path, x0, regular, base_params):
        result = nlp_solve(x0, regular, base_params, starts=1, max_iters=5)
        path = result.write_csv(tmp_path / "schedule.csv")
        assert path.read_text().splitlines()[0] == "# solver=nlp"
        frame = read_csv(path)
        assert list(frame.columns) == ["t", "u_1", "v_1"]
        assert len(frame) == 100

    def test_bad_arguments(self, x0, regular, base_params, disassortative):
        with pytest.raises(ValidationError):
            nlp_solve(x0, regular, base_params, starts=0)
        with pytest.raises(DimensionError):
            nlp_solve(x0, disassortative, base_params, starts=1)


class TestSwitchTimes:
    def test_no_boost_matches_uncontrolled(self, x0, regular, base_params, off_schedule):
        flat = base_params.replace(eps1=0.0, eps2=0.0)
        result = optimize_switch_times(x0, regular, flat, starts=8)
        baseline = profit(integrate(x0, off_schedule, regular, flat), regular)
        assert result.profit <= baseline + 1e-12
        assert result.profit == pytest.approx(baseline, abs=1e-5)

    def test_schedule_reproduces_profit(self, x0, regular, base_params):
        result = optimize_switch_times(x0, regular, base_params, starts=4, max_iters=100)
        traj = integrate(x0, result.schedule, regular, base_params)
        assert profit(traj, regular) == pytest.approx(result.profit, abs=1e-12)
        assert result.switch_times is not None
        assert result.summary()["taus"].count(" ") == 3

    def test_same_seed_same_answer(self, x0, regular, base_params):
        a = optimize_switch_times(x0, regular, base_params, starts=4, max_iters=50, seed=9)
        b = optimize_switch_times(x0, regular, base_params, starts=4, max_iters=50, seed=9)
        assert a.profit == pytest.approx(b.profit, abs=1e-9)
        assert np.array_equal(a.switch_times.taus, b.switch_times.taus)


@pytest.mark.slow
def test_switch_search_beats_unit_grid(x0, regular, base_params):
    # every ordered off-window pair on a step-1 grid, for both programs
    pairs = [(a, b) for a, b in combinations_with_replacement(range(11), 2)]
    flat = np.array([[a, b, c, d] for a, b in pairs for c, d in pairs], dtype=float)
    u, v = switch_coverage(flat, 10.0, 0.1)
    grid_best = evaluate_profits(x0, u, v, regular, base_params).max()
    result = optimize_switch_times(x0, regular, base_params)
    assert result.profit >= grid_best - 1e-9


@pytest.mark.slow
def test_solvers_agree_on_base_scenario(x0, regular, base_params):
    report = crosscheck(x0, regular, base_params)
    assert report.passed, report.dump()
    assert report.label == StrategyLabel.BOTH_PHASES
    assert set(report.table["solver"]) == {"fbs", "switch-opt", "nlp"}


@pytest.mark.slow
@pytest.mark.parametrize("name, label", [
    ("fig2-beta013", StrategyLabel.INFLUENCE_AND_EXPLOIT),
    ("fig3-alpha009", StrategyLabel.EXPLOIT_AND_INFLUENCE),
    ("fig4-payouts", StrategyLabel.INFLUENCE_AND_EXPLOIT),
    ("fig5-payouts", StrategyLabel.EXPLOIT_AND_INFLUENCE),
])
def test_solvers_agree_on_figure_scenarios(name, label):
    x0, net, params = get_scenario(name).build()
    report = crosscheck(x0, net, params)
    assert report.passed, report.dump()
    assert report.label == label


@pytest.mark.slow
@pytest.mark.parametrize("name, steady, windowed", [
    ("fig6-disassortative", 1, 0),
    ("fig7-assortative", 0, 1),
])
def test_one_class_rewarded_throughout(name, steady, windowed):
    x0, net, params = get_scenario(name).build()
    binary = nlp_solve(x0, net, params).schedule.rounded()
    assert program_shape(binary.u[:, steady]) == ProgramShape.ALWAYS_ON
    assert len(on_intervals(binary.u[:, windowed])) == 2
    assert not binary.v.any()


@pytest.mark.slow
def test_transcription_is_bang_bang_on_base(x0, regular, base_params):
    result = nlp_solve(x0, regular, base_params)
    assert result.diagnostics["interior_fraction"] < 0.05
    binary = result.schedule.rounded()
    for seq in (binary.u[:, 0], binary.v[:, 0]):
        assert 1 <= len(on_intervals(seq)) <= 2
    assert result.label == StrategyLabel.BOTH_PHASES
