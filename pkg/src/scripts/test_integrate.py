"""
Tests: fixed-step integration, profit and trajectory export
"""

import logging
import math

import numpy as np
import pytest

from src.integrate.rk4 import _check_simplex, evaluate_profits, integrate, profit
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, StateVector
from src.utils.exceptions import DimensionError, IntegrationError, ValidationError
from src.utils.io import read_csv


def euler(params: ModelParams, u: float, v: float, h: float):
    """Single-class forward Euler with trapezoid cost; returns (r(T), total cost)"""
    i, r, th = 1.0, 0.0, 0.0
    b = params.beta + u * params.eps1
    a = params.alpha + v * params.eps2
    cb = u * params.cost_referral * (params.beta + params.eps1)
    ca = v * params.cost_direct * (params.alpha + params.eps2)
    cost = 0.0
    rate = cb * i * r + ca * i
    for _ in range(int(round(params.horizon / h))):
        to_seller = (b * r + a) * i
        to_competitor = (params.gamma * th + params.delta) * i
        i, r, th = i - h * (to_seller + to_competitor), r + h * to_seller, th + h * to_competitor
        new_rate = cb * i * r + ca * i
        cost += 0.5 * h * (rate + new_rate)
        rate = new_rate
    return r, cost


def euler_oracle(params: ModelParams, u: float, v: float, h: float = 1e-4):
    """Richardson-extrapolated Euler (second order)"""
    coarse = np.array(euler(params, u, v, h))
    fine = np.array(euler(params, u, v, h / 2))
    return 2.0 * fine - coarse


def random_binary(rng, n_cells=100, n_classes=1) -> ControlSchedule:
    return ControlSchedule(
        0.1,
        (rng.random((n_cells, n_classes)) < 0.5).astype(float),
        (rng.random((n_cells, n_classes)) < 0.5).astype(float),
    )


class TestIntegrate:
    def test_zero_rates_hold_state(self, regular, off_schedule):
        still = ModelParams(alpha=0, beta=0, gamma=0, delta=0, eps1=0, eps2=0,
                            cost_referral=0.25, cost_direct=0.3)
        x0 = StateVector(i=[0.6], r=[0.3], theta=[0.1])
        on = ControlSchedule.constant(1, 10.0, 0.1, 1.0, 1.0)
        for sched in (off_schedule, on):
            traj = integrate(x0, sched, regular, still)
            assert np.all(traj.states == x0.as_array())
            assert np.all(traj.cum_cost == 0.0)

    def test_grid(self, x0, regular, base_params, off_schedule):
        traj = integrate(x0, off_schedule, regular, base_params)
        assert traj.t[0] == 0.0
        assert traj.t[-1] == pytest.approx(10.0)
        assert traj.n_steps == 1000
        assert traj.states.shape == (1001, 3, 1)

    def test_uncontrolled_matches_euler_oracle(self, x0, regular, base_params, off_schedule):
        traj = integrate(x0, off_schedule, regular, base_params)
        r_oracle, _ = euler_oracle(base_params, 0.0, 0.0)
        assert traj.r[-1, 0] == pytest.approx(r_oracle, abs=1e-6)

    def test_always_on_profit_matches_oracle(self, x0, regular, base_params, on_schedule):
        traj = integrate(x0, on_schedule, regular, base_params)
        r_oracle, cost_oracle = euler_oracle(base_params, 1.0, 1.0)
        assert profit(traj, regular) == pytest.approx(r_oracle - cost_oracle, abs=1e-5)

    def test_profit_without_programs_is_revenue(self, x0, regular, base_params, off_schedule):
        traj = integrate(x0, off_schedule, regular, base_params)
        assert profit(traj, regular) == traj.r[-1, 0]

    def test_free_programs_cost_nothing(self, x0, regular, base_params, on_schedule):
        free = base_params.replace(cost_referral=0.0, cost_direct=0.0)
        traj = integrate(x0, on_schedule, regular, free)
        assert profit(traj, regular) == pytest.approx(traj.r[-1, 0], abs=1e-15)
        assert traj.r[-1, 0] > integrate(x0, ControlSchedule.constant(1, 10.0, 0.1), regular, free).r[-1, 0]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_conservation_monotonicity_and_decay_bound(self, base_params, disassortative, seed):
        rng = np.random.default_rng(seed)
        x0 = StateVector(i=[0.9, 0.95], r=[0.05, 0.0], theta=[0.05, 0.05])
        traj = integrate(x0, random_binary(rng, n_classes=2), disassortative, base_params)
        assert np.max(np.abs(traj.states.sum(axis=1) - 1.0)) < 1e-10
        assert np.all(np.diff(traj.i, axis=0) <= 1e-15)
        assert np.all(np.diff(traj.r, axis=0) >= -1e-15)
        assert np.all(np.diff(traj.theta, axis=0) >= -1e-15)
        assert np.all(np.diff(traj.cum_cost, axis=0) >= 0.0)
        bound = x0.i[None, :] * np.exp(-(base_params.alpha + base_params.delta) * traj.t)[:, None]
        assert np.all(traj.i <= bound + 1e-12)

    def test_halving_step(self, x0, regular, base_params):
        sched = random_binary(np.random.default_rng(7))
        coarse = integrate(x0, sched, regular, base_params, dt=0.01)
        fine = integrate(x0, sched, regular, base_params, dt=0.005)
        assert abs(coarse.r[-1, 0] - fine.r[-1, 0]) < 1e-8

    def test_market_presence_start(self, regular, base_params, off_schedule):
        x0 = StateVector(i=[0.9], r=[0.05], theta=[0.05])
        traj = integrate(x0, off_schedule, regular, base_params)
        assert traj.r[0, 0] == 0.05
        assert traj.r[-1, 0] > 0.05

    def test_step_must_divide_control_grid(self, x0, regular, base_params, off_schedule):
        with pytest.raises(ValidationError, match="dt"):
            integrate(x0, off_schedule, regular, base_params, dt=0.03)

    def test_class_count_mismatch(self, x0, disassortative, base_params, off_schedule):
        with pytest.raises(DimensionError):
            integrate(x0, off_schedule, disassortative, base_params)

    def test_schedule_must_cover_horizon(self, x0, regular, base_params):
        short = ControlSchedule.constant(1, 5.0, 0.1)
        with pytest.raises(DimensionError, match="intervals"):
            integrate(x0, short, regular, base_params)


class TestEvaluateProfits:
    def test_batch_matches_single_runs(self, base_params, disassortative):
        rng = np.random.default_rng(11)
        x0 = StateVector.uniform(2)
        U = rng.random((4, 100, 2))
        V = rng.random((4, 100, 2))
        batch = evaluate_profits(x0, U, V, disassortative, base_params)
        for s in range(4):
            traj = integrate(x0, ControlSchedule(0.1, U[s], V[s]), disassortative, base_params)
            assert batch[s] == pytest.approx(profit(traj, disassortative), abs=1e-12)

    def test_rejects_out_of_range(self, x0, regular, base_params):
        U = np.full((1, 100, 1), 1.2)
        with pytest.raises(ValidationError):
            evaluate_profits(x0, U, np.zeros_like(U), regular, base_params)


class TestExport:
    def test_frame_columns(self, base_params, disassortative):
        sched = ControlSchedule.constant(2, 10.0, 0.1, 1.0, 0.0)
        traj = integrate(StateVector.uniform(2), sched, disassortative, base_params)
        assert list(traj.to_frame().columns) == [
            "t", "i_1", "r_1", "theta_1", "u_1", "v_1", "i_2", "r_2", "theta_2", "u_2", "v_2",
            "cum_cost_referral", "cum_cost_direct",
        ]
        weighted = traj.aggregate(disassortative)
        assert weighted.shape == (1001, 3)
        assert weighted.sum(axis=1) == pytest.approx(np.ones(1001), abs=1e-10)

    def test_csv_header_and_precision(self, tmp_path, x0, regular, base_params, on_schedule):
        traj = integrate(x0, on_schedule, regular, base_params)
        path = traj.write_csv(tmp_path / "trajectory.csv", {"seed": 42})
        lines = path.read_text().splitlines()
        assert lines[0] == "# seed=42"
        assert lines[1].startswith("t,i_1,r_1,theta_1,u_1,v_1")
        back = read_csv(path)
        assert len(back) == 1001
        assert back["r_1"].iloc[-1] == pytest.approx(traj.r[-1, 0], rel=1e-11)
        digits = lines[-1].split(",")[2].replace(".", "").lstrip("0")
        assert len(digits) <= 12

    def test_same_input_same_bytes(self, tmp_path, x0, regular, base_params, on_schedule):
        a = integrate(x0, on_schedule, regular, base_params).write_csv(tmp_path / "a.csv")
        b = integrate(x0, on_schedule, regular, base_params).write_csv(tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()


def test_decay_bound_is_tight_without_social_terms(regular):
    # beta = gamma = 0 and no incentives: i decays exactly at alpha + delta
    params = ModelParams(alpha=0.08, beta=0.0, gamma=0.0, delta=0.1, eps1=0.05, eps2=0.05,
                         cost_referral=0.25, cost_direct=0.3)
    traj = integrate(StateVector.uniform(1), ControlSchedule.constant(1, 10.0, 0.1), regular, params)
    assert traj.i[-1, 0] == pytest.approx(math.exp(-1.8), rel=1e-9)


def test_simplex_violation_logged_and_raised(caplog):
    states = np.array([[[1.0], [0.0], [0.0]], [[0.9], [0.2], [0.0]]])
    with caplog.at_level(logging.ERROR, logger="src.integrate.rk4"):
        with pytest.raises(IntegrationError, match="left the simplex") as info:
            _check_simplex(states, np.array([0.0, 0.01]), 1e-10)
    assert info.value.time == 0.01
    assert "Simplex drift" in caplog.text
