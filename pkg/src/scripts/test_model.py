"""
Tests: domain types, drift, cost rate and balance completion
"""

import numpy as np
import pytest

from src.model.dynamics import augmented_rhs, augmented_vjp, cost_rate, drift
from src.model.network import balance_complete
from src.model.types import ClassNetwork, ControlSchedule, StateVector, SwitchTimes, switch_coverage
from src.utils.exceptions import DimensionError, InfeasibleMixingError, ValidationError


def single(i, r, theta) -> StateVector:
    return StateVector(i=[i], r=[r], theta=[theta])


class TestTypes:
    def test_base_params(self, base_params):
        assert base_params.alpha == 0.08
        assert base_params.beta == 0.1
        assert base_params.cost_referral == 0.25
        assert base_params.cost_direct == 0.3
        assert base_params.horizon == 10.0

    @pytest.mark.parametrize("changes, match", [
        ({"alpha": -0.1}, "alpha"),
        ({"alpha": 0.98, "eps2": 0.05}, "alpha \\+ eps2"),
        ({"beta": 0.97, "eps1": 0.05}, "beta \\+ eps1"),
        ({"gamma": 1.5}, "gamma"),
        ({"horizon": 0.0}, "horizon"),
    ])
    def test_params_reject_bad_values(self, base_params, changes, match):
        with pytest.raises(ValidationError, match=match):
            base_params.replace(**changes)

    def test_state_must_be_on_simplex(self):
        with pytest.raises(ValidationError, match="equal 1"):
            single(0.5, 0.3, 0.3)
        with pytest.raises(ValidationError, match="\\[0, 1\\]"):
            single(1.2, -0.2, 0.0)

    def test_network_rejects_unbalanced_mixing(self):
        with pytest.raises(ValidationError, match="detailed balance"):
            ClassNetwork(degrees=(10, 2), weights=[0.1, 0.9], mixing=[[0.1, 0.9], [0.1, 0.9]])

    def test_network_rejects_bad_rows(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            ClassNetwork(degrees=(3, 3), weights=[0.5, 0.5], mixing=[[0.5, 0.4], [0.4, 0.6]])

    def test_schedule_horizon_must_divide(self):
        with pytest.raises(ValidationError, match="does not divide"):
            ControlSchedule.constant(1, 10.0, 0.3)

    def test_schedule_values_in_unit_interval(self):
        with pytest.raises(ValidationError, match="\\[0, 1\\]"):
            ControlSchedule(0.1, np.full(100, 1.5), np.zeros(100))

    def test_switch_times_projection_orders_pairs(self):
        taus = SwitchTimes.from_flat(np.array([6.0, 2.0, -1.0, 12.0]), 10.0)
        assert taus.taus[0].tolist() == [4.0, 4.0, 0.0, 10.0]

    def test_switch_times_reject_unordered(self):
        with pytest.raises(ValidationError, match="tau1 <= tau2"):
            SwitchTimes(np.array([[5.0, 2.0, 0.0, 10.0]]), 10.0)

    def test_switch_coverage_fractional_cells(self):
        flat = np.array([[0.25, 10.0, 0.0, 10.0]])
        u, v = switch_coverage(flat, 10.0, 0.1)
        assert u[0, :2, 0] == pytest.approx([1.0, 1.0])
        assert u[0, 2, 0] == pytest.approx(0.5)
        assert np.all(u[0, 3:, 0] == 0.0)
        assert np.all(v == 0.0)

    def test_switch_times_schedule_on_off_on(self):
        sched = SwitchTimes(np.array([[2.0, 7.0, 1.0, 9.0]]), 10.0).to_schedule(0.1)
        binary = sched.rounded()
        assert sched.u == pytest.approx(binary.u, abs=1e-9)
        assert binary.u[:20, 0].sum() == 20
        assert binary.u[20:70, 0].sum() == 0
        assert binary.u[70:, 0].sum() == 30
        assert binary.v[:, 0].sum() == 20


class TestDrift:
    def test_no_potential_buyers_no_change(self, base_params, regular):
        out = drift(single(0.0, 0.6, 0.4), regular, base_params, [1.0], [1.0])
        assert np.all(out == 0.0)

    def test_everyone_potential(self, base_params, regular):
        out = drift(single(1.0, 0.0, 0.0), regular, base_params)
        assert out[:, 0] == pytest.approx([-0.18, 0.08, 0.1], abs=1e-15)

    def test_referral_on(self, base_params, regular):
        out = drift(single(0.5, 0.3, 0.2), regular, base_params, [1.0], [0.0])
        assert out[:, 0] == pytest.approx([-0.1225, 0.0625, 0.06], abs=1e-15)

    def test_mass_conserved_and_signs(self, base_params, disassortative):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.dirichlet([1.0, 1.0, 1.0], size=2).T
            state = StateVector(i=x[0], r=x[1], theta=x[2])
            out = drift(state, disassortative, base_params, rng.random(2), rng.random(2))
            assert np.max(np.abs(out.sum(axis=0))) < 1e-14
            assert np.all(out[0] <= 0.0)
            assert np.all(out[1:] >= 0.0)

    def test_permutation_equivariance(self, base_params, disassortative):
        state = StateVector(i=[0.7, 0.5], r=[0.2, 0.3], theta=[0.1, 0.2])
        swapped = StateVector(i=[0.5, 0.7], r=[0.3, 0.2], theta=[0.2, 0.1])
        out = drift(state, disassortative, base_params, [1.0, 0.0], [0.0, 1.0])
        out_swapped = drift(swapped, disassortative.permuted([1, 0]), base_params, [0.0, 1.0], [1.0, 0.0])
        assert out_swapped == pytest.approx(out[:, ::-1], abs=1e-15)

    def test_dimension_mismatch(self, base_params, disassortative):
        with pytest.raises(DimensionError):
            drift(single(1.0, 0.0, 0.0), disassortative, base_params)
        with pytest.raises(DimensionError):
            drift(StateVector.uniform(2), disassortative, base_params, [1.0], [0.0, 0.0])

    def test_controls_out_of_range(self, base_params, regular):
        with pytest.raises(ValidationError):
            drift(single(1.0, 0.0, 0.0), regular, base_params, [1.5], [0.0])


class TestCostRate:
    def test_no_programs_no_cost(self, base_params, regular):
        assert cost_rate(single(0.5, 0.4, 0.1), regular, base_params) == 0.0

    def test_direct_only_at_start(self, base_params, regular):
        assert cost_rate(single(1.0, 0.0, 0.0), regular, base_params, [1.0], [1.0]) == pytest.approx(0.039)

    def test_referral_only(self, base_params, regular):
        assert cost_rate(single(0.5, 0.4, 0.1), regular, base_params, [1.0], [0.0]) == pytest.approx(0.0075)

    def test_nondecreasing_in_controls_and_payouts(self, base_params, regular):
        state = single(0.5, 0.4, 0.1)
        values = [cost_rate(state, regular, base_params, [u], [u]) for u in np.linspace(0, 1, 11)]
        assert np.all(np.diff(values) >= 0)
        dearer = base_params.replace(cost_referral=0.4, cost_direct=0.5)
        assert cost_rate(state, regular, dearer, [1.0], [1.0]) >= cost_rate(state, regular, base_params, [1.0], [1.0])


class TestAugmentedVjp:
    def test_matches_finite_differences(self, base_params, disassortative):
        rng = np.random.default_rng(3)
        x = rng.dirichlet([2.0, 1.0, 1.0], size=2).T
        u, v = rng.random(2), rng.random(2)
        lam, lam_cost = rng.normal(size=(3, 2)), rng.normal(size=2)
        mixing, weights = disassortative.mixing, disassortative.weights

        def scalar(x_, u_, v_):
            dx, cost = augmented_rhs(x_, u_, v_, mixing, weights, base_params)
            return float(np.sum(lam * dx) + np.dot(lam_cost, cost))

        gx, gu, gv = augmented_vjp(x, u, v, lam, lam_cost, mixing, weights, base_params)
        h = 1e-6
        for idx in np.ndindex(x.shape):
            step = np.zeros_like(x)
            step[idx] = h
            fd = (scalar(x + step, u, v) - scalar(x - step, u, v)) / (2 * h)
            assert gx[idx] == pytest.approx(fd, rel=1e-6, abs=1e-9)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            assert gu[k] == pytest.approx((scalar(x, u + e, v) - scalar(x, u - e, v)) / (2 * h), rel=1e-6, abs=1e-9)
            assert gv[k] == pytest.approx((scalar(x, u, v + e) - scalar(x, u, v - e)) / (2 * h), rel=1e-6, abs=1e-9)


class TestBalanceComplete:
    def test_disassortative(self, disassortative):
        assert disassortative.mixing[1, 0] == pytest.approx(0.5, abs=1e-12)
        assert disassortative.mixing[0, 1] == pytest.approx(0.9)
        assert disassortative.assortativity() < 0

    def test_assortative(self, assortative):
        assert assortative.mixing[1, 0] == pytest.approx(1.0 / 18.0, abs=1e-12)
        assert assortative.mixing[1, 1] == pytest.approx(17.0 / 18.0, abs=1e-12)
        assert assortative.assortativity() > 0

    def test_symmetric(self):
        net = balance_complete([4, 4], [0.5, 0.5], 0.5)
        assert net.mixing[1, 0] == pytest.approx(0.5)
        assert net.assortativity() == pytest.approx(0.0, abs=1e-12)

    def test_infeasible(self):
        with pytest.raises(InfeasibleMixingError, match="outside"):
            balance_complete([10, 2], [0.5, 0.5], 0.9)

    def test_needs_two_classes(self):
        with pytest.raises(DimensionError):
            balance_complete([10, 2, 3], [0.2, 0.4, 0.4], 0.5)

    def test_single_class_mean_degree(self):
        net = ClassNetwork.regular(6)
        assert net.mean_degree == 6.0
        assert net.assortativity() == 0.0
