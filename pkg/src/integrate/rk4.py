"""
Fixed-step fourth-order Runge-Kutta integration of the controlled system
Cost integrals ride along as two extra state components
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.model.dynamics import augmented_rhs
from src.model.types import (
    ClassNetwork,
    ControlSchedule,
    ModelParams,
    StateVector,
    grid_count,
)
from src.utils.config import Config
from src.utils.exceptions import DimensionError, IntegrationError, ValidationError
from src.utils.io import write_csv

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed states, applied controls and accumulated program spend"""

    t: np.ndarray           # (M+1,)
    states: np.ndarray      # (M+1, 3, K)
    u: np.ndarray           # (M+1, K) control applied on [t_m, t_m+1); last row repeats
    v: np.ndarray           # (M+1, K)
    cum_cost: np.ndarray    # (M+1, 2) referral, direct
    dt: float
    control_dt: float

    @property
    def n_steps(self) -> int:
        return self.t.shape[0] - 1

    @property
    def n_classes(self) -> int:
        return self.states.shape[2]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, 0, :]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 1, :]

    @property
    def theta(self) -> np.ndarray:
        return self.states[:, 2, :]

    def state_at(self, m: int) -> StateVector:
        return StateVector.from_array(self.states[m])

    def final_state(self) -> StateVector:
        return self.state_at(-1)

    def aggregate(self, net: ClassNetwork) -> np.ndarray:
        """P(k)-weighted population fractions, shape (M+1, 3)"""
        return np.einsum("mjk,k->mj", self.states, net.weights)

    def to_frame(self) -> pd.DataFrame:
        """Export layout: t, per class i/r/theta/u/v, then cumulative costs"""
        columns: Dict[str, np.ndarray] = {"t": self.t}
        for k in range(self.n_classes):
            tag = k + 1
            columns[f"i_{tag}"] = self.i[:, k]
            columns[f"r_{tag}"] = self.r[:, k]
            columns[f"theta_{tag}"] = self.theta[:, k]
            columns[f"u_{tag}"] = self.u[:, k]
            columns[f"v_{tag}"] = self.v[:, k]
        columns["cum_cost_referral"] = self.cum_cost[:, 0]
        columns["cum_cost_direct"] = self.cum_cost[:, 1]
        return pd.DataFrame(columns)

    def write_csv(self, path: Path, header_comments: Optional[Dict[str, object]] = None) -> Path:
        return write_csv(self.to_frame(), path, header_comments)


def step_counts(horizon: float, control_dt: float, dt: float) -> Tuple[int, int]:
    """
    Grid sizes for an integration run

    Args:
        horizon: T
        control_dt: Control grid step
        dt: Internal step, must divide control_dt

    Returns:
        (number of control intervals, internal steps per interval)
    """
    n_cells = grid_count(horizon, control_dt, "control_dt")
    per_cell = grid_count(control_dt, dt, "dt")
    return n_cells, per_cell


def rk4_batch(
        x0: np.ndarray,
        U: np.ndarray,
        V: np.ndarray,
        net: ClassNetwork,
        p: ModelParams,
        dt: float,
        control_dt: float,
        store: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate a batch of control schedules from a common initial state

    Args:
        x0: Initial state (3, K)
        U, V: Control values (S, n_intervals, K), held over each interval
        net: Network
        p: Model parameters
        dt: Internal step
        control_dt: Control grid step
        store: Keep every internal step (otherwise only the final point)

    Returns:
        (states, costs): (S, M+1, 3, K) and (S, M+1, 2) when store,
        else (S, 3, K) and (S, 2)
    """
    n_cells, per_cell = step_counts(p.horizon, control_dt, dt)
    if U.shape[1] != n_cells or V.shape != U.shape:
        raise DimensionError(f"controls must have shape (S, {n_cells}, K), got {U.shape} and {V.shape}")

    S = U.shape[0]
    mixing, weights = net.mixing, net.weights
    x = np.broadcast_to(np.asarray(x0, dtype=float), (S,) + np.shape(x0)).copy()
    c = np.zeros((S, 2))
    half = 0.5 * dt
    sixth = dt / 6.0

    if store:
        n_steps = n_cells * per_cell
        xs = np.empty((S, n_steps + 1) + x.shape[1:])
        cs = np.empty((S, n_steps + 1, 2))
        xs[:, 0] = x
        cs[:, 0] = c

    m = 0
    for n in range(n_cells):
        u = U[:, n, :]
        v = V[:, n, :]
        for _ in range(per_cell):
            k1, q1 = augmented_rhs(x, u, v, mixing, weights, p)
            k2, q2 = augmented_rhs(x + half * k1, u, v, mixing, weights, p)
            k3, q3 = augmented_rhs(x + half * k2, u, v, mixing, weights, p)
            k4, q4 = augmented_rhs(x + dt * k3, u, v, mixing, weights, p)
            x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            c = c + sixth * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
            m += 1
            if store:
                xs[:, m] = x
                cs[:, m] = c

    if store:
        return xs, cs
    return x, c


def _check_simplex(states: np.ndarray, t: np.ndarray, tol: float):
    """Raise IntegrationError at the first time the simplex is violated"""
    gap = np.abs(states.sum(axis=1) - 1.0).max(axis=1)
    low = (-states.min(axis=(1, 2))).clip(min=0.0)
    bad = np.nonzero((gap > tol) | (low > tol))[0]
    if bad.size:
        m = int(bad[0])
        logger.error("Simplex drift %.3g (negative part %.3g) at t=%.6g exceeds %.3g",
                     gap[m], low[m], t[m], tol)
        raise IntegrationError(
            f"state left the simplex at t={t[m]:.6g} (sum gap {gap[m]:.3g}, negative part {low[m]:.3g})",
            time=float(t[m]),
        )
    logger.debug("Largest simplex drift %.3g", float(gap.max()))


def integrate(
        x0: StateVector,
        sched: ControlSchedule,
        net: ClassNetwork,
        p: ModelParams,
        dt: float = Config.DT
) -> Trajectory:
    """
    Integrate the controlled system under a control schedule

    Args:
        x0: Initial state
        sched: Control schedule covering [0, T]
        net: Degree classes and mixing
        p: Model parameters (horizon T)
        dt: Internal step; must divide sched.control_dt

    Returns:
        Trajectory on the internal grid
    """
    if x0.n_classes != net.n_classes or sched.n_classes != net.n_classes:
        raise DimensionError(
            f"class counts disagree: state {x0.n_classes}, schedule {sched.n_classes}, network {net.n_classes}"
        )
    sched.check_horizon(p.horizon)
    n_cells, per_cell = step_counts(p.horizon, sched.control_dt, dt)

    xs, cs = rk4_batch(x0.as_array(), sched.u[None], sched.v[None], net, p, dt, sched.control_dt)
    xs, cs = xs[0], cs[0]
    t = np.arange(n_cells * per_cell + 1) * dt
    _check_simplex(xs, t, Config.INTEGRATION_DRIFT_TOL)

    u = np.repeat(sched.u, per_cell, axis=0)
    v = np.repeat(sched.v, per_cell, axis=0)
    u = np.vstack([u, u[-1:]])
    v = np.vstack([v, v[-1:]])

    return Trajectory(t=t, states=xs, u=u, v=v, cum_cost=cs, dt=dt, control_dt=sched.control_dt)


def profit(traj: Trajectory, net: ClassNetwork) -> float:
    """
    Revenue from customers at T minus spend on both programs

    Args:
        traj: Completed trajectory
        net: Network providing the class weights P(k)

    Returns:
        sum_k P(k) r_k(T) - referral spend - direct spend
    """
    if traj.n_classes != net.n_classes:
        raise DimensionError(f"trajectory has {traj.n_classes} classes, network has {net.n_classes}")
    revenue = float(np.dot(net.weights, traj.r[-1]))
    return revenue - float(traj.cum_cost[-1, 0]) - float(traj.cum_cost[-1, 1])


def evaluate_profits(
        x0: StateVector,
        U: np.ndarray,
        V: np.ndarray,
        net: ClassNetwork,
        p: ModelParams,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT
) -> np.ndarray:
    """
    Profit of a batch of schedules without keeping trajectories

    Args:
        x0: Initial state
        U, V: (S, n_intervals, K) control values in [0, 1]
        net, p, dt, control_dt: As for integrate

    Returns:
        (S,) profits, identical to integrate + profit on each schedule
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.ndim != 3 or U.shape[2] != net.n_classes:
        raise DimensionError(f"controls must have shape (S, n, {net.n_classes}), got {U.shape}")
    if U.min() < 0 or U.max() > 1 or V.min() < 0 or V.max() > 1:
        raise ValidationError("control values must lie in [0, 1]")
    x, c = rk4_batch(x0.as_array(), U, V, net, p, dt, control_dt, store=False)
    return x[:, 1, :] @ net.weights - c[:, 0] - c[:, 1]


if __name__ == "__main__":
    params = ModelParams.base()
    network = ClassNetwork.regular(6)
    start = StateVector.uniform(1)

    print("=" * 60)
    print("Uncontrolled vs always-on, base scenario")
    print("=" * 60)
    for level in (0.0, 1.0):
        schedule = ControlSchedule.constant(1, params.horizon, Config.CONTROL_DT, u=level, v=level)
        trajectory = integrate(start, schedule, network, params)
        print(f"  u=v={level:.0f}: r(T)={trajectory.r[-1, 0]:.6f}  profit={profit(trajectory, network):.6f}")
