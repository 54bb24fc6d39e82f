"""
Backward co-state integration, switching functions and bang-bang control extraction
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from src.integrate.rk4 import Trajectory
from src.model.dynamics import drift_array
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, SwitchTimes, grid_count
from src.pmp.hamiltonian import (
    costate_rhs,
    hamiltonian_array,
    maximized_hamiltonian_array,
    switching_functions,
)
from src.utils.exceptions import DimensionError
from src.utils.io import write_csv

_SINGLE = ClassNetwork.regular(1)


@dataclass(frozen=True, eq=False)
class CostateTrajectory:
    """Co-states and switching signals on the grid of a state trajectory"""

    t: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    zeta: np.ndarray        # (p2 - p1) i
    H: np.ndarray           # with the applied controls
    H_max: np.ndarray       # maximized over u, v
    dt: float
    control_dt: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t,
            "p1": self.p1,
            "p2": self.p2,
            "phi": self.phi,
            "psi": self.psi,
            "zeta": self.zeta,
            "H": self.H,
            "H_max": self.H_max,
        })

    def write_csv(self, path: Path, header_comments: Optional[Dict[str, object]] = None) -> Path:
        return write_csv(self.to_frame(), path, header_comments)


def costate_sweep(traj: Trajectory, sched: ControlSchedule, params: ModelParams) -> CostateTrajectory:
    """
    Integrate the co-state equations backward from p(T) = (0, 1)

    Midpoint states come from cubic Hermite interpolation of the stored
    trajectory, so the backward pass keeps fourth-order accuracy.

    Args:
        traj: Trajectory produced by integrate under sched
        sched: The schedule that produced traj
        params: Model parameters

    Returns:
        CostateTrajectory aligned with traj.t
    """
    if traj.n_classes != 1 or sched.n_classes != 1:
        raise DimensionError("the co-state sweep covers the single-class problem only")
    if abs(traj.control_dt - sched.control_dt) > 1e-12:
        raise DimensionError(
            f"trajectory control grid {traj.control_dt} differs from schedule grid {sched.control_dt}"
        )
    per_cell = grid_count(sched.control_dt, traj.dt, "dt")
    if traj.n_steps != sched.n_intervals * per_cell:
        raise DimensionError(
            f"trajectory has {traj.n_steps} steps, schedule implies {sched.n_intervals * per_cell}"
        )

    h = traj.dt
    states = traj.states[:, :, 0]           # (M+1, 3)
    i, r = states[:, 0], states[:, 1]
    n = traj.n_steps
    p1 = np.empty(n + 1)
    p2 = np.empty(n + 1)
    p1[-1], p2[-1] = 0.0, 1.0

    for m in range(n, 0, -1):
        u = traj.u[m - 1, 0]
        v = traj.v[m - 1, 0]
        uk = np.array([u])
        vk = np.array([v])
        f_hi = drift_array(states[m][:, None], uk, vk, _SINGLE.mixing, params)[:, 0]
        f_lo = drift_array(states[m - 1][:, None], uk, vk, _SINGLE.mixing, params)[:, 0]
        mid = 0.5 * (states[m] + states[m - 1]) + (h / 8.0) * (f_lo - f_hi)

        a1, b1 = costate_rhs(i[m], r[m], p1[m], p2[m], u, v, params)
        a2, b2 = costate_rhs(mid[0], mid[1], p1[m] - 0.5 * h * a1, p2[m] - 0.5 * h * b1, u, v, params)
        a3, b3 = costate_rhs(mid[0], mid[1], p1[m] - 0.5 * h * a2, p2[m] - 0.5 * h * b2, u, v, params)
        a4, b4 = costate_rhs(i[m - 1], r[m - 1], p1[m] - h * a3, p2[m] - h * b3, u, v, params)
        p1[m - 1] = p1[m] - (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        p2[m - 1] = p2[m] - (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)

    phi, psi = switching_functions(p1, p2, params)
    u_grid, v_grid = traj.u[:, 0], traj.v[:, 0]
    return CostateTrajectory(
        t=traj.t.copy(),
        p1=p1,
        p2=p2,
        phi=phi,
        psi=psi,
        zeta=(p2 - p1) * i,
        H=hamiltonian_array(i, r, p1, p2, u_grid, v_grid, params),
        H_max=maximized_hamiltonian_array(i, r, p1, p2, params),
        dt=traj.dt,
        control_dt=traj.control_dt,
    )


def interval_samples(signal: np.ndarray, per_cell: int) -> np.ndarray:
    """Value of a grid signal at the midpoint of every control interval"""
    n_cells = (signal.shape[0] - 1) // per_cell
    centre = (np.arange(n_cells) + 0.5) * per_cell
    lo = np.floor(centre).astype(int)
    hi = np.ceil(centre).astype(int)
    return 0.5 * (signal[lo] + signal[hi])


def _threshold_hold(values: np.ndarray) -> np.ndarray:
    """1 where positive, 0 where negative, previous value at exact zeros"""
    out = np.empty(values.shape[0])
    previous = 0.0
    for n, value in enumerate(values):
        if value > 0:
            previous = 1.0
        elif value < 0:
            previous = 0.0
        out[n] = previous
    return out


def extract_controls(cs: CostateTrajectory) -> ControlSchedule:
    """
    Bang-bang controls from the sign of the switching functions

    Each control interval takes the sign of phi (resp. psi) at its midpoint.

    Args:
        cs: Co-state trajectory

    Returns:
        Binary ControlSchedule on cs's control grid
    """
    per_cell = grid_count(cs.control_dt, cs.dt, "dt")
    u = _threshold_hold(interval_samples(cs.phi, per_cell))
    v = _threshold_hold(interval_samples(cs.psi, per_cell))
    return ControlSchedule(cs.control_dt, u[:, None], v[:, None])


def _crossings(signal: np.ndarray, t: np.ndarray):
    """Interpolated times where the signal changes sign, with direction"""
    sign = np.sign(signal)
    nz = np.nonzero(sign)[0]
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sign[a] != sign[b]:
            frac = signal[a] / (signal[a] - signal[b])
            out.append((t[a] + frac * (t[b] - t[a]), int(sign[b])))
    return out


def count_sign_changes(signal: np.ndarray, tol: float = 0.0) -> int:
    """Number of sign changes, ignoring entries with |value| <= tol"""
    kept = signal[np.abs(signal) > tol]
    if kept.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(np.sign(kept)) != 0))


def _window(signal: np.ndarray, t: np.ndarray, horizon: float):
    crossings = _crossings(signal, t)
    downs = [time for time, direction in crossings if direction < 0]
    ups = [time for time, direction in crossings if direction > 0]
    if not crossings:
        # on everywhere -> empty off window at T; off everywhere -> off on (0, T]
        return (horizon, horizon) if np.any(signal > 0) else (0.0, horizon)
    start = downs[0] if signal[np.nonzero(signal)[0][0]] > 0 else 0.0
    stop = ups[-1] if ups and ups[-1] >= start else horizon
    return start, stop


def switching_times(cs: CostateTrajectory) -> SwitchTimes:
    """
    Off-window of each program read from the switching functions

    Returns:
        SwitchTimes (one class): off on (tau1, tau2] and (tau3, tau4]
    """
    horizon = float(cs.t[-1])
    tau1, tau2 = _window(cs.phi, cs.t, horizon)
    tau3, tau4 = _window(cs.psi, cs.t, horizon)
    return SwitchTimes(np.array([[tau1, tau2, tau3, tau4]]), horizon)
