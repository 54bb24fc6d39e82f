"""
Strategy labels for program pairs and per-class targeting summaries
"""

from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.integrate.rk4 import Trajectory
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, SwitchTimes
from src.utils.config import Config
from src.utils.exceptions import DimensionError, ValidationError


class StrategyLabel(str, Enum):
    """Names for the ordering of the two programs"""

    INFLUENCE_AND_EXPLOIT = "influence-and-exploit"
    EXPLOIT_AND_INFLUENCE = "exploit-and-influence"
    BOTH_PHASES = "both-phases"
    ALWAYS_ON = "always-on"
    NONE = "none"
    MIXED = "mixed"

    def __str__(self) -> str:
        return self.value


class ProgramShape(str, Enum):
    """Shape of a single binary program signal"""

    OFF = "off"
    ALWAYS_ON = "always-on"
    INITIAL_ONLY = "initial-only"
    TERMINAL_ONLY = "terminal-only"
    ON_OFF_ON = "on-off-on"
    MIDDLE = "middle"

    def __str__(self) -> str:
        return self.value


Schedule = Union[ControlSchedule, SwitchTimes]


def _binary(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all((values == 0.0) | (values == 1.0)):
        raise ValidationError(f"{what} must be binary (0/1) to be classified")
    return values.astype(bool)


def _on_sequences(sched: Schedule, control_dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Boolean (n_intervals, K) signals; switch times are read at cell midpoints"""
    if isinstance(sched, SwitchTimes):
        n = int(round(sched.horizon / control_dt))
        mid = (np.arange(n) + 0.5) * control_dt
        taus = sched.taus
        u = (mid[:, None] <= taus[None, :, 0]) | (mid[:, None] > taus[None, :, 1])
        v = (mid[:, None] <= taus[None, :, 2]) | (mid[:, None] > taus[None, :, 3])
        return u, v
    return _binary(sched.u, "u"), _binary(sched.v, "v")


def on_intervals(seq: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal runs of on-cells as (first, last) index pairs"""
    seq = np.asarray(seq, dtype=bool)
    padded = np.concatenate([[False], seq, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(int)))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def _first_on(seq: np.ndarray) -> Optional[int]:
    idx = np.flatnonzero(seq)
    return int(idx[0]) if idx.size else None


def is_terminal_only(seq: np.ndarray, terminal_fraction: float = Config.TERMINAL_FRACTION) -> bool:
    """Earliest on-cell lies in the last `terminal_fraction` of the grid"""
    first = _first_on(seq)
    if first is None:
        return False
    return first >= (1.0 - terminal_fraction) * len(seq)


def program_shape(
        seq: np.ndarray,
        always_on_fraction: float = Config.ALWAYS_ON_FRACTION
) -> ProgramShape:
    """
    Shape label of one binary program signal

    Args:
        seq: Binary on/off values on the control grid
        always_on_fraction: Share of on-cells that counts as always on

    Returns:
        ProgramShape
    """
    seq = _binary(seq, "program signal")
    runs = on_intervals(seq)
    if not runs:
        return ProgramShape.OFF
    if seq.mean() >= always_on_fraction:
        return ProgramShape.ALWAYS_ON
    starts_on = bool(seq[0])
    ends_on = bool(seq[-1])
    if starts_on and ends_on:
        return ProgramShape.ON_OFF_ON
    if len(runs) == 1 and starts_on:
        return ProgramShape.INITIAL_ONLY
    if len(runs) == 1 and ends_on:
        return ProgramShape.TERMINAL_ONLY
    return ProgramShape.MIDDLE


def classify_pair(
        u: np.ndarray,
        v: np.ndarray,
        terminal_fraction: float = Config.TERMINAL_FRACTION,
        always_on_fraction: float = Config.ALWAYS_ON_FRACTION
) -> StrategyLabel:
    """
    Label one (referral, direct) pair of boolean signals

    Rules, first match wins:
      none                   both programs off throughout
      always-on              both programs on for at least always_on_fraction of the grid
      both-phases            both on at t=0 and both on in the last cell
      influence-and-exploit  v on at t=0, u off there but on later
      exploit-and-influence  u on at t=0 and v terminal-only
      mixed                  anything else
    """
    u = np.asarray(u, dtype=bool)
    v = np.asarray(v, dtype=bool)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"u and v must be 1-D signals of equal length, got {u.shape}, {v.shape}")

    if not u.any() and not v.any():
        return StrategyLabel.NONE
    if u.mean() >= always_on_fraction and v.mean() >= always_on_fraction:
        return StrategyLabel.ALWAYS_ON
    if u[0] and v[0] and u[-1] and v[-1]:
        return StrategyLabel.BOTH_PHASES
    # a terminal-only u is covered: its first on-cell is past t=0
    if v[0] and not u[0] and u.any():
        return StrategyLabel.INFLUENCE_AND_EXPLOIT
    if u[0] and is_terminal_only(v, terminal_fraction):
        return StrategyLabel.EXPLOIT_AND_INFLUENCE
    return StrategyLabel.MIXED


def classify(
        sched: Schedule,
        control_dt: float = Config.CONTROL_DT,
        terminal_fraction: float = Config.TERMINAL_FRACTION,
        always_on_fraction: float = Config.ALWAYS_ON_FRACTION
) -> StrategyLabel:
    """
    Strategy label of a binary schedule

    For several classes, a program counts as on in a cell when it is on for
    any class there.

    Args:
        sched: Binary ControlSchedule, or SwitchTimes (read on the control grid)
        control_dt: Grid used to read SwitchTimes
        terminal_fraction: Share of the horizon counted as terminal
        always_on_fraction: Share of on-cells that counts as always on

    Returns:
        StrategyLabel
    """
    u, v = _on_sequences(sched, control_dt)
    return classify_pair(u.any(axis=1), v.any(axis=1), terminal_fraction, always_on_fraction)


def classify_classes(sched: Schedule, control_dt: float = Config.CONTROL_DT) -> List[StrategyLabel]:
    """Strategy label of every class separately"""
    u, v = _on_sequences(sched, control_dt)
    return [classify_pair(u[:, k], v[:, k]) for k in range(u.shape[1])]


def targeting_report(traj: Trajectory, net: ClassNetwork, params: ModelParams) -> pd.DataFrame:
    """
    Who gets incentivized: per-class on-time, program shapes and share of total spend

    Args:
        traj: Trajectory under the schedule of interest
        net: Network of the trajectory
        params: Model parameters (pay-outs)

    Returns:
        One row per class with degree, weight, on fractions, shapes and spend
    """
    if traj.n_classes != net.n_classes:
        raise DimensionError(f"trajectory has {traj.n_classes} classes, network has {net.n_classes}")

    per_cell = int(round(traj.control_dt / traj.dt))
    u_cells = traj.u[:-1:per_cell]
    v_cells = traj.v[:-1:per_cell]
    binary = np.all((u_cells == 0) | (u_cells == 1)) and np.all((v_cells == 0) | (v_cells == 1))

    # left-point controls, trapezoid on the state factors
    i = traj.i
    R = traj.r @ net.mixing.T
    referral_rate = params.cost_referral * (params.beta + params.eps1) * net.weights * i * R
    direct_rate = params.cost_direct * (params.alpha + params.eps2) * net.weights * i
    u_step, v_step = traj.u[:-1], traj.v[:-1]
    half = 0.5 * traj.dt
    referral = np.sum(u_step * (referral_rate[:-1] + referral_rate[1:]) * half, axis=0)
    direct = np.sum(v_step * (direct_rate[:-1] + direct_rate[1:]) * half, axis=0)
    total = float(np.sum(referral) + np.sum(direct))

    rows = []
    for k in range(net.n_classes):
        rows.append({
            "class": k + 1,
            "degree": net.degrees[k],
            "weight": float(net.weights[k]),
            "u_on_fraction": float(np.mean(u_cells[:, k] > 0.5)),
            "v_on_fraction": float(np.mean(v_cells[:, k] > 0.5)),
            "u_shape": str(program_shape(u_cells[:, k])) if binary else "relaxed",
            "v_shape": str(program_shape(v_cells[:, k])) if binary else "relaxed",
            "referral_spend": float(referral[k]),
            "direct_spend": float(direct[k]),
            "spend_share": float((referral[k] + direct[k]) / total) if total > 0 else 0.0,
        })
    return pd.DataFrame(rows)
