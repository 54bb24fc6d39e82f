"""
Forward-backward sweep on the necessary conditions
Forward states -> backward co-states -> bang-bang controls -> damped update
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.integrate.rk4 import Trajectory, integrate, profit
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, StateVector
from src.pmp.costate import CostateTrajectory, costate_sweep, extract_controls
from src.utils.config import Config
from src.utils.exceptions import DimensionError, ValidationError

logger = logging.getLogger(__name__)


@dataclass
class FBSResult:
    """Best iterate of a forward-backward sweep"""

    schedule: ControlSchedule
    trajectory: Trajectory
    costates: CostateTrajectory
    profit: float
    converged: bool
    iterations: int
    profit_history: List[float] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max-iterations"


def fbs_solve(
        x0: StateVector,
        net: ClassNetwork,
        params: ModelParams,
        max_iters: int = Config.FBS_MAX_ITERS,
        damping: float = Config.FBS_DAMPING,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        initial: Optional[ControlSchedule] = None,
        profit_tol: float = Config.FBS_PROFIT_TOL
) -> FBSResult:
    """
    Iterate the maximum-principle conditions to a binary fixed point

    The relaxed memory w is blended as w <- damping*w + (1-damping)*extracted
    and re-thresholded at 0.5 (ties keep the current binary value), so a
    control flips only after the sweep asks for it consistently.

    Args:
        x0: Initial single-class state
        net: Regular (single-class) network
        params: Model parameters
        max_iters: Iteration cap
        damping: Weight on the previous relaxed controls, in [0, 1)
        dt: Internal integration step
        control_dt: Control grid step
        initial: Starting schedule (default: both programs off)
        profit_tol: Profit change allowed between the last two iterates

    Returns:
        FBSResult holding the best-profit iterate and the convergence flag
    """
    if net.n_classes != 1:
        raise DimensionError("the forward-backward sweep needs a single-class (regular) network")
    if not 0.0 <= damping < 1.0:
        raise ValidationError(f"damping must lie in [0, 1), got {damping}")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")

    if initial is None:
        initial = ControlSchedule.constant(1, params.horizon, control_dt)
    initial.check_horizon(params.horizon)

    w_u = initial.u[:, 0].copy()
    w_v = initial.v[:, 0].copy()
    bin_u = (w_u > 0.5).astype(float)
    bin_v = (w_v > 0.5).astype(float)

    best = None
    history: List[float] = []
    previous = None
    converged = False
    iteration = 0

    for iteration in range(1, max_iters + 1):
        sched = ControlSchedule(control_dt, bin_u[:, None], bin_v[:, None])
        traj = integrate(x0, sched, net, params, dt)
        value = profit(traj, net)
        cs = costate_sweep(traj, sched, params)
        history.append(value)

        if best is None or value > best[0]:
            best = (value, sched, traj, cs)

        new = extract_controls(cs)
        fixed_point = (np.array_equal(new.u[:, 0], bin_u) and np.array_equal(new.v[:, 0], bin_v))
        if (fixed_point and previous is not None
                and np.array_equal(previous[0], bin_u) and np.array_equal(previous[1], bin_v)
                and abs(value - history[-2]) < profit_tol):
            converged = True
            break

        previous = (bin_u.copy(), bin_v.copy())
        w_u = damping * w_u + (1.0 - damping) * new.u[:, 0]
        w_v = damping * w_v + (1.0 - damping) * new.v[:, 0]
        bin_u = np.where(w_u > 0.5, 1.0, np.where(w_u < 0.5, 0.0, bin_u))
        bin_v = np.where(w_v > 0.5, 1.0, np.where(w_v < 0.5, 0.0, bin_v))

    value, sched, traj, cs = best
    if converged:
        logger.info("Sweep converged after %d iterations, profit %.8f", iteration, value)
    else:
        logger.warning("Sweep hit %d iterations without a fixed point; best profit %.8f", max_iters, value)

    return FBSResult(
        schedule=sched,
        trajectory=traj,
        costates=cs,
        profit=value,
        converged=converged,
        iterations=iteration,
        profit_history=history,
    )
