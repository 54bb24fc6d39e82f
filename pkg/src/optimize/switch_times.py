"""
Switching-time search: every class runs each program in at most two windows,
[0, tau_a] and (tau_b, T], and the 4K switch times are tuned by Nelder-Mead
"""

import logging
from typing import Tuple

import numpy as np
from tqdm import tqdm

from src.integrate.rk4 import evaluate_profits, rk4_batch
from src.model.types import (
    ClassNetwork,
    ModelParams,
    StateVector,
    SwitchTimes,
    grid_count,
    switch_coverage,
)
from src.optimize.result import OptimizationResult
from src.optimize.strategy import classify
from src.utils.config import Config
from src.utils.exceptions import DimensionError, ValidationError
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

# Nelder-Mead coefficients: reflection, expansion, contraction, shrink
REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5
X_TOL = 1e-5
F_TOL = 1e-10


class _SwitchObjective:
    """Negative profit of projected switch-time vectors, evaluated as one batch"""

    def __init__(self, x0: StateVector, net: ClassNetwork, params: ModelParams, dt: float, control_dt: float):
        self.x0 = x0.as_array()
        self.net = net
        self.params = params
        self.dt = dt
        self.control_dt = control_dt
        self.evaluations = 0

    def __call__(self, flat: np.ndarray) -> np.ndarray:
        u, v = switch_coverage(flat, self.params.horizon, self.control_dt)
        x, c = rk4_batch(self.x0, u, v, self.net, self.params, self.dt, self.control_dt, store=False)
        self.evaluations += flat.shape[0]
        return -(x[:, 1, :] @ self.net.weights - c[:, 0] - c[:, 1])


def random_switch_times(rng: np.random.Generator, starts: int, n_classes: int, horizon: float) -> np.ndarray:
    """Uniform feasible starting points, shape (starts, 4K)"""
    pairs = np.sort(rng.uniform(0.0, horizon, (starts, 2 * n_classes, 2)), axis=-1)
    return pairs.reshape(starts, 4 * n_classes)


def _initial_simplex(points: np.ndarray, horizon: float, step: float) -> np.ndarray:
    """Axis-aligned simplex around every start, stepping inward at the upper bound"""
    S, n = points.shape
    simplex = np.repeat(points[:, None, :], n + 1, axis=1)
    for j in range(n):
        coord = simplex[:, j + 1, j]
        simplex[:, j + 1, j] = np.where(coord + step <= horizon, coord + step, coord - step)
    return SwitchTimes.project(simplex, horizon)


def _nelder_mead_batch(
        objective: _SwitchObjective,
        points: np.ndarray,
        horizon: float,
        max_iters: int,
        step: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Run one Nelder-Mead search per start in lockstep

    All trial points of an iteration (reflection, expansion and both
    contractions) are evaluated in one batch; every point is projected onto
    the ordered box before it is evaluated.

    Returns:
        (best points (S, n), best values (S,), iterations (S,), converged (S,))
    """
    S, n = points.shape
    X = _initial_simplex(points, horizon, step)
    F = objective(X.reshape(-1, n)).reshape(S, n + 1)
    active = np.ones(S, dtype=bool)
    iterations = np.zeros(S, dtype=int)
    converged = np.zeros(S, dtype=bool)

    for _ in tqdm(range(max_iters), desc="switch-opt", disable=not progress_enabled()):
        order = np.argsort(F, axis=1, kind="stable")
        X = np.take_along_axis(X, order[:, :, None], axis=1)
        F = np.take_along_axis(F, order, axis=1)

        spread_x = np.abs(X[:, 1:] - X[:, :1]).max(axis=(1, 2))
        spread_f = np.abs(F[:, 1:] - F[:, :1]).max(axis=1)
        done = active & (spread_x <= X_TOL) & (spread_f <= F_TOL)
        converged |= done
        active &= ~done
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iterations[idx] += 1

        Xa, Fa = X[idx], F[idx]
        centroid = Xa[:, :-1].mean(axis=1)
        worst = Xa[:, -1]
        direction = centroid - worst
        trials = np.stack([
            centroid + REFLECT * direction,
            centroid + EXPAND * direction,
            centroid + CONTRACT * direction,
            centroid - CONTRACT * direction,
        ], axis=1)
        trials = SwitchTimes.project(trials, horizon)
        f_trial = objective(trials.reshape(-1, n)).reshape(idx.size, 4)
        fr, fe, foc, fic = f_trial.T
        f_best, f_second, f_worst = Fa[:, 0], Fa[:, -2], Fa[:, -1]

        choice = np.full(idx.size, -1)          # index into trials, -1 means shrink
        expand = fr < f_best
        choice[expand] = np.where(fe[expand] < fr[expand], 1, 0)
        accept = ~expand & (fr < f_second)
        choice[accept] = 0
        outside = ~expand & ~accept & (fr < f_worst)
        choice[outside & (foc <= fr)] = 2
        inside = ~expand & ~accept & ~outside
        choice[inside & (fic < f_worst)] = 3

        replace = choice >= 0
        rows = np.flatnonzero(replace)
        Xa[rows, -1] = trials[rows, choice[rows]]
        Fa[rows, -1] = f_trial[rows, choice[rows]]

        shrink = np.flatnonzero(~replace)
        if shrink.size:
            anchor = Xa[shrink, :1]
            moved = SwitchTimes.project(anchor + SHRINK * (Xa[shrink, 1:] - anchor), horizon)
            Xa[shrink, 1:] = moved
            Fa[shrink, 1:] = objective(moved.reshape(-1, n)).reshape(shrink.size, n)

        X[idx], F[idx] = Xa, Fa

    best = np.argmin(F, axis=1)
    return X[np.arange(S), best], F[np.arange(S), best], iterations, converged


def optimize_switch_times(
        x0: StateVector,
        net: ClassNetwork,
        params: ModelParams,
        starts: int = Config.SWITCH_STARTS,
        seed: int = Config.SEED,
        max_iters: int = Config.SWITCH_MAX_ITERS,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        initial_step: float = 1.0
) -> OptimizationResult:
    """
    Best two-window timing of both programs in every class

    A program that is on for part of a control cell contributes that fraction
    of the cell, so the objective is continuous in the switch times and the
    returned schedule reproduces the returned profit through integrate.

    Args:
        x0: Initial state
        net: Network
        params: Model parameters
        starts: Number of random feasible starting points
        seed: Scenario seed (the 'switch' seed is derived from it)
        max_iters: Nelder-Mead iteration cap per start
        dt: Internal step
        control_dt: Control grid step
        initial_step: Edge length of the starting simplex

    Returns:
        OptimizationResult with switch_times set
    """
    if starts < 1:
        raise ValidationError(f"starts must be >= 1, got {starts}")
    if x0.n_classes != net.n_classes:
        raise DimensionError(f"state has {x0.n_classes} classes, network has {net.n_classes}")
    horizon = params.horizon
    n_cells = grid_count(horizon, control_dt, "control_dt")
    grid_count(control_dt, dt, "dt")

    rng = np.random.default_rng(Config.derive_seed(seed, "switch"))
    points = random_switch_times(rng, starts, net.n_classes, horizon)
    objective = _SwitchObjective(x0, net, params, dt, control_dt)
    best_points, _, iterations, converged = _nelder_mead_batch(objective, points, horizon, max_iters, initial_step)

    # one re-evaluation of every start's answer through the schedule it reports
    u, v = switch_coverage(best_points, horizon, control_dt)
    start_profits = evaluate_profits(x0, u, v, net, params, dt, control_dt)
    best = int(np.argmax(start_profits))
    times = SwitchTimes.from_flat(best_points[best], horizon)
    schedule = times.to_schedule(control_dt)
    label = classify(times, control_dt)
    status = "converged" if converged[best] else "max-iterations"

    logger.info("Switch-time search best profit %.8f from start %d (%s), %d evaluations",
                start_profits[best], best, status, objective.evaluations)
    return OptimizationResult(
        solver="switch-opt",
        schedule=schedule,
        profit=float(start_profits[best]),
        start_profits=start_profits,
        best_start=best,
        label=label,
        status=status,
        seed=seed,
        starts=starts,
        switch_times=times,
        diagnostics={
            "iterations": int(iterations[best]),
            "total_iterations": int(iterations.sum()),
            "evaluations": objective.evaluations,
            "converged_starts": int(converged.sum()),
            "n_intervals": n_cells,
        },
    )
