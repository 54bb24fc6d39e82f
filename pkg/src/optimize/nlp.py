"""
Direct transcription: profit as a function of the control grid values,
maximized by projected gradient ascent from many random starts
"""

import logging

import numpy as np
from tqdm import tqdm

from src.integrate.rk4 import evaluate_profits, rk4_batch
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, StateVector, grid_count
from src.optimize.gradient import check_gradient, objective_and_gradient
from src.optimize.result import OptimizationResult
from src.optimize.strategy import classify
from src.utils.config import Config
from src.utils.exceptions import DimensionError, ValidationError
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 40
FACTOR_FLOOR = 1e-8
INTERIOR_EPS = 1e-6


def _profits(x0: np.ndarray, U, V, net, params, dt, control_dt) -> np.ndarray:
    x, c = rk4_batch(x0, U, V, net, params, dt, control_dt, store=False)
    return x[:, 1, :] @ net.weights - c[:, 0] - c[:, 1]


def nlp_solve(
        x0: StateVector,
        net: ClassNetwork,
        params: ModelParams,
        starts: int = Config.NLP_STARTS,
        seed: int = Config.SEED,
        max_iters: int = Config.NLP_MAX_ITERS,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        rounding_threshold: float = 0.5,
        tol: float = Config.NLP_TOL,
        verify_gradient: bool = False
) -> OptimizationResult:
    """
    Maximize profit over relaxed control values in [0, 1] on the control grid

    The search direction is the reverse-sweep gradient divided by the cell's
    state factor (i*R for referral, i for incentives), which turns it into the
    switching signal of each cell. Steps are projected onto [0, 1] and accepted
    by Armijo backtracking, per start. The all-off schedule is kept as a last
    candidate so the answer is never worse than doing nothing.

    Args:
        x0: Initial state
        net: Network
        params: Model parameters
        starts: Number of uniformly random starting schedules
        seed: Scenario seed (the 'nlp' seed is derived from it)
        max_iters: Iteration cap per start
        dt: Internal step
        control_dt: Control grid step
        rounding_threshold: Values above it round to 1
        tol: Projected step below which a start counts as stationary
        verify_gradient: Run the finite-difference check and store its outcome

    Returns:
        OptimizationResult; start_profits holds the starts then the all-off candidate
    """
    if starts < 1:
        raise ValidationError(f"starts must be >= 1, got {starts}")
    if x0.n_classes != net.n_classes:
        raise DimensionError(f"state has {x0.n_classes} classes, network has {net.n_classes}")
    n_cells = grid_count(params.horizon, control_dt, "control_dt")
    grid_count(control_dt, dt, "dt")
    K = net.n_classes
    x0_arr = x0.as_array()

    rng = np.random.default_rng(Config.derive_seed(seed, "nlp"))
    U = rng.uniform(0.0, 1.0, (starts, n_cells, K))
    V = rng.uniform(0.0, 1.0, (starts, n_cells, K))

    profit_now = np.full(starts, np.nan)
    step = np.full(starts, np.nan)
    stationarity = np.full(starts, np.inf)
    iterations = np.zeros(starts, dtype=int)
    status = np.array(["max-iterations"] * starts, dtype=object)
    active = np.ones(starts, dtype=bool)
    contraction = Config.ARMIJO_CONTRACTION

    for _ in tqdm(range(max_iters), desc="nlp", disable=not progress_enabled()):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        J, gU, gV, fu, fv = objective_and_gradient(x0, U[idx], V[idx], net, params, dt, control_dt,
                                                   with_factors=True)
        profit_now[idx] = J
        dU = gU / np.maximum(fu * control_dt, FACTOR_FLOOR)
        dV = gV / np.maximum(fv * control_dt, FACTOR_FLOOR)

        moved = np.maximum(
            np.abs(np.clip(U[idx] + dU, 0.0, 1.0) - U[idx]).max(axis=(1, 2)),
            np.abs(np.clip(V[idx] + dV, 0.0, 1.0) - V[idx]).max(axis=(1, 2)),
        )
        stationarity[idx] = moved
        done = moved < tol
        status[idx[done]] = "converged"
        active[idx[done]] = False

        keep = ~done
        idx, J, gU, gV, dU, dV = idx[keep], J[keep], gU[keep], gV[keep], dU[keep], dV[keep]
        if idx.size == 0:
            break

        first = np.isnan(step[idx])
        scale = np.maximum(np.abs(dU).max(axis=(1, 2)), np.abs(dV).max(axis=(1, 2)))
        step[idx[first]] = 1.0 / scale[first]

        s = step[idx].copy()
        pending = np.ones(idx.size, dtype=bool)
        new_U = U[idx].copy()
        new_V = V[idx].copy()
        new_J = J.copy()
        tries = np.zeros(idx.size, dtype=int)
        for _attempt in range(MAX_BACKTRACKS):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            base_U, base_V = U[idx[p]], V[idx[p]]
            trial_U = np.clip(base_U + s[p, None, None] * dU[p], 0.0, 1.0)
            trial_V = np.clip(base_V + s[p, None, None] * dV[p], 0.0, 1.0)
            trial_J = _profits(x0_arr, trial_U, trial_V, net, params, dt, control_dt)
            slope = (np.sum(gU[p] * (trial_U - base_U), axis=(1, 2))
                     + np.sum(gV[p] * (trial_V - base_V), axis=(1, 2)))
            ok = trial_J >= J[p] + Config.ARMIJO_SLOPE * slope
            hit = p[ok]
            new_U[hit] = trial_U[ok]
            new_V[hit] = trial_V[ok]
            new_J[hit] = trial_J[ok]
            pending[hit] = False
            miss = p[~ok]
            s[miss] *= contraction
            tries[miss] += 1

        collapsed = pending
        status[idx[collapsed]] = "step-collapse"
        active[idx[collapsed]] = False

        moved_ok = ~collapsed
        U[idx[moved_ok]] = new_U[moved_ok]
        V[idx[moved_ok]] = new_V[moved_ok]
        gain = new_J - J
        profit_now[idx[moved_ok]] = new_J[moved_ok]
        iterations[idx] += 1

        # accepted on the first try: let the step grow again
        step[idx] = np.where(tries == 0, s / contraction, s)

        flat = moved_ok & (gain <= Config.NLP_FLAT_TOL)
        status[idx[flat]] = "converged"
        active[idx[flat]] = False

    # round, keep the binary answer when it costs (almost) nothing
    U_round = (U > rounding_threshold).astype(float)
    V_round = (V > rounding_threshold).astype(float)
    rounded = _profits(x0_arr, U_round, V_round, net, params, dt, control_dt)
    loss = profit_now - rounded
    use_round = loss <= Config.ROUNDING_TOLERANCE
    U_out = np.where(use_round[:, None, None], U_round, U)
    V_out = np.where(use_round[:, None, None], V_round, V)

    # re-evaluate the reported schedules plus the all-off candidate
    U_all = np.concatenate([U_out, np.zeros((1, n_cells, K))])
    V_all = np.concatenate([V_out, np.zeros((1, n_cells, K))])
    start_profits = evaluate_profits(x0, U_all, V_all, net, params, dt, control_dt)
    best = int(np.argmax(start_profits))

    if best < starts:
        interior = np.mean(np.concatenate([
            ((U[best] > INTERIOR_EPS) & (U[best] < 1 - INTERIOR_EPS)).ravel(),
            ((V[best] > INTERIOR_EPS) & (V[best] < 1 - INTERIOR_EPS)).ravel(),
        ]))
        best_status = str(status[best])
        best_loss = float(loss[best])
        flagged = not bool(use_round[best])
        best_iters = int(iterations[best])
        best_stat = float(stationarity[best])
    else:
        interior, best_status, best_loss, flagged, best_iters, best_stat = 0.0, "baseline", 0.0, False, 0, 0.0

    schedule = ControlSchedule(control_dt, U_all[best], V_all[best])
    label = classify(schedule if schedule.is_binary() else schedule.rounded(rounding_threshold), control_dt)
    if flagged:
        logger.warning("Rounding the best NLP schedule loses %.3g profit; reporting the relaxed schedule", best_loss)

    diagnostics = {
        "iterations": best_iters,
        "total_iterations": int(iterations.sum()),
        "stationarity": best_stat,
        "interior_fraction": float(interior),
        "rounding_loss": best_loss,
        "rounding_flagged": flagged,
        "start_status": [str(state) for state in status],
        "baseline_profit": float(start_profits[-1]),
    }
    if verify_gradient:
        check = check_gradient(x0, net, params, seed=Config.derive_seed(seed, "gradient"),
                               dt=dt, control_dt=control_dt)
        diagnostics["gradient_check"] = check.max_rel_error
        diagnostics["gradient_ok"] = check.passed
        if not check.passed:
            logger.error("Gradient check failed: relative error %.3g at %s",
                         check.max_rel_error, check.worst_component)

    logger.info("NLP best profit %.8f from start %d (%s), label %s",
                start_profits[best], best, best_status, label)
    return OptimizationResult(
        solver="nlp",
        schedule=schedule,
        profit=float(start_profits[best]),
        start_profits=start_profits,
        best_start=best,
        label=label,
        status=best_status,
        seed=seed,
        starts=starts,
        diagnostics=diagnostics,
    )
