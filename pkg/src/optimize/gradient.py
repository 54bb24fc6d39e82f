"""
Exact gradient of the discretized profit by reverse sweep through the RK4 steps
and the finite-difference check used to certify it
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.integrate.rk4 import rk4_batch, step_counts
from src.model.dynamics import augmented_rhs, augmented_vjp
from src.model.types import ClassNetwork, ModelParams, StateVector
from src.utils.config import Config

logger = logging.getLogger(__name__)

# RK4 stage weights
_B = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


def _forward(
        x0: np.ndarray,
        U: np.ndarray,
        V: np.ndarray,
        net: ClassNetwork,
        p: ModelParams,
        dt: float,
        control_dt: float
):
    n_cells, per_cell = step_counts(p.horizon, control_dt, dt)
    S = U.shape[0]
    mixing, weights = net.mixing, net.weights
    x = np.broadcast_to(x0, (S,) + x0.shape).copy()
    c = np.zeros((S, 2))
    half = 0.5 * dt
    stages = np.empty((n_cells * per_cell, 4) + x.shape)
    # cell averages of i*R and i, used to scale the control gradient
    factor_u = np.zeros(U.shape)
    factor_v = np.zeros(U.shape)

    m = 0
    for n in range(n_cells):
        u = U[:, n, :]
        v = V[:, n, :]
        for _ in range(per_cell):
            stages[m, 0] = x
            k1, q1 = augmented_rhs(x, u, v, mixing, weights, p)
            y2 = x + half * k1
            k2, q2 = augmented_rhs(y2, u, v, mixing, weights, p)
            y3 = x + half * k2
            k3, q3 = augmented_rhs(y3, u, v, mixing, weights, p)
            y4 = x + dt * k3
            k4, q4 = augmented_rhs(y4, u, v, mixing, weights, p)
            stages[m, 1] = y2
            stages[m, 2] = y3
            stages[m, 3] = y4
            i = x[:, 0, :]
            factor_u[:, n] += i * (x[:, 1, :] @ mixing.T)
            factor_v[:, n] += i
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            c = c + (dt / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
            m += 1

    objective = x[:, 1, :] @ weights - c[:, 0] - c[:, 1]
    return objective, stages, factor_u / per_cell, factor_v / per_cell


def objective_and_gradient(
        x0: StateVector,
        U: np.ndarray,
        V: np.ndarray,
        net: ClassNetwork,
        p: ModelParams,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        with_factors: bool = False
):
    """
    Profit of a batch of relaxed schedules and its gradient w.r.t. every control value

    The reverse sweep differentiates the RK4 recursion itself, so the gradient
    is exact for the discretized objective, not an approximation of the
    continuous one.

    Args:
        x0: Initial state
        U, V: (S, n_intervals, K) control values
        net: Network
        p: Model parameters
        dt: Internal step
        control_dt: Control grid step
        with_factors: Also return the cell averages of i*R and i

    Returns:
        (profit (S,), dU, dV) each gradient shaped like U;
        plus (factor_u, factor_v) when with_factors
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    objective, stages, factor_u, factor_v = _forward(x0.as_array(), U, V, net, p, dt, control_dt)

    n_cells, per_cell = step_counts(p.horizon, control_dt, dt)
    S = U.shape[0]
    mixing, weights = net.mixing, net.weights
    h = dt

    lam = np.zeros(stages.shape[2:])
    lam[:, 1, :] = weights
    mu = np.full((S, 2), -1.0)
    mu_stage = [b * h * mu for b in _B]
    grad_u = np.zeros(U.shape)
    grad_v = np.zeros(V.shape)

    for n in range(n_cells - 1, -1, -1):
        u = U[:, n, :]
        v = V[:, n, :]
        for j in range(per_cell - 1, -1, -1):
            y = stages[n * per_cell + j]
            gx4, gu4, gv4 = augmented_vjp(y[3], u, v, _B[3] * h * lam, mu_stage[3], mixing, weights, p)
            gx3, gu3, gv3 = augmented_vjp(y[2], u, v, _B[2] * h * lam + h * gx4, mu_stage[2], mixing, weights, p)
            gx2, gu2, gv2 = augmented_vjp(y[1], u, v, _B[1] * h * lam + 0.5 * h * gx3, mu_stage[1],
                                          mixing, weights, p)
            gx1, gu1, gv1 = augmented_vjp(y[0], u, v, _B[0] * h * lam + 0.5 * h * gx2, mu_stage[0],
                                          mixing, weights, p)
            lam = lam + gx1 + gx2 + gx3 + gx4
            grad_u[:, n] += gu1 + gu2 + gu3 + gu4
            grad_v[:, n] += gv1 + gv2 + gv3 + gv4

    if with_factors:
        return objective, grad_u, grad_v, factor_u, factor_v
    return objective, grad_u, grad_v


@dataclass
class GradientCheck:
    """Reverse-sweep gradient versus central differences"""

    max_rel_error: float
    tolerance: float
    points: int
    components: int
    worst_point: int
    worst_component: Tuple[str, int, int]
    passed: bool


def _central_differences(
        x0: np.ndarray,
        U: np.ndarray,
        V: np.ndarray,
        picks: np.ndarray,
        step: float,
        net: ClassNetwork,
        p: ModelParams,
        dt: float,
        control_dt: float
) -> np.ndarray:
    points, count = picks.shape
    n_cells, K = U.shape[1:]
    size = n_cells * K

    # every perturbed schedule in one batch: (point, component, +/-)
    U_fd = np.repeat(U[:, None, None], count, axis=1).repeat(2, axis=2)
    V_fd = np.repeat(V[:, None, None], count, axis=1).repeat(2, axis=2)
    for a in range(points):
        for b, flat in enumerate(picks[a]):
            target = U_fd if flat < size else V_fd
            cell, k = divmod(int(flat % size), K)
            target[a, b, 0, cell, k] += step
            target[a, b, 1, cell, k] -= step

    batch = points * count * 2
    x, c = rk4_batch(x0, U_fd.reshape(batch, n_cells, K), V_fd.reshape(batch, n_cells, K),
                     net, p, dt, control_dt, store=False)
    values = (x[:, 1, :] @ net.weights - c[:, 0] - c[:, 1]).reshape(points, count, 2)
    return (values[..., 0] - values[..., 1]) / (2.0 * step)


def check_gradient(
        x0: StateVector,
        net: ClassNetwork,
        p: ModelParams,
        points: int = 10,
        components: Optional[int] = None,
        step: float = 1e-6,
        fallback_step: Optional[float] = 1e-4,
        tolerance: float = 1e-4,
        seed: int = Config.SEED,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        floor: float = 1e-3
) -> GradientCheck:
    """
    Compare the reverse-sweep gradient with central finite differences

    Relative error per component is |g - g_fd| / max(|g|, |g_fd|, floor * max|g|),
    so components far below the gradient's scale are judged on absolute terms.

    The profit is about 0.4 while single control entries move it by 1e-7 to 1e-4,
    so round-off in the `step` difference can reach 1e-9. Each component is also
    differenced with `fallback_step` and the closer of the two estimates counts.

    Args:
        x0, net, p: Problem instance
        points: Number of random control points, uniform in [0, 1]
        components: Control entries checked per point; None checks all of them
        step: Finite-difference step
        fallback_step: Second, coarser step; None disables it
        tolerance: Allowed relative error
        seed: Seed of the random points and component choice
        dt, control_dt: Grid
        floor: Relative floor of the error denominator

    Returns:
        GradientCheck with the worst relative error found
    """
    n_cells, _ = step_counts(p.horizon, control_dt, dt)
    K = net.n_classes
    rng = np.random.default_rng(seed)
    U = rng.uniform(0.0, 1.0, (points, n_cells, K))
    V = rng.uniform(0.0, 1.0, (points, n_cells, K))
    _, grad_u, grad_v = objective_and_gradient(x0, U, V, net, p, dt, control_dt)

    size = n_cells * K
    if components is None or components >= 2 * size:
        picks = np.tile(np.arange(2 * size), (points, 1))
    else:
        picks = np.stack([rng.choice(2 * size, components, replace=False) for _ in range(points)])
    count = picks.shape[1]

    steps = [step] if fallback_step is None else [step, fallback_step]
    estimates = [_central_differences(x0.as_array(), U, V, picks, h, net, p, dt, control_dt) for h in steps]

    worst = (0.0, 0, ("u", 0, 0))
    for a in range(points):
        scale = floor * max(np.abs(grad_u[a]).max(), np.abs(grad_v[a]).max())
        for b, flat in enumerate(picks[a]):
            which = "u" if flat < size else "v"
            cell, k = divmod(int(flat % size), K)
            analytic = (grad_u if which == "u" else grad_v)[a, cell, k]
            err = min(
                abs(analytic - fd[a, b]) / max(abs(analytic), abs(fd[a, b]), scale, np.finfo(float).tiny)
                for fd in estimates
            )
            if err > worst[0]:
                worst = (float(err), a, (which, cell, k))

    result = GradientCheck(
        max_rel_error=worst[0],
        tolerance=tolerance,
        points=points,
        components=count,
        worst_point=worst[1],
        worst_component=worst[2],
        passed=worst[0] < tolerance,
    )
    logger.info("Gradient check: max relative error %.3g over %d points x %d components (%s)",
                result.max_rel_error, points, count, "pass" if result.passed else "FAIL")
    return result
