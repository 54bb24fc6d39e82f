"""
Controlled mean-field dynamics and program cost rates
Array kernels work on any leading batch shape; the public functions validate
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.model.types import ClassNetwork, ModelParams, StateVector, as_control_arrays
from src.utils.exceptions import DimensionError


# ---------------------------------------------------------------------------
# Array kernels. x has shape (..., 3, K) with rows i, r, theta; u, v (..., K).
# ---------------------------------------------------------------------------

def drift_array(x: np.ndarray, u: np.ndarray, v: np.ndarray, mixing: np.ndarray, p: ModelParams) -> np.ndarray:
    """Time derivative of the per-class fractions"""
    i = x[..., 0, :]
    R = x[..., 1, :] @ mixing.T
    Th = x[..., 2, :] @ mixing.T
    to_seller = ((p.beta + u * p.eps1) * R + (p.alpha + v * p.eps2)) * i
    to_competitor = (p.gamma * Th + p.delta) * i
    return np.stack([-(to_seller + to_competitor), to_seller, to_competitor], axis=-2)


def cost_rates_array(
        x: np.ndarray,
        u: np.ndarray,
        v: np.ndarray,
        mixing: np.ndarray,
        weights: np.ndarray,
        p: ModelParams
) -> np.ndarray:
    """Referral and direct-incentive spend per unit time, shape (..., 2)"""
    i = x[..., 0, :]
    R = x[..., 1, :] @ mixing.T
    referral = np.sum(weights * u * i * R, axis=-1) * (p.cost_referral * (p.beta + p.eps1))
    direct = np.sum(weights * v * i, axis=-1) * (p.cost_direct * (p.alpha + p.eps2))
    return np.stack([referral, direct], axis=-1)


def augmented_rhs(
        x: np.ndarray,
        u: np.ndarray,
        v: np.ndarray,
        mixing: np.ndarray,
        weights: np.ndarray,
        p: ModelParams
) -> Tuple[np.ndarray, np.ndarray]:
    """Drift and both cost rates in one pass (shares the neighbor averages)"""
    i = x[..., 0, :]
    R = x[..., 1, :] @ mixing.T
    Th = x[..., 2, :] @ mixing.T
    social = i * R
    to_seller = (p.beta + u * p.eps1) * social + (p.alpha + v * p.eps2) * i
    to_competitor = (p.gamma * Th + p.delta) * i
    dx = np.stack([-(to_seller + to_competitor), to_seller, to_competitor], axis=-2)
    referral = np.sum(weights * u * social, axis=-1) * (p.cost_referral * (p.beta + p.eps1))
    direct = np.sum(weights * v * i, axis=-1) * (p.cost_direct * (p.alpha + p.eps2))
    return dx, np.stack([referral, direct], axis=-1)


def augmented_vjp(
        x: np.ndarray,
        u: np.ndarray,
        v: np.ndarray,
        lam: np.ndarray,
        lam_cost: np.ndarray,
        mixing: np.ndarray,
        weights: np.ndarray,
        p: ModelParams
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vector-Jacobian products of the state + cost-accumulator dynamics

    Args:
        x: States (..., 3, K)
        u, v: Controls (..., K)
        lam: Adjoint weights on the state derivative (..., 3, K)
        lam_cost: Adjoint weights on the two cost rates (..., 2)
        mixing: P(k'|k)
        weights: P(k)
        p: Model parameters

    Returns:
        (d/dx, d/du, d/dv) of lam . f + lam_cost . cost_rates
    """
    i = x[..., 0, :]
    R = x[..., 1, :] @ mixing.T
    Th = x[..., 2, :] @ mixing.T
    b = p.beta + u * p.eps1
    a = p.alpha + v * p.eps2
    cb = p.cost_referral * (p.beta + p.eps1)
    ca = p.cost_direct * (p.alpha + p.eps2)

    # gain of moving mass from i to r, and from i to theta
    w = lam[..., 1, :] - lam[..., 0, :]
    q = lam[..., 2, :] - lam[..., 0, :]
    la = lam_cost[..., 0:1] * weights * cb
    lb = lam_cost[..., 1:2] * weights * ca

    gi = w * (b * R + a) + q * (p.gamma * Th + p.delta) + la * u * R + lb * v
    gr = (w * b * i + la * u * i) @ mixing
    gth = (q * p.gamma * i) @ mixing
    gx = np.stack([gi, gr, gth], axis=-2)
    gu = (w * p.eps1 + la) * i * R
    gv = (w * p.eps2 + lb) * i
    return gx, gu, gv


# ---------------------------------------------------------------------------
# Validated single-point operations
# ---------------------------------------------------------------------------

def _check_inputs(state: StateVector, net: ClassNetwork, u, v) -> Tuple[np.ndarray, np.ndarray]:
    if state.n_classes != net.n_classes:
        raise DimensionError(f"state has {state.n_classes} classes, network has {net.n_classes}")
    return (as_control_arrays(u, net.n_classes, "u"),
            as_control_arrays(v, net.n_classes, "v"))


def drift(
        state: StateVector,
        net: ClassNetwork,
        p: ModelParams,
        u: Optional[Sequence[float]] = None,
        v: Optional[Sequence[float]] = None
) -> np.ndarray:
    """
    Instantaneous drift of the controlled system

    Args:
        state: Current per-class fractions (validated on construction)
        net: Degree classes and mixing
        p: Model parameters
        u: Per-class referral program values in [0, 1] (default off)
        v: Per-class direct incentive values in [0, 1] (default off)

    Returns:
        (3, K) array with rows di/dt, dr/dt, dtheta/dt
    """
    u, v = _check_inputs(state, net, u, v)
    return drift_array(state.as_array(), u, v, net.mixing, p)


def cost_rate(
        state: StateVector,
        net: ClassNetwork,
        p: ModelParams,
        u: Optional[Sequence[float]] = None,
        v: Optional[Sequence[float]] = None
) -> float:
    """
    Seller's expenditure per unit time on both programs

    Args:
        state, net, p, u, v: As for drift

    Returns:
        sum_k P(k) [u_k c (beta+eps1) i_k R_k + v_k c' (alpha+eps2) i_k]
    """
    u, v = _check_inputs(state, net, u, v)
    rates = cost_rates_array(state.as_array(), u, v, net.mixing, net.weights, p)
    return float(rates.sum())
