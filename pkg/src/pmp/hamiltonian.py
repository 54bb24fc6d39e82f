"""
Maximum-principle quantities for the single-class (regular network) problem
Hamiltonian, co-state right-hand side and the two switching functions
"""

from typing import Tuple

import numpy as np

from src.model.types import ModelParams, StateVector
from src.utils.exceptions import DimensionError, ValidationError


def hamiltonian_array(i, r, p1, p2, u, v, params: ModelParams):
    """
    Hamiltonian with theta reconstructed as 1 - i - r (works elementwise on arrays)
    """
    theta = 1.0 - i - r
    b = params.beta + u * params.eps1
    a = params.alpha + v * params.eps2
    to_seller = b * i * r + a * i
    return (-params.cost_referral * u * (params.beta + params.eps1) * i * r
            - params.cost_direct * v * (params.alpha + params.eps2) * i
            - p1 * (to_seller + params.gamma * i * theta + params.delta * i)
            + p2 * to_seller)


def maximized_hamiltonian_array(i, r, p1, p2, params: ModelParams):
    """Hamiltonian maximized pointwise over u, v in [0, 1]"""
    phi, psi = switching_functions(p1, p2, params)
    base = hamiltonian_array(i, r, p1, p2, 0.0, 0.0, params)
    return base + np.maximum(phi, 0.0) * i * r + np.maximum(psi, 0.0) * i


def costate_rhs(i, r, p1, p2, u, v, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Co-state derivatives dp1/dt = -dH/di and dp2/dt = -dH/dr

    Returns:
        (dp1, dp2)
    """
    c, c2 = params.cost_referral, params.cost_direct
    gap = p2 - p1
    referral = c * params.beta - (gap - c) * params.eps1
    direct = c2 * params.alpha - (gap - c2) * params.eps2
    dp1 = (referral * r * u + direct * v
           - gap * (params.beta * r + params.alpha)
           + p1 * (params.gamma * (1.0 - 2.0 * i - r) + params.delta))
    dp2 = referral * u * i - gap * params.beta * i - p1 * params.gamma * i
    return dp1, dp2


def switching_functions(p1, p2, params: ModelParams):
    """
    phi = (p2 - p1 - c) eps1 - c beta;  psi = (p2 - p1 - c') eps2 - c' alpha

    Returns:
        (phi, psi)
    """
    gap = p2 - p1
    phi = (gap - params.cost_referral) * params.eps1 - params.cost_referral * params.beta
    psi = (gap - params.cost_direct) * params.eps2 - params.cost_direct * params.alpha
    return phi, psi


def hamiltonian(
        x: StateVector,
        costate: Tuple[float, float],
        u: float,
        v: float,
        params: ModelParams
) -> float:
    """
    Hamiltonian of the single-class problem

    Args:
        x: Single-class state (theta is taken as 1 - i - r)
        costate: (p1, p2)
        u: Referral program level in [0, 1]
        v: Direct incentive level in [0, 1]
        params: Model parameters

    Returns:
        H(x, p, u, v)
    """
    if x.n_classes != 1:
        raise DimensionError(f"the Hamiltonian is defined for one class, got {x.n_classes}")
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise ValidationError(f"u and v must lie in [0, 1], got {u}, {v}")
    p1, p2 = costate
    return float(hamiltonian_array(x.i[0], x.r[0], p1, p2, u, v, params))
