"""
Two-class correlated networks completed from the link balance equation
"""

from typing import Sequence

import numpy as np

from src.model.types import ClassNetwork
from src.utils.exceptions import DimensionError, InfeasibleMixingError


def balance_complete(
        degrees: Sequence[int],
        weights: Sequence[float],
        p_b_given_a: float
) -> ClassNetwork:
    """
    Build the full mixing matrix of a two-class network from one conditional

    Links from A to B must match links from B to A:
    k_A P(B|A) P(A) = k_B P(A|B) P(B).

    Args:
        degrees: (k_A, k_B)
        weights: (P(A), P(B))
        p_b_given_a: Probability that a link from an A node reaches a B node

    Returns:
        ClassNetwork with rows [P(A|A), P(B|A)] and [P(A|B), P(B|B)]
    """
    if len(degrees) != 2 or len(weights) != 2:
        raise DimensionError(f"balance completion needs exactly two classes, got {len(degrees)}")

    k_a, k_b = (int(k) for k in degrees)
    p_a, p_b = (float(w) for w in weights)
    if not 0.0 <= p_b_given_a <= 1.0:
        raise InfeasibleMixingError(f"P(B|A) must lie in [0, 1], got {p_b_given_a}")
    if k_b <= 0 or p_b <= 0:
        raise InfeasibleMixingError("class B needs a positive degree and weight")

    p_a_given_b = k_a * p_b_given_a * p_a / (k_b * p_b)
    if not 0.0 <= p_a_given_b <= 1.0:
        raise InfeasibleMixingError(
            f"balance equation gives P(A|B) = {p_a_given_b:.6g}, outside [0, 1]"
        )

    mixing = np.array([
        [1.0 - p_b_given_a, p_b_given_a],
        [p_a_given_b, 1.0 - p_a_given_b],
    ])
    return ClassNetwork(degrees=(k_a, k_b), weights=[p_a, p_b], mixing=mixing)
