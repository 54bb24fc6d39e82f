"""
Trajectory integration and the profit objective
"""

from .rk4 import Trajectory, integrate, profit, evaluate_profits, rk4_batch, step_counts

__all__ = ['Trajectory', 'integrate', 'profit', 'evaluate_profits', 'rk4_batch', 'step_counts']
