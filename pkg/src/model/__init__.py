"""
Mean-field model of competitive product diffusion under two incentive programs
"""

from .types import (
    ModelParams,
    ClassNetwork,
    StateVector,
    ControlSchedule,
    SwitchTimes,
    grid_count,
    switch_coverage,
)
from .dynamics import drift, cost_rate, drift_array, cost_rates_array, augmented_rhs, augmented_vjp
from .network import balance_complete

__all__ = [
    'ModelParams',
    'ClassNetwork',
    'StateVector',
    'ControlSchedule',
    'SwitchTimes',
    'grid_count',
    'switch_coverage',
    'drift',
    'cost_rate',
    'drift_array',
    'cost_rates_array',
    'augmented_rhs',
    'augmented_vjp',
    'balance_complete',
]
