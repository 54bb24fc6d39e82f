"""
Shared utilities: configuration, errors, logging and CSV output
"""

from .config import Config
from .exceptions import (
    IncentiveError,
    ConfigError,
    ValidationError,
    DimensionError,
    InfeasibleMixingError,
    IntegrationError,
    GraphConstructionError,
    SolverError,
    AcceptanceFailure,
)

__all__ = [
    'Config',
    'IncentiveError',
    'ConfigError',
    'ValidationError',
    'DimensionError',
    'InfeasibleMixingError',
    'IntegrationError',
    'GraphConstructionError',
    'SolverError',
    'AcceptanceFailure',
]
