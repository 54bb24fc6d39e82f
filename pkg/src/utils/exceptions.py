"""
Exception hierarchy for the incentive timing toolkit
Every error carries the CLI exit code of its category
"""

from typing import Dict, Optional


class IncentiveError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1


class ConfigError(IncentiveError):
    """Malformed scenario configuration, unknown scenario or unknown key"""

    exit_code = 2


class ValidationError(IncentiveError):
    """Input violates a type invariant (simplex, bounds, row sums, ...)"""

    exit_code = 2


class DimensionError(ValidationError):
    """State, network and controls disagree on the number of classes"""


class InfeasibleMixingError(ValidationError):
    """Balance completion produced a conditional probability outside [0, 1]"""


class IntegrationError(IncentiveError):
    """Integrated state drifted off the simplex"""

    exit_code = 3

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class GraphConstructionError(IncentiveError):
    """Stub matching could not produce a simple graph within the repair budget"""

    exit_code = 3

    def __init__(self, message: str, realized: Optional[Dict] = None, target: Optional[Dict] = None):
        super().__init__(message)
        self.realized = realized
        self.target = target


class SolverError(IncentiveError):
    """Solver finished without a usable answer (or strict mode saw non-convergence)"""

    exit_code = 3


class AcceptanceFailure(IncentiveError):
    """One or more acceptance checks failed"""

    exit_code = 4
