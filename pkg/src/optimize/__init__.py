"""
Direct optimizers over program schedules and the strategy classifier
"""

from .strategy import (
    StrategyLabel,
    ProgramShape,
    classify,
    classify_classes,
    classify_pair,
    on_intervals,
    program_shape,
    targeting_report,
)
from .result import OptimizationResult
from .gradient import GradientCheck, check_gradient, objective_and_gradient
from .nlp import nlp_solve
from .switch_times import optimize_switch_times
from .crosscheck import CrosscheckReport, crosscheck

__all__ = [
    'StrategyLabel',
    'ProgramShape',
    'classify',
    'classify_classes',
    'classify_pair',
    'on_intervals',
    'program_shape',
    'targeting_report',
    'OptimizationResult',
    'GradientCheck',
    'check_gradient',
    'objective_and_gradient',
    'nlp_solve',
    'optimize_switch_times',
    'CrosscheckReport',
    'crosscheck',
]
