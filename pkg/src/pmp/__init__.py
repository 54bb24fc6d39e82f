"""
Maximum-principle machinery for the single-class problem
Hamiltonian, co-states, switching functions, forward-backward sweep and structural checks
"""

from .hamiltonian import hamiltonian, costate_rhs, switching_functions
from .costate import (
    CostateTrajectory,
    costate_sweep,
    extract_controls,
    switching_times,
    count_sign_changes,
)
from .sweep import FBSResult, fbs_solve
from .lemmas import LemmaTolerances, LemmaReport, control_segments, verify_lemmas

__all__ = [
    'hamiltonian',
    'costate_rhs',
    'switching_functions',
    'CostateTrajectory',
    'costate_sweep',
    'extract_controls',
    'switching_times',
    'count_sign_changes',
    'FBSResult',
    'fbs_solve',
    'LemmaTolerances',
    'LemmaReport',
    'control_segments',
    'verify_lemmas',
]
