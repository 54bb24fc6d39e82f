"""
Agent-based check of the mean-field model
Graph sampling, the slot-by-slot purchase chain and ODE comparison
"""

from .graph import AgentGraph, sample_graph, class_sizes
from .chain import ChainState, ChainRun, simulate_chain, initial_states
from .compare import ConvergenceReport, compare_abm_ode

__all__ = [
    'AgentGraph',
    'sample_graph',
    'class_sizes',
    'ChainState',
    'ChainRun',
    'simulate_chain',
    'initial_states',
    'ConvergenceReport',
    'compare_abm_ode',
]
