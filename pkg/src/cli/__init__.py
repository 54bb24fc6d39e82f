"""
Command-line surface
Scenario configuration, named scenarios, runs, sweeps and the acceptance suite
"""

from .config_loader import ScenarioConfig, load_config, parse_ini, to_ini
from .scenarios import SCENARIOS, get_scenario, list_scenarios
from .runner import ScenarioOutput, run_scenario, sweep, sweep2d
from .validate import ValidationReport, validate

__all__ = [
    'ScenarioConfig',
    'load_config',
    'parse_ini',
    'to_ini',
    'SCENARIOS',
    'get_scenario',
    'list_scenarios',
    'ScenarioOutput',
    'run_scenario',
    'sweep',
    'sweep2d',
    'ValidationReport',
    'validate',
]
