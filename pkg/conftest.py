"""
Shared fixtures; puts the project root on sys.path so `src` imports work
"""

import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.model.network import balance_complete  # noqa: E402
from src.model.types import ClassNetwork, ControlSchedule, ModelParams, StateVector  # noqa: E402


@pytest.fixture
def base_params() -> ModelParams:
    return ModelParams.base()


@pytest.fixture
def regular() -> ClassNetwork:
    return ClassNetwork.regular(1)


@pytest.fixture
def x0() -> StateVector:
    return StateVector.uniform(1)


@pytest.fixture
def disassortative() -> ClassNetwork:
    return balance_complete([10, 2], [0.1, 0.9], 0.9)


@pytest.fixture
def assortative() -> ClassNetwork:
    return balance_complete([10, 2], [0.1, 0.9], 0.1)


@pytest.fixture
def off_schedule(base_params) -> ControlSchedule:
    return ControlSchedule.constant(1, base_params.horizon, 0.1)


@pytest.fixture
def on_schedule(base_params) -> ControlSchedule:
    return ControlSchedule.constant(1, base_params.horizon, 0.1, 1.0, 1.0)
