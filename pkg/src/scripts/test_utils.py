"""
Tests: configuration, exit codes, CSV helpers and logging setup
"""

import logging

import pandas as pd
import pytest

from src.utils.config import Config
from src.utils.exceptions import (
    AcceptanceFailure,
    ConfigError,
    DimensionError,
    GraphConstructionError,
    IncentiveError,
    InfeasibleMixingError,
    IntegrationError,
    SolverError,
    ValidationError,
)
from src.utils.io import read_csv, write_csv
from src.utils.logging_setup import progress_enabled, setup_logging


def test_derived_seeds_are_stable_and_distinct():
    seeds = {tag: Config.derive_seed(42, tag) for tag in Config.SEED_TAGS}
    assert len(set(seeds.values())) == len(Config.SEED_TAGS)
    assert Config.derive_seed(42, "nlp") == seeds["nlp"]
    assert Config.derive_seed(43, "nlp") == seeds["nlp"] + 1
    with pytest.raises(ValueError, match="Unknown seed tag"):
        Config.derive_seed(42, "plots")


def test_default_grid_is_consistent():
    assert Config.validate()
    assert round(Config.CONTROL_DT / Config.DT) == 10


@pytest.mark.parametrize("error, code", [
    (ConfigError, 2),
    (ValidationError, 2),
    (DimensionError, 2),
    (InfeasibleMixingError, 2),
    (IntegrationError, 3),
    (GraphConstructionError, 3),
    (SolverError, 3),
    (AcceptanceFailure, 4),
])
def test_exit_codes(error, code):
    assert issubclass(error, IncentiveError)
    assert error.exit_code == code


def test_errors_keep_context():
    err = GraphConstructionError("no simple graph", realized={"edges": 3}, target={"sizes": [2]})
    assert err.realized == {"edges": 3}
    assert IntegrationError("off simplex", time=2.5).time == 2.5


class TestCsv:
    def test_comments_then_header(self, tmp_path):
        frame = pd.DataFrame({"t": [0.0, 0.1], "r_1": [1.0 / 3.0, 2.0 / 3.0]})
        path = write_csv(frame, tmp_path / "nested" / "out.csv", {"seed": 42, "solver": "nlp"})
        lines = path.read_text().splitlines()
        assert lines == ["# seed=42", "# solver=nlp", "t,r_1", "0,0.333333333333", "0.1,0.666666666667"]

    def test_read_back(self, tmp_path):
        frame = pd.DataFrame({"t": [0.0, 0.5], "label": ["none", "always-on"]})
        back = read_csv(write_csv(frame, tmp_path / "out.csv", {"seed": 1}))
        assert back["label"].tolist() == ["none", "always-on"]
        assert back["t"].tolist() == [0.0, 0.5]


class TestLogging:
    def test_levels(self):
        setup_logging("warning")
        assert not progress_enabled()
        setup_logging("DEBUG")
        assert progress_enabled()
        assert len(logging.getLogger().handlers) == 1

    def test_unknown_level(self):
        with pytest.raises(ValueError, match="Unknown log level"):
            setup_logging("LOUD")
