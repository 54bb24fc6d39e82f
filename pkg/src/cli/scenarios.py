"""
Named scenarios: the base campaign, its pay-out and rate variants,
two-class correlated networks and a start with existing market presence
"""

import logging
from typing import Callable, Dict, List

import pandas as pd

from src.cli.config_loader import ScenarioConfig
from src.utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


def _base(**changes) -> ScenarioConfig:
    data = {"name": "base", "description": "alpha=0.08, beta=0.1, c=0.25, c'=0.3, i(0)=1"}
    data.update(changes)
    return ScenarioConfig.model_validate(data)


def _model(**values) -> Dict[str, float]:
    return ScenarioConfig().model.model_copy(update=values).model_dump()


def _two_class(p_b_given_a: float, name: str, description: str) -> ScenarioConfig:
    # referral program only: eps2=0 leaves the direct switching signal negative
    return _base(
        name=name,
        description=description,
        model=_model(alpha=0.1, delta=0.1, beta=0.1, gamma=0.15, eps1=0.08, eps2=0.0,
                     cost_referral=0.25, cost_direct=0.3),
        network={"degrees": [10, 2], "weights": [0.1, 0.9], "p_b_given_a": p_b_given_a},
    )


SCENARIOS: Dict[str, Callable[[], ScenarioConfig]] = {
    "base": lambda: _base(),
    "fig2-beta013": lambda: _base(
        name="fig2-beta013", description="stronger word of mouth, beta=0.13",
        model=_model(beta=0.13)),
    "fig3-alpha009": lambda: _base(
        name="fig3-alpha009", description="stronger external pull, alpha=0.09",
        model=_model(alpha=0.09)),
    "fig4-payouts": lambda: _base(
        name="fig4-payouts", description="pay-outs c=0.3, c'=0.3",
        model=_model(cost_referral=0.3, cost_direct=0.3)),
    "fig5-payouts": lambda: _base(
        name="fig5-payouts", description="pay-outs c=0.25, c'=0.35",
        model=_model(cost_referral=0.25, cost_direct=0.35)),
    "fig6-disassortative": lambda: _two_class(
        0.9, "fig6-disassortative", "hubs (k=10, 10%) linking mostly to leaves (k=2), P(B|A)=0.9"),
    "fig7-assortative": lambda: _two_class(
        0.1, "fig7-assortative", "hubs (k=10, 10%) linking mostly to hubs, P(B|A)=0.1"),
    "market-presence": lambda: _base(
        name="market-presence", description="both sellers already hold 5% of the market",
        initial={"i0": [0.9], "r0": [0.05], "theta0": [0.05]}),
}


def get_scenario(name: str) -> ScenarioConfig:
    """
    Look up a named scenario

    Args:
        name: One of SCENARIOS

    Returns:
        Fresh ScenarioConfig
    """
    if name not in SCENARIOS:
        raise ConfigError(f"Unknown scenario: {name}. Supported: {', '.join(SCENARIOS)}")
    return SCENARIOS[name]()


def scenario_names() -> List[str]:
    return list(SCENARIOS)


def list_scenarios() -> pd.DataFrame:
    """One row per named scenario with its model parameters and network"""
    rows = []
    for name in SCENARIOS:
        config = get_scenario(name)
        row = {"name": name}
        row.update(config.model.model_dump())
        row["degrees"] = " ".join(str(k) for k in config.network.degrees)
        row["weights"] = " ".join(str(w) for w in config.network.weights)
        row["p_b_given_a"] = config.network.p_b_given_a
        row["i0"] = " ".join(str(x) for x in config.initial.i0)
        row["description"] = config.description
        rows.append(row)
    return pd.DataFrame(rows)
