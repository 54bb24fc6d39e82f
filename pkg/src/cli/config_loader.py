"""
Scenario configuration: pydantic schema and INI loader
Unknown sections and keys are rejected so a typo never runs silently
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError
from pydantic import field_validator, model_validator

from src.model.network import balance_complete
from src.model.types import ClassNetwork, ModelParams, StateVector
from src.utils.config import Config
from src.utils.exceptions import ConfigError, IncentiveError

logger = logging.getLogger(__name__)

SolverName = Literal["auto", "fbs", "switch", "nlp", "crosscheck"]


class ModelBlock(BaseModel):
    """Rates, boosts, pay-outs and horizon"""

    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=0.08, ge=0, le=1, description="External purchase rate, seller")
    beta: float = Field(default=0.1, ge=0, le=1, description="Social-influence purchase rate, seller")
    gamma: float = Field(default=0.1, ge=0, le=1, description="Social-influence rate, competitor")
    delta: float = Field(default=0.1, ge=0, le=1, description="External rate, competitor")
    eps1: float = Field(default=0.05, ge=0, le=1, description="Boost of the referral program")
    eps2: float = Field(default=0.05, ge=0, le=1, description="Boost of direct incentives")
    cost_referral: float = Field(default=0.25, ge=0, description="Pay-out per referral conversion (c)")
    cost_direct: float = Field(default=0.3, ge=0, description="Pay-out per incentivized purchase (c')")
    horizon: float = Field(default=Config.HORIZON, gt=0, description="Campaign length T")

    def to_params(self) -> ModelParams:
        return ModelParams(**self.model_dump())


class NetworkBlock(BaseModel):
    """Degree classes: full mixing rows, or two classes with P(B|A)"""

    model_config = ConfigDict(extra="forbid")

    degrees: List[int] = Field(default=[1], min_length=1)
    weights: List[float] = Field(default=[1.0], min_length=1)
    mixing: Optional[List[List[float]]] = None
    p_b_given_a: Optional[float] = Field(default=None, ge=0, le=1)

    @model_validator(mode="after")
    def check_shape(self) -> "NetworkBlock":
        if len(self.degrees) != len(self.weights):
            raise ValueError(f"{len(self.degrees)} degrees but {len(self.weights)} weights")
        if self.mixing is not None and self.p_b_given_a is not None:
            raise ValueError("give either mixing or p_b_given_a, not both")
        if self.p_b_given_a is not None and len(self.degrees) != 2:
            raise ValueError("p_b_given_a needs exactly two classes")
        if self.mixing is None and self.p_b_given_a is None and len(self.degrees) != 1:
            raise ValueError("several classes need mixing rows or p_b_given_a")
        return self

    def to_network(self) -> ClassNetwork:
        if self.p_b_given_a is not None:
            return balance_complete(self.degrees, self.weights, self.p_b_given_a)
        mixing = self.mixing if self.mixing is not None else [[1.0]]
        return ClassNetwork(degrees=tuple(self.degrees), weights=self.weights, mixing=mixing)


class InitialBlock(BaseModel):
    """Initial fractions; a single value applies to every class"""

    model_config = ConfigDict(extra="forbid")

    i0: List[float] = Field(default=[1.0], min_length=1)
    r0: List[float] = Field(default=[0.0], min_length=1)
    theta0: List[float] = Field(default=[0.0], min_length=1)

    def to_state(self, n_classes: int) -> StateVector:
        def per_class(values: List[float], name: str) -> List[float]:
            if len(values) == 1:
                return values * n_classes
            if len(values) != n_classes:
                raise ConfigError(f"{name} has {len(values)} values for {n_classes} classes")
            return values

        return StateVector(
            i=per_class(self.i0, "i0"),
            r=per_class(self.r0, "r0"),
            theta=per_class(self.theta0, "theta0"),
        )


class SolverBlock(BaseModel):
    """Grid, starts, seed and solver choice"""

    model_config = ConfigDict(extra="forbid")

    dt: float = Field(default=Config.DT, gt=0)
    control_dt: float = Field(default=Config.CONTROL_DT, gt=0)
    nlp_starts: int = Field(default=Config.NLP_STARTS, ge=1)
    switch_starts: int = Field(default=Config.SWITCH_STARTS, ge=1)
    seed: int = Field(default=Config.SEED, ge=0)
    solver: SolverName = "auto"

    @field_validator("dt")
    @classmethod
    def dt_small(cls, value: float) -> float:
        if value > 1.0:
            raise ValueError(f"dt {value} is larger than one time unit")
        return value


class ScenarioConfig(BaseModel):
    """Complete description of one experiment"""

    model_config = ConfigDict(extra="forbid")

    name: str = "custom"
    description: str = ""
    model: ModelBlock = Field(default_factory=ModelBlock)
    network: NetworkBlock = Field(default_factory=NetworkBlock)
    initial: InitialBlock = Field(default_factory=InitialBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)

    def params(self) -> ModelParams:
        return self.model.to_params()

    def net(self) -> ClassNetwork:
        return self.network.to_network()

    def initial_state(self) -> StateVector:
        return self.initial.to_state(len(self.network.degrees))

    def build(self):
        """(x0, network, params), with every type invariant checked"""
        try:
            net = self.net()
            return self.initial_state(), net, self.params()
        except IncentiveError as exc:
            raise ConfigError(f"scenario '{self.name}': {exc}") from exc

    def with_value(self, parameter: str, value: Any) -> "ScenarioConfig":
        """Copy with one scalar field changed; `alpha` or `model.alpha` both work"""
        block, field = _locate(parameter)
        data = self.model_dump()
        current = data[block].get(field)
        if isinstance(current, list):
            raise ConfigError(f"'{parameter}' is not a scalar field")
        data[block][field] = value
        return _validate(data, f"{parameter}={value}")

    def with_solver(self, **changes) -> "ScenarioConfig":
        data = self.model_dump()
        data["solver"].update({key: value for key, value in changes.items() if value is not None})
        return _validate(data, "command-line overrides")


_BLOCKS = {
    "model": ModelBlock,
    "network": NetworkBlock,
    "initial": InitialBlock,
    "solver": SolverBlock,
}


def _locate(parameter: str):
    if "." in parameter:
        block, field = parameter.split(".", 1)
        if block not in _BLOCKS or field not in _BLOCKS[block].model_fields:
            raise ConfigError(f"unknown parameter '{parameter}'")
        return block, field
    matches = [block for block, schema in _BLOCKS.items() if parameter in schema.model_fields]
    if not matches:
        raise ConfigError(f"unknown parameter '{parameter}'")
    return matches[0], parameter


def _validate(data: Dict[str, Any], source: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except PydanticValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigError(f"invalid configuration ({source}): {problems}") from exc


_LIST_KEYS = {"degrees", "weights", "i0", "r0", "theta0"}


def _parse_value(key: str, raw: str) -> Union[str, List]:
    raw = raw.strip()
    if key == "mixing":
        return [[item.strip() for item in row.split(",") if item.strip()]
                for row in raw.split(";") if row.strip()]
    if key in _LIST_KEYS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def parse_ini(text: str, source: str = "<string>") -> ScenarioConfig:
    """
    Parse INI text into a validated ScenarioConfig

    Sections: [scenario] (name, description), [model], [network], [initial],
    [solver]. Lists are comma separated; mixing rows are separated by ';'.

    Args:
        text: INI content
        source: Name used in error messages

    Returns:
        ScenarioConfig with defaults for everything omitted
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc

    data: Dict[str, Any] = {}
    for section in parser.sections():
        values = dict(parser.items(section))
        if section == "scenario":
            unknown = set(values) - {"name", "description"}
            if unknown:
                raise ConfigError(f"{source}: unknown keys in [scenario]: {sorted(unknown)}")
            data.update(values)
        elif section in _BLOCKS:
            data[section] = {key: _parse_value(key, raw) for key, raw in values.items()}
        else:
            raise ConfigError(f"{source}: unknown section [{section}]")

    config = _validate(data, source)
    config.build()
    return config


def load_config(path: Path) -> ScenarioConfig:
    """Read and validate a scenario file; bare names are also looked up in Config.SCENARIO_DIR"""
    path = Path(path)
    if not path.is_file() and (Config.SCENARIO_DIR / path).is_file():
        path = Config.SCENARIO_DIR / path
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    logger.info("Loading scenario from %s", path)
    config = parse_ini(path.read_text(encoding="utf-8"), str(path))
    if config.name == "custom":
        config = config.model_copy(update={"name": path.stem})
    return config


def to_ini(config: ScenarioConfig) -> str:
    """INI text that parse_ini reads back into the same configuration"""
    lines = ["[scenario]", f"name = {config.name}"]
    if config.description:
        lines.append(f"description = {config.description}")
    for block in _BLOCKS:
        lines.append("")
        lines.append(f"[{block}]")
        for key, value in getattr(config, block).model_dump().items():
            if value is None:
                continue
            if key == "mixing":
                text = "; ".join(", ".join(repr(float(x)) for x in row) for row in value)
            elif isinstance(value, list):
                text = ", ".join(str(x) for x in value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
