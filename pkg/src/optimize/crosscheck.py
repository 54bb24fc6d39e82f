"""
Three-way agreement check on a single-class instance:
forward-backward sweep, switching-time search and direct transcription
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

import pandas as pd

from src.model.types import ClassNetwork, ControlSchedule, ModelParams, StateVector
from src.optimize.nlp import nlp_solve
from src.optimize.result import OptimizationResult
from src.optimize.strategy import StrategyLabel, classify
from src.optimize.switch_times import optimize_switch_times
from src.pmp.sweep import FBSResult, fbs_solve
from src.utils.config import Config
from src.utils.exceptions import DimensionError
from src.utils.io import write_csv

logger = logging.getLogger(__name__)


@dataclass
class CrosscheckReport:
    """Profits and labels of the three solvers and whether they agree"""

    table: pd.DataFrame
    schedules: Dict[str, ControlSchedule]
    fbs: FBSResult
    switch: OptimizationResult
    nlp: OptimizationResult
    max_gap: float
    profit_tol: float
    labels_agree: bool

    @property
    def profits_agree(self) -> bool:
        return self.max_gap <= self.profit_tol

    @property
    def passed(self) -> bool:
        return self.profits_agree and self.labels_agree

    @property
    def label(self) -> StrategyLabel:
        return StrategyLabel(self.table["label"].iloc[0])

    def schedule_frame(self) -> pd.DataFrame:
        """All three schedules side by side on the control grid"""
        first = next(iter(self.schedules.values()))
        columns = {"t": first.times()}
        for name, sched in self.schedules.items():
            columns[f"u_{name}"] = sched.u[:, 0]
            columns[f"v_{name}"] = sched.v[:, 0]
        return pd.DataFrame(columns)

    def write_csv(self, path: Path) -> Path:
        return write_csv(self.table, path, {"max_gap": f"{self.max_gap:.6g}", "passed": self.passed})

    def dump(self) -> str:
        return "\n".join([
            self.table.to_string(index=False),
            self.schedule_frame().to_string(index=False),
        ])


def crosscheck(
        x0: StateVector,
        net: ClassNetwork,
        params: ModelParams,
        seed: int = Config.SEED,
        nlp_starts: int = Config.NLP_STARTS,
        switch_starts: int = Config.SWITCH_STARTS,
        dt: float = Config.DT,
        control_dt: float = Config.CONTROL_DT,
        profit_tol: float = 1e-3
) -> CrosscheckReport:
    """
    Run all three solvers and compare their profits and strategy labels

    Args:
        x0: Single-class initial state
        net: Regular network
        params: Model parameters
        seed: Scenario seed
        nlp_starts: Starts for the direct transcription
        switch_starts: Starts for the switching-time search
        dt, control_dt: Grid
        profit_tol: Largest allowed pairwise profit gap

    Returns:
        CrosscheckReport (a disagreement is logged with every schedule, not raised)
    """
    if net.n_classes != 1:
        raise DimensionError("the three-way check needs a single-class (regular) network")

    fbs = fbs_solve(x0, net, params, dt=dt, control_dt=control_dt)
    switch = optimize_switch_times(x0, net, params, starts=switch_starts, seed=seed, dt=dt, control_dt=control_dt)
    nlp = nlp_solve(x0, net, params, starts=nlp_starts, seed=seed, dt=dt, control_dt=control_dt)

    rows = [
        {"solver": "fbs", "profit": fbs.profit, "label": str(classify(fbs.schedule, control_dt)),
         "status": fbs.status},
        {"solver": "switch-opt", "profit": switch.profit, "label": str(switch.label), "status": switch.status},
        {"solver": "nlp", "profit": nlp.profit, "label": str(nlp.label), "status": nlp.status},
    ]
    table = pd.DataFrame(rows)
    max_gap = float(table["profit"].max() - table["profit"].min())
    labels_agree = table["label"].nunique() == 1

    report = CrosscheckReport(
        table=table,
        schedules={"fbs": fbs.schedule, "switch": switch.schedule, "nlp": nlp.schedule},
        fbs=fbs,
        switch=switch,
        nlp=nlp,
        max_gap=max_gap,
        profit_tol=profit_tol,
        labels_agree=labels_agree,
    )
    if report.passed:
        logger.info("Solvers agree: label %s, max profit gap %.3g", table["label"].iloc[0], max_gap)
    else:
        logger.error("Solvers disagree (max profit gap %.3g, labels %s)\n%s",
                     max_gap, table["label"].tolist(), report.dump())
    return report
