"""
Optimizer result container and its CSV export
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.model.types import ControlSchedule, SwitchTimes
from src.optimize.strategy import StrategyLabel
from src.utils.io import write_csv


@dataclass
class OptimizationResult:
    """Best schedule of a multi-start run plus per-start profits and diagnostics"""

    solver: str
    schedule: ControlSchedule
    profit: float
    start_profits: np.ndarray
    best_start: int
    label: StrategyLabel
    status: str
    seed: int
    starts: int
    switch_times: Optional[SwitchTimes] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def schedule_frame(self) -> pd.DataFrame:
        """Control grid export: t, then u_k, v_k per class"""
        columns = {"t": self.schedule.times()}
        for k in range(self.schedule.n_classes):
            columns[f"u_{k + 1}"] = self.schedule.u[:, k]
            columns[f"v_{k + 1}"] = self.schedule.v[:, k]
        return pd.DataFrame(columns)

    def summary(self) -> Dict[str, Any]:
        out = {
            "solver": self.solver,
            "profit": f"{self.profit:.12g}",
            "label": str(self.label),
            "status": self.status,
            "starts": self.starts,
            "best_start": self.best_start,
            "seed": self.seed,
        }
        if self.switch_times is not None:
            out["taus"] = " ".join(f"{tau:.6g}" for tau in self.switch_times.flat())
        for key in ("interior_fraction", "rounding_loss", "rounding_flagged", "iterations"):
            if key in self.diagnostics:
                out[key] = self.diagnostics[key]
        return out

    def summary_line(self) -> str:
        return " ".join(f"{key}={value}" for key, value in self.summary().items())

    def write_csv(self, path: Path) -> Path:
        return write_csv(self.schedule_frame(), path, self.summary())
