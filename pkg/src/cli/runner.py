"""
Scenario orchestration: solve one configuration and write its CSV bundle,
or sweep one parameter (or the pay-out grid) through the configured solver
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.cli.config_loader import ScenarioConfig, to_ini
from src.integrate.rk4 import Trajectory, integrate
from src.model.types import ControlSchedule
from src.optimize.crosscheck import CrosscheckReport, crosscheck
from src.optimize.nlp import nlp_solve
from src.optimize.result import OptimizationResult
from src.optimize.strategy import StrategyLabel, classify, program_shape, targeting_report
from src.optimize.switch_times import optimize_switch_times
from src.pmp.costate import CostateTrajectory, costate_sweep
from src.pmp.lemmas import LemmaReport, verify_lemmas
from src.pmp.sweep import FBSResult, fbs_solve
from src.utils.config import Config
from src.utils.exceptions import ConfigError, SolverError
from src.utils.io import write_csv
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

# statuses that count as a usable optimum
_SETTLED = ("converged", "baseline")


def resolve_solver(config: ScenarioConfig, purpose: str = "scenario") -> str:
    """
    Concrete solver for a configuration

    'auto' runs all three solvers on a single class and the direct
    transcription on several; sweeps use the switching-time search on a
    single class since it is the cheapest reliable one there.
    """
    n_classes = len(config.network.degrees)
    solver = config.solver.solver
    if solver == "auto":
        if n_classes > 1:
            return "nlp"
        return "switch" if purpose == "sweep" else "crosscheck"
    if solver in ("fbs", "crosscheck") and n_classes > 1:
        raise ConfigError(f"solver '{solver}' needs a single-class network, got {n_classes} classes")
    return solver


def schedule_frame(sched: ControlSchedule) -> pd.DataFrame:
    columns = {"t": sched.times()}
    for k in range(sched.n_classes):
        columns[f"u_{k + 1}"] = sched.u[:, k]
        columns[f"v_{k + 1}"] = sched.v[:, k]
    return pd.DataFrame(columns)


def class_shapes(sched: ControlSchedule) -> List[str]:
    """'u:<shape>/v:<shape>' per class, read on the rounded schedule"""
    binary = sched.rounded()
    return [f"u:{program_shape(binary.u[:, k])}/v:{program_shape(binary.v[:, k])}"
            for k in range(binary.n_classes)]


@dataclass
class ScenarioOutput:
    """What one scenario run produced"""

    name: str
    solver: str
    profit: float
    label: StrategyLabel
    status: str
    schedule: ControlSchedule
    trajectory: Trajectory
    seed: int
    files: Dict[str, Path] = field(default_factory=dict)
    shapes: List[str] = field(default_factory=list)
    costates: Optional[CostateTrajectory] = None
    lemmas: Optional[LemmaReport] = None
    crosscheck: Optional[CrosscheckReport] = None
    result: Optional[OptimizationResult] = None
    fbs: Optional[FBSResult] = None

    @property
    def settled(self) -> bool:
        return self.status in _SETTLED

    def summary_line(self) -> str:
        parts = [
            f"scenario={self.name}",
            f"solver={self.solver}",
            f"profit={self.profit:.12g}",
            f"label={self.label}",
            f"status={self.status}",
            f"seed={self.seed}",
        ]
        if len(self.shapes) > 1:
            parts.append("classes=" + ",".join(self.shapes))
        return " ".join(parts)


def run_scenario(config: ScenarioConfig, out_dir: Path, strict: bool = False) -> ScenarioOutput:
    """
    Solve one scenario and write its outputs

    Files written to out_dir: scenario.ini, trajectory.csv, schedule.csv,
    summary.txt; costate.csv and lemmas.csv on a single class;
    crosscheck.csv and schedules.csv for the three-way run; targeting.csv
    for the direct optimizers.

    Args:
        config: Validated scenario
        out_dir: Output directory (created)
        strict: Raise SolverError when the answer did not converge

    Returns:
        ScenarioOutput
    """
    x0, net, params = config.build()
    s = config.solver
    solver = resolve_solver(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Scenario %s: %d class(es), solver %s, seed %d", config.name, net.n_classes, solver, s.seed)

    files: Dict[str, Path] = {}
    (out_dir / "scenario.ini").write_text(to_ini(config), encoding="utf-8")
    files["config"] = out_dir / "scenario.ini"
    header = {"scenario": config.name, "solver": solver, "seed": s.seed}

    report = fbs = result = None
    costates = None
    if solver == "crosscheck":
        report = crosscheck(x0, net, params, seed=s.seed, nlp_starts=s.nlp_starts,
                            switch_starts=s.switch_starts, dt=s.dt, control_dt=s.control_dt)
        files["crosscheck"] = report.write_csv(out_dir / "crosscheck.csv")
        files["schedules"] = write_csv(report.schedule_frame(), out_dir / "schedules.csv", header)
        fbs = report.fbs
        best = int(report.table["profit"].to_numpy().argmax())
        value = float(report.table["profit"].iloc[best])
        label = report.label if report.labels_agree else classify(fbs.schedule, s.control_dt)
        status = "converged" if report.passed and fbs.converged else "disagreement"
        sched, traj, costates = fbs.schedule, fbs.trajectory, fbs.costates
    elif solver == "fbs":
        fbs = fbs_solve(x0, net, params, dt=s.dt, control_dt=s.control_dt)
        value, status = fbs.profit, fbs.status
        label = classify(fbs.schedule, s.control_dt)
        sched, traj, costates = fbs.schedule, fbs.trajectory, fbs.costates
    else:
        if solver == "switch":
            result = optimize_switch_times(x0, net, params, starts=s.switch_starts, seed=s.seed,
                                           dt=s.dt, control_dt=s.control_dt)
        else:
            result = nlp_solve(x0, net, params, starts=s.nlp_starts, seed=s.seed,
                               dt=s.dt, control_dt=s.control_dt)
        value, status, label, sched = result.profit, result.status, result.label, result.schedule
        traj = integrate(x0, sched, net, params, s.dt)
        if net.n_classes == 1:
            costates = costate_sweep(traj, sched, params)
        files["targeting"] = write_csv(targeting_report(traj, net, params), out_dir / "targeting.csv", header)

    files["trajectory"] = traj.write_csv(out_dir / "trajectory.csv", header)
    if result is not None:
        files["schedule"] = result.write_csv(out_dir / "schedule.csv")
    else:
        files["schedule"] = write_csv(schedule_frame(sched), out_dir / "schedule.csv",
                                      dict(header, profit=f"{value:.12g}", label=label))

    lemmas = None
    if costates is not None:
        files["costate"] = costates.write_csv(out_dir / "costate.csv", header)
        if fbs is not None:
            lemmas = verify_lemmas(fbs.trajectory, fbs.costates, params)
            files["lemmas"] = write_csv(lemmas.to_frame(), out_dir / "lemmas.csv", header)

    output = ScenarioOutput(
        name=config.name,
        solver=solver,
        profit=value,
        label=label,
        status=status,
        schedule=sched,
        trajectory=traj,
        seed=s.seed,
        files=files,
        shapes=class_shapes(sched),
        costates=costates,
        lemmas=lemmas,
        crosscheck=report,
        result=result,
        fbs=fbs,
    )
    summary = out_dir / "summary.txt"
    summary.write_text(output.summary_line() + "\n", encoding="utf-8")
    files["summary"] = summary

    if not output.settled:
        logger.warning("Scenario %s finished with status %s", config.name, status)
        if strict:
            raise SolverError(f"scenario '{config.name}': solver {solver} ended with status {status}")
    return output


def _solve_value(task: Tuple[ScenarioConfig, str, float]) -> Dict:
    config, parameter, value = task
    changed = config.with_value(parameter, value)
    x0, net, params = changed.build()
    s = changed.solver
    solver = resolve_solver(changed, purpose="sweep")
    if solver in ("fbs", "crosscheck"):
        fbs = fbs_solve(x0, net, params, dt=s.dt, control_dt=s.control_dt)
        return {"value": value, "profit": fbs.profit,
                "label": str(classify(fbs.schedule, s.control_dt)), "status": fbs.status}
    if solver == "switch":
        result = optimize_switch_times(x0, net, params, starts=s.switch_starts, seed=s.seed,
                                       dt=s.dt, control_dt=s.control_dt)
    else:
        result = nlp_solve(x0, net, params, starts=s.nlp_starts, seed=s.seed, dt=s.dt, control_dt=s.control_dt)
    return {"value": value, "profit": result.profit, "label": str(result.label), "status": result.status}


def _run_tasks(tasks: List[Tuple], desc: str, workers: int) -> List[Dict]:
    progress = dict(total=len(tasks), desc=desc, disable=not progress_enabled())
    if workers > 1 and len(tasks) > 1:
        with Pool(workers) as pool:
            return list(tqdm(pool.imap(_solve_value, tasks), **progress))
    return [_solve_value(task) for task in tqdm(tasks, **progress)]


def sweep(
        config: ScenarioConfig,
        parameter: str,
        values: Sequence[float],
        workers: int = Config.WORKERS
) -> pd.DataFrame:
    """
    Optimal profit and strategy label for each value of one scalar parameter

    Args:
        config: Scenario the sweep starts from
        parameter: Field name, e.g. 'cost_referral' or 'model.beta'
        values: Values to try (empty gives an empty table)
        workers: Process count (results do not depend on it)

    Returns:
        DataFrame with columns parameter, value, profit, label, status
    """
    columns = ["parameter", "value", "profit", "label", "status"]
    if len(values) == 0:
        return pd.DataFrame(columns=columns)
    # fail fast on a bad name before any solver runs
    config.with_value(parameter, values[0])

    tasks = [(config, parameter, value) for value in values]
    rows = _run_tasks(tasks, f"sweep {parameter}", workers)
    table = pd.DataFrame(rows)
    table.insert(0, "parameter", parameter)
    return table[columns]


def sweep2d(
        config: ScenarioConfig,
        referral_costs: Sequence[float],
        direct_costs: Sequence[float],
        workers: int = Config.WORKERS
) -> pd.DataFrame:
    """
    Profit and label over the (c, c') pay-out grid

    Returns:
        DataFrame with columns cost_referral, cost_direct, profit, label, status
    """
    columns = ["cost_referral", "cost_direct", "profit", "label", "status"]
    grid = [(float(c), float(c2)) for c in referral_costs for c2 in direct_costs]
    if not grid:
        return pd.DataFrame(columns=columns)

    tasks = [(config.with_value("cost_referral", c), "cost_direct", c2) for c, c2 in grid]
    rows = _run_tasks(tasks, "sweep2d", workers)
    table = pd.DataFrame(rows).rename(columns={"value": "cost_direct"})
    table.insert(0, "cost_referral", [c for c, _ in grid])
    return table[columns]


def monotone_in_cost(table: pd.DataFrame, tol: float = 1e-6) -> bool:
    """Optimal profit never rises as a pay-out grows (table sorted by value)"""
    ordered = table.sort_values("value")
    return bool(np.all(np.diff(ordered["profit"].to_numpy()) <= tol))
