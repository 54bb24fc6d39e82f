"""
Numerical checks of the structural results on a converged sweep
Every check reports its worst violation; the report never raises
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from src.integrate.rk4 import Trajectory
from src.model.types import ModelParams, grid_count
from src.pmp.costate import CostateTrajectory, count_sign_changes, interval_samples


@dataclass(frozen=True)
class LemmaTolerances:
    """Tolerances for the structural checks"""

    h_constancy: float = 1e-3       # relative spread of H
    costate: float = 1e-9           # slack on p1, p2 > 0 and p2 > p1
    zeta: float = 1e-9              # slack on zeta decreasing
    max_sign_changes: int = 2
    switching: float = 1e-9         # |phi|, |psi| below this are treated as ties
    sign_zero: float = 1e-12


@dataclass
class LemmaCheck:
    name: str
    passed: bool
    worst: float
    time: Optional[float] = None
    detail: str = ""


@dataclass
class LemmaReport:
    """Outcome of every structural check"""

    checks: List[LemmaCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[LemmaCheck]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> LemmaCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(check) for check in self.checks])


def control_segments(u: np.ndarray, v: np.ndarray) -> List[slice]:
    """Maximal runs of grid points on which both controls keep their value"""
    change = np.nonzero((np.diff(u) != 0) | (np.diff(v) != 0))[0] + 1
    bounds = np.concatenate(([0], change, [u.shape[0]]))
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _worst(values: np.ndarray, t: np.ndarray, smallest: bool = True):
    idx = int(np.argmin(values) if smallest else np.argmax(values))
    return float(values[idx]), float(t[idx])


def verify_lemmas(
        traj: Trajectory,
        cs: CostateTrajectory,
        params: ModelParams,
        tolerances: LemmaTolerances = LemmaTolerances()
) -> LemmaReport:
    """
    Check positivity of H and its constancy between control switches, co-state
    signs and ordering, monotone zeta, switching-function sign counts and
    consistency of the controls with them

    Args:
        traj: State trajectory of the converged sweep
        cs: Its co-state trajectory
        params: Model parameters
        tolerances: Check tolerances

    Returns:
        LemmaReport with one entry per check
    """
    report = LemmaReport()
    t = cs.t
    H = cs.H

    value, when = _worst(H, t)
    report.checks.append(LemmaCheck("hamiltonian_positive", value > 0, value, when))

    # H jumps where the grid control switches away from a zero of phi or psi;
    # between switches it must stay constant
    segments = control_segments(traj.u[:, 0], traj.v[:, 0])
    spread = np.empty_like(H)
    means = []
    for part in segments:
        mean = float(np.mean(H[part]))
        means.append(mean)
        spread[part] = np.abs(H[part] - mean) / abs(mean) if mean != 0 else np.inf
    value, when = _worst(spread, t, smallest=False)
    report.checks.append(LemmaCheck(
        "hamiltonian_constant", value < tolerances.h_constancy, value, when,
        f"{len(segments)} constant-control segments, mean H {min(means):.6g} to {max(means):.6g}, "
        f"tolerance {tolerances.h_constancy:g}",
    ))

    interior = slice(0, -1)
    p_min = np.minimum(cs.p1[interior], cs.p2[interior])
    value, when = _worst(p_min, t[interior])
    report.checks.append(LemmaCheck("costates_positive", value > -tolerances.costate, value, when))

    value, when = _worst(cs.p2 - cs.p1, t)
    report.checks.append(LemmaCheck("p2_exceeds_p1", value > -tolerances.costate, value, when))

    terminal_ok = cs.p1[-1] == 0.0 and cs.p2[-1] == 1.0
    report.checks.append(LemmaCheck(
        "terminal_condition", terminal_ok, float(abs(cs.p1[-1]) + abs(cs.p2[-1] - 1.0)), float(t[-1]),
    ))

    steps = np.diff(cs.zeta)
    value, when = _worst(steps, t[1:], smallest=False)
    report.checks.append(LemmaCheck("zeta_decreasing", value < tolerances.zeta, value, when))

    for name, signal in (("phi", cs.phi), ("psi", cs.psi)):
        changes = count_sign_changes(signal, tolerances.sign_zero)
        report.checks.append(LemmaCheck(
            f"{name}_sign_changes", changes <= tolerances.max_sign_changes, float(changes), None,
            f"at most {tolerances.max_sign_changes} allowed",
        ))

    # controls must follow the sign of the switching functions where it is clear
    per_cell = grid_count(cs.control_dt, cs.dt, "dt")
    cell_t = interval_samples(t, per_cell)
    for name, signal, applied in (("u", cs.phi, traj.u[:-1:per_cell, 0]),
                                  ("v", cs.psi, traj.v[:-1:per_cell, 0])):
        samples = interval_samples(signal, per_cell)
        clear = np.abs(samples) > tolerances.switching
        wrong = clear & ((samples > 0) != (applied > 0.5))
        count = int(np.count_nonzero(wrong))
        when = float(cell_t[np.nonzero(wrong)[0][0]]) if count else None
        report.checks.append(LemmaCheck(
            f"{name}_matches_switching", count == 0, float(count), when,
            "intervals where the control disagrees with the switching sign",
        ))

    return report
