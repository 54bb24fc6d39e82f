"""
Discrete-time purchase chain on an agent graph

One slot picks one agent uniformly; N slots make one unit of model time,
so the per-slot drift is the mean-field drift divided by N.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from src.abm.graph import AgentGraph
from src.model.types import ControlSchedule, ModelParams, StateVector, grid_count
from src.utils.config import Config
from src.utils.exceptions import DimensionError, ValidationError
from src.utils.io import write_csv

logger = logging.getLogger(__name__)

POTENTIAL, CUSTOMER, COMPETITOR = 0, 1, -1


@dataclass
class ChainState:
    """Agent states plus program bookkeeping after some number of slots"""

    states: np.ndarray              # (N,) in {0, 1, -1}
    referral_conversions: int = 0   # conversions while the referral program ran
    direct_conversions: int = 0     # own purchases while direct incentives ran
    referral_cost: float = 0.0
    direct_cost: float = 0.0
    slot: int = 0

    def class_counts(self, classes: np.ndarray, n_classes: int) -> np.ndarray:
        """(3, K) counts of potential buyers, customers, competitor's customers"""
        return np.stack([
            np.bincount(classes[self.states == POTENTIAL], minlength=n_classes),
            np.bincount(classes[self.states == CUSTOMER], minlength=n_classes),
            np.bincount(classes[self.states == COMPETITOR], minlength=n_classes),
        ])


@dataclass(frozen=True, eq=False)
class ChainRun:
    """Class fractions and per-capita spend at every emission time"""

    t: np.ndarray               # (E,)
    fractions: np.ndarray       # (E, 3, K)
    referral_cost: np.ndarray   # (E,) per capita, cumulative
    direct_cost: np.ndarray     # (E,)
    weights: np.ndarray         # class weights P(k)
    final: ChainState
    seed: int

    @property
    def r(self) -> np.ndarray:
        return self.fractions[:, 1, :]

    def profit(self) -> float:
        """sum_k P(k) r_k(T) minus per-capita spend on both programs"""
        return float(self.weights @ self.fractions[-1, 1] - self.referral_cost[-1] - self.direct_cost[-1])

    def to_frame(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {"t": self.t}
        for k in range(self.fractions.shape[2]):
            columns[f"i_{k + 1}"] = self.fractions[:, 0, k]
            columns[f"r_{k + 1}"] = self.fractions[:, 1, k]
            columns[f"theta_{k + 1}"] = self.fractions[:, 2, k]
        columns["cum_cost_referral"] = self.referral_cost
        columns["cum_cost_direct"] = self.direct_cost
        return pd.DataFrame(columns)

    def write_csv(self, path: Path, header_comments: Optional[Dict[str, object]] = None) -> Path:
        comments = {"seed": self.seed}
        comments.update(header_comments or {})
        return write_csv(self.to_frame(), path, comments)


def initial_states(
        graph: AgentGraph,
        x0: StateVector,
        rng: np.random.Generator
) -> np.ndarray:
    """Per-class random assignment of round(n_k r0) customers and round(n_k theta0) competitor's customers"""
    states = np.zeros(graph.n_agents, dtype=np.int8)
    for k in range(graph.net.n_classes):
        members = np.flatnonzero(graph.classes == k)
        n_r = int(round(members.size * x0.r[k]))
        n_th = min(int(round(members.size * x0.theta[k])), members.size - n_r)
        chosen = rng.permutation(members)
        states[chosen[:n_r]] = CUSTOMER
        states[chosen[n_r:n_r + n_th]] = COMPETITOR
    return states


def simulate_chain(
        graph: AgentGraph,
        params: ModelParams,
        sched: ControlSchedule,
        seed: int = Config.SEED,
        x0: Optional[StateVector] = None,
        states: Optional[np.ndarray] = None
) -> ChainRun:
    """
    Run ceil(N*T) slots of the purchase chain under a control schedule

    In slot n (model time t = n/N) a potential buyer of class k draws one
    uniform number against consecutive ranges of width alpha + v*eps2 (buy from
    the seller), delta (buy from the competitor), beta + u*eps1 (ask a random
    neighbour, buy from the seller if that neighbour is a customer) and gamma
    (ask a random neighbour, buy from the competitor if that neighbour is the
    competitor's customer). Controls are those of the agent's class in the cell
    containing t, clamped to the last cell.

    Pay-outs are charged per conversion at c*u*(beta+eps1)/(beta+u*eps1) and
    c'*v*(alpha+eps2)/(alpha+v*eps2): c and c' for binary programs, and the
    expected spend of the mean-field cost rates for relaxed ones.

    Args:
        graph: Agent graph
        params: Model parameters
        sched: Schedule covering [0, T] with one column per class
        seed: Seed of the slot draws (and of the initial assignment)
        x0: Initial class fractions (default: everyone a potential buyer)
        states: Explicit initial agent states; overrides x0

    Returns:
        ChainRun emitted every N slots, starting at t=0
    """
    net = graph.net
    K = net.n_classes
    if sched.n_classes != K:
        raise DimensionError(f"schedule has {sched.n_classes} classes, graph has {K}")
    sched.check_horizon(params.horizon)
    top = (params.alpha + sched.v.max() * params.eps2 + params.delta
           + params.beta + sched.u.max() * params.eps1 + params.gamma)
    if top > 1.0 + 1e-12:
        raise ValidationError(f"slot probabilities sum to {top:.6g} > 1; the chain needs them to fit in one draw")

    N = graph.n_agents
    rng = np.random.default_rng(seed)
    if states is None:
        start = x0 if x0 is not None else StateVector.uniform(K)
        if start.n_classes != K:
            raise DimensionError(f"initial state has {start.n_classes} classes, graph has {K}")
        states = initial_states(graph, start, rng)
    else:
        states = np.asarray(states, dtype=np.int8).copy()
        if states.shape != (N,) or not np.all(np.isin(states, (POTENTIAL, CUSTOMER, COMPETITOR))):
            raise ValidationError("agent states must be one of 0, 1, -1 for every agent")

    n_slots = int(math.ceil(N * params.horizon - 1e-9))
    n_cells = grid_count(params.horizon, sched.control_dt, "control_dt")
    slot_index = np.arange(1, n_slots + 1)
    cells = np.minimum(np.floor(slot_index / (N * sched.control_dt) + 1e-9).astype(int), n_cells - 1)

    agents = rng.integers(0, N, n_slots)
    draws = rng.random(n_slots)
    picks = rng.random(n_slots)

    # per (cell, class) thresholds of the four ranges and per-conversion charges
    u, v = sched.u, sched.v
    own_seller = params.alpha + v * params.eps2
    own_competitor = own_seller + params.delta
    referral = own_competitor + params.beta + u * params.eps1
    influence = referral + params.gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        referral_charge = np.where(
            u > 0, params.cost_referral * u * (params.beta + params.eps1) / (params.beta + u * params.eps1), 0.0)
        direct_charge = np.where(
            v > 0, params.cost_direct * v * (params.alpha + params.eps2) / (params.alpha + v * params.eps2), 0.0)

    classes = graph.classes
    indptr, indices = graph.indptr, graph.indices
    counts = ChainState(states).class_counts(classes, K).astype(np.int64)
    sizes = counts.sum(axis=0)

    state_list = states.tolist()
    class_list = classes.tolist()
    t_out = [0.0]
    frac_out = [counts / np.maximum(sizes, 1)]
    ref_out = [0.0]
    dir_out = [0.0]
    ref_cost = dir_cost = 0.0
    ref_conv = dir_conv = 0

    for n in range(n_slots):
        a = int(agents[n])
        if state_list[a] == POTENTIAL:
            k = class_list[a]
            cell = cells[n]
            x = draws[n]
            new = POTENTIAL
            if x < own_seller[cell, k]:
                new = CUSTOMER
                if direct_charge[cell, k] > 0:
                    dir_cost += direct_charge[cell, k]
                    dir_conv += 1
            elif x < own_competitor[cell, k]:
                new = COMPETITOR
            elif x < influence[cell, k]:
                lo, hi = indptr[a], indptr[a + 1]
                if hi > lo:
                    b = int(indices[lo + int(picks[n] * (hi - lo))])
                    if x < referral[cell, k]:
                        if state_list[b] == CUSTOMER:
                            new = CUSTOMER
                            if referral_charge[cell, k] > 0:
                                ref_cost += referral_charge[cell, k]
                                ref_conv += 1
                    elif state_list[b] == COMPETITOR:
                        new = COMPETITOR
            if new != POTENTIAL:
                state_list[a] = new
                counts[0, k] -= 1
                counts[1 if new == CUSTOMER else 2, k] += 1

        if (n + 1) % N == 0:
            t_out.append((n + 1) / N)
            frac_out.append(counts / np.maximum(sizes, 1))
            ref_out.append(ref_cost / N)
            dir_out.append(dir_cost / N)

    final = ChainState(
        states=np.asarray(state_list, dtype=np.int8),
        referral_conversions=ref_conv,
        direct_conversions=dir_conv,
        referral_cost=ref_cost,
        direct_cost=dir_cost,
        slot=n_slots,
    )
    return ChainRun(
        t=np.asarray(t_out),
        fractions=np.stack(frac_out),
        referral_cost=np.asarray(ref_out),
        direct_cost=np.asarray(dir_out),
        weights=net.weights.copy(),
        final=final,
        seed=seed,
    )
