"""
Domain types for the controlled diffusion model
Rates, degree-class networks, per-class states and control signals
"""

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.utils.exceptions import DimensionError, ValidationError

SIMPLEX_TOL = 1e-10
PROBABILITY_TOL = 1e-12
BALANCE_TOL = 1e-9


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def grid_count(horizon: float, step: float, what: str = "step") -> int:
    """
    Number of steps of size `step` in `horizon`, which must divide exactly

    Args:
        horizon: Interval length
        step: Step size
        what: Name used in the error message

    Returns:
        horizon / step as an int
    """
    if step <= 0:
        raise ValidationError(f"{what} must be positive, got {step}")
    ratio = horizon / step
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > 1e-9 * max(1.0, ratio):
        raise ValidationError(f"{what} {step} does not divide {horizon}")
    return count


@dataclass(frozen=True)
class ModelParams:
    """Purchase rates, program boosts, pay-outs and horizon"""

    alpha: float            # external purchase rate, seller
    beta: float             # social-influence purchase rate, seller
    gamma: float            # social-influence rate, competitor
    delta: float            # external rate, competitor
    eps1: float             # referral boost added to beta
    eps2: float             # incentive boost added to alpha
    cost_referral: float    # c, pay-out per referral conversion
    cost_direct: float      # c', pay-out per direct-incentive conversion
    horizon: float = 10.0   # T

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not np.isfinite(value) or value < 0:
                raise ValidationError(f"{field.name} must be a finite value >= 0, got {value}")
        if self.horizon <= 0:
            raise ValidationError(f"horizon must be > 0, got {self.horizon}")
        if self.alpha + self.eps2 > 1:
            raise ValidationError(f"alpha + eps2 must be <= 1, got {self.alpha + self.eps2}")
        if self.beta + self.eps1 > 1:
            raise ValidationError(f"beta + eps1 must be <= 1, got {self.beta + self.eps1}")
        if self.gamma > 1 or self.delta > 1:
            raise ValidationError(f"gamma and delta must be <= 1, got {self.gamma}, {self.delta}")

    @classmethod
    def base(cls) -> "ModelParams":
        """Base scenario rates and pay-outs"""
        return cls(alpha=0.08, beta=0.1, gamma=0.1, delta=0.1, eps1=0.05, eps2=0.05,
                   cost_referral=0.25, cost_direct=0.3, horizon=10.0)

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields changed (re-validated)"""
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> Dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class ClassNetwork:
    """Degree classes with weights P(k) and link mixing P(k'|k)"""

    degrees: Tuple[int, ...]
    weights: np.ndarray
    mixing: np.ndarray

    def __post_init__(self):
        degrees = tuple(int(k) for k in self.degrees)
        weights = _frozen_array(self.weights)
        mixing = _frozen_array(self.mixing)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mixing", mixing)

        n = len(degrees)
        if n == 0:
            raise ValidationError("network needs at least one degree class")
        if any(k < 1 for k in degrees):
            raise ValidationError(f"degrees must be positive integers, got {degrees}")
        if weights.shape != (n,) or mixing.shape != (n, n):
            raise DimensionError(
                f"{n} classes need {n} weights and a {n}x{n} mixing matrix, "
                f"got {weights.shape} and {mixing.shape}"
            )
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f"class weights must be >= 0 and sum to 1, got {weights.tolist()}")
        if np.any(mixing < 0) or np.any(mixing > 1):
            raise ValidationError("mixing entries must lie in [0, 1]")
        row_sums = mixing.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > PROBABILITY_TOL):
            raise ValidationError(f"mixing rows must sum to 1, got {row_sums.tolist()}")

        # k P(k'|k) P(k) is symmetric for an undirected graph
        k = np.asarray(degrees, dtype=float)
        flow = (k * weights)[:, None] * mixing
        gap = np.max(np.abs(flow - flow.T))
        if gap > BALANCE_TOL:
            raise ValidationError(f"mixing violates detailed balance (max gap {gap:.3g})")

    @property
    def n_classes(self) -> int:
        return len(self.degrees)

    @property
    def mean_degree(self) -> float:
        return float(np.dot(self.degrees, self.weights))

    @classmethod
    def regular(cls, degree: int = 1) -> "ClassNetwork":
        """Single class, every link stays in the class"""
        return cls(degrees=(degree,), weights=[1.0], mixing=[[1.0]])

    def assortativity(self) -> float:
        """
        Pearson degree correlation over the two ends of a random link

        Returns:
            Value in [-1, 1]; negative means disassortative. 0 for one class.
        """
        k = np.asarray(self.degrees, dtype=float)
        joint = (k * self.weights)[:, None] * self.mixing
        joint = joint / joint.sum()
        marginal = joint.sum(axis=1)
        mean = np.dot(marginal, k)
        var = np.dot(marginal, k ** 2) - mean ** 2
        if var <= 0:
            return 0.0
        cov = k @ joint @ k - mean ** 2
        return float(cov / var)

    def permuted(self, order: Sequence[int]) -> "ClassNetwork":
        """Same network with classes relabelled in `order`"""
        order = list(order)
        return ClassNetwork(
            degrees=tuple(self.degrees[j] for j in order),
            weights=self.weights[order],
            mixing=self.mixing[np.ix_(order, order)],
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Per-class fractions of potential buyers, customers and competitor's customers"""

    i: np.ndarray
    r: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        i = _frozen_array(np.atleast_1d(self.i))
        r = _frozen_array(np.atleast_1d(self.r))
        theta = _frozen_array(np.atleast_1d(self.theta))
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

        if not (i.shape == r.shape == theta.shape) or i.ndim != 1:
            raise DimensionError(f"i, r, theta must be 1-D of equal length, got {i.shape}, {r.shape}, {theta.shape}")
        stacked = np.stack([i, r, theta])
        if np.any(stacked < -SIMPLEX_TOL) or np.any(stacked > 1 + SIMPLEX_TOL):
            raise ValidationError("state fractions must lie in [0, 1]")
        gap = np.max(np.abs(stacked.sum(axis=0) - 1.0))
        if gap > SIMPLEX_TOL:
            raise ValidationError(f"i + r + theta must equal 1 per class (gap {gap:.3g})")

    @property
    def n_classes(self) -> int:
        return self.i.shape[0]

    def as_array(self) -> np.ndarray:
        """Stacked (3, K) array: rows i, r, theta"""
        return np.stack([self.i, self.r, self.theta])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "StateVector":
        x = np.asarray(x, dtype=float)
        return cls(i=x[0], r=x[1], theta=x[2])

    @classmethod
    def uniform(cls, n_classes: int, i0: float = 1.0, r0: float = 0.0, theta0: float = 0.0) -> "StateVector":
        """Same initial fractions in every class"""
        return cls(i=np.full(n_classes, i0), r=np.full(n_classes, r0), theta=np.full(n_classes, theta0))


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Piecewise-constant program signals on a fixed control grid, per class"""

    control_dt: float
    u: np.ndarray   # (n_intervals, K) referral program
    v: np.ndarray   # (n_intervals, K) direct incentive program

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "u", _frozen_array(u))
        object.__setattr__(self, "v", _frozen_array(v))

        if self.control_dt <= 0:
            raise ValidationError(f"control_dt must be positive, got {self.control_dt}")
        if u.shape != v.shape or u.ndim != 2 or u.shape[0] == 0:
            raise DimensionError(f"u and v must share a (n_intervals, K) shape, got {u.shape}, {v.shape}")
        if np.any(~np.isfinite(u)) or np.any(~np.isfinite(v)):
            raise ValidationError("control values must be finite")
        if u.min() < 0 or u.max() > 1 or v.min() < 0 or v.max() > 1:
            raise ValidationError("control values must lie in [0, 1]")

    @property
    def n_intervals(self) -> int:
        return self.u.shape[0]

    @property
    def n_classes(self) -> int:
        return self.u.shape[1]

    @property
    def horizon(self) -> float:
        return self.n_intervals * self.control_dt

    def times(self) -> np.ndarray:
        """Left end of every control interval"""
        return np.arange(self.n_intervals) * self.control_dt

    def is_binary(self) -> bool:
        return bool(np.all((self.u == 0) | (self.u == 1)) and np.all((self.v == 0) | (self.v == 1)))

    def rounded(self, threshold: float = 0.5) -> "ControlSchedule":
        """Binary schedule: values above threshold become 1"""
        return ControlSchedule(self.control_dt, (self.u > threshold).astype(float), (self.v > threshold).astype(float))

    def check_horizon(self, horizon: float):
        """Raise if the schedule does not cover [0, horizon] exactly"""
        expected = grid_count(horizon, self.control_dt, "control_dt")
        if expected != self.n_intervals:
            raise DimensionError(
                f"schedule has {self.n_intervals} intervals, horizon {horizon} needs {expected}"
            )

    @classmethod
    def constant(
            cls,
            n_classes: int,
            horizon: float,
            control_dt: float,
            u: float = 0.0,
            v: float = 0.0
    ) -> "ControlSchedule":
        """Schedule holding the same values over the whole horizon"""
        n = grid_count(horizon, control_dt, "control_dt")
        return cls(control_dt, np.full((n, n_classes), u), np.full((n, n_classes), v))


@dataclass(frozen=True, eq=False)
class SwitchTimes:
    """
    Two-window program timing per class

    Row k holds (tau1, tau2, tau3, tau4): referral on during [0, tau1] and
    (tau2, T]; direct incentives on during [0, tau3] and (tau4, T].
    """

    taus: np.ndarray    # (K, 4)
    horizon: float

    def __post_init__(self):
        taus = np.atleast_2d(np.asarray(self.taus, dtype=float))
        object.__setattr__(self, "taus", _frozen_array(taus))
        if taus.ndim != 2 or taus.shape[1] != 4:
            raise DimensionError(f"taus must have shape (K, 4), got {taus.shape}")
        tol = 1e-12
        if np.any(taus < -tol) or np.any(taus > self.horizon + tol):
            raise ValidationError("switch times must lie in [0, T]")
        if np.any(taus[:, 0] > taus[:, 1] + tol) or np.any(taus[:, 2] > taus[:, 3] + tol):
            raise ValidationError("switch times must satisfy tau1 <= tau2 and tau3 <= tau4")

    @property
    def n_classes(self) -> int:
        return self.taus.shape[0]

    @staticmethod
    def project(flat: np.ndarray, horizon: float) -> np.ndarray:
        """
        Euclidean projection onto the ordered box, pairwise

        Args:
            flat: (..., 4K) switch-time vectors
            horizon: T

        Returns:
            Projected copy, each (a, b) pair with 0 <= a <= b <= T
        """
        pairs = np.array(flat, dtype=float).reshape(flat.shape[:-1] + (-1, 2))
        a = pairs[..., 0]
        b = pairs[..., 1]
        swap = a > b
        mid = 0.5 * (a + b)
        a = np.where(swap, mid, a)
        b = np.where(swap, mid, b)
        pairs[..., 0] = np.clip(a, 0.0, horizon)
        pairs[..., 1] = np.clip(b, 0.0, horizon)
        return pairs.reshape(flat.shape)

    @classmethod
    def from_flat(cls, flat: np.ndarray, horizon: float) -> "SwitchTimes":
        flat = cls.project(np.asarray(flat, dtype=float), horizon)
        return cls(flat.reshape(-1, 4), horizon)

    def flat(self) -> np.ndarray:
        return self.taus.reshape(-1).copy()

    def to_schedule(self, control_dt: float) -> ControlSchedule:
        """Schedule whose value on each cell is the fraction of the cell the program is on"""
        u, v = switch_coverage(self.taus.reshape(1, -1), self.horizon, control_dt)
        return ControlSchedule(control_dt, u[0], v[0])


def switch_coverage(flat: np.ndarray, horizon: float, control_dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    On-fraction of every control cell for a batch of switch-time vectors

    Args:
        flat: (B, 4K) switch times, already projected
        horizon: T
        control_dt: Control grid step

    Returns:
        (u, v) arrays of shape (B, n_intervals, K)
    """
    n = grid_count(horizon, control_dt, "control_dt")
    edges = np.arange(n + 1) * control_dt
    left = edges[:-1][None, :, None]
    right = edges[1:][None, :, None]
    taus = np.asarray(flat, dtype=float).reshape(flat.shape[0], -1, 4)

    def window(start, stop):
        # overlap of each cell with [start, stop]
        lo = np.maximum(left, start[:, None, :])
        hi = np.minimum(right, stop[:, None, :])
        return np.clip(hi - lo, 0.0, None) / control_dt

    zero = np.zeros_like(taus[..., 0])
    end = np.full_like(taus[..., 0], horizon)
    u = window(zero, taus[..., 0]) + window(taus[..., 1], end)
    v = window(zero, taus[..., 2]) + window(taus[..., 3], end)
    return np.clip(u, 0.0, 1.0), np.clip(v, 0.0, 1.0)


def as_control_arrays(
        values: Optional[Sequence[float]],
        n_classes: int,
        name: str
) -> np.ndarray:
    """Per-class control values as a (K,) array in [0, 1]"""
    arr = np.zeros(n_classes) if values is None else np.atleast_1d(np.asarray(values, dtype=float))
    if arr.shape != (n_classes,):
        raise DimensionError(f"{name} needs {n_classes} per-class values, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValidationError(f"{name} values must lie in [0, 1], got {arr.tolist()}")
    return arr
