"""
Time grids, discrete trajectories and controls, and the interval-midpoint
quadrature that every functional is evaluated with.

Trajectories are piecewise linear in their nodes, controls are piecewise
constant per interval. A time integral of an integrand depending on
(t, y, y', u) is evaluated as sum_k dt * f(t_mid_k, y_mid_k, v_k, u_k).
"""
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from errors import EvaluationError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into N intervals."""
    horizon: float = 1.0
    n_intervals: int = 200

    def __post_init__(self):
        if int(self.n_intervals) != self.n_intervals or self.n_intervals < 1:
            raise ValueError(f"n_intervals must be a positive integer, got {self.n_intervals}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_intervals

    @property
    def nodes(self) -> np.ndarray:
        """Node times t_0 = 0, ..., t_N = T."""
        return np.linspace(0.0, self.horizon, self.n_intervals + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """Interval midpoints t_mid_k = (k + 1/2) dt."""
        return (np.arange(self.n_intervals) + 0.5) * self.dt

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.n_intervals * factor)


def _as_rows(values, n_rows: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(n_rows, -1) if arr.size == n_rows else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] != n_rows:
        raise ValueError(f"{what} must have {n_rows} rows, got shape {np.shape(values)}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0][0])
        raise ValueError(f"{what} has a non-finite entry in row {bad}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Nodal states y_k ~ y(t_k), k = 0..N, stored as an (N+1) x d array."""
    grid: TimeGrid
    nodes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _as_rows(self.nodes, self.grid.n_intervals + 1, "trajectory nodes"))

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def initial(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.nodes[-1]

    @property
    def slopes(self) -> np.ndarray:
        """Per-interval difference quotients, shape (N, d)."""
        return np.diff(self.nodes, axis=0) / self.grid.dt

    @property
    def midpoint_states(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def with_nodes(self, nodes) -> "Trajectory":
        return Trajectory(self.grid, nodes)


@dataclass(frozen=True, eq=False)
class Control:
    """
    Piecewise-constant control, one value per interval (N x d).

    Args:
        params: parameter vector when the control was realized from a
            parameterized family, None for free nodal controls.
        tag: name of the family that produced it.
    """
    grid: TimeGrid
    values: np.ndarray
    params: Optional[np.ndarray] = None
    tag: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _as_rows(self.values, self.grid.n_intervals, "control values"))
        if self.params is not None:
            params = np.atleast_1d(np.asarray(self.params, dtype=float)).copy()
            params.flags.writeable = False
            object.__setattr__(self, "params", params)

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class IntervalSample:
    """Discrete carrier of (t, y, y', u) on one interval."""
    index: int
    t_mid: float
    y_mid: Optional[np.ndarray] = None
    slope: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class IntervalBatch:
    """All interval samples of a (trajectory, control) pair as stacked arrays."""
    grid: TimeGrid
    t_mid: np.ndarray
    y_mid: Optional[np.ndarray] = None
    slope: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None

    @classmethod
    def build(cls, grid: TimeGrid, traj: Optional[Trajectory] = None,
              control: Optional[Control] = None) -> "IntervalBatch":
        if traj is not None and traj.grid != grid:
            raise EvaluationError("trajectory grid does not match the quadrature grid")
        if control is not None and control.grid != grid:
            raise EvaluationError("control grid does not match the quadrature grid")
        return cls(
            grid=grid,
            t_mid=grid.midpoints,
            y_mid=None if traj is None else traj.midpoint_states,
            slope=None if traj is None else traj.slopes,
            u=None if control is None else control.values,
        )

    def __len__(self) -> int:
        return self.grid.n_intervals

    def __getitem__(self, k: int) -> IntervalSample:
        return IntervalSample(
            index=k,
            t_mid=float(self.t_mid[k]),
            y_mid=None if self.y_mid is None else self.y_mid[k],
            slope=None if self.slope is None else self.slope[k],
            u=None if self.u is None else self.u[k],
        )

    def __iter__(self) -> Iterator[IntervalSample]:
        for k in range(len(self)):
            yield self[k]


def quad_values(grid: TimeGrid, values, label: str = "integrand") -> float:
    """Midpoint-rule sum dt * sum_k values[k] of precomputed per-interval values."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_intervals,):
        raise EvaluationError(f"{label} must have {grid.n_intervals} interval values, got shape {values.shape}")
    bad = ~np.isfinite(values)
    if bad.any():
        k = int(np.argmax(bad))
        raise EvaluationError(f"{label} is not finite on interval {k}")
    return float(grid.dt * values.sum())


def quad_intervals(grid: TimeGrid, integrand: Callable[[IntervalSample], float],
                   traj: Optional[Trajectory] = None, control: Optional[Control] = None) -> float:
    """
    Integrate a per-interval integrand with the midpoint rule.

    Args:
        grid: the time grid.
        integrand: maps an IntervalSample to a real number.
        traj, control: optional data carried by the samples.

    Returns:
        sum_k dt * integrand(sample_k)
    """
    batch = IntervalBatch.build(grid, traj, control)
    values = np.empty(grid.n_intervals)
    for sample in batch:
        value = float(integrand(sample))
        if not np.isfinite(value):
            raise EvaluationError(f"integrand is not finite on interval {sample.index}")
        values[sample.index] = value
    return float(grid.dt * values.sum())


def slope(traj: Trajectory, k: int) -> np.ndarray:
    """Difference quotient (y_{k+1} - y_k) / dt on interval k."""
    n = traj.grid.n_intervals
    if not 0 <= k < n:
        raise IndexError(f"interval index {k} out of range [0, {n})")
    return (traj.nodes[k + 1] - traj.nodes[k]) / traj.grid.dt


def _evaluate(f: Callable, times: np.ndarray) -> np.ndarray:
    rows = []
    for t in times:
        row = np.atleast_1d(np.asarray(f(float(t)), dtype=float))
        if not np.all(np.isfinite(row)):
            raise EvaluationError(f"sampled function is not finite at t={t}")
        rows.append(row)
    return np.vstack(rows)


def sample_function(grid: TimeGrid, f: Callable) -> Trajectory:
    """Trajectory with nodes[k] = f(t_k)."""
    return Trajectory(grid, _evaluate(f, grid.nodes))


def sample_control(grid: TimeGrid, f: Callable, params=None, tag: Optional[str] = None) -> Control:
    """Control with values[k] = f(t_mid_k)."""
    return Control(grid, _evaluate(f, grid.midpoints), params=params, tag=tag)


def constant_trajectory(grid: TimeGrid, state) -> Trajectory:
    state = np.atleast_1d(np.asarray(state, dtype=float))
    return Trajectory(grid, np.tile(state, (grid.n_intervals + 1, 1)))


def constant_control(grid: TimeGrid, value) -> Control:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return Control(grid, np.tile(value, (grid.n_intervals, 1)))
