"""
Single shooting for scalar second-order boundary-value problems

    y'' = f(y),  y(0) = y0,  r(y(T), y'(T)) = 0,

by RK4 on the state and its variational equation and damped Newton on the
unknown initial slope s = y'(0).
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.grid import TimeGrid, Trajectory
from errors import SolverError
from settings import get_settings

logger = logging.getLogger("varpen.solvers")

ARMIJO = 1e-4
MIN_DAMPING = 1e-10


@dataclass
class ShootingProblem:
    """
    Args:
        accel: f(y), the second derivative as a function of the state.
        accel_dy: f'(y).
        terminal: r(y(T), y'(T)).
        terminal_grad: (dr/dy, dr/dy') at the terminal state.
        guesses: initial slopes tried in order.
    """
    accel: Callable[[float], float]
    accel_dy: Callable[[float], float]
    terminal: Callable[[float, float], float]
    terminal_grad: Callable[[float, float], Tuple[float, float]]
    y0: float
    horizon: float = 1.0
    guesses: Sequence[float] = (0.0,)
    tol: float = 1e-10
    max_iter: int = 50
    substeps: int = 2000


@dataclass
class ShootingResult:
    """Converged shooting solution on the fine RK4 substep grid."""
    slope: float
    residual: float
    iterations: int
    times: np.ndarray
    states: np.ndarray
    accel: Callable[[float], float]
    history: List[Tuple[int, float, float]] = field(default_factory=list)

    def trajectory(self, grid: TimeGrid) -> Trajectory:
        """Nodal values on a grid whose nodes are a subset of the substep times."""
        stride = (len(self.times) - 1) // grid.n_intervals
        if stride * grid.n_intervals != len(self.times) - 1:
            raise ValueError(f"grid with {grid.n_intervals} intervals does not divide {len(self.times) - 1} substeps")
        return Trajectory(grid, self.states[::stride, 0])

    def ode_residual(self) -> float:
        """max |d(y')/dt - f(y)| using the five-point derivative stencil on substeps."""
        h = self.times[1] - self.times[0]
        yp = self.states[:, 1]
        if len(yp) < 5:
            return 0.0
        dyp = (-yp[4:] + 8.0 * yp[3:-1] - 8.0 * yp[1:-3] + yp[:-4]) / (12.0 * h)
        f = np.array([self.accel(y) for y in self.states[2:-2, 0]])
        return float(np.max(np.abs(dyp - f)))

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=["iteration", "slope", "residual"])


def _integrate(problem: ShootingProblem, s: float, n_steps: int) -> np.ndarray:
    """RK4 on (y, y', z, z') with z = dy/ds; rows are substep states."""
    h = problem.horizon / n_steps

    def rhs(x):
        return np.array([x[1], problem.accel(x[0]), x[3], problem.accel_dy(x[0]) * x[2]])

    states = np.empty((n_steps + 1, 4))
    states[0] = (problem.y0, s, 0.0, 1.0)
    x = states[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            k1 = rhs(x)
            k2 = rhs(x + 0.5 * h * k1)
            k3 = rhs(x + 0.5 * h * k2)
            k4 = rhs(x + h * k3)
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                states[k + 1:] = np.nan
                return states
            states[k + 1] = x
    return states


def _residual(problem: ShootingProblem, states: np.ndarray) -> Tuple[float, float]:
    y1, yp1, z1, zp1 = states[-1]
    if not np.all(np.isfinite(states[-1])):
        return np.inf, np.nan
    r = problem.terminal(y1, yp1)
    dr_dy, dr_dyp = problem.terminal_grad(y1, yp1)
    return float(r), float(dr_dy * z1 + dr_dyp * zp1)


def solve_shooting(problem: ShootingProblem, n_steps: Optional[int] = None) -> ShootingResult:
    """
    Damped Newton with Armijo backtracking on |r(s)|^2, restarted from each
    guess in turn.

    Raises:
        SolverError: no guess converges within max_iter iterations.
    """
    n_steps = n_steps or problem.substeps
    history: List[Tuple[int, float, float]] = []
    count = 0
    for guess in problem.guesses:
        s = float(guess)
        states = _integrate(problem, s, n_steps)
        r, dr = _residual(problem, states)
        for _ in range(problem.max_iter):
            history.append((count, s, r))
            count += 1
            if abs(r) <= problem.tol:
                logger.debug(f"shooting converged: s={s:.12g}, |r|={abs(r):.3e}")
                return ShootingResult(s, r, count, np.linspace(0.0, problem.horizon, n_steps + 1),
                                      states[:, :2].copy(), problem.accel, history)
            if not np.isfinite(r) or not np.isfinite(dr) or dr == 0.0:
                break
            step = -r / dr
            t = 1.0
            while t >= MIN_DAMPING:
                trial_states = _integrate(problem, s + t * step, n_steps)
                trial_r, trial_dr = _residual(problem, trial_states)
                if np.isfinite(trial_r) and trial_r ** 2 <= (1.0 - 2.0 * ARMIJO * t) * r ** 2:
                    break
                t *= 0.5
            else:
                break
            s, states, r, dr = s + t * step, trial_states, trial_r, trial_dr
        logger.info(f"shooting from slope {guess:g} failed, restarting")
    raise SolverError(f"shooting did not converge after {problem.max_iter} iterations from {len(problem.guesses)} slopes")


def el_problem(eps: float, u: float, include_F_term: bool = True) -> ShootingProblem:
    """
    Euler-Lagrange problem of the quartic tracking example,

        y'' = 3 y^2 (y^3 - u) [+ eps (y - 1)],  y(0) = 1,  y'(1) + y(1)^3 = u.
    """
    if include_F_term and not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not np.isfinite(u):
        raise ValueError(f"control must be finite, got {u}")
    weight = eps if include_F_term else 0.0

    def accel(y):
        return 3.0 * y ** 2 * (y ** 3 - u) + weight * (y - 1.0)

    def accel_dy(y):
        return 15.0 * y ** 4 - 6.0 * u * y + weight

    return ShootingProblem(
        accel=accel,
        accel_dy=accel_dy,
        terminal=lambda y, yp: yp + y ** 3 - u,
        terminal_grad=lambda y, yp: (3.0 * y ** 2, 1.0),
        y0=1.0,
        guesses=(u - 1.0, 0.0, -0.5, 0.5, -1.0),
    )


def shoot_el_nonlinear(eps: float, u: float, include_F_term: bool = True,
                       grid: Optional[TimeGrid] = None) -> Trajectory:
    """Solve the quartic Euler-Lagrange problem and sample it on grid."""
    grid = grid or TimeGrid(1.0, get_settings().default_n)
    result = shoot_el_result(eps, u, include_F_term, grid)
    return result.trajectory(grid)


def shoot_el_result(eps: float, u: float, include_F_term: bool = True,
                    grid: Optional[TimeGrid] = None) -> ShootingResult:
    problem = el_problem(eps, u, include_F_term)
    n = grid.n_intervals if grid is not None else 1
    n_steps = n * int(np.ceil(problem.substeps / n))
    return solve_shooting(problem, n_steps)
