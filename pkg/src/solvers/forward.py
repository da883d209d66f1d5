"""
Implicit-Euler forward solvers for the controlled evolutions

    y' + d phi(y) = u                 (gradient flow)
    d_v psi(y, y') + d phi(y) = u     (generalized gradient flow)

with y(0) = y0 and u piecewise constant on the grid.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from convex.potentials import Potential, monotone_root
from convex.rates import PowerRate, RatePotential
from core.grid import Control, TimeGrid, Trajectory
from errors import DomainError, SolverError

logger = logging.getLogger("varpen.solvers")

INNER_GTOL = 1e-12


@dataclass
class ForwardProblem:
    """Potential, optional rate, initial state and control of one forward solve."""
    potential: Potential
    y0: np.ndarray
    control: Control
    rate: Optional[RatePotential] = None

    def __post_init__(self):
        self.y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if not np.isfinite(self.potential.value(self.y0[None, :])[0]):
            raise DomainError(f"initial state {self.y0} is outside the domain of phi")
        if self.control.dim != self.y0.size:
            raise ValueError(f"control dimension {self.control.dim} does not match state dimension {self.y0.size}")

    @property
    def grid(self) -> TimeGrid:
        return self.control.grid


def forward_solve(fp: ForwardProblem) -> Trajectory:
    """y_{k+1} = prox(dt, y_k + dt u_k)."""
    grid = fp.grid
    dt = grid.dt
    nodes = np.empty((grid.n_intervals + 1, fp.y0.size))
    nodes[0] = fp.y0
    u = fp.control.values
    for k in range(grid.n_intervals):
        nodes[k + 1] = fp.potential.prox(dt, (nodes[k] + dt * u[k])[None, :])[0]
    return Trajectory(grid, nodes)


def _is_constant_quadratic(rate: RatePotential) -> bool:
    return isinstance(rate, PowerRate) and rate.p == 2.0 and rate.is_state_independent


def forward_solve_rate(fp: ForwardProblem) -> Trajectory:
    """
    Minimizing movements: y_{k+1} minimizes

        dt psi(y_k, (x - y_k)/dt) + phi(x) - <u_k, x>

    with psi frozen at the previous state. Quadratic constant-coefficient
    rates reduce to a scaled prox step; otherwise the optimality condition
    is solved by Brent's method (d = 1) or L-BFGS-B (d > 1).
    """
    rate = fp.rate
    if rate is None:
        return forward_solve(fp)
    grid = fp.grid
    dt = grid.dt
    nodes = np.empty((grid.n_intervals + 1, fp.y0.size))
    nodes[0] = fp.y0
    u = fp.control.values
    pot = fp.potential
    if _is_constant_quadratic(rate):
        step = dt / rate.beta_min
        for k in range(grid.n_intervals):
            nodes[k + 1] = pot.prox(step, (nodes[k] + step * u[k])[None, :])[0]
        return Trajectory(grid, nodes)

    for k in range(grid.n_intervals):
        prev = nodes[k][None, :]
        if fp.y0.size == 1:
            def optimality(x, prev=prev, uk=u[k, 0]):
                v = np.array([[(x - prev[0, 0]) / dt]])
                return rate.grad_v(prev, v)[0, 0] + pot.grad(np.array([[x]]))[0, 0] - uk
            root = monotone_root(optimality, float(prev[0, 0]))
            if not np.isfinite(root):
                raise SolverError(f"minimizing-movement step {k}: no root bracketed")
            nodes[k + 1] = root
        else:
            nodes[k + 1] = _step_quasi_newton(pot, rate, prev, u[k], dt, k)
    return Trajectory(grid, nodes)


def _step_quasi_newton(pot, rate, prev, uk, dt, k) -> np.ndarray:
    def objective(x):
        v = ((x - prev[0]) / dt)[None, :]
        value = dt * rate.value(prev, v)[0] + pot.value(x[None, :])[0] - uk @ x
        grad = rate.grad_v(prev, v)[0] + pot.grad(x[None, :])[0] - uk
        return float(value), grad

    result = minimize(objective, prev[0].copy(), jac=True, method="L-BFGS-B",
                      options={"gtol": INNER_GTOL, "ftol": 1e-15, "maxiter": 1000})
    if not result.success and np.linalg.norm(result.jac) > 1e-8:
        logger.warning(f"minimizing-movement step {k}: {result.message}")
        raise SolverError(f"minimizing-movement step {k} did not converge: {result.message}")
    return result.x
