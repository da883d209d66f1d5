"""
Closed-form machinery of the linear test problem

    min 1/2 int_0^1 (y - e^-t)^2 + 1/2 int_0^1 t^2 (u - e^-t)^2
    s.t. y' + y = u = u0 e^-t, u0 in [0, 1], y(0) = 1.

For eps > 0 the y-minimizer of F + G_BEN / eps solves

    y'' - (1 + eps) y = -(2 u0 + eps) e^-t,  y'(1) + y(1) = u0 / e,  y(0) = 1,

whose solution is c1 e^(-a t) + c2 e^(a t) + (2 u0/eps + 1) e^-t with
a = sqrt(1 + eps).
"""
import logging
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from core.grid import TimeGrid, Trajectory, sample_function

logger = logging.getLogger("varpen.solvers")

# gamma = 1/2 int_0^1 t^2 e^(-2t) dt
GAMMA = 1.0 / 8.0 - 5.0 / (8.0 * np.e ** 2)
CURVE_POINTS = 201


def limit_energy(u0) -> np.ndarray:
    """E_0(u0) = F(u0 e^-t, e^-t (1 + t u0)) = gamma (u0^2 + (u0 - 1)^2)."""
    u0 = np.asarray(u0, dtype=float)
    return GAMMA * (u0 ** 2 + (u0 - 1.0) ** 2)


class LinearClosedForm:
    """
    Exact y-minimizer y_{eps,u0} and the explicit value of E_eps along it.

    Args:
        eps: penalty parameter, > 0.
        u0: control amplitude.
        use_printed_c1: take c1 from the historically printed quotient
            (u0/e - (1 + a)(2 u0/eps + 1)) / D instead of the one that
            satisfies the terminal condition.
    """

    def __init__(self, eps: float, u0: float, use_printed_c1: bool = False):
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.eps = float(eps)
        self.u0 = float(u0)
        self.alpha = np.sqrt(1.0 + self.eps)
        self.A = 2.0 * self.u0 / self.eps + 1.0
        self.c1 = self.printed_c1 if use_printed_c1 else self.corrected_c1
        self.c2 = -2.0 * self.u0 / self.eps - self.c1

    @property
    def _denominator(self) -> float:
        a = self.alpha
        return (1.0 - a) * np.exp(-a) - (1.0 + a) * np.exp(a)

    @property
    def corrected_c1(self) -> float:
        a = self.alpha
        return (self.u0 / np.e + 2.0 * self.u0 / self.eps * (1.0 + a) * np.exp(a)) / self._denominator

    @property
    def printed_c1(self) -> float:
        return (self.u0 / np.e - (1.0 + self.alpha) * self.A) / self._denominator

    def y(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        return self.c1 * np.exp(-a * t) + self.c2 * np.exp(a * t) + self.A * np.exp(-t)

    def dy(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        return -a * self.c1 * np.exp(-a * t) + a * self.c2 * np.exp(a * t) - self.A * np.exp(-t)

    def d2y(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        return a ** 2 * (self.c1 * np.exp(-a * t) + self.c2 * np.exp(a * t)) + self.A * np.exp(-t)

    def __call__(self, t):
        return self.y(t)

    def ode_residual(self, t) -> np.ndarray:
        """y'' - (1 + eps) y + (2 u0 + eps) e^-t."""
        t = np.asarray(t, dtype=float)
        return self.d2y(t) - (1.0 + self.eps) * self.y(t) + (2.0 * self.u0 + self.eps) * np.exp(-t)

    def terminal_residual(self) -> float:
        return float(self.dy(1.0) + self.y(1.0) - self.u0 / np.e)

    def initial_residual(self) -> float:
        return float(self.y(0.0) - 1.0)

    def sample(self, grid: TimeGrid) -> Trajectory:
        return sample_function(grid, self.y)

    def energy(self) -> float:
        """E_eps(u0 e^-t, y_{eps,u0}) by the explicit expression."""
        eps, u0, a, c1, c2, A = self.eps, self.u0, self.alpha, self.c1, self.c2, self.A
        B = A + u0
        value = (0.5 * c1 ** 2 + c1 ** 2 / (2 * eps) + a ** 2 * c1 ** 2 / (2 * eps)) * (np.exp(-2 * a) - 1) / (-2 * a)
        value += (0.5 * c2 ** 2 + c2 ** 2 / (2 * eps) + a ** 2 * c2 ** 2 / (2 * eps)) * (np.exp(2 * a) - 1) / (2 * a)
        value += (2 * u0 ** 2 / eps ** 2 + A ** 2 / (2 * eps) + B ** 2 / (2 * eps) - u0 * A / eps) * (np.exp(-2.0) - 1) / -2.0
        value += (2 * c1 * u0 / eps + c1 * A / eps + a * c1 * B / eps - c1 * u0 / eps) * (np.exp(-a - 1) - 1) / (-a - 1)
        value += (2 * c2 * u0 / eps + c2 * A / eps - a * c2 * B / eps - c2 * u0 / eps) * (np.exp(a - 1) - 1) / (a - 1)
        value += (1 + 1 / eps - a ** 2 / eps) * c1 * c2
        value += (c1 * np.exp(-a) + c2 * np.exp(a) + A * np.exp(-1.0)) ** 2 / (2 * eps) - 1 / (2 * eps)
        value += GAMMA * (u0 - 1) ** 2
        return float(value)


def linear_closed_form_solution(eps: float, u0: float) -> Tuple[Callable, float]:
    """(t -> y_{eps,u0}(t), E_eps value)."""
    solution = LinearClosedForm(eps, u0)
    return solution, solution.energy()


def closed_form_curve(eps: float, u0_values) -> np.ndarray:
    """E_eps over a grid of u0; eps = 0 gives the constrained curve."""
    u0_values = np.asarray(u0_values, dtype=float)
    if eps == 0:
        return limit_energy(u0_values)
    return np.array([LinearClosedForm(eps, u0).energy() for u0 in u0_values])


def closed_form_argmin(eps: float, box: Tuple[float, float] = (0.0, 1.0)) -> Tuple[float, float]:
    """
    Minimize u0 -> E_eps over the box: coarse grid, then bounded Brent
    refinement around the best grid point.
    """
    lo, hi = box
    grid = np.linspace(lo, hi, CURVE_POINTS)
    values = closed_form_curve(eps, grid)
    k = int(np.argmin(values))
    left, right = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if right <= left:
        return float(grid[k]), float(values[k])
    result = minimize_scalar(lambda s: float(closed_form_curve(eps, [s])[0]), bounds=(left, right),
                             method="bounded", options={"xatol": 1e-10})
    if result.fun <= values[k]:
        return float(result.x), float(result.fun)
    return float(grid[k]), float(values[k])
