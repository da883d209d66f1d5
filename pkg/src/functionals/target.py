"""
Tracking-type target functionals F(u, y).

F(u, y) = 1/2 int w_y |y - y_ref|^2 + 1/2 int w_dy |y' - y_ref'|^2
        + 1/2 int w_u |u - u_ref|^2 + 1/2 w_p |p - p_ref|^2 + sum int extra(t, y)
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from core.functions import TimeFunction
from core.grid import Control, IntervalBatch, Trajectory
from errors import EvaluationError


@dataclass
class ExtraTerm:
    """User integrand g(t, y) >= 0 evaluated at interval midpoints, with its y-gradient."""
    name: str
    value_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]


def inverse_temperature_term(theta_target: float, weight: float = 1.0, index: int = 2) -> ExtraTerm:
    """weight * |1/theta - 1/theta_target|^2 on state component `index`."""
    if not theta_target > 0:
        raise ValueError(f"target temperature must be positive, got {theta_target}")

    def value(t, y):
        return weight * (1.0 / y[:, index] - 1.0 / theta_target) ** 2

    def grad(t, y):
        out = np.zeros_like(y)
        theta = y[:, index]
        out[:, index] = -2.0 * weight * (1.0 / theta - 1.0 / theta_target) / theta ** 2
        return out

    return ExtraTerm("inverse_temperature", value, grad)


def _on_midpoints(fn, t: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    values = np.asarray(fn(t), dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return np.broadcast_to(values, shape)


@dataclass
class TargetFunctional:
    """
    Weighted tracking terms; a term is switched off by leaving its weight None.

    Args:
        dy_ref: reference slope; defaults to the derivative of y_ref when
            y_ref is a TimeFunction.
        param_ref: reference parameter vector for the parameter-space term.
    """
    y_weight: Optional[Callable] = None
    y_ref: Optional[Callable] = None
    dy_weight: Optional[Callable] = None
    dy_ref: Optional[Callable] = None
    u_weight: Optional[Callable] = None
    u_ref: Optional[Callable] = None
    param_weight: float = 0.0
    param_ref: Optional[np.ndarray] = None
    extra_terms: List[ExtraTerm] = field(default_factory=list)

    def __post_init__(self):
        if self.param_weight < 0:
            raise ValueError(f"parameter weight must be nonnegative, got {self.param_weight}")
        if self.dy_weight is not None and self.dy_ref is None and isinstance(self.y_ref, TimeFunction):
            self.dy_ref = self.y_ref.derivative()

    def _weight(self, fn, t: np.ndarray) -> np.ndarray:
        w = np.asarray(fn(t), dtype=float).reshape(-1)
        if np.any(w < 0):
            raise EvaluationError("target weights must be nonnegative")
        return w

    def _residuals(self, u: Control, y: Trajectory):
        if u.grid != y.grid:
            raise EvaluationError("control and trajectory live on different grids")
        batch = IntervalBatch.build(y.grid, y, u)
        n, d = batch.y_mid.shape
        t = batch.t_mid
        terms = []
        if self.y_weight is not None:
            ref = 0.0 if self.y_ref is None else _on_midpoints(self.y_ref, t, (n, d))
            terms.append(("y", self._weight(self.y_weight, t), batch.y_mid - ref))
        if self.dy_weight is not None:
            ref = 0.0 if self.dy_ref is None else _on_midpoints(self.dy_ref, t, (n, d))
            terms.append(("dy", self._weight(self.dy_weight, t), batch.slope - ref))
        if self.u_weight is not None:
            ref = 0.0 if self.u_ref is None else _on_midpoints(self.u_ref, t, (n, u.dim))
            terms.append(("u", self._weight(self.u_weight, t), batch.u - ref))
        return batch, terms

    def _param_residual(self, u: Control) -> Optional[np.ndarray]:
        if self.param_weight == 0.0 or self.param_ref is None or u.params is None:
            return None
        ref = np.atleast_1d(np.asarray(self.param_ref, dtype=float))
        return u.params - ref

    def value(self, u: Control, y: Trajectory) -> float:
        batch, terms = self._residuals(u, y)
        dt = y.grid.dt
        total = 0.0
        for _, w, r in terms:
            total += 0.5 * dt * float(np.sum(w * np.einsum("ij,ij->i", r, r)))
        for term in self.extra_terms:
            values = np.asarray(term.value_fn(batch.t_mid, batch.y_mid), dtype=float)
            if not np.all(np.isfinite(values)):
                raise EvaluationError(f"extra term '{term.name}' is not finite on interval {int(np.argmax(~np.isfinite(values)))}")
            total += dt * float(values.sum())
        r = self._param_residual(u)
        if r is not None:
            total += 0.5 * self.param_weight * float(r @ r)
        return total

    def partials(self, u: Control, y: Trajectory):
        """
        Integrand partials (f_m, f_v, f_u) and the direct parameter gradient.

        Returns:
            (f_m, f_v, f_u, dparams) where f_* are (N, d) arrays to be
            weighted by dt and dparams is None without a parameter term.
        """
        batch, terms = self._residuals(u, y)
        f_m = np.zeros_like(batch.y_mid)
        f_v = np.zeros_like(batch.slope)
        f_u = np.zeros_like(batch.u)
        for name, w, r in terms:
            target = {"y": f_m, "dy": f_v, "u": f_u}[name]
            target += w[:, None] * r
        for term in self.extra_terms:
            f_m += np.asarray(term.grad_fn(batch.t_mid, batch.y_mid), dtype=float)
        r = self._param_residual(u)
        dparams = None if r is None else self.param_weight * r
        return f_m, f_v, f_u, dparams


def eval_F(F: TargetFunctional, u: Control, y: Trajectory) -> float:
    """Midpoint-rule value of the target functional."""
    return F.value(u, y)
