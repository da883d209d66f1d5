"""
The penalized energy E_eps = F + G / eps and its exact discrete gradient.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.grid import Control, Trajectory
from errors import EvaluationError, UnsupportedModeError
from .penalty import GValue, Partials, PenaltyKind, PenaltySpec, eval_G, penalty_partials
from .target import TargetFunctional


@dataclass
class EnergyGradient:
    """
    Gradient of the discrete E_eps.

    dy covers nodes 1..N only (node 0 is pinned to y0). dparams is the
    direct gradient of a parameter-space term of F; the chain rule through
    u = u(p) is applied by the control space.
    """
    dy: np.ndarray
    du: np.ndarray
    dw: Optional[np.ndarray] = None
    dparams: Optional[np.ndarray] = None


def _check_eps(eps: float):
    if not eps > 0:
        raise ValueError(f"penalty parameter eps must be positive, got {eps}")


def grad_E(F: TargetFunctional, spec: PenaltySpec, eps: float, u: Control, y: Trajectory,
           w: Optional[Control] = None) -> EnergyGradient:
    """
    Raises:
        EvaluationError: E_eps is +inf at (u, y).
        UnsupportedModeError: spec.kind is DG_GENERIC.
    """
    _check_eps(eps)
    if spec.kind == PenaltyKind.DG_GENERIC:
        raise UnsupportedModeError("no gradient for DG_GENERIC: penalized GENERIC control is not supported")
    g_value, g_part = penalty_partials(spec, u, y, w)
    if not g_value.is_finite:
        raise EvaluationError(f"E_eps is +inf at the requested point ({g_value.reason})")
    dt = y.grid.dt
    f_m, f_v, f_u, dparams = F.partials(u, y)
    scale = 1.0 / eps
    # F has no boundary term and shares the midpoint stencil
    combined = Partials(
        m=f_m + scale * g_part.m,
        v=f_v + scale * g_part.v,
        u=f_u + scale * g_part.u,
        w=None,
        terminal=scale * g_part.terminal,
    )
    du = dt * combined.u
    dw = None if g_part.w is None else dt * scale * g_part.w
    return EnergyGradient(dy=combined.node_gradient(dt), du=du, dw=dw, dparams=dparams)


class PenalizedEnergy:
    """E_eps(u, y) = F(u, y) + G(u, y) / eps for a fixed target and penalty."""

    def __init__(self, target: TargetFunctional, spec: PenaltySpec, eps: float):
        _check_eps(eps)
        self.target = target
        self.spec = spec
        self.eps = float(eps)

    def evaluate(self, u: Control, y: Trajectory, w: Optional[Control] = None) -> Tuple[float, float, GValue]:
        """(E_eps, F, GValue); E_eps is inf when G is."""
        g = eval_G(self.spec, u, y, w)
        f = self.target.value(u, y)
        if not g.is_finite:
            return np.inf, f, g
        return f + g.total / self.eps, f, g

    def value(self, u: Control, y: Trajectory, w: Optional[Control] = None) -> float:
        return self.evaluate(u, y, w)[0]

    def gradient(self, u: Control, y: Trajectory, w: Optional[Control] = None) -> EnergyGradient:
        return grad_E(self.target, self.spec, self.eps, u, y, w)

    def __repr__(self):
        return f"PenalizedEnergy(kind={self.spec.kind.value}, eps={self.eps:g})"
