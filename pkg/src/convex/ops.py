"""
Pointwise convex-analysis operations on potentials: Fenchel gap, proximal
map, minimal section of u - d(phi)(y), and the chain-rule defect along a
discrete trajectory.
"""
import numpy as np

from core.grid import Trajectory
from errors import DomainError
from .potentials import Potential


def _point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))[None, :]


def fenchel_gap(pot: Potential, y, xi) -> float:
    """phi(y) + phi*(xi) - <xi, y>, nonnegative by Fenchel-Young."""
    y, xi = _point(y), _point(xi)
    value = float(pot.value(y)[0])
    conjugate = float(pot.conjugate(xi)[0])
    if not np.isfinite(value):
        raise DomainError(f"{pot.name}: y={y[0]} is outside the essential domain of phi")
    if not np.isfinite(conjugate):
        raise DomainError(f"{pot.name}: xi={xi[0]} is outside the essential domain of phi*")
    return value + conjugate - float(xi[0] @ y[0])


def prox(pot: Potential, lam: float, z) -> np.ndarray:
    """argmin_x lam*phi(x) + |x - z|^2 / 2."""
    if not lam > 0:
        raise ValueError(f"prox step must be positive, got {lam}")
    return pot.prox(lam, _point(z))[0]


def minimal_section_rows(pot: Potential, y: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise projection of 0 onto u - [d-phi(y), d+phi(y)] for d = 1."""
    lo, hi = pot.subdifferential_interval(y)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(lo > hi):
        bad = int(np.argmax(~np.isfinite(lo) | ~np.isfinite(hi) | (lo > hi)))
        raise DomainError(f"{pot.name}: y={np.ravel(y)[bad]} is outside D(d phi)")
    u = np.asarray(u, dtype=float).reshape(-1)
    left, right = u - hi, u - lo
    return np.where(left > 0, left, np.where(right < 0, right, 0.0))[:, None]


def minimal_section(pot: Potential, y: float, u: float) -> float:
    """The element of minimal norm of u - d(phi)(y), for one-dimensional potentials."""
    return float(minimal_section_rows(pot, _point(y), np.array([u]))[0, 0])


def chain_rule_defect(pot: Potential, traj: Trajectory) -> float:
    """|phi(y(T)) - phi(y_0) - int <grad phi(y), y'> dt| for the midpoint discretization."""
    signed = signed_chain_rule_defect(pot, traj)
    return abs(signed)


def signed_chain_rule_defect(pot: Potential, traj: Trajectory) -> float:
    grads = pot.grad(traj.midpoint_states)
    if not np.all(np.isfinite(grads)):
        k = int(np.argmax(~np.all(np.isfinite(grads), axis=1)))
        raise DomainError(f"{pot.name}: midpoint of interval {k} is outside the domain of grad phi")
    increment = float(pot.value(traj.terminal[None, :])[0] - pot.value(traj.initial[None, :])[0])
    return increment - traj.grid.dt * float(np.einsum("ij,ij->", grads, traj.slopes))
