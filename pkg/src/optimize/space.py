"""
Admissible control sets: parameterized families with a parameter box and
free piecewise-constant controls with a per-node box.
"""
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.grid import Control, TimeGrid
from errors import EvaluationError


class ControlSpace(ABC):
    """Box-constrained control unknowns x and the map x -> Control."""
    grid: TimeGrid
    dim: int

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of control unknowns."""

    @property
    @abstractmethod
    def lower(self) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def upper(self) -> np.ndarray:
        ...

    @property
    def is_parametric(self) -> bool:
        return False

    @abstractmethod
    def realize(self, x: np.ndarray) -> Control:
        ...

    @abstractmethod
    def pullback(self, du: np.ndarray, dparams: Optional[np.ndarray] = None) -> np.ndarray:
        """Gradient w.r.t. x from the gradient w.r.t. control values."""

    @abstractmethod
    def on_grid(self, grid: TimeGrid) -> "ControlSpace":
        ...

    @abstractmethod
    def coordinates(self, u: Control) -> np.ndarray:
        """Unknowns x of a control produced by this space."""

    def bounds(self) -> List[Tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def _check_box(lo: np.ndarray, hi: np.ndarray):
    if lo.shape != hi.shape:
        raise ValueError(f"box bounds have different shapes {lo.shape} and {hi.shape}")
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
        raise ValueError("box bounds must be finite")
    if np.any(lo > hi):
        raise ValueError(f"empty box: lower {lo} exceeds upper {hi}")


class ParamFamily(ControlSpace):
    """
    u(t) = sum_i p_i b_i(t) with p in [lo, hi].

    Args:
        basis: callables t -> R^d (vectorized over t), one per parameter.
        tag: family name carried by realized controls.
    """

    def __init__(self, grid: TimeGrid, basis: Sequence[Callable], lo, hi, dim: int = 1,
                 tag: str = "family"):
        if len(basis) == 0:
            raise ValueError("a parameterized family needs at least one basis function")
        self.grid = grid
        self.dim = dim
        self.basis = list(basis)
        self.tag = tag
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float)) * np.ones(len(self.basis))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float)) * np.ones(len(self.basis))
        _check_box(self.lo, self.hi)
        self._matrix = np.stack([self._sample(b) for b in self.basis])

    def _sample(self, b: Callable) -> np.ndarray:
        t = self.grid.midpoints
        values = np.asarray(b(t), dtype=float)
        if values.ndim == 1:
            values = np.repeat(values[:, None], self.dim, axis=1)
        if values.shape != (self.grid.n_intervals, self.dim) or not np.all(np.isfinite(values)):
            raise EvaluationError(f"basis function {b} must give finite values of shape (N, {self.dim})")
        return values

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def lower(self) -> np.ndarray:
        return self.lo

    @property
    def upper(self) -> np.ndarray:
        return self.hi

    @property
    def is_parametric(self) -> bool:
        return True

    def realize(self, x) -> Control:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.einsum("i,ind->nd", x, self._matrix)
        return Control(self.grid, values, params=x, tag=self.tag)

    def pullback(self, du, dparams=None):
        grad = np.einsum("nd,ind->i", du, self._matrix)
        if dparams is not None:
            grad = grad + dparams
        return grad

    def on_grid(self, grid: TimeGrid) -> "ParamFamily":
        return ParamFamily(grid, self.basis, self.lo, self.hi, self.dim, self.tag)

    def coordinates(self, u: Control) -> np.ndarray:
        if u.params is None:
            raise ValueError("control carries no parameters")
        return np.array(u.params, dtype=float)

    def __repr__(self):
        names = ", ".join(str(b) for b in self.basis)
        return f"ParamFamily([{names}], lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class FreeNodal(ControlSpace):
    """One free value per interval and component, each in [lo, hi]."""

    def __init__(self, grid: TimeGrid, lo, hi, dim: int = 1):
        self.grid = grid
        self.dim = dim
        shape = (grid.n_intervals * dim,)
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), shape).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), shape).copy()
        _check_box(self.lo, self.hi)

    @property
    def size(self) -> int:
        return self.grid.n_intervals * self.dim

    @property
    def lower(self) -> np.ndarray:
        return self.lo

    @property
    def upper(self) -> np.ndarray:
        return self.hi

    def realize(self, x) -> Control:
        return Control(self.grid, np.asarray(x, dtype=float).reshape(self.grid.n_intervals, self.dim), tag="free")

    def pullback(self, du, dparams=None):
        return np.asarray(du, dtype=float).reshape(-1)

    def on_grid(self, grid: TimeGrid) -> "FreeNodal":
        if grid.n_intervals == self.grid.n_intervals:
            return FreeNodal(grid, self.lo, self.hi, self.dim)
        lo = self.lo.reshape(-1, self.dim).min(axis=0)
        hi = self.hi.reshape(-1, self.dim).max(axis=0)
        return FreeNodal(grid, np.tile(lo, grid.n_intervals), np.tile(hi, grid.n_intervals), self.dim)

    def coordinates(self, u: Control) -> np.ndarray:
        return np.array(u.values, dtype=float).reshape(-1)

    def __repr__(self):
        return f"FreeNodal(N={self.grid.n_intervals}, d={self.dim})"
