"""
State-dependent dissipation potentials psi(y, v) and their conjugates
psi*(y, w) in the rate slot.
"""
from abc import ABC, abstractmethod

import numpy as np


def _rows(y) -> np.ndarray:
    return np.atleast_2d(np.asarray(y, dtype=float))


class RatePotential(ABC):
    """Convex, nonnegative psi(y, .) with psi(y, 0) = 0 for each frozen y."""
    name = "rate"
    p = 2.0

    @property
    @abstractmethod
    def is_state_independent(self) -> bool:
        ...

    @abstractmethod
    def value(self, y, v) -> np.ndarray:
        ...

    @abstractmethod
    def grad_v(self, y, v) -> np.ndarray:
        ...

    @abstractmethod
    def grad_y(self, y, v) -> np.ndarray:
        ...

    @abstractmethod
    def conjugate(self, y, w) -> np.ndarray:
        ...

    @abstractmethod
    def conjugate_grad_w(self, y, w) -> np.ndarray:
        ...

    @abstractmethod
    def conjugate_grad_y(self, y, w) -> np.ndarray:
        ...


class PowerRate(RatePotential):
    """
    psi(y, v) = beta(y) |v|^p / p with

        beta(y) = beta_min + (beta_max - beta_min) |y|^2 / (1 + |y|^2),

    continuous, uniformly positive and bounded by [beta_min, beta_max].
    The conjugate is psi*(y, w) = beta(y)^(1-q) |w|^q / q with q = p/(p-1).
    """
    name = "power"

    def __init__(self, p: float = 2.0, beta_min: float = 1.0, beta_max: float = None):
        if not p > 1:
            raise ValueError(f"rate exponent must exceed 1, got {p}")
        beta_max = beta_min if beta_max is None else beta_max
        if not 0 < beta_min <= beta_max:
            raise ValueError(f"need 0 < beta_min <= beta_max, got {beta_min}, {beta_max}")
        self.p = float(p)
        self.q = self.p / (self.p - 1.0)
        self.beta_min = float(beta_min)
        self.beta_max = float(beta_max)

    @property
    def is_state_independent(self) -> bool:
        return self.beta_max == self.beta_min

    @property
    def is_quadratic(self) -> bool:
        """True for psi(v) = |v|^2 / 2."""
        return self.p == 2.0 and self.is_state_independent and self.beta_min == 1.0

    def beta(self, y) -> np.ndarray:
        y = _rows(y)
        s = np.einsum("ij,ij->i", y, y)
        return self.beta_min + (self.beta_max - self.beta_min) * s / (1.0 + s)

    def beta_grad(self, y) -> np.ndarray:
        y = _rows(y)
        s = np.einsum("ij,ij->i", y, y)
        return ((self.beta_max - self.beta_min) * 2.0 / (1.0 + s) ** 2)[:, None] * y

    def _power(self, x: np.ndarray, exponent: float) -> np.ndarray:
        return np.linalg.norm(x, axis=1) ** exponent

    def _power_grad(self, x: np.ndarray, exponent: float) -> np.ndarray:
        """Gradient of |x|^e / e, i.e. |x|^(e-2) x, continuous at 0 for e > 1."""
        r = np.linalg.norm(x, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > 0, r ** (exponent - 2.0), 0.0 if exponent != 2.0 else 1.0)
        return factor[:, None] * x

    def value(self, y, v):
        v = _rows(v)
        return self.beta(y) * self._power(v, self.p) / self.p

    def grad_v(self, y, v):
        return self.beta(y)[:, None] * self._power_grad(_rows(v), self.p)

    def grad_y(self, y, v):
        return self.beta_grad(y) * (self._power(_rows(v), self.p) / self.p)[:, None]

    def conjugate(self, y, w):
        w = _rows(w)
        return self.beta(y) ** (1.0 - self.q) * self._power(w, self.q) / self.q

    def conjugate_grad_w(self, y, w):
        return (self.beta(y) ** (1.0 - self.q))[:, None] * self._power_grad(_rows(w), self.q)

    def conjugate_grad_y(self, y, w):
        beta = self.beta(y)
        factor = (1.0 - self.q) * beta ** (-self.q) * self._power(_rows(w), self.q) / self.q
        return self.beta_grad(y) * factor[:, None]

    def growth_constant(self) -> float:
        """c with psi(y,v) + psi*(y,w) >= c|v|^p + c|w|^q for all y."""
        return 0.5 * min(self.beta_min / self.p, self.beta_max ** (1.0 - self.q) / self.q)

    def __repr__(self):
        if self.is_state_independent:
            return f"PowerRate(p={self.p:g}, beta={self.beta_min:g})"
        return f"PowerRate(p={self.p:g}, beta_min={self.beta_min:g}, beta_max={self.beta_max:g})"
