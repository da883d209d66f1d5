"""
Convex potentials phi = phi_1 + phi_2 with values, Fenchel conjugates,
subgradients, Hessians and proximal maps.

Every method works row-wise on arrays of shape (n, d) and returns shape
(n,) for scalars, (n, d) for vectors and (n, d, d) for Hessians.
"""
from abc import ABC, abstractmethod
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from errors import DomainError, SolverError

PROX_MAX_ITER = 100
CONJUGATE_TOL = 1e-10


def _rows(y) -> np.ndarray:
    return np.atleast_2d(np.asarray(y, dtype=float))


def _norms(y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(y, axis=1)


class Potential(ABC):
    """
    Proper convex lower semicontinuous potential.

    Subclasses implement value/grad/hess/conjugate/conjugate_grad/prox.
    grad returns the minimal-norm subgradient where phi is not differentiable.
    """
    name = "potential"
    has_interval_subdifferential = False
    is_quadratic = False

    @abstractmethod
    def value(self, y) -> np.ndarray:
        ...

    @abstractmethod
    def grad(self, y) -> np.ndarray:
        ...

    @abstractmethod
    def hess(self, y) -> np.ndarray:
        ...

    @abstractmethod
    def conjugate(self, xi) -> np.ndarray:
        ...

    @abstractmethod
    def conjugate_grad(self, xi) -> np.ndarray:
        """Maximizer y of <xi, y> - phi(y), i.e. an element of the conjugate's subdifferential."""

    @abstractmethod
    def prox(self, step: float, z) -> np.ndarray:
        """argmin_x step*phi(x) + |x - z|^2 / 2, row-wise."""

    def subdifferential_interval(self, y) -> Tuple[np.ndarray, np.ndarray]:
        """Endpoints [d-phi(y), d+phi(y)] for one-dimensional potentials."""
        y = _rows(y)
        if y.shape[1] != 1:
            raise DomainError(f"{self.name}: interval subdifferential needs d = 1, got d = {y.shape[1]}")
        g = self.grad(y)[:, 0]
        return g, g.copy()

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Quadratic(Potential):
    """phi(y) = lam |y|^2 / 2."""
    name = "quadratic"
    is_quadratic = True

    def __init__(self, lam: float = 1.0):
        if not lam > 0:
            raise ValueError(f"quadratic modulus must be positive, got {lam}")
        self.lam = float(lam)

    def value(self, y):
        y = _rows(y)
        return 0.5 * self.lam * np.einsum("ij,ij->i", y, y)

    def grad(self, y):
        return self.lam * _rows(y)

    def hess(self, y):
        y = _rows(y)
        return np.broadcast_to(self.lam * np.eye(y.shape[1]), (y.shape[0], y.shape[1], y.shape[1])).copy()

    def conjugate(self, xi):
        xi = _rows(xi)
        return np.einsum("ij,ij->i", xi, xi) / (2.0 * self.lam)

    def conjugate_grad(self, xi):
        return _rows(xi) / self.lam

    def prox(self, step, z):
        return _rows(z) / (1.0 + step * self.lam)

    def __repr__(self):
        return f"Quadratic({self.lam:g})"


class PowerP(Potential):
    """phi(y) = c |y|^p / p with p > 1."""
    name = "power"

    def __init__(self, p: float, c: float = 1.0):
        if not p > 1:
            raise ValueError(f"power exponent must exceed 1, got {p}")
        if not c > 0:
            raise ValueError(f"power coefficient must be positive, got {c}")
        self.p = float(p)
        self.c = float(c)
        self.q = self.p / (self.p - 1.0)
        self.is_quadratic = self.p == 2.0

    def value(self, y):
        return self.c * _norms(_rows(y)) ** self.p / self.p

    def grad(self, y):
        y = _rows(y)
        r = _norms(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > 0, self.c * r ** (self.p - 2.0), 0.0 if self.p != 2.0 else self.c)
        return factor[:, None] * y

    def hess(self, y):
        y = _rows(y)
        n, d = y.shape
        r = _norms(y)
        eye = np.eye(d)
        out = np.zeros((n, d, d))
        for i in range(n):
            if r[i] > 0:
                unit = y[i] / r[i]
                out[i] = self.c * r[i] ** (self.p - 2.0) * (eye + (self.p - 2.0) * np.outer(unit, unit))
            elif self.p == 2.0:
                out[i] = self.c * eye
            elif self.p < 2.0:
                out[i] = np.inf * eye
        return out

    def conjugate(self, xi):
        return self.c ** (1.0 - self.q) * _norms(_rows(xi)) ** self.q / self.q

    def conjugate_grad(self, xi):
        xi = _rows(xi)
        r = _norms(xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > 0, self.c ** (1.0 - self.q) * r ** (self.q - 2.0), 0.0)
        return factor[:, None] * xi

    def _radial_prox(self, step: float, rho: np.ndarray) -> np.ndarray:
        """Solve r + step*c*r^(p-1) = rho on [0, rho] by safeguarded Newton with bisection fallback."""
        lo = np.zeros_like(rho)
        hi = rho.copy()
        r = rho / (1.0 + step * self.c * np.maximum(rho, 1.0) ** (self.p - 2.0))
        for _ in range(PROX_MAX_ITER):
            f = r + step * self.c * r ** (self.p - 1.0) - rho
            if np.all(np.abs(f) <= 1e-15 * (1.0 + rho)):
                return r
            lo = np.where(f < 0, r, lo)
            hi = np.where(f > 0, r, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                fprime = 1.0 + step * self.c * (self.p - 1.0) * r ** (self.p - 2.0)
                candidate = r - f / fprime
            inside = np.isfinite(candidate) & (candidate > lo) & (candidate < hi)
            r = np.where(inside, candidate, 0.5 * (lo + hi))
            if np.all(hi - lo <= 1e-16 * (1.0 + rho)):
                return r
        raise SolverError(f"{self.name} prox did not converge after {PROX_MAX_ITER} iterations")

    def prox(self, step, z):
        z = _rows(z)
        rho = _norms(z)
        r = self._radial_prox(step, rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(rho > 0, r / rho, 0.0)
        return scale[:, None] * z

    def __repr__(self):
        return f"PowerP(p={self.p:g}, c={self.c:g})"


class Quartic(PowerP):
    """phi(y) = |y|^4 / 4."""
    name = "quartic"

    def __init__(self):
        super().__init__(4.0, 1.0)

    def __repr__(self):
        return "Quartic()"


class AbsValue(Potential):
    """phi(y) = c |y|, nonsmooth at the origin."""
    name = "abs"
    has_interval_subdifferential = True

    def __init__(self, c: float = 1.0):
        if not c > 0:
            raise ValueError(f"abs coefficient must be positive, got {c}")
        self.c = float(c)

    def value(self, y):
        return self.c * _norms(_rows(y))

    def grad(self, y):
        y = _rows(y)
        r = _norms(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > 0, self.c / r, 0.0)
        return factor[:, None] * y

    def hess(self, y):
        y = _rows(y)
        n, d = y.shape
        r = _norms(y)
        out = np.zeros((n, d, d))
        for i in range(n):
            if r[i] > 0 and d > 1:
                unit = y[i] / r[i]
                out[i] = self.c / r[i] * (np.eye(d) - np.outer(unit, unit))
        return out

    def conjugate(self, xi):
        r = _norms(_rows(xi))
        return np.where(r <= self.c * (1.0 + 1e-12), 0.0, np.inf)

    def conjugate_grad(self, xi):
        return np.zeros_like(_rows(xi))

    def prox(self, step, z):
        z = _rows(z)
        r = _norms(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(r > 0, np.maximum(0.0, 1.0 - step * self.c / r), 0.0)
        return shrink[:, None] * z

    def subdifferential_interval(self, y):
        y = _rows(y)
        if y.shape[1] != 1:
            raise DomainError(f"abs: interval subdifferential needs d = 1, got d = {y.shape[1]}")
        s = np.sign(y[:, 0])
        lo = np.where(s == 0, -self.c, self.c * s)
        hi = np.where(s == 0, self.c, self.c * s)
        return lo, hi

    def __repr__(self):
        return f"AbsValue({self.c:g})"


class CustomPotential(Potential):
    """
    User potential given by value and gradient callables on (n, d) arrays.

    The conjugate is computed by maximizing <xi, y> - phi(y) numerically and
    the prox by solving x + step*grad(x) = z.
    """
    name = "custom"

    def __init__(self, value_fn: Callable, grad_fn: Callable, hess_fn: Optional[Callable] = None,
                 name: str = "custom"):
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._hess_fn = hess_fn
        self.name = name

    def value(self, y):
        return np.asarray(self._value_fn(_rows(y)), dtype=float).reshape(-1)

    def grad(self, y):
        y = _rows(y)
        return np.asarray(self._grad_fn(y), dtype=float).reshape(y.shape)

    def hess(self, y):
        y = _rows(y)
        if self._hess_fn is not None:
            return np.asarray(self._hess_fn(y), dtype=float).reshape(y.shape[0], y.shape[1], y.shape[1])
        return _fd_hessian(self.grad, y)

    def conjugate(self, xi):
        xi = _rows(xi)
        maximizers = self.conjugate_grad(xi)
        out = np.einsum("ij,ij->i", xi, maximizers) - self.value(maximizers)
        return np.where(np.all(np.isfinite(maximizers), axis=1), out, np.inf)

    def conjugate_grad(self, xi):
        xi = _rows(xi)
        return np.vstack([self._argmax_linear(row) for row in xi])

    def _argmax_linear(self, xi: np.ndarray) -> np.ndarray:
        """Maximizer of <xi, y> - phi(y); rows of inf when the supremum is not attained."""
        if xi.size == 1:
            root = monotone_root(lambda s: self.grad(np.array([[s]]))[0, 0] - xi[0], 0.0)
            return np.array([root])
        result = minimize(
            lambda y: float(self.value(y[None, :])[0] - xi @ y),
            np.zeros_like(xi),
            jac=lambda y: self.grad(y[None, :])[0] - xi,
            method="BFGS",
            options={"gtol": CONJUGATE_TOL},
        )
        if not np.all(np.isfinite(result.x)) or np.linalg.norm(result.jac) > 1e-6:
            return np.full_like(xi, np.inf)
        return result.x

    def prox(self, step, z):
        z = _rows(z)
        return np.vstack([self._prox_row(step, row) for row in z])

    def _prox_row(self, step: float, z: np.ndarray) -> np.ndarray:
        if z.size == 1:
            root = monotone_root(lambda s: s + step * self.grad(np.array([[s]]))[0, 0] - z[0], z[0])
            if not np.isfinite(root):
                raise SolverError(f"{self.name} prox: no root bracketed around z={z[0]}")
            return np.array([root])
        x = z.copy()
        for _ in range(PROX_MAX_ITER):
            residual = x + step * self.grad(x[None, :])[0] - z
            if np.linalg.norm(residual) <= 1e-13 * (1.0 + np.linalg.norm(z)):
                return x
            jac = np.eye(z.size) + step * self.hess(x[None, :])[0]
            delta = np.linalg.solve(jac, residual)
            t = 1.0
            base = np.linalg.norm(residual)
            while t > 1e-8:
                trial = x - t * delta
                trial_res = trial + step * self.grad(trial[None, :])[0] - z
                if np.linalg.norm(trial_res) < (1.0 - 1e-4 * t) * base:
                    break
                t *= 0.5
            x = x - t * delta
        raise SolverError(f"{self.name} prox: damped Newton did not converge after {PROX_MAX_ITER} iterations")


class SmoothPerturbation(CustomPotential):
    """
    phi = phi_1 + phi_2 with phi_1 a built-in potential and phi_2 a C^{1,1}
    perturbation with gradient Lipschitz constant `lipschitz`.
    """
    name = "perturbed"

    def __init__(self, base: Potential, value_fn: Callable, grad_fn: Callable, lipschitz: float,
                 hess_fn: Optional[Callable] = None):
        super().__init__(value_fn, grad_fn, hess_fn, name=f"{base.name}+smooth")
        if lipschitz < 0:
            raise ValueError(f"lipschitz constant must be nonnegative, got {lipschitz}")
        self.base = base
        self.lipschitz = float(lipschitz)
        self.has_interval_subdifferential = base.has_interval_subdifferential

    def value(self, y):
        return self.base.value(y) + super().value(y)

    def grad(self, y):
        return self.base.grad(y) + super().grad(y)

    def hess(self, y):
        y = _rows(y)
        if self._hess_fn is not None:
            extra = np.asarray(self._hess_fn(y), dtype=float).reshape(y.shape[0], y.shape[1], y.shape[1])
        else:
            extra = _fd_hessian(lambda x: np.asarray(self._grad_fn(x), dtype=float).reshape(x.shape), y)
        return self.base.hess(y) + extra

    def subdifferential_interval(self, y):
        lo, hi = self.base.subdifferential_interval(y)
        shift = np.asarray(self._grad_fn(_rows(y)), dtype=float).reshape(-1)
        return lo + shift, hi + shift

    def _prox_row(self, step, z):
        if step * self.lipschitz < 1.0:
            x = self.base.prox(step, z[None, :])[0]
            for _ in range(10 * PROX_MAX_ITER):
                smooth_grad = np.asarray(self._grad_fn(x[None, :]), dtype=float).reshape(-1)
                nxt = self.base.prox(step, (z - step * smooth_grad)[None, :])[0]
                if np.linalg.norm(nxt - x) <= 1e-14 * (1.0 + np.linalg.norm(z)):
                    return nxt
                x = nxt
            raise SolverError(f"{self.name} prox: forward-backward iteration did not converge")
        return super()._prox_row(step, z)

    def __repr__(self):
        return f"SmoothPerturbation({self.base!r}, L={self.lipschitz:g})"


def monotone_root(fn: Callable[[float], float], guess: float, limit: float = 1e12) -> float:
    """Root of a nondecreasing scalar function by bracket expansion and Brent's method."""
    f0 = fn(guess)
    if f0 == 0.0:
        return guess
    width = 1.0
    lo, hi = guess, guess
    while width < limit:
        if f0 > 0:
            lo = guess - width
            if fn(lo) <= 0:
                break
        else:
            hi = guess + width
            if fn(hi) >= 0:
                break
        width *= 2.0
    else:
        return np.inf
    return brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _fd_hessian(grad: Callable, y: np.ndarray, h: float = 1e-6) -> np.ndarray:
    n, d = y.shape
    out = np.zeros((n, d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        out[:, :, j] = (grad(y + e) - grad(y - e)) / (2.0 * h)
    return out
