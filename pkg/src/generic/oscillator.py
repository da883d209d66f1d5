"""
Thermalized damped oscillator as a GENERIC system.

State y = (q, p, theta): displacement, momentum, temperature. With
viscosity nu, elastic modulus lam and heat capacity kappa the dynamics are

    q'' + nu q' + lam q + theta = 0,
    kappa theta' = nu (q')^2 + theta q'.

Energy E = p^2/2 + lam q^2/2 + kappa theta; negative entropy
phi = q - kappa ln(theta) - kappa, with d(phi) = (1, 0, -kappa/theta). This
sign makes L DE - K d(phi) reproduce the equations above and satisfy
L d(phi) = K DE = 0; the vector (-1, 0, kappa/theta) is the entropy gradient.
"""
import numpy as np
from pydantic import BaseModel, Field

from convex.potentials import Potential
from errors import DomainError
from settings import get_settings
from .system import GenericSystem, _rows


class OscillatorParams(BaseModel):
    """Viscosity, elastic modulus and heat capacity."""
    nu: float = Field(1.0, ge=0)
    lam: float = Field(1.0, ge=0)
    kappa: float = Field(1.0, gt=0)


class OscillatorEntropyPotential(Potential):
    """phi(q, p, theta) = q - kappa ln(theta) - kappa on theta > 0."""
    name = "oscillator_entropy"

    def __init__(self, kappa: float):
        if not kappa > 0:
            raise ValueError(f"heat capacity must be positive, got {kappa}")
        self.kappa = float(kappa)

    def _theta(self, y):
        return _rows(y)[:, 2]

    def value(self, y):
        y = _rows(y)
        theta = y[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = y[:, 0] - self.kappa * np.log(theta) - self.kappa
        return np.where(theta > 0, out, np.inf)

    def grad(self, y):
        theta = self._theta(y)
        out = np.zeros((len(theta), 3))
        out[:, 0] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 2] = np.where(theta > 0, -self.kappa / theta, np.inf)
        return out

    def hess(self, y):
        theta = self._theta(y)
        out = np.zeros((len(theta), 3, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 2, 2] = np.where(theta > 0, self.kappa / theta ** 2, np.inf)
        return out

    def conjugate(self, xi):
        xi = _rows(xi)
        ok = (np.abs(xi[:, 0] - 1.0) <= 1e-12) & (np.abs(xi[:, 1]) <= 1e-12) & (xi[:, 2] < 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.kappa * np.log(self.kappa / -xi[:, 2])
        return np.where(ok, out, np.inf)

    def conjugate_grad(self, xi):
        xi = _rows(xi)
        out = np.zeros_like(xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 2] = np.where(xi[:, 2] < 0, -self.kappa / xi[:, 2], np.inf)
        return out

    def prox(self, step, z):
        z = _rows(z)
        out = z.copy()
        out[:, 0] = z[:, 0] - step
        out[:, 2] = 0.5 * (z[:, 2] + np.sqrt(z[:, 2] ** 2 + 4.0 * step * self.kappa))
        return out

    def __repr__(self):
        return f"OscillatorEntropyPotential(kappa={self.kappa:g})"


class ThermalizedOscillator(GenericSystem):
    """GENERIC data of the thermalized oscillator with closed-form operators."""
    dim = 3

    def __init__(self, params: OscillatorParams, theta_min: float = 1e-8):
        self.params = params
        self.theta_min = theta_min
        self._phi = OscillatorEntropyPotential(params.kappa)

    @property
    def entropy_potential(self) -> Potential:
        return self._phi

    def in_domain(self, y):
        return _rows(y)[:, 2] > self.theta_min

    def energy(self, y):
        y = _rows(y)
        q, p, theta = y[:, 0], y[:, 1], y[:, 2]
        return 0.5 * p ** 2 + 0.5 * self.params.lam * q ** 2 + self.params.kappa * theta

    def energy_grad(self, y):
        y = _rows(y)
        out = np.empty_like(y)
        out[:, 0] = self.params.lam * y[:, 0]
        out[:, 1] = y[:, 1]
        out[:, 2] = self.params.kappa
        return out

    def free_energy(self, y):
        """Psi(y) = lam q^2/2 + q theta - kappa theta ln(theta)."""
        y = _rows(y)
        q, theta = y[:, 0], y[:, 2]
        return 0.5 * self.params.lam * q ** 2 + q * theta - self.params.kappa * theta * np.log(theta)

    def poisson(self, y):
        y = _rows(y)
        ratio = y[:, 2] / self.params.kappa
        out = np.zeros((len(y), 3, 3))
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = -1.0
        out[:, 1, 2] = -ratio
        out[:, 2, 1] = ratio
        return out

    def onsager(self, y):
        y = _rows(y)
        p, theta = y[:, 1], y[:, 2]
        kappa = self.params.kappa
        a = np.zeros((len(y), 3))
        a[:, 1] = 1.0
        a[:, 2] = -p / kappa
        return (self.params.nu * theta)[:, None, None] * np.einsum("ni,nj->nij", a, a)

    def dissipation_conjugate(self, y, xi):
        y, xi = _rows(y), _rows(xi)
        p, theta = y[:, 1], y[:, 2]
        return 0.5 * self.params.nu * theta * (xi[:, 1] - p * xi[:, 2] / self.params.kappa) ** 2

    def dissipation(self, y, eta):
        """
        psi(y, eta) = eta_2^2 / (2 nu theta) on {eta_1 = 0, eta_3 + p eta_2 / kappa = 0}.

        Returns the value on the projection onto that line and the distance
        of eta from it.
        """
        y, eta = _rows(y), _rows(eta)
        p, theta = y[:, 1], y[:, 2]
        if np.any(theta <= 0):
            raise DomainError("dissipation potential needs theta > 0")
        if self.params.nu == 0.0:
            return np.zeros(len(y)), np.linalg.norm(eta, axis=1)
        a = np.zeros_like(eta)
        a[:, 1] = 1.0
        a[:, 2] = -p / self.params.kappa
        s = np.einsum("ni,ni->n", eta, a) / np.einsum("ni,ni->n", a, a)
        violation = np.linalg.norm(eta - s[:, None] * a, axis=1)
        return s ** 2 / (2.0 * self.params.nu * theta), violation


def build_oscillator(params: OscillatorParams = None, theta_min: float = None) -> ThermalizedOscillator:
    """Construct the thermalized oscillator from validated parameters."""
    if params is None:
        params = OscillatorParams()
    elif isinstance(params, dict):
        params = OscillatorParams(**params)
    if theta_min is None:
        theta_min = get_settings().theta_min
    return ThermalizedOscillator(params, theta_min=theta_min)
