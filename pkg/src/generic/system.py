"""
GENERIC systems y' = L(y) DE(y) - K(y) (d phi(y) - u).

L is antisymmetric, K symmetric positive semidefinite, and the
compatibility conditions L d(phi) = 0, K DE = 0 make the energy E a
conserved quantity and the entropy -phi nondecreasing when u = 0.
"""
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from convex.potentials import Potential


def _rows(y) -> np.ndarray:
    return np.atleast_2d(np.asarray(y, dtype=float))


class GenericSystem(ABC):
    """
    Data (E, phi, L, K) of a GENERIC system on R^d.

    The dissipation pair is psi*(y, xi) = <K(y) xi, xi> / 2 and its
    conjugate psi(y, eta) = <K(y)^+ eta, eta> / 2 on range K(y), +inf
    elsewhere.
    """
    dim = 0

    @property
    @abstractmethod
    def entropy_potential(self) -> Potential:
        """phi, the negative entropy."""

    @abstractmethod
    def energy(self, y) -> np.ndarray:
        ...

    @abstractmethod
    def energy_grad(self, y) -> np.ndarray:
        ...

    @abstractmethod
    def poisson(self, y) -> np.ndarray:
        """L(y), shape (n, d, d)."""

    @abstractmethod
    def onsager(self, y) -> np.ndarray:
        """K(y), shape (n, d, d)."""

    def in_domain(self, y) -> np.ndarray:
        return np.all(np.isfinite(_rows(y)), axis=1)

    def entropy(self, y) -> np.ndarray:
        return -self.entropy_potential.value(y)

    def vector_field(self, y, u=None) -> np.ndarray:
        y = _rows(y)
        drive = self.entropy_potential.grad(y)
        if u is not None:
            drive = drive - _rows(u)
        return (np.einsum("nij,nj->ni", self.poisson(y), self.energy_grad(y))
                - np.einsum("nij,nj->ni", self.onsager(y), drive))

    def reversible_drift(self, y) -> np.ndarray:
        """L(y) DE(y)."""
        y = _rows(y)
        return np.einsum("nij,nj->ni", self.poisson(y), self.energy_grad(y))

    def dissipation_conjugate(self, y, xi) -> np.ndarray:
        xi = _rows(xi)
        return 0.5 * np.einsum("ni,nij,nj->n", xi, self.onsager(y), xi)

    def dissipation(self, y, eta) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            (psi values on the projection of eta onto range K,
             norm of the component of eta outside range K)
        """
        y, eta = _rows(y), _rows(eta)
        values = np.empty(len(y))
        violations = np.empty(len(y))
        for i, K in enumerate(self.onsager(y)):
            K_pinv = np.linalg.pinv(K, rcond=1e-12, hermitian=True)
            projected = K @ (K_pinv @ eta[i])
            values[i] = 0.5 * eta[i] @ K_pinv @ eta[i]
            violations[i] = np.linalg.norm(eta[i] - projected)
        return values, violations

    def compatibility_defect(self, y) -> Tuple[float, float]:
        """(max |L d(phi)|, max |K DE|) over the given states."""
        y = _rows(y)
        l_dphi = np.einsum("nij,nj->ni", self.poisson(y), self.entropy_potential.grad(y))
        k_de = np.einsum("nij,nj->ni", self.onsager(y), self.energy_grad(y))
        return float(np.abs(l_dphi).max()), float(np.abs(k_de).max())
