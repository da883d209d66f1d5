"""
Constraining functionals G(u, y) >= 0 that vanish exactly on solutions of
the controlled evolution, discretized with the interval-midpoint rule.

Kinds:
    BEN         phi(y) + phi*(u - y') - <u, y>, boundary |y(T)|^2/2 - |y0|^2/2
    BEN_AUG     BEN + (int |y'|^2 - <u, y'> + phi(y(T)) - phi(y0))^+
    BEN_DN      (int psi(y') + psi*(w) - <u, y'> + phi(y(T)) - phi(y0))^+
                + int phi(y) + phi*(u - w) - <u - w, y>
    DG          |y'|^2/2 + |d phi(y) - u|^2/2 - <u, y'>, boundary phi(y(T)) - phi(y0)
    DG_RATE     psi(y, y') + psi*(y, u - d phi(y)) - <u, y'>, same boundary
    DG_GENERIC  psi(y, y' - L DE) + psi*(y, u - d phi) - <u, y' - L DE>, same boundary

Values that the continuous functionals set to +inf (initial condition
violated, conjugate outside its domain, GENERIC constraint violated) are
returned as GValue sentinels rather than raised.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from convex.ops import minimal_section_rows
from convex.potentials import Potential
from convex.rates import RatePotential
from core.grid import Control, IntervalBatch, Trajectory
from errors import DomainError, EvaluationError
from settings import get_settings

logger = logging.getLogger("varpen.functionals")

INITIAL_TOL = 1e-12


class PenaltyKind(str, Enum):
    BEN = "BEN"
    BEN_AUG = "BEN_AUG"
    BEN_DN = "BEN_DN"
    DG = "DG"
    DG_RATE = "DG_RATE"
    DG_GENERIC = "DG_GENERIC"


@dataclass
class PenaltySpec:
    """
    Which constraining functional to use and its ingredients.

    Args:
        kind: the functional.
        potential: phi; for DG_GENERIC defaults to the system's entropy potential.
        y0: initial state, pinned as node 0.
        rate: psi for BEN_DN (state independent) and DG_RATE.
        system: GenericSystem for DG_GENERIC.
        minimal_section: replace d phi(y) - u by its minimal-norm element;
            defaults to True for one-dimensional potentials with interval
            subdifferentials.
    """
    kind: PenaltyKind
    potential: Optional[Potential] = None
    y0: Optional[np.ndarray] = None
    rate: Optional[RatePotential] = None
    system: Optional[object] = None
    minimal_section: Optional[bool] = None

    def __post_init__(self):
        self.kind = PenaltyKind(self.kind)
        if self.kind == PenaltyKind.DG_GENERIC:
            if self.system is None:
                raise ValueError("DG_GENERIC needs a GENERIC system")
            if self.potential is None:
                self.potential = self.system.entropy_potential
        if self.potential is None:
            raise ValueError(f"{self.kind.value} needs a potential")
        if self.y0 is None:
            raise ValueError("initial state y0 is required")
        self.y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if self.kind in (PenaltyKind.BEN_DN, PenaltyKind.DG_RATE) and self.rate is None:
            raise ValueError(f"{self.kind.value} needs a rate potential")
        if self.kind == PenaltyKind.BEN_DN and not self.rate.is_state_independent:
            raise ValueError("BEN_DN needs a state-independent rate potential")
        if not np.isfinite(self.potential.value(self.y0[None, :])[0]):
            raise DomainError(f"initial state {self.y0} is outside the domain of phi")
        if self.minimal_section is None:
            self.minimal_section = bool(self.potential.has_interval_subdifferential and self.dim == 1)

    @property
    def dim(self) -> int:
        return self.y0.size

    @property
    def needs_auxiliary(self) -> bool:
        """True when the functional has the auxiliary rate variable w."""
        return self.kind == PenaltyKind.BEN_DN


@dataclass
class GValue:
    """Value of G with its breakdown; total = inf marks the extended-real branch."""
    kind: str
    total: float
    integral_main: float = 0.0
    integral_cross: float = 0.0
    boundary: float = 0.0
    positive_part: float = 0.0
    feasible: bool = True
    reason: Optional[str] = None
    interval: Optional[int] = None

    @classmethod
    def infinite(cls, kind: str, reason: str, interval: Optional[int] = None, feasible: bool = True) -> "GValue":
        return cls(kind=kind, total=np.inf, integral_main=np.nan, integral_cross=np.nan, boundary=np.nan,
                   positive_part=np.nan, feasible=feasible, reason=reason, interval=interval)

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.total))

    @property
    def integral_total(self) -> float:
        return self.integral_main + self.integral_cross

    def to_row(self) -> dict:
        return {
            "total": self.total,
            "integral_main": self.integral_main,
            "integral_cross": self.integral_cross,
            "boundary": self.boundary,
            "feasible": self.feasible,
            "positive_part": self.positive_part,
        }


@dataclass
class Partials:
    """Integrand partials w.r.t. (y_mid, slope, u, w) plus the terminal-node gradient."""
    m: np.ndarray
    v: np.ndarray
    u: np.ndarray
    w: Optional[np.ndarray]
    terminal: np.ndarray

    def node_gradient(self, dt: float) -> np.ndarray:
        """Gradient of sum_k dt f(y_mid_k, v_k) + b(y_N) w.r.t. nodes 1..N."""
        grad = np.zeros((self.m.shape[0] + 1, self.m.shape[1]))
        grad[:-1] += 0.5 * dt * self.m - self.v
        grad[1:] += 0.5 * dt * self.m + self.v
        grad[-1] += self.terminal
        return grad[1:]


@dataclass
class _Terms:
    main: np.ndarray
    cross: np.ndarray
    boundary: float
    positive: float
    named: List[Tuple[str, np.ndarray]]
    partials: Optional[Partials] = None


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", a, b)


def _phi(pot: Potential, x: np.ndarray) -> float:
    return float(pot.value(x[None, :])[0])


def _phi_grad(pot: Potential, x: np.ndarray) -> np.ndarray:
    return pot.grad(x[None, :])[0]


def _ben_terms(spec, b, y_n, w, want):
    pot = spec.potential
    xi = b.u - b.slope
    phi_m = pot.value(b.y_mid)
    phi_c = pot.conjugate(xi)
    terms = _Terms(
        main=phi_m + phi_c,
        cross=-_dot(b.u, b.y_mid),
        boundary=0.5 * float(y_n @ y_n) - 0.5 * float(spec.y0 @ spec.y0),
        positive=0.0,
        named=[("phi(y)", phi_m), ("phi*(u - y')", phi_c)],
    )
    if want:
        conj_grad = pot.conjugate_grad(xi)
        terms.partials = Partials(
            m=pot.grad(b.y_mid) - b.u,
            v=-conj_grad,
            u=conj_grad - b.y_mid,
            w=None,
            terminal=y_n.copy(),
        )
    return terms


def _ben_aug_terms(spec, b, y_n, w, want):
    terms = _ben_terms(spec, b, y_n, w, want)
    if not all(np.all(np.isfinite(arr)) for _, arr in terms.named):
        return terms
    pot = spec.potential
    dt = b.grid.dt
    r = dt * float(np.sum(_dot(b.slope, b.slope) - _dot(b.u, b.slope))) + _phi(pot, y_n) - _phi(pot, spec.y0)
    terms.positive = max(r, 0.0)
    if want and r > 0:
        terms.partials.v += 2.0 * b.slope - b.u
        terms.partials.u += -b.slope
        terms.partials.terminal += _phi_grad(pot, y_n)
    return terms


def _ben_dn_terms(spec, b, y_n, w, want):
    pot, rate = spec.potential, spec.rate
    dt = b.grid.dt
    psi_v = rate.value(b.y_mid, b.slope)
    psi_w = rate.conjugate(b.y_mid, w)
    xi = b.u - w
    phi_m = pot.value(b.y_mid)
    phi_c = pot.conjugate(xi)
    named = [("psi(y')", psi_v), ("psi*(w)", psi_w), ("phi(y)", phi_m), ("phi*(u - w)", phi_c)]
    terms = _Terms(main=phi_m + phi_c, cross=-_dot(xi, b.y_mid), boundary=0.0, positive=0.0, named=named)
    if not all(np.all(np.isfinite(arr)) for _, arr in named):
        return terms
    a = dt * float(np.sum(psi_v + psi_w - _dot(b.u, b.slope))) + _phi(pot, y_n) - _phi(pot, spec.y0)
    terms.positive = max(a, 0.0)
    if want:
        conj_grad = pot.conjugate_grad(xi)
        partials = Partials(
            m=pot.grad(b.y_mid) - xi,
            v=np.zeros_like(b.slope),
            u=conj_grad - b.y_mid,
            w=-conj_grad + b.y_mid,
            terminal=np.zeros_like(y_n),
        )
        if a > 0:
            partials.m += rate.grad_y(b.y_mid, b.slope) + rate.conjugate_grad_y(b.y_mid, w)
            partials.v += rate.grad_v(b.y_mid, b.slope) - b.u
            partials.w += rate.conjugate_grad_w(b.y_mid, w)
            partials.u += -b.slope
            partials.terminal += _phi_grad(pot, y_n)
        terms.partials = partials
    return terms


def _dg_residual(spec, b):
    """d phi(y_mid) - u, or its minimal-norm element for interval subdifferentials."""
    if spec.minimal_section:
        return -minimal_section_rows(spec.potential, b.y_mid, b.u[:, 0])
    return spec.potential.grad(b.y_mid) - b.u


def _dg_terms(spec, b, y_n, w, want):
    pot = spec.potential
    residual = _dg_residual(spec, b)
    main = 0.5 * _dot(b.slope, b.slope) + 0.5 * _dot(residual, residual)
    terms = _Terms(
        main=main,
        cross=-_dot(b.u, b.slope),
        boundary=_phi(pot, y_n) - _phi(pot, spec.y0),
        positive=0.0,
        named=[("|d phi(y) - u|^2", main)],
    )
    if want:
        terms.partials = Partials(
            m=np.einsum("nij,nj->ni", pot.hess(b.y_mid), residual),
            v=b.slope - b.u,
            u=-residual - b.slope,
            w=None,
            terminal=_phi_grad(pot, y_n),
        )
    return terms


def _dg_rate_terms(spec, b, y_n, w, want):
    pot, rate = spec.potential, spec.rate
    xi = -_dg_residual(spec, b)
    psi_v = rate.value(b.y_mid, b.slope)
    psi_c = rate.conjugate(b.y_mid, xi)
    terms = _Terms(
        main=psi_v + psi_c,
        cross=-_dot(b.u, b.slope),
        boundary=_phi(pot, y_n) - _phi(pot, spec.y0),
        positive=0.0,
        named=[("psi(y, y')", psi_v), ("psi*(y, u - d phi)", psi_c)],
    )
    if want:
        conj_w = rate.conjugate_grad_w(b.y_mid, xi)
        terms.partials = Partials(
            m=(rate.grad_y(b.y_mid, b.slope) + rate.conjugate_grad_y(b.y_mid, xi)
               - np.einsum("nij,nj->ni", pot.hess(b.y_mid), conj_w)),
            v=rate.grad_v(b.y_mid, b.slope) - b.u,
            u=conj_w - b.slope,
            w=None,
            terminal=_phi_grad(pot, y_n),
        )
    return terms


def _dg_generic_terms(spec, b, y_n, w, want):
    system = spec.system
    pot = spec.potential
    eta = b.slope - system.reversible_drift(b.y_mid)
    psi, violation = system.dissipation(b.y_mid, eta)
    settings = get_settings()
    scale = 1.0 + float(np.max(np.abs(b.y_mid)))
    tol = settings.psi_tol * scale + settings.psi_dt_tol * b.grid.dt ** 2
    psi = np.where(violation <= tol, psi, np.inf)
    if np.any(violation > tol):
        logger.debug(f"GENERIC rate constraint violated, max violation {violation.max():.3e} > {tol:.3e}")
    psi_c = system.dissipation_conjugate(b.y_mid, b.u - pot.grad(b.y_mid))
    return _Terms(
        main=psi + psi_c,
        cross=-_dot(b.u, eta),
        boundary=_phi(pot, y_n) - _phi(pot, spec.y0),
        positive=0.0,
        named=[(f"psi(y, y' - L DE) (max violation {violation.max():.3e})", psi),
               ("psi*(y, u - d phi)", psi_c)],
    )


_TERMS = {
    PenaltyKind.BEN: _ben_terms,
    PenaltyKind.BEN_AUG: _ben_aug_terms,
    PenaltyKind.BEN_DN: _ben_dn_terms,
    PenaltyKind.DG: _dg_terms,
    PenaltyKind.DG_RATE: _dg_rate_terms,
    PenaltyKind.DG_GENERIC: _dg_generic_terms,
}


def _evaluate(spec: PenaltySpec, u: Control, y: Trajectory, w: Optional[Control], want: bool):
    kind = spec.kind.value
    if u.grid != y.grid:
        raise EvaluationError("control and trajectory live on different grids")
    if y.dim != spec.dim:
        raise EvaluationError(f"trajectory dimension {y.dim} does not match y0 dimension {spec.dim}")
    if spec.needs_auxiliary:
        if w is None:
            raise EvaluationError("BEN_DN needs the auxiliary rate variable w")
        if w.grid != y.grid:
            raise EvaluationError("auxiliary variable lives on a different grid")
    if np.max(np.abs(y.initial - spec.y0)) > INITIAL_TOL * (1.0 + np.max(np.abs(spec.y0))):
        return GValue.infinite(kind, "initial condition y(0) = y0 violated", interval=None, feasible=False), None
    if kind == PenaltyKind.DG_GENERIC.value:
        ok = spec.system.in_domain(y.nodes)
        if not np.all(ok):
            raise DomainError(f"node {int(np.argmax(~ok))} is outside the GENERIC system domain")
    batch = IntervalBatch.build(y.grid, y, u)
    terms = _TERMS[spec.kind](spec, batch, y.terminal, None if w is None else w.values, want)
    for name, arr in terms.named:
        bad = ~np.isfinite(arr)
        if bad.any():
            k = int(np.argmax(bad))
            return GValue.infinite(kind, f"{name} is +inf", interval=k), None
    dt = y.grid.dt
    main = dt * float(terms.main.sum())
    cross = dt * float(terms.cross.sum())
    value = GValue(
        kind=kind,
        total=main + cross + terms.boundary + terms.positive,
        integral_main=main,
        integral_cross=cross,
        boundary=terms.boundary,
        positive_part=terms.positive,
    )
    return value, terms.partials


def eval_G(spec: PenaltySpec, u: Control, y: Trajectory, w: Optional[Control] = None) -> GValue:
    """Evaluate the functional selected by spec.kind."""
    value, _ = _evaluate(spec, u, y, w, want=False)
    return value


def penalty_partials(spec: PenaltySpec, u: Control, y: Trajectory, w: Optional[Control] = None):
    """(GValue, Partials); partials are None when G is +inf."""
    return _evaluate(spec, u, y, w, want=True)


def _with_kind(spec: PenaltySpec, kind: PenaltyKind) -> PenaltySpec:
    if spec.kind == kind:
        return spec
    return PenaltySpec(kind, spec.potential, spec.y0, spec.rate, spec.system, spec.minimal_section)


def eval_G_BEN(spec: PenaltySpec, u: Control, y: Trajectory) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.BEN), u, y)


def eval_G_BEN_aug(spec: PenaltySpec, u: Control, y: Trajectory) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.BEN_AUG), u, y)


def eval_G_BEN_dn(spec: PenaltySpec, u: Control, y: Trajectory, w: Control) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.BEN_DN), u, y, w)


def eval_G_DG(spec: PenaltySpec, u: Control, y: Trajectory) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.DG), u, y)


def eval_G_DG_rate(spec: PenaltySpec, u: Control, y: Trajectory) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.DG_RATE), u, y)


def eval_G_DG_generic(spec: PenaltySpec, u: Control, y: Trajectory) -> GValue:
    return eval_G(_with_kind(spec, PenaltyKind.DG_GENERIC), u, y)
