"""
Minimization of the discrete penalized energy E_eps = F + G / eps over
(control unknowns, trajectory nodes 1..N[, auxiliary rates]).

The primary method is box-constrained L-BFGS-B with the analytic gradient;
a projected Barzilai-Borwein iteration with Armijo backtracking takes over
when the quasi-Newton line search stalls or hits a +inf value.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import Bounds, minimize

from core.grid import Control, TimeGrid, Trajectory
from errors import DomainError, EvaluationError, UnsupportedModeError
from functionals.energy import PenalizedEnergy
from functionals.penalty import GValue, PenaltyKind, PenaltySpec
from functionals.target import TargetFunctional
from generic.dynamics import integrate_generic
from solvers.forward import ForwardProblem, forward_solve, forward_solve_rate
from .options import MinimizeOptions
from .space import ControlSpace

logger = logging.getLogger("varpen.optimize")

ARMIJO = 1e-4


@dataclass
class MinimizeReport:
    """Outcome of one penalized minimization."""
    E: float
    F: float
    G: GValue
    iterations: int
    converged: bool
    message: str
    projected_gradient: float
    history: List[float] = field(default_factory=list)
    w: Optional[Control] = None
    method: str = "L-BFGS-B"
    starts: int = 1


def state_for_control(spec: PenaltySpec, u: Control) -> Trajectory:
    """The forward solution S(u) matching the penalty kind."""
    if spec.kind == PenaltyKind.DG_GENERIC:
        return integrate_generic(spec.system, spec.y0, u.grid, u)
    rate = spec.rate if spec.kind in (PenaltyKind.DG_RATE, PenaltyKind.BEN_DN) else None
    problem = ForwardProblem(spec.potential, spec.y0, u, rate=rate)
    return forward_solve(problem) if rate is None else forward_solve_rate(problem)


def matching_rate(spec: PenaltySpec, y: Trajectory) -> Optional[Control]:
    """w = d_v psi(y') along y, the auxiliary variable of a solution."""
    if not spec.needs_auxiliary:
        return None
    return Control(y.grid, spec.rate.grad_v(y.midpoint_states, y.slopes))


class _Objective:
    """E_eps (times a scale) as a function of the stacked free unknowns."""

    def __init__(self, energy: PenalizedEnergy, grid: TimeGrid, space: Optional[ControlSpace] = None,
                 u_fixed: Optional[Control] = None, y_fixed: Optional[Trajectory] = None,
                 w_fixed: Optional[Control] = None, scale: float = 1.0):
        spec = energy.spec
        self.energy = energy
        self.grid = grid
        self.space = space
        self.free_control = u_fixed is None
        self.free_state = y_fixed is None
        if self.free_control and space is None:
            raise ValueError("a free control needs a control space")
        self.u_fixed, self.y_fixed, self.w_fixed = u_fixed, y_fixed, w_fixed
        self.scale = scale
        self.y0 = spec.y0
        self.d = spec.dim
        n = grid.n_intervals
        self.n_c = space.size if self.free_control else 0
        self.n_y = n * self.d if self.free_state else 0
        self.n_w = n * self.d if (spec.needs_auxiliary and self.free_state) else 0
        self.evaluations = 0
        self._key = None
        self._cached = None

    @property
    def size(self) -> int:
        return self.n_c + self.n_y + self.n_w

    def bounds(self) -> Bounds:
        lo = np.full(self.size, -np.inf)
        hi = np.full(self.size, np.inf)
        if self.free_control:
            lo[:self.n_c] = self.space.lower
            hi[:self.n_c] = self.space.upper
        return Bounds(lo, hi)

    def pack(self, u: Control, y: Trajectory, w: Optional[Control]) -> np.ndarray:
        parts = []
        if self.free_control:
            parts.append(self.space.coordinates(u))
        if self.free_state:
            parts.append(y.nodes[1:].ravel())
            if self.n_w:
                parts.append(w.values.ravel())
        return np.concatenate(parts) if parts else np.zeros(0)

    def unpack(self, x: np.ndarray):
        n = self.grid.n_intervals
        u = self.space.realize(x[:self.n_c]) if self.free_control else self.u_fixed
        if self.free_state:
            nodes = np.vstack([self.y0[None, :], x[self.n_c:self.n_c + self.n_y].reshape(n, self.d)])
            y = Trajectory(self.grid, nodes)
            w = Control(self.grid, x[self.n_c + self.n_y:].reshape(n, self.d)) if self.n_w else None
        else:
            y, w = self.y_fixed, self.w_fixed
        return u, y, w

    def __call__(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        key = x.tobytes()
        if key == self._key:
            return self._cached
        self.evaluations += 1
        try:
            u, y, w = self.unpack(x)
            value, _, _ = self.energy.evaluate(u, y, w)
        except (EvaluationError, DomainError, ValueError) as exc:
            logger.debug(f"objective rejected point: {exc}")
            value = np.inf
        if not np.isfinite(value):
            out = (np.inf, np.zeros_like(x))
        else:
            grad = self.energy.gradient(u, y, w)
            parts = []
            if self.free_control:
                parts.append(self.space.pullback(grad.du, grad.dparams))
            if self.free_state:
                parts.append(grad.dy.ravel())
                if self.n_w:
                    parts.append(grad.dw.ravel())
            out = (self.scale * value, self.scale * np.concatenate(parts))
        self._key, self._cached = key, out
        return out

    def projected_gradient(self, x: np.ndarray, g: np.ndarray) -> float:
        if not len(x):
            return 0.0
        b = self.bounds()
        return float(np.max(np.abs(x - np.clip(x - g, b.lb, b.ub))))


@dataclass
class _Outcome:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    message: str
    projected_gradient: float
    history: List[float]
    method: str


def _tolerance(opts: MinimizeOptions, f: float, scale: float) -> float:
    return opts.gtol * (scale + abs(f))


def _spectral(obj: _Objective, x: np.ndarray, opts: MinimizeOptions, history: List[float]) -> _Outcome:
    """Projected Barzilai-Borwein with monotone Armijo backtracking; +inf trials are rejected."""
    b = obj.bounds()
    f, g = obj(x)
    step = 1.0 / max(float(np.max(np.abs(g))) if len(g) else 1.0, 1.0)
    message = "iteration limit reached"
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        pg = obj.projected_gradient(x, g)
        if pg <= _tolerance(opts, f, obj.scale):
            return _Outcome(x, f / obj.scale, iterations, True, "projected gradient below tolerance", pg,
                            history, "spectral")
        trial_step = step
        while True:
            x_new = np.clip(x - trial_step * g, b.lb, b.ub)
            d = x_new - x
            f_new, g_new = obj(x_new)
            if np.isfinite(f_new) and f_new <= f + ARMIJO * float(g @ d):
                break
            trial_step *= 0.5
            if trial_step < 1e-20 or not np.any(d):
                pg = obj.projected_gradient(x, g)
                return _Outcome(x, f / obj.scale, iterations, pg <= _tolerance(opts, f, obj.scale),
                                "no further decrease possible", pg, history, "spectral")
        s, yv = x_new - x, g_new - g
        sy = float(s @ yv)
        step = float(np.clip(s @ s / sy, 1e-12, 1e12)) if sy > 0 else trial_step
        x, f, g = x_new, f_new, g_new
        history.append(f / obj.scale)
    pg = obj.projected_gradient(x, g)
    return _Outcome(x, f / obj.scale, iterations, False, message, pg, history, "spectral")


def _minimize_from(obj: _Objective, x0: np.ndarray, opts: MinimizeOptions) -> _Outcome:
    f0, _ = obj(x0)
    if not np.isfinite(f0):
        raise EvaluationError("infeasible start: E_eps is +inf at the initial point")
    history = [f0 / obj.scale]
    if not len(x0):
        return _Outcome(x0, f0 / obj.scale, 0, True, "no free unknowns", 0.0, history, "none")

    def callback(xk):
        history.append(obj(xk)[0] / obj.scale)

    result = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=obj.bounds(), callback=callback,
                      options={"maxiter": opts.max_iter, "maxfun": 4 * opts.max_iter, "maxcor": 20,
                               "ftol": 0.0, "gtol": _tolerance(opts, f0, obj.scale)})
    x = result.x
    f, g = obj(x)
    if not np.isfinite(f) or f > f0:
        x, (f, g) = x0, obj(x0)
    pg = obj.projected_gradient(x, g)
    # scipy reports success on its own stopping tests; only the projected gradient counts here
    converged = pg <= _tolerance(opts, f, obj.scale)
    message = str(result.message)
    outcome = _Outcome(x, f / obj.scale, int(result.nit), converged, message, pg, history, "L-BFGS-B")
    if not converged and opts.spectral_fallback:
        logger.info(f"L-BFGS-B stopped ({message}); continuing with projected spectral steps")
        fallback = _spectral(obj, x, opts, history)
        fallback.iterations += outcome.iterations
        fallback.method = "L-BFGS-B+spectral"
        if fallback.value <= outcome.value:
            outcome = fallback
    return outcome


def initial_point(spec: PenaltySpec, space: ControlSpace, xc: np.ndarray):
    """(u, y, w) with u from the control unknowns and y = S(u)."""
    u = space.realize(space.project(xc))
    y = state_for_control(spec, u)
    return u, y, matching_rate(spec, y)


def _report(energy: PenalizedEnergy, u, y, w, outcome: _Outcome, starts: int = 1) -> MinimizeReport:
    E, F, G = energy.evaluate(u, y, w)
    return MinimizeReport(E=E, F=F, G=G, iterations=outcome.iterations, converged=outcome.converged,
                          message=outcome.message, projected_gradient=outcome.projected_gradient,
                          history=outcome.history, w=w, method=outcome.method, starts=starts)


def minimize_penalized(F: TargetFunctional, spec: PenaltySpec, eps: float, space: ControlSpace,
                       opts: Optional[MinimizeOptions] = None, start=None):
    """
    Minimize E_eps over the control space and the free trajectory nodes.

    Args:
        start: optional (u, y, w) warm start; otherwise the control starts
            at the box center (plus random box points for multistart) and y
            at the forward solution.

    Returns:
        (u, y, MinimizeReport)
    """
    opts = opts or MinimizeOptions()
    if spec.kind == PenaltyKind.DG_GENERIC:
        raise UnsupportedModeError("penalized minimization over a GENERIC system is not supported")
    if opts.alternate and spec.kind in (PenaltyKind.BEN, PenaltyKind.BEN_AUG):
        return alternate_minimize_ben(F, spec, eps, space, opts)
    energy = PenalizedEnergy(F, spec, eps)
    obj = _Objective(energy, space.grid, space=space, scale=opts.objective_scale)
    starts = [start if start is not None else initial_point(spec, space, space.center())]
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.multistart - 1):
        starts.append(initial_point(spec, space, space.random_point(rng)))
    logger.info(f"minimizing E_eps: kind={spec.kind.value}, eps={eps:g}, unknowns={obj.size}, starts={len(starts)}")
    best = None
    for k, (u0, y0, w0) in enumerate(starts):
        if spec.needs_auxiliary and w0 is None:
            w0 = matching_rate(spec, y0)
        try:
            outcome = _minimize_from(obj, obj.pack(u0, y0, w0), opts)
        except EvaluationError as exc:
            logger.warning(f"start {k} rejected: {exc}")
            continue
        if best is None or outcome.value < best.value:
            best = outcome
    if best is None:
        raise EvaluationError("infeasible start: E_eps is +inf at every starting point")
    u, y, w = obj.unpack(best.x)
    report = _report(energy, u, y, w, best, starts=len(starts))
    level = logging.INFO if report.converged else logging.WARNING
    logger.log(level, f"eps={eps:g}: E={report.E:.10g} F={report.F:.10g} G={report.G.total:.3e} "
                      f"iters={report.iterations} converged={report.converged}")
    return u, y, report


def minimize_trajectory(F: TargetFunctional, spec: PenaltySpec, eps: float, u: Control,
                        opts: Optional[MinimizeOptions] = None, y_start: Optional[Trajectory] = None,
                        w_start: Optional[Control] = None):
    """
    Minimize E_eps(u, .) over the trajectory (and auxiliary rate) at a frozen control.

    Returns:
        (y, MinimizeReport); the report's w holds the auxiliary variable.
    """
    opts = opts or MinimizeOptions()
    energy = PenalizedEnergy(F, spec, eps)
    obj = _Objective(energy, u.grid, u_fixed=u, scale=opts.objective_scale)
    y_start = y_start if y_start is not None else state_for_control(spec, u)
    if spec.needs_auxiliary and w_start is None:
        w_start = matching_rate(spec, y_start)
    outcome = _minimize_from(obj, obj.pack(u, y_start, w_start), opts)
    _, y, w = obj.unpack(outcome.x)
    return y, _report(energy, u, y, w, outcome)


def alternate_minimize_ben(F: TargetFunctional, spec: PenaltySpec, eps: float, space: ControlSpace,
                           opts: Optional[MinimizeOptions] = None):
    """
    Alternate exact minimization in y (u frozen) and in u (y frozen), using
    the separate convexity of F + G_BEN / eps. The history records E_eps
    after every half-step and never increases.
    """
    opts = opts or MinimizeOptions()
    if spec.kind not in (PenaltyKind.BEN, PenaltyKind.BEN_AUG):
        raise UnsupportedModeError(f"alternate minimization needs a BEN penalty, got {spec.kind.value}")
    energy = PenalizedEnergy(F, spec, eps)
    u, y, _ = initial_point(spec, space, space.center())
    E = energy.value(u, y)
    history = [E]
    iterations = 0
    converged = False
    for cycle in range(1, opts.max_cycles + 1):
        E_prev = E
        y_obj = _Objective(energy, space.grid, u_fixed=u, scale=opts.objective_scale)
        last = _minimize_from(y_obj, y_obj.pack(u, y, None), opts)
        iterations += last.iterations
        _, y_new, _ = y_obj.unpack(last.x)
        E_new = energy.value(u, y_new)
        if E_new <= E:
            y, E = y_new, E_new
        history.append(E)
        u_obj = _Objective(energy, space.grid, space=space, y_fixed=y, scale=opts.objective_scale)
        last = _minimize_from(u_obj, u_obj.pack(u, y, None), opts)
        iterations += last.iterations
        u_new, _, _ = u_obj.unpack(last.x)
        E_new = energy.value(u_new, y)
        if E_new <= E:
            u, E = u_new, E_new
        history.append(E)
        logger.debug(f"alternate cycle {cycle}: E={E:.14g}")
        if E_prev - E <= opts.cycle_tol * (1.0 + abs(E)):
            converged = True
            break
    joint = _Objective(energy, space.grid, space=space, scale=opts.objective_scale)
    x = joint.pack(u, y, None)
    f, g = joint(x)
    pg = joint.projected_gradient(x, g)
    if not converged:
        message = "cycle limit reached"
    elif pg > _tolerance(opts, f, joint.scale):
        converged = False
        message = f"cycles stalled with joint projected gradient {pg:.3e}"
    else:
        message = "cycle decrease below tolerance"
    outcome = _Outcome(np.zeros(0), E, iterations, converged, message, pg, history, "alternate")
    report = _report(energy, u, y, None, outcome)
    logger.info(f"alternate minimization eps={eps:g}: E={report.E:.10g} cycles={len(history) // 2}")
    return u, y, report
