"""
Preset optimal-control problems.

linear   min 1/2 int (y - e^-t)^2 + 1/2 int t^2 (u - e^-t)^2,  y' + y = u = u0 e^-t,
         u0 in [0, 1], y(0) = 1; BEN penalty by default.
quartic  min 1/2 int (y - 1)^2 + 1/2 (u - 2)^2,  y' + y^3 = u constant,
         u in [-10, 10], y(0) = 1; DG penalty by default.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from convex.potentials import Potential, Quadratic, Quartic
from convex.rates import RatePotential
from core.functions import const, exp_rate, power
from core.grid import TimeGrid
from functionals.penalty import PenaltyKind, PenaltySpec
from functionals.target import TargetFunctional
from optimize.space import ControlSpace, ParamFamily
from settings import get_settings


@dataclass
class ProblemSetup:
    """Everything a sweep or a curve needs for one problem."""
    name: str
    target: TargetFunctional
    spec: PenaltySpec
    space: ControlSpace
    eps_list: List[float] = field(default_factory=list)
    curve_range: Tuple[float, float] = (0.0, 1.0)

    @property
    def grid(self) -> TimeGrid:
        return self.space.grid


def linear_problem(n: Optional[int] = None, kind: str = "BEN", potential: Optional[Potential] = None,
                   rate: Optional[RatePotential] = None) -> ProblemSetup:
    grid = TimeGrid(1.0, n or get_settings().default_n)
    target = TargetFunctional(y_weight=const(1.0), y_ref=exp_rate(-1.0),
                              u_weight=power(2.0), u_ref=exp_rate(-1.0))
    spec = PenaltySpec(PenaltyKind(kind), potential or Quadratic(1.0), y0=[1.0], rate=rate)
    space = ParamFamily(grid, [exp_rate(-1.0)], 0.0, 1.0, tag="u0*exp(-t)")
    return ProblemSetup("linear", target, spec, space, eps_list=[2.0, 1.0, 0.5, 0.1], curve_range=(0.0, 1.0))


def quartic_problem(n: Optional[int] = None, kind: str = "DG", lo: float = -10.0, hi: float = 10.0,
                    rate: Optional[RatePotential] = None) -> ProblemSetup:
    grid = TimeGrid(1.0, n or get_settings().default_n)
    target = TargetFunctional(y_weight=const(1.0), y_ref=const(1.0), param_weight=1.0, param_ref=[2.0])
    spec = PenaltySpec(PenaltyKind(kind), Quartic(), y0=[1.0], rate=rate)
    space = ParamFamily(grid, [const(1.0)], lo, hi, tag="const")
    return ProblemSetup("quartic", target, spec, space, eps_list=[1.0, 0.5, 0.1, 0.05], curve_range=(0.0, 2.0))


PROBLEMS: Dict[str, Callable[..., ProblemSetup]] = {
    "linear": linear_problem,
    "quartic": quartic_problem,
}


def get_problem(name: str, **kwargs) -> ProblemSetup:
    if name not in PROBLEMS:
        raise ValueError(f"unknown problem '{name}', expected one of {sorted(PROBLEMS)}")
    return PROBLEMS[name](**kwargs)
