# Penalized minimization, alternate BEN minimization and the eps sweep harness
from .space import ControlSpace, ParamFamily, FreeNodal
from .options import MinimizeOptions
from .minimizer import (
    MinimizeReport,
    minimize_penalized,
    minimize_trajectory,
    alternate_minimize_ben,
    state_for_control,
    matching_rate,
    initial_point,
)
from .sweep import (
    ReferenceSolution,
    SweepEntry,
    SweepReport,
    check_sweep_properties,
    control_summary,
    epsilon_sweep,
    solve_reference,
    tabulate_curve,
)
from .gradcheck import GradientCheckReport, GradientSample, fd_gradient, gradient_check
