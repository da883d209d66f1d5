# Oracle solvers: forward flows, the linear closed form and Euler-Lagrange shooting
from .forward import ForwardProblem, forward_solve, forward_solve_rate
from .closed_form import (
    GAMMA,
    LinearClosedForm,
    limit_energy,
    linear_closed_form_solution,
    closed_form_curve,
    closed_form_argmin,
)
from .shooting import (
    ShootingProblem,
    ShootingResult,
    solve_shooting,
    el_problem,
    shoot_el_nonlinear,
    shoot_el_result,
)
