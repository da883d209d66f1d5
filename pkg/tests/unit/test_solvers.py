"""
Unit tests for the forward solvers, the linear closed form and shooting.
"""
import numpy as np
import pytest

from convex.potentials import AbsValue, Quadratic, Quartic
from convex.rates import PowerRate
from core.grid import TimeGrid, constant_control, sample_control
from errors import DomainError, SolverError
from functionals import PenalizedEnergy
from problems import linear_problem
from solvers import (
    GAMMA,
    ForwardProblem,
    LinearClosedForm,
    ShootingProblem,
    closed_form_argmin,
    closed_form_curve,
    el_problem,
    forward_solve,
    forward_solve_rate,
    limit_energy,
    linear_closed_form_solution,
    shoot_el_nonlinear,
    shoot_el_result,
    solve_shooting,
)


class TestForwardSolve:
    """Implicit-Euler gradient flows."""

    def test_linear_decay_first_order(self):
        errors = []
        for n in (100, 200, 400):
            grid = TimeGrid(1.0, n)
            traj = forward_solve(ForwardProblem(Quadratic(1.0), [1.0], constant_control(grid, 0.0)))
            errors.append(np.max(np.abs(traj.nodes[:, 0] - np.exp(-grid.nodes))))
        assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.05)
        assert errors[1] / errors[2] == pytest.approx(2.0, rel=0.05)

    def test_quartic_decay(self):
        grid = TimeGrid(1.0, 2000)
        traj = forward_solve(ForwardProblem(Quartic(), [1.0], constant_control(grid, 0.0)))
        exact = 1.0 / np.sqrt(1.0 + 2.0 * grid.nodes)
        assert np.max(np.abs(traj.nodes[:, 0] - exact)) < 1e-3

    def test_constant_control_steady_state(self):
        grid = TimeGrid(1.0, 50)
        traj = forward_solve(ForwardProblem(Quartic(), [2.0], constant_control(grid, 8.0)))
        assert np.allclose(traj.nodes[:, 0], 2.0, atol=1e-12)

    def test_abs_reaches_zero_and_sticks(self):
        grid = TimeGrid(1.0, 100)
        traj = forward_solve(ForwardProblem(AbsValue(1.0), [0.5], constant_control(grid, 0.0)))
        assert traj.terminal[0] == pytest.approx(0.0)
        assert np.all(np.diff(traj.nodes[:, 0]) <= 0)

    def test_dimension_mismatch(self):
        grid = TimeGrid(1.0, 10)
        with pytest.raises(ValueError):
            ForwardProblem(Quadratic(1.0), [1.0, 0.0], constant_control(grid, 0.0))

    @pytest.mark.parametrize("pot", [Quadratic(1.0), Quartic(), AbsValue(1.0)])
    def test_energy_dissipation(self, pot):
        grid = TimeGrid(1.0, 100)
        traj = forward_solve(ForwardProblem(pot, [1.5], constant_control(grid, 0.0)))
        phi = pot.value(traj.nodes)
        dissipated = np.sum(np.diff(traj.nodes, axis=0) ** 2, axis=1) / grid.dt
        assert np.all(phi[1:] + dissipated <= phi[:-1] + 1e-12)


class TestForwardSolveRate:
    """Minimizing movements with a rate potential."""

    def test_scaled_quadratic_rate(self):
        grid = TimeGrid(1.0, 2000)
        fp = ForwardProblem(Quadratic(1.0), [1.0], constant_control(grid, 0.0), rate=PowerRate(2.0, 2.0))
        traj = forward_solve_rate(fp)
        assert np.max(np.abs(traj.nodes[:, 0] - np.exp(-0.5 * grid.nodes))) < 1e-3

    def test_without_rate_falls_back(self):
        grid = TimeGrid(1.0, 20)
        fp = ForwardProblem(Quartic(), [1.0], constant_control(grid, 0.5))
        assert np.array_equal(forward_solve_rate(fp).nodes, forward_solve(fp).nodes)

    def test_scalar_steps_satisfy_optimality(self):
        grid = TimeGrid(1.0, 40)
        rate = PowerRate(3.0, 0.5, 2.0)
        pot = Quartic()
        u = sample_control(grid, lambda t: np.cos(3.0 * t))
        traj = forward_solve_rate(ForwardProblem(pot, [1.0], u, rate=rate))
        prev = traj.nodes[:-1]
        residual = rate.grad_v(prev, traj.slopes) + pot.grad(traj.nodes[1:]) - u.values
        assert np.max(np.abs(residual)) < 1e-8

    def test_vector_steps_satisfy_optimality(self):
        grid = TimeGrid(1.0, 10)
        rate = PowerRate(2.0, 1.0, 3.0)
        pot = Quartic()
        u = constant_control(grid, [0.5, -1.0])
        traj = forward_solve_rate(ForwardProblem(pot, [1.0, 0.0], u, rate=rate))
        residual = rate.grad_v(traj.nodes[:-1], traj.slopes) + pot.grad(traj.nodes[1:]) - u.values
        assert np.max(np.abs(residual)) < 1e-6

    def test_first_order_convergence(self):
        rate = PowerRate(3.0, 0.5, 2.0)
        terminal = []
        for n in (100, 200, 400):
            grid = TimeGrid(1.0, n)
            u = sample_control(grid, lambda t: np.cos(3.0 * t))
            terminal.append(forward_solve_rate(ForwardProblem(Quartic(), [1.0], u, rate=rate)).terminal[0])
        order = np.log2(abs(terminal[0] - terminal[1]) / abs(terminal[1] - terminal[2]))
        assert order >= 0.9


class TestLinearClosedForm:
    """The explicit y-minimizer and energy of the linear tracking problem."""

    @pytest.mark.parametrize("eps,u0", [(2.0, 0.3), (1.0, 0.5), (0.1, 0.9)])
    def test_solves_boundary_value_problem(self, eps, u0):
        sol = LinearClosedForm(eps, u0)
        t = np.linspace(0.0, 1.0, 11)
        assert np.max(np.abs(sol.ode_residual(t))) < 1e-9 * (1.0 + abs(sol.A))
        assert sol.initial_residual() == pytest.approx(0.0, abs=1e-12)
        assert sol.terminal_residual() == pytest.approx(0.0, abs=1e-10)

    def test_printed_constant_misses_terminal_condition(self):
        sol = LinearClosedForm(1.0, 0.5, use_printed_c1=True)
        assert sol.initial_residual() == pytest.approx(0.0, abs=1e-12)
        assert abs(sol.terminal_residual()) > 1e-3
        assert sol.printed_c1 != pytest.approx(sol.corrected_c1)

    @pytest.mark.parametrize("eps,u0", [(2.0, 0.3), (1.0, 0.7), (0.5, 0.5)])
    def test_energy_matches_discrete_evaluation(self, eps, u0):
        setup = linear_problem(n=2000)
        grid = setup.grid
        sol, value = linear_closed_form_solution(eps, u0)
        u = sample_control(grid, lambda t: u0 * np.exp(-t))
        discrete = PenalizedEnergy(setup.target, setup.spec, eps).value(u, sol.sample(grid))
        assert value == pytest.approx(discrete, rel=1e-4)

    def test_rejects_nonpositive_eps(self):
        with pytest.raises(ValueError):
            LinearClosedForm(0.0, 0.5)


class TestClosedFormCurves:

    def test_gamma(self):
        grid = TimeGrid(1.0, 4000)
        t = grid.midpoints
        assert GAMMA == pytest.approx(0.5 * grid.dt * np.sum(t ** 2 * np.exp(-2.0 * t)), rel=1e-6)

    def test_limit_curve(self):
        u0, value = closed_form_argmin(0.0)
        assert u0 == pytest.approx(0.5, abs=1e-6)
        assert value == pytest.approx(1.0 / 16.0 - 5.0 / (16.0 * np.e ** 2), abs=1e-9)
        assert np.allclose(closed_form_curve(0.0, [0.0, 1.0]), limit_energy([0.0, 1.0]))

    @pytest.mark.parametrize("eps", [2.0, 1.0, 0.5, 0.1])
    def test_curves_are_strictly_convex(self, eps):
        values = closed_form_curve(eps, np.linspace(0.0, 1.0, 51))
        assert np.all(np.diff(values, 2) > 0)

    @pytest.mark.parametrize("eps", [2.0, 0.5])
    def test_argmin_is_a_grid_minimum(self, eps):
        u0, value = closed_form_argmin(eps)
        grid_values = closed_form_curve(eps, np.linspace(0.0, 1.0, 201))
        assert 0.0 <= u0 <= 1.0
        assert value <= grid_values.min() + 1e-12


class TestShooting:
    """Single shooting with RK4 and damped Newton."""

    def test_linear_problem(self):
        # y'' = y, y(0) = 1, y'(1) = 0 has y = cosh(t - 1) / cosh(1)
        problem = ShootingProblem(
            accel=lambda y: y,
            accel_dy=lambda y: 1.0,
            terminal=lambda y, yp: yp,
            terminal_grad=lambda y, yp: (0.0, 1.0),
            y0=1.0,
        )
        result = solve_shooting(problem, n_steps=400)
        assert result.slope == pytest.approx(-np.tanh(1.0), abs=1e-9)
        assert result.states[-1, 0] == pytest.approx(1.0 / np.cosh(1.0), abs=1e-9)
        assert list(result.history_frame().columns) == ["iteration", "slope", "residual"]

    def test_stationary_solution(self):
        result = shoot_el_result(0.5, 1.0)
        assert result.slope == pytest.approx(0.0, abs=1e-12)
        assert result.iterations == 1

    @pytest.mark.parametrize("eps,u", [(1.0, 2.0), (0.1, 0.5), (0.05, 1.2)])
    def test_euler_lagrange_residuals(self, eps, u):
        grid = TimeGrid(1.0, 100)
        result = shoot_el_result(eps, u, grid=grid)
        assert abs(result.residual) <= 1e-10
        assert result.ode_residual() < 1e-6
        traj = result.trajectory(grid)
        assert traj.initial[0] == pytest.approx(1.0)
        assert traj.slopes[-1, 0] + traj.terminal[0] ** 3 == pytest.approx(u, abs=0.05)

    def test_sampled_trajectory(self):
        grid = TimeGrid(1.0, 50)
        traj = shoot_el_nonlinear(0.5, 2.0, grid=grid)
        assert traj.grid == grid
        assert traj.initial[0] == pytest.approx(1.0)

    def test_grid_must_divide_substeps(self):
        result = shoot_el_result(0.5, 1.0, grid=TimeGrid(1.0, 100))
        with pytest.raises(ValueError):
            result.trajectory(TimeGrid(1.0, 7))

    def test_no_root_raises(self):
        problem = ShootingProblem(
            accel=lambda y: 0.0,
            accel_dy=lambda y: 0.0,
            terminal=lambda y, yp: yp ** 2 + 1.0,
            terminal_grad=lambda y, yp: (0.0, 2.0 * yp),
            y0=0.0,
        )
        with pytest.raises(SolverError):
            solve_shooting(problem, n_steps=10)

    def test_el_problem_validation(self):
        with pytest.raises(ValueError):
            el_problem(0.0, 1.0)
        assert el_problem(0.0, 1.0, include_F_term=False).accel(1.0) == pytest.approx(0.0)
