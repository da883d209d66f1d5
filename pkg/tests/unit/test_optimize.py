"""
Unit tests for control spaces, the penalized minimizers, the eps sweep and
the finite-difference gradient check.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from convex.potentials import Quadratic, Quartic
from convex.rates import PowerRate
from core.functions import const, exp_rate
from core.grid import TimeGrid, constant_control
from errors import UnsupportedModeError
from functionals import PenaltyKind, PenaltySpec, TargetFunctional
from optimize import (
    FreeNodal,
    MinimizeOptions,
    ParamFamily,
    SweepEntry,
    SweepReport,
    alternate_minimize_ben,
    check_sweep_properties,
    epsilon_sweep,
    gradient_check,
    minimize_penalized,
    minimize_trajectory,
    solve_reference,
    tabulate_curve,
)
from problems import linear_problem, quartic_problem
from solvers import LinearClosedForm, closed_form_argmin


@pytest.fixture
def fast_opts():
    return MinimizeOptions(max_iter=5000, gtol=1e-10, reference_n=200)


class TestControlSpaces:
    """Tests for parameterized and free control sets."""

    def test_family_realize_and_pullback(self, coarse_grid):
        space = ParamFamily(coarse_grid, [const(1.0), exp_rate(-1.0)], [0.0, -1.0], [1.0, 1.0])
        u = space.realize([0.5, 2.0])
        assert u.params.tolist() == [0.5, 2.0]
        assert u.values[0, 0] == pytest.approx(0.5 + 2.0 * np.exp(-coarse_grid.midpoints[0]))
        du = np.ones((coarse_grid.n_intervals, 1))
        grad = space.pullback(du, dparams=np.array([1.0, 0.0]))
        assert grad[0] == pytest.approx(coarse_grid.n_intervals + 1.0)
        assert grad[1] == pytest.approx(np.exp(-coarse_grid.midpoints).sum())

    def test_family_box(self, coarse_grid):
        space = ParamFamily(coarse_grid, [const(1.0)], -2.0, 3.0)
        assert space.center().tolist() == [0.5]
        assert space.project(np.array([7.0])).tolist() == [3.0]
        assert space.contains(np.array([0.0]))
        with pytest.raises(ValueError):
            ParamFamily(coarse_grid, [const(1.0)], 1.0, 0.0)
        with pytest.raises(ValueError):
            ParamFamily(coarse_grid, [], 0.0, 1.0)

    def test_free_nodal(self, coarse_grid):
        space = FreeNodal(coarse_grid, -1.0, 1.0)
        assert space.size == coarse_grid.n_intervals
        assert not space.is_parametric
        u = space.realize(np.linspace(-1.0, 1.0, space.size))
        assert np.array_equal(space.coordinates(u), np.linspace(-1.0, 1.0, space.size))
        assert space.on_grid(TimeGrid(1.0, 40)).size == 40


class TestMinimizeOptions:

    def test_defaults_and_updates(self):
        opts = MinimizeOptions(max_iter=10)
        assert opts.with_updates(multistart=3).multistart == 3
        assert opts.max_iter == 10

    def test_validation(self):
        with pytest.raises(ValidationError):
            MinimizeOptions(max_iter=0)
        with pytest.raises(ValidationError):
            MinimizeOptions(gtol=-1.0)


class TestMinimizeTrajectory:
    """The y-minimizer at a frozen control against the closed form."""

    @pytest.mark.parametrize("eps,u0", [(1.0, 0.5), (0.5, 0.2)])
    def test_linear_ben_matches_closed_form(self, linear_setup, fast_opts, eps, u0):
        u = linear_setup.space.realize([u0])
        y, report = minimize_trajectory(linear_setup.target, linear_setup.spec, eps, u, fast_opts)
        exact = LinearClosedForm(eps, u0)
        grid = linear_setup.grid
        assert np.max(np.abs(y.nodes[:, 0] - exact.y(grid.nodes))) < 1e-3
        assert report.E == pytest.approx(exact.energy(), rel=1e-3)
        assert report.history[-1] <= report.history[0]


class TestMinimizePenalized:
    """Joint minimization over the control family and the trajectory."""

    def test_linear_ben_argmin(self, linear_setup, fast_opts):
        u, y, report = minimize_penalized(linear_setup.target, linear_setup.spec, 0.5, linear_setup.space,
                                          fast_opts)
        u0, value = closed_form_argmin(0.5)
        assert u.params[0] == pytest.approx(u0, abs=1e-2)
        assert report.E == pytest.approx(value, rel=1e-3)
        assert report.G.is_finite
        assert report.E == pytest.approx(report.F + report.G.total / 0.5)

    def test_multistart_keeps_the_best(self, quartic_setup, fast_opts):
        single = minimize_penalized(quartic_setup.target, quartic_setup.spec, 0.5, quartic_setup.space,
                                    fast_opts)[2]
        multi = minimize_penalized(quartic_setup.target, quartic_setup.spec, 0.5, quartic_setup.space,
                                   fast_opts.with_updates(multistart=3, seed=7))[2]
        assert multi.starts == 3
        assert multi.E <= single.E + 1e-8

    def test_ben_dn_carries_auxiliary_rate(self, fast_opts):
        setup = linear_problem(n=20, kind="BEN_DN", rate=PowerRate(2.0, 1.0))
        u, y, report = minimize_penalized(setup.target, setup.spec, 1.0, setup.space, fast_opts)
        assert report.w is not None
        assert report.w.values.shape == (20, 1)
        assert np.isfinite(report.E)

    def test_generic_kind_is_rejected(self, coarse_grid, oscillator):
        spec = PenaltySpec(PenaltyKind.DG_GENERIC, system=oscillator, y0=[1.0, 0.0, 1.0])
        space = FreeNodal(coarse_grid, -1.0, 1.0, dim=3)
        with pytest.raises(UnsupportedModeError):
            minimize_penalized(TargetFunctional(), spec, 1.0, space)

    @pytest.mark.parametrize("make,kind", [(linear_problem, "BEN"), (linear_problem, "DG"),
                                           (quartic_problem, "DG"), (quartic_problem, "BEN")])
    def test_converged_means_small_projected_gradient(self, fast_opts, make, kind):
        setup = make(n=50, kind=kind)
        report = minimize_penalized(setup.target, setup.spec, 0.5, setup.space, fast_opts)[2]
        assert not report.converged or report.projected_gradient <= fast_opts.gtol * (1.0 + abs(report.E))

    def test_iteration_limit_is_not_convergence(self, fast_opts):
        setup = linear_problem(n=50)
        opts = fast_opts.with_updates(max_iter=2, spectral_fallback=False)
        report = minimize_penalized(setup.target, setup.spec, 0.5, setup.space, opts)[2]
        assert not report.converged
        assert report.projected_gradient > opts.gtol * (1.0 + abs(report.E))

    def test_argmin_invariant_under_objective_scale(self, fast_opts):
        setup = linear_problem(n=50)
        u1, _, r1 = minimize_penalized(setup.target, setup.spec, 0.5, setup.space, fast_opts)
        u10, _, r10 = minimize_penalized(setup.target, setup.spec, 0.5, setup.space,
                                         fast_opts.with_updates(objective_scale=10.0))
        assert u10.params[0] == pytest.approx(u1.params[0], abs=1e-4)
        assert r10.E == pytest.approx(r1.E, rel=1e-6)


class TestAlternateMinimization:
    """Alternate y/u minimization of F + G_BEN / eps."""

    def test_history_never_increases(self, fast_opts):
        setup = linear_problem(n=50)
        u, y, report = alternate_minimize_ben(setup.target, setup.spec, 1.0, setup.space,
                                              fast_opts.with_updates(max_cycles=50))
        history = np.array(report.history)
        assert np.all(np.diff(history) <= 1e-12)
        assert history[-1] < history[0]
        assert report.method == "alternate"

    def test_selected_through_options(self, fast_opts):
        setup = linear_problem(n=20)
        report = minimize_penalized(setup.target, setup.spec, 1.0, setup.space,
                                    fast_opts.with_updates(alternate=True, max_cycles=5))[2]
        assert report.method == "alternate"

    @pytest.mark.parametrize("eps", [1.0, 0.1])
    def test_agrees_with_joint_minimization(self, fast_opts, eps):
        setup = linear_problem(n=50)
        joint = minimize_penalized(setup.target, setup.spec, eps, setup.space, fast_opts)[2]
        alternate = alternate_minimize_ben(setup.target, setup.spec, eps, setup.space, fast_opts)[2]
        assert abs(alternate.E - joint.E) <= 1e-6

    def test_needs_ben(self, quartic_setup):
        with pytest.raises(UnsupportedModeError):
            alternate_minimize_ben(quartic_setup.target, quartic_setup.spec, 1.0, quartic_setup.space)


class TestReference:
    """The constrained optimum by forward solves."""

    def test_linear_reference(self, linear_setup):
        ref = solve_reference(linear_setup.target, linear_setup.spec, linear_setup.space, n_ref=200)
        assert ref.params[0] == pytest.approx(0.5, abs=5e-3)
        assert ref.value == pytest.approx(1.0 / 16.0 - 5.0 / (16.0 * np.e ** 2), abs=1e-3)

    def test_quartic_reference(self, quartic_setup):
        ref = solve_reference(quartic_setup.target, quartic_setup.spec, quartic_setup.space, n_ref=400)
        # y' + y^3 = u pushes y above 1 for u > 1, so the optimum sits between 1.5 and 2
        assert 1.5 < ref.params[0] < 2.0
        assert 0.0 < ref.value < 0.05
        assert ref.trajectory.initial[0] == pytest.approx(1.0)
        scan = tabulate_curve(quartic_setup.target, quartic_setup.spec, quartic_setup.space.on_grid(TimeGrid(1.0, 400)),
                              0.0, np.linspace(1.0, 2.0, 11))
        assert ref.value <= scan["E"].min() + 2e-3

    def test_free_controls_have_no_reference(self, coarse_grid):
        spec = PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0])
        with pytest.raises(UnsupportedModeError):
            solve_reference(TargetFunctional(y_weight=const(1.0)), spec, FreeNodal(coarse_grid, -1.0, 1.0))


class TestEpsilonSweep:
    """The eps -> 0 harness."""

    def test_linear_sweep(self, fast_opts, tmp_path):
        setup = linear_problem(n=50)
        report = epsilon_sweep(setup.target, setup.spec, setup.space, [2.0, 1.0, 0.5], fast_opts)
        assert [e.eps for e in report.entries] == [2.0, 1.0, 0.5]
        assert all(e.ok for e in report.entries)
        frame = report.to_frame()
        assert list(frame.columns) == ["eps", "param_or_norm_u", "E", "F", "G", "iters", "converged"]
        assert frame["eps"].tolist() == [2.0, 1.0, 0.5, 0.0]
        assert frame["param_or_norm_u"].iloc[-1] == pytest.approx(0.5, abs=1e-2)
        assert set(report.properties) == {"g_monotone", "penalty_bounded", "gap_monotone"}
        for entry in report.entries:
            u0, _ = closed_form_argmin(entry.eps)
            assert entry.control.params[0] == pytest.approx(u0, abs=2e-2)
        written = report.write_trajectories(tmp_path)
        assert (tmp_path / "trajectory_eps0.5.csv") in written
        assert report.write_csv(tmp_path / "sweep.csv").is_file()

    def test_warm_start_matches_cold_start(self, fast_opts):
        setup = linear_problem(n=50)
        warm = epsilon_sweep(setup.target, setup.spec, setup.space, [1.0, 0.5], fast_opts, reference=False)
        cold = epsilon_sweep(setup.target, setup.spec, setup.space, [1.0, 0.5],
                             fast_opts.with_updates(warm_start=False), reference=False)
        for a, b in zip(warm.entries, cold.entries):
            assert a.E == pytest.approx(b.E, abs=1e-8)
            assert a.control.params[0] == pytest.approx(b.control.params[0], abs=1e-4)

    def test_quartic_sweep_properties(self, quartic_setup, fast_opts):
        report = epsilon_sweep(quartic_setup.target, quartic_setup.spec, quartic_setup.space,
                               quartic_setup.eps_list, fast_opts)
        assert all(e.ok for e in report.entries)
        assert all(check_sweep_properties(report).values())
        gaps = report.gaps()
        assert gaps[-1] < gaps[0]

    def test_rejects_bad_eps_lists(self, linear_setup):
        for eps_list in ([], [1.0, 1.0], [0.5, 1.0], [1.0, -0.1]):
            with pytest.raises(ValueError):
                epsilon_sweep(linear_setup.target, linear_setup.spec, linear_setup.space, eps_list)

    def test_free_controls_need_reference_off(self, coarse_grid, fast_opts):
        spec = PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0])
        F = TargetFunctional(y_weight=const(1.0), u_weight=const(1.0))
        space = FreeNodal(coarse_grid, -1.0, 1.0)
        with pytest.raises(UnsupportedModeError):
            epsilon_sweep(F, spec, space, [1.0], fast_opts)
        report = epsilon_sweep(F, spec, space, [1.0, 0.5], fast_opts, reference=False)
        assert report.reference is None
        assert len(report.to_frame()) == 2


class TestSweepProperties:
    """Checks on hand-built sweep reports."""

    @staticmethod
    def entry(grid, eps, param, g):
        from functionals import GValue
        return SweepEntry(eps=eps, control=constant_control(grid, param), E=1.0, F=1.0,
                          G=GValue(kind="BEN", total=g))

    def test_monotone_sweep(self, coarse_grid):
        report = SweepReport([self.entry(coarse_grid, 1.0, 0.0, 0.1), self.entry(coarse_grid, 0.5, 0.0, 0.01)])
        properties = check_sweep_properties(report)
        assert properties["g_monotone"]
        assert properties["penalty_bounded"]

    def test_growing_penalty(self, coarse_grid):
        report = SweepReport([self.entry(coarse_grid, 1.0, 0.0, 0.01), self.entry(coarse_grid, 0.5, 0.0, 0.5)])
        assert not check_sweep_properties(report)["g_monotone"]

    def test_failed_entries_are_skipped(self, coarse_grid):
        report = SweepReport([SweepEntry(eps=1.0, error="boom"), self.entry(coarse_grid, 0.5, 0.0, 0.01)])
        assert all(check_sweep_properties(report).values())
        assert np.isnan(report.to_frame()["param_or_norm_u"].iloc[0])


class TestCurves:
    """E_eps along a one-parameter family."""

    def test_constrained_curve(self, quartic_setup):
        frame = tabulate_curve(quartic_setup.target, quartic_setup.spec, quartic_setup.space, 0.0,
                               [0.5, 1.0, 1.5])
        assert list(frame.columns) == ["eps", "u_param", "E"]
        assert frame["E"].iloc[1] < frame["E"].iloc[0]
        assert frame["E"].iloc[1] < frame["E"].iloc[2]

    def test_penalized_curve(self, linear_setup, fast_opts):
        frame = tabulate_curve(linear_setup.target, linear_setup.spec, linear_setup.space, 1.0,
                               [0.2, 0.5], fast_opts)
        for u0, value in zip(frame["u_param"], frame["E"]):
            assert value == pytest.approx(LinearClosedForm(1.0, u0).energy(), rel=1e-3)

    def test_needs_one_parameter(self, coarse_grid):
        spec = PenaltySpec(PenaltyKind.DG, Quartic(), y0=[1.0])
        with pytest.raises(UnsupportedModeError):
            tabulate_curve(TargetFunctional(), spec, FreeNodal(coarse_grid, -1.0, 1.0), 1.0, [0.0])

    def test_negative_eps(self, linear_setup):
        with pytest.raises(ValueError):
            tabulate_curve(linear_setup.target, linear_setup.spec, linear_setup.space, -1.0, [0.5])


class TestGradientCheck:
    """The analytic gradient passes the finite-difference check."""

    @pytest.mark.parametrize("setup", [
        linear_problem(n=20),
        linear_problem(n=20, kind="BEN_AUG"),
        linear_problem(n=20, kind="BEN_DN", rate=PowerRate(2.0, 1.0)),
        quartic_problem(n=20),
        quartic_problem(n=20, kind="DG_RATE", rate=PowerRate(2.0, 1.0, 2.0)),
    ])
    def test_passes(self, setup):
        report = gradient_check(setup.target, setup.spec, setup.space, setup.eps_list, n_points=4, seed=3)
        assert report.passed
        assert len(report.samples) == 4
        assert report.to_frame().shape == (4, 5)

    def test_single_interval_grid(self):
        setup = quartic_problem(n=1)
        report = gradient_check(setup.target, setup.spec, setup.space, [1.0], n_points=2)
        assert report.passed
