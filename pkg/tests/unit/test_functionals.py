"""
Unit tests for the target functional, the constraining functionals and the
penalized energy with its gradient.
"""
import numpy as np
import pytest

from convex.ops import signed_chain_rule_defect
from convex.potentials import AbsValue, Quadratic, Quartic
from convex.rates import PowerRate
from core.functions import const, exp_rate
from core.grid import Control, TimeGrid, Trajectory, constant_control, constant_trajectory, sample_control
from errors import EvaluationError, UnsupportedModeError
from functionals import (
    PenalizedEnergy,
    PenaltyKind,
    PenaltySpec,
    TargetFunctional,
    eval_G,
    eval_G_BEN,
    eval_G_BEN_aug,
    eval_G_DG,
    eval_G_DG_rate,
    eval_G_BEN_dn,
    eval_F,
    grad_E,
)
from optimize import matching_rate
from solvers import ForwardProblem, forward_solve, forward_solve_rate

SAMPLES = 10_000


def random_pair(grid, rng, y0=1.0, scale=0.5):
    """Random control and trajectory with node 0 pinned to y0."""
    u = Control(grid, rng.normal(size=grid.n_intervals))
    nodes = np.concatenate([[y0], y0 + scale * rng.normal(size=grid.n_intervals)])
    return u, Trajectory(grid, nodes)


class TestTargetFunctional:
    """Tests for the midpoint-rule tracking functional."""

    def test_constant_residual(self, grid):
        F = TargetFunctional(y_weight=const(1.0), y_ref=const(0.0))
        y = constant_trajectory(grid, 2.0)
        u = constant_control(grid, 0.0)
        assert F.value(u, y) == pytest.approx(2.0)
        assert eval_F(F, u, y) == pytest.approx(2.0)

    def test_control_and_parameter_terms(self, grid):
        F = TargetFunctional(u_weight=const(2.0), u_ref=const(1.0), param_weight=1.0, param_ref=[2.0])
        u = Control(grid, np.full(grid.n_intervals, 3.0), params=[3.0])
        y = constant_trajectory(grid, 0.0)
        # 1/2 * 2 * (3 - 1)^2 + 1/2 * (3 - 2)^2
        assert F.value(u, y) == pytest.approx(4.5)

    def test_partials_match_value(self, coarse_grid, rng):
        F = TargetFunctional(y_weight=const(1.0), y_ref=exp_rate(-1.0), dy_weight=const(0.5),
                             u_weight=const(1.0), u_ref=exp_rate(-1.0))
        u, y = random_pair(coarse_grid, rng)
        f_m, f_v, f_u, dparams = F.partials(u, y)
        assert dparams is None
        h = 1e-6
        du_fd = (F.value(Control(coarse_grid, u.values + h * np.eye(20)[3][:, None]), y)
                 - F.value(Control(coarse_grid, u.values - h * np.eye(20)[3][:, None]), y)) / (2 * h)
        assert coarse_grid.dt * f_u[3, 0] == pytest.approx(du_fd, rel=1e-6)

    def test_negative_parameter_weight(self):
        with pytest.raises(ValueError):
            TargetFunctional(param_weight=-1.0)


class TestPenaltyOnSolutions:
    """G vanishes on discrete solutions of y' + lam y = u."""

    @pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
    def test_ben_and_dg_vanish_on_crank_nicolson(self, grid, crank_nicolson, lam):
        u = sample_control(grid, lambda t: np.exp(-t))
        y = crank_nicolson(u, lam=lam)
        spec = PenaltySpec(PenaltyKind.BEN, Quadratic(lam), y0=[1.0])
        assert eval_G_BEN(spec, u, y).total == pytest.approx(0.0, abs=1e-12)
        assert eval_G_DG(spec, u, y).total == pytest.approx(0.0, abs=1e-12)
        assert eval_G_BEN_aug(spec, u, y).total == pytest.approx(0.0, abs=1e-12)

    def test_breakdown_adds_up(self, grid, crank_nicolson):
        u = sample_control(grid, lambda t: 1.0 + t)
        y = crank_nicolson(u)
        g = eval_G(PenaltySpec("BEN", Quadratic(1.0), y0=[1.0]), u, y)
        assert g.is_finite
        assert g.total == pytest.approx(g.integral_main + g.integral_cross + g.boundary + g.positive_part)
        assert set(g.to_row()) == {"total", "integral_main", "integral_cross", "boundary", "feasible",
                                   "positive_part"}

    def test_row_carries_positive_part(self, coarse_grid, rng):
        spec = PenaltySpec(PenaltyKind.BEN_AUG, Quartic(), y0=[1.0])
        for _ in range(5):
            u, y = random_pair(coarse_grid, rng)
            g = eval_G(spec, u, y)
            row = g.to_row()
            assert row["positive_part"] == g.positive_part >= 0.0
            assert row["total"] == pytest.approx(row["integral_main"] + row["integral_cross"] + row["boundary"]
                                                 + row["positive_part"])

    def test_abs_potential_rest_state(self, grid):
        spec = PenaltySpec(PenaltyKind.DG, AbsValue(1.0), y0=[0.0])
        y = constant_trajectory(grid, 0.0)
        assert spec.minimal_section
        assert eval_G(spec, constant_control(grid, 0.5), y).total == pytest.approx(0.0, abs=1e-14)
        assert eval_G(spec, constant_control(grid, 2.0), y).total == pytest.approx(0.5)


class TestNullMinimization:
    """G along implicit-Euler solutions is positive and second order in dt."""

    SIZES = (50, 100, 200, 400)

    @staticmethod
    def orders(values):
        values = np.asarray(values)
        return np.log2(values[:-1] / values[1:])

    @pytest.mark.parametrize("kind,potential", [
        (PenaltyKind.BEN, Quadratic(1.0)),
        (PenaltyKind.BEN_AUG, Quadratic(1.0)),
        (PenaltyKind.DG, Quadratic(1.0)),
        (PenaltyKind.BEN, Quartic()),
        (PenaltyKind.DG, Quartic()),
    ])
    def test_gradient_flow(self, kind, potential):
        spec = PenaltySpec(kind, potential, y0=[1.0])
        values = []
        for n in self.SIZES:
            u = constant_control(TimeGrid(1.0, n), 0.0)
            y = forward_solve(ForwardProblem(potential, spec.y0, u))
            values.append(eval_G(spec, u, y).total)
        assert all(v > 0 for v in values)
        assert np.min(self.orders(values)) >= 1.8

    @pytest.mark.parametrize("kind", [PenaltyKind.BEN_DN, PenaltyKind.DG_RATE])
    def test_quartic_rate_flow(self, kind):
        spec = PenaltySpec(kind, Quadratic(1.0), y0=[0.0], rate=PowerRate(4.0, 1.0))
        values = []
        for n in self.SIZES:
            u = constant_control(TimeGrid(1.0, n), 3.0)
            y = forward_solve_rate(ForwardProblem(spec.potential, spec.y0, u, rate=spec.rate))
            values.append(eval_G(spec, u, y, matching_rate(spec, y)).total)
        assert all(v > 0 for v in values)
        assert np.min(self.orders(values)) >= 1.8


class TestPenaltyInequalities:
    """Sign properties of the discrete functionals at arbitrary points."""

    @pytest.mark.parametrize("potential", [Quadratic(1.0), Quadratic(2.5), Quartic()])
    def test_ben_nonnegative(self, coarse_grid, rng, potential):
        spec = PenaltySpec(PenaltyKind.BEN, potential, y0=[1.0])
        for _ in range(10):
            u, y = random_pair(coarse_grid, rng)
            assert eval_G(spec, u, y).total >= -1e-12

    def test_dg_nonnegative_for_quadratic(self, coarse_grid, rng):
        spec = PenaltySpec(PenaltyKind.DG, Quadratic(1.5), y0=[1.0])
        for _ in range(10):
            u, y = random_pair(coarse_grid, rng)
            assert eval_G(spec, u, y).total >= -1e-12

    def test_dg_bounded_by_chain_rule_defect(self, coarse_grid, rng, quartic):
        spec = PenaltySpec(PenaltyKind.DG, quartic, y0=[1.0])
        for _ in range(10):
            u, y = random_pair(coarse_grid, rng)
            assert eval_G(spec, u, y).total >= signed_chain_rule_defect(quartic, y) - 1e-12

    @pytest.mark.parametrize("kind", [PenaltyKind.BEN, PenaltyKind.BEN_AUG, PenaltyKind.BEN_DN])
    @pytest.mark.parametrize("potential", [Quadratic(1.0), Quartic()])
    def test_ben_family_nonnegative_when_sampled(self, rng, kind, potential):
        grid = TimeGrid(1.0, 8)
        spec = PenaltySpec(kind, potential, y0=[1.0], rate=PowerRate(3.0, 0.5))
        worst = np.inf
        for _ in range(SAMPLES):
            u, y = random_pair(grid, rng, scale=rng.uniform(0.05, 2.0))
            w = Control(grid, 2.0 * rng.normal(size=grid.n_intervals)) if kind == PenaltyKind.BEN_DN else None
            worst = min(worst, eval_G(spec, u, y, w).total)
        assert worst >= -1e-9

    @pytest.mark.parametrize("kind,rate", [(PenaltyKind.DG, None), (PenaltyKind.DG_RATE, PowerRate(3.0, 0.5, 2.0))])
    def test_dg_family_nonnegative_when_sampled(self, rng, kind, rate):
        grid = TimeGrid(1.0, 8)
        spec = PenaltySpec(kind, Quadratic(1.5), y0=[1.0], rate=rate)
        worst = np.inf
        for _ in range(SAMPLES):
            u, y = random_pair(grid, rng, scale=rng.uniform(0.05, 2.0))
            worst = min(worst, eval_G(spec, u, y).total)
        assert worst >= -1e-9

    def test_quartic_dg_above_defect_when_sampled(self, rng, quartic):
        grid = TimeGrid(1.0, 8)
        spec = PenaltySpec(PenaltyKind.DG, quartic, y0=[1.0])
        for _ in range(SAMPLES):
            u, y = random_pair(grid, rng, scale=rng.uniform(0.05, 2.0))
            assert eval_G(spec, u, y).total >= signed_chain_rule_defect(quartic, y) - 1e-9

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_dg_is_lam_times_ben(self, coarse_grid, rng, lam):
        spec = PenaltySpec(PenaltyKind.BEN, Quadratic(lam), y0=[1.0])
        for _ in range(5):
            u, y = random_pair(coarse_grid, rng)
            ben = eval_G_BEN(spec, u, y).total
            dg = eval_G_DG(spec, u, y).total
            assert lam * ben == pytest.approx(dg, rel=1e-10, abs=1e-12)

    def test_dg_rate_reduces_to_dg(self, coarse_grid, rng, quartic):
        dg = PenaltySpec(PenaltyKind.DG, quartic, y0=[1.0])
        dg_rate = PenaltySpec(PenaltyKind.DG_RATE, quartic, y0=[1.0], rate=PowerRate(2.0, 1.0))
        u, y = random_pair(coarse_grid, rng)
        assert eval_G_DG_rate(dg_rate, u, y).total == pytest.approx(eval_G(dg, u, y).total, rel=1e-12)

    def test_ben_dn_wrapper(self, coarse_grid, rng):
        spec = PenaltySpec(PenaltyKind.BEN_DN, Quadratic(1.0), y0=[1.0], rate=PowerRate(2.0, 1.0))
        u, y = random_pair(coarse_grid, rng)
        w = Control(coarse_grid, y.slopes)
        assert eval_G_BEN_dn(spec, u, y, w).total == pytest.approx(eval_G(spec, u, y, w).total)


class TestPenaltySentinels:
    """Extended-real values and bad inputs."""

    def test_initial_condition_violated(self, grid):
        spec = PenaltySpec(PenaltyKind.BEN, Quadratic(1.0), y0=[1.0])
        g = eval_G(spec, constant_control(grid, 0.0), constant_trajectory(grid, 2.0))
        assert np.isinf(g.total)
        assert not g.feasible
        assert "initial condition" in g.reason

    def test_conjugate_outside_domain_names_interval(self, grid):
        spec = PenaltySpec(PenaltyKind.BEN, AbsValue(1.0), y0=[0.0])
        values = np.zeros(grid.n_intervals)
        values[7] = 5.0
        g = eval_G(spec, Control(grid, values), constant_trajectory(grid, 0.0))
        assert np.isinf(g.total)
        assert g.interval == 7
        assert g.feasible

    def test_energy_is_infinite_with_g(self, grid):
        energy = PenalizedEnergy(TargetFunctional(y_weight=const(1.0)),
                                 PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0]), eps=0.1)
        value, f, g = energy.evaluate(constant_control(grid, 0.0), constant_trajectory(grid, 0.0))
        assert np.isinf(value)
        assert f == pytest.approx(0.0)
        assert not g.is_finite

    def test_grid_mismatch(self):
        spec = PenaltySpec(PenaltyKind.BEN, Quadratic(1.0), y0=[1.0])
        with pytest.raises(EvaluationError):
            eval_G(spec, constant_control(TimeGrid(1.0, 10), 0.0), constant_trajectory(TimeGrid(1.0, 20), 1.0))

    def test_ben_dn_needs_w(self, coarse_grid):
        spec = PenaltySpec(PenaltyKind.BEN_DN, Quadratic(1.0), y0=[1.0], rate=PowerRate(2.0, 1.0))
        with pytest.raises(EvaluationError):
            eval_G(spec, constant_control(coarse_grid, 0.0), constant_trajectory(coarse_grid, 1.0))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            PenaltySpec(PenaltyKind.BEN_DN, Quadratic(1.0), y0=[1.0], rate=PowerRate(2.0, 1.0, 2.0))
        with pytest.raises(ValueError):
            PenaltySpec(PenaltyKind.DG_RATE, Quartic(), y0=[1.0])
        with pytest.raises(ValueError):
            PenaltySpec(PenaltyKind.BEN, Quadratic(1.0))
        with pytest.raises(ValueError):
            PenaltySpec("HEAT", Quadratic(1.0), y0=[1.0])


class TestEnergyGradient:
    """The analytic gradient of E_eps agrees with central differences."""

    TARGET = TargetFunctional(y_weight=const(1.0), y_ref=exp_rate(-1.0), u_weight=const(0.5),
                              u_ref=exp_rate(-1.0))

    @staticmethod
    def fd_check(energy, u, y, w=None, h=1e-6):
        grad = energy.gradient(u, y, w)
        n = y.grid.n_intervals
        for k in (0, n // 2, n - 1):
            nodes = y.nodes.copy()
            nodes[k + 1, 0] += h
            up = energy.value(u, y.with_nodes(nodes), w)
            nodes[k + 1, 0] -= 2 * h
            down = energy.value(u, y.with_nodes(nodes), w)
            assert grad.dy[k, 0] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-7)

            values = u.values.copy()
            values[k, 0] += h
            up = energy.value(Control(u.grid, values), y, w)
            values[k, 0] -= 2 * h
            down = energy.value(Control(u.grid, values), y, w)
            assert grad.du[k, 0] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-7)
        return grad

    @pytest.mark.parametrize("kind,potential,rate", [
        ("BEN", Quadratic(1.0), None),
        ("BEN", Quartic(), None),
        ("DG", Quartic(), None),
        ("DG_RATE", Quartic(), PowerRate(2.0, 1.0, 2.0)),
        ("DG_RATE", Quadratic(1.0), PowerRate(3.0, 0.5)),
    ])
    def test_matches_finite_differences(self, coarse_grid, rng, kind, potential, rate):
        energy = PenalizedEnergy(self.TARGET, PenaltySpec(kind, potential, y0=[1.0], rate=rate), eps=0.5)
        u, y = random_pair(coarse_grid, rng)
        self.fd_check(energy, u, y)

    def test_ben_dn_auxiliary_gradient(self, coarse_grid, rng):
        spec = PenaltySpec(PenaltyKind.BEN_DN, Quadratic(1.0), y0=[1.0], rate=PowerRate(2.0, 1.0))
        energy = PenalizedEnergy(self.TARGET, spec, eps=0.5)
        u, y = random_pair(coarse_grid, rng)
        w = Control(coarse_grid, rng.normal(size=coarse_grid.n_intervals))
        grad = self.fd_check(energy, u, y, w)
        h = 1e-6
        values = w.values.copy()
        values[4, 0] += h
        up = energy.value(u, y, Control(coarse_grid, values))
        values[4, 0] -= 2 * h
        down = energy.value(u, y, Control(coarse_grid, values))
        assert grad.dw[4, 0] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-7)

    def test_parameter_term_gradient(self, coarse_grid):
        F = TargetFunctional(param_weight=2.0, param_ref=[1.0])
        u = Control(coarse_grid, np.full(coarse_grid.n_intervals, 3.0), params=[3.0])
        y = constant_trajectory(coarse_grid, 1.0)
        grad = grad_E(F, PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0]), 1.0, u, y)
        assert grad.dparams.tolist() == pytest.approx([4.0])

    def test_infinite_point_raises(self, coarse_grid):
        with pytest.raises(EvaluationError):
            grad_E(self.TARGET, PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0]), 1.0,
                   constant_control(coarse_grid, 0.0), constant_trajectory(coarse_grid, 0.0))

    def test_generic_mode_has_no_gradient(self, coarse_grid, oscillator):
        spec = PenaltySpec(PenaltyKind.DG_GENERIC, system=oscillator, y0=[1.0, 0.0, 1.0])
        with pytest.raises(UnsupportedModeError):
            grad_E(TargetFunctional(), spec, 1.0, constant_control(coarse_grid, [0.0, 0.0, 0.0]),
                   constant_trajectory(coarse_grid, [1.0, 0.0, 1.0]))

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            PenalizedEnergy(self.TARGET, PenaltySpec(PenaltyKind.DG, Quadratic(1.0), y0=[1.0]), eps=0.0)
