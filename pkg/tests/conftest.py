"""
Pytest configuration and fixtures.
"""
import pytest
import sys
from pathlib import Path

import numpy as np

# Add src to path
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))


@pytest.fixture
def grid():
    """Unit horizon with 200 intervals."""
    from core.grid import TimeGrid
    return TimeGrid(1.0, 200)


@pytest.fixture
def coarse_grid():
    """Unit horizon with 20 intervals, for finite-difference heavy tests."""
    from core.grid import TimeGrid
    return TimeGrid(1.0, 20)


@pytest.fixture
def quadratic():
    from convex.potentials import Quadratic
    return Quadratic(1.0)


@pytest.fixture
def quartic():
    from convex.potentials import Quartic
    return Quartic()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def linear_setup():
    """The linear tracking problem with the BEN penalty on 100 intervals."""
    from problems import linear_problem
    return linear_problem(n=100)


@pytest.fixture
def quartic_setup():
    """The quartic tracking problem with the DG penalty on 100 intervals."""
    from problems import quartic_problem
    return quartic_problem(n=100)


@pytest.fixture
def oscillator():
    """Thermalized oscillator with nu = lam = kappa = 1."""
    from generic import OscillatorParams, build_oscillator
    return build_oscillator(OscillatorParams(nu=1.0, lam=1.0, kappa=1.0))


@pytest.fixture
def crank_nicolson():
    """
    Factory for the midpoint-rule solution of y' + lam y = u, for which the
    BEN and DG functionals with phi = lam y^2/2 vanish exactly.
    """
    from core.grid import Trajectory

    def build(u, lam=1.0, y0=1.0):
        dt = u.grid.dt
        nodes = [y0]
        for k in range(u.grid.n_intervals):
            y = nodes[-1]
            nodes.append(((1.0 - 0.5 * dt * lam) * y + dt * u.values[k, 0]) / (1.0 + 0.5 * dt * lam))
        return Trajectory(u.grid, np.array(nodes))

    return build


@pytest.fixture
def write_config(tmp_path):
    """Write an INI run configuration and return its path."""
    def write(text, name="run.ini"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write
