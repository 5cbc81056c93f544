import math

import numpy as np
import pytest

from rcns.characteristics import (
    cross_check_v,
    flow_map,
    synthetic_trajectory,
    v_closed_form,
)
from rcns.errors import DomainError
from rcns.grid import RadialGrid
from rcns.model import FluidState, ModelParams
from rcns.solver import SolverConfig, integrate

TIMES = np.linspace(0.0, 1.0, 101)


@pytest.fixture
def grid():
    return RadialGrid.uniform(400, 10.0, 2)


def test_zero_velocity_paths_are_fixed(grid):
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: np.exp(-r), lambda t, r: 0 * r, ModelParams())
    path = flow_map(traj, 2.5)
    np.testing.assert_array_equal(path.eta, 2.5)
    assert path.exit_time is None


def test_linear_velocity_gives_exponential_paths(grid):
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, lambda t, r: r, ModelParams())
    for r0 in (0.5, 1.0, 3.0):
        path = flow_map(traj, r0)
        np.testing.assert_allclose(path.eta, r0 * np.exp(path.t), rtol=1e-8)


def test_centre_is_pinned(grid):
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, lambda t, r: r, ModelParams())
    assert np.all(flow_map(traj, 0.0).eta == 0.0)


def test_paths_that_leave_the_domain_are_truncated(grid):
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, lambda t, r: r, ModelParams())
    path = flow_map(traj, 5.0)
    assert path.exit_time == pytest.approx(math.log(2.0), abs=0.02)
    assert path.t[-1] < path.exit_time and np.all(path.eta <= 10.0)


def test_seed_outside_grid_is_rejected(grid):
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, lambda t, r: 0 * r, ModelParams())
    with pytest.raises(DomainError):
        flow_map(traj, 11.0)


def test_paths_are_ordered_and_monotone_for_outflow(grid):
    u = lambda t, r: 0.3 * r * np.exp(-0.1 * r * r) * (1 + t)  # noqa: E731
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, u, ModelParams())
    paths = flow_map(traj, np.linspace(0.2, 6.0, 15))
    eta = np.array([p.eta for p in paths])
    assert np.all(np.diff(eta, axis=0) > 0)  # never cross
    assert np.all(np.diff(eta, axis=1) >= 0)  # u >= 0: nondecreasing in t


def test_static_density_decay(grid):
    # u = 0, rho static: v(t) = v0 exp(-k rho^(gamma-1) t)
    p = ModelParams(alpha=0.5, gamma=2.0, A=1.0)
    rho = lambda t, r: np.exp(-0.1 * r * r)  # noqa: E731
    traj = synthetic_trajectory(grid, TIMES, rho, lambda t, r: 0 * r, p)
    r0 = 2.0
    path = v_closed_form(traj, p, r0)
    v0 = 2 * p.alpha * (-0.2 * r0)
    exact = v0 * np.exp(-p.sound_coefficient * math.exp(-0.1 * r0 * r0) * path.t)
    np.testing.assert_allclose(path.v_closed, exact, rtol=1e-6)
    np.testing.assert_allclose(path.v_direct, exact, rtol=1e-6)


def test_constant_forcing_closed_form(grid):
    # rho^(gamma-1) = 1, u = 1 along the path, k = 1, v0 = 0: v = 1 - e^{-t}
    p = ModelParams(alpha=1.0, gamma=2.0, A=1.0)
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: 1 + 0 * r, lambda t, r: np.minimum(r, 1.0), p)
    path = v_closed_form(traj, p, 3.0, v0=0.0)
    exact = 1 - np.exp(-path.t)
    assert np.max(np.abs(path.v_closed - exact)) < 1e-8
    assert np.max(np.abs(path.v_closed - path.v_direct)) < 1e-8


def test_closed_form_positivity():
    g = RadialGrid.uniform(200, 8.0, 2)
    p = ModelParams()
    u = lambda t, r: r * np.exp(-r * r / 4)  # noqa: E731
    traj = synthetic_trajectory(g, TIMES, lambda t, r: 0.5 + 0.1 * np.cos(t) * np.exp(-r), u, p)
    paths = v_closed_form(traj, p, np.linspace(0.5, 4, 8), v0=0.2)
    assert all(np.all(path.v_closed >= 0) for path in paths)


def test_equilibrium_cross_check_is_exact():
    g = RadialGrid.uniform(128, 10.0, 2)
    p = ModelParams(rho_bar=1.0)
    s = FluidState(g, np.ones_like(g.r), np.zeros_like(g.r))
    traj = integrate(s, p, SolverConfig(T=0.5), tail=(1.0, 0.0))
    rep = cross_check_v(traj, p, np.linspace(0.5, 5.0, 10))
    assert rep.worst == 0.0 and np.all(rep.max_direct_gap == 0.0)


def test_path_rows_match_columns(grid):
    p = ModelParams()
    traj = synthetic_trajectory(grid, TIMES, lambda t, r: np.exp(-0.1 * r * r), lambda t, r: 0 * r, p)
    path = v_closed_form(traj, p, 1.0)
    rows = path.rows()
    assert len(rows) == len(path.t) and len(rows[0]) == 5
    assert rows[0][4] == pytest.approx(abs(path.v_closed[0] - path.v_grid[0]))
