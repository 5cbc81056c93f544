import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from rcns.diagnostics import (
    NormSpec,
    bd_entropy,
    bound_monitor,
    effective_velocity,
    energy,
    j_gamma,
    j_gamma_energy,
    radial_momentum,
    sample,
    total_mass,
    vector_momentum,
    weighted_uv_norms,
)
from rcns.errors import DomainError, FloorWarning, RegimeError
from rcns.grid import RadialGrid
from rcns.model import FluidState, ModelParams, make_initial_profile, smooth_bump
from rcns.solver import SolverConfig, Trajectory, integrate


def state(grid, rho, u=None):
    rho = rho(grid.r) if callable(rho) else rho
    u = np.zeros_like(grid.r) if u is None else (u(grid.r) if callable(u) else u)
    return FluidState(grid, rho, u)


def test_mass_of_unit_disk_and_ball():
    # indicator of [0,1] aligned with a cell face of the dual mesh
    for n, exact in ((2, math.pi), (3, 4 * math.pi / 3)):
        g = RadialGrid.uniform(200, 2.0, n)
        w = np.asarray(g.volume_weights)
        rho = np.where(g.r < 1.0, 1.0, 0.0)
        assert total_mass(state(g, rho)) == pytest.approx(exact, rel=0.02)
        # dual cells: mass of the cells fully inside r < 1 is exact
        inner = g.omega * w[g.r < 1.0].sum()
        assert inner == pytest.approx(g.omega * (1.0 - 0.5 * 0.01) ** n / n, rel=1e-12)


def test_mass_of_gaussian():
    g = RadialGrid.uniform(20_000, 40.0, 2)
    s = state(g, lambda r: np.exp(-r * r))
    assert total_mass(s, rule="simpson") == pytest.approx(math.pi, abs=1e-10)
    # the conserved dual-cell mass is second order in h = 0.002
    assert total_mass(s) == pytest.approx(math.pi, rel=0.2 * 0.002**2)
    with pytest.raises(DomainError):
        total_mass(s, rule="gauss")


def test_momentum_examples():
    g = RadialGrid.uniform(100, 1.0, 3)
    assert radial_momentum(state(g, np.ones_like(g.r))) == 0.0
    s = state(g, np.ones_like(g.r), lambda r: r)
    assert radial_momentum(s) == pytest.approx(0.25, abs=1e-14)
    assert np.array_equal(vector_momentum(s), np.zeros(3))


@pytest.mark.parametrize("n", [2, 3])
def test_vector_momentum_is_zero_for_radial_states(n):
    g = RadialGrid.uniform(50, 5.0, n)
    s = make_initial_profile("algebraic", ModelParams(n=n), g, iota=4.0, u_amp=3.0)
    P = vector_momentum(s)
    assert P.shape == (n,) and np.all(P == 0.0)


def test_effective_velocity_examples():
    g = RadialGrid.uniform(400, 4.0, 2)
    v = effective_velocity(state(g, np.full(g.r.shape, 2.0)), ModelParams())
    np.testing.assert_allclose(v.values, 0.0, atol=1e-13)
    v = effective_velocity(state(g, lambda r: np.exp(-r * r)), ModelParams(alpha=1.0))
    np.testing.assert_allclose(v.values[:-1], -4 * g.r[:-1], atol=1e-12)
    v = effective_velocity(state(g, lambda r: np.exp(-r), lambda r: r), ModelParams(alpha=0.5))
    np.testing.assert_allclose(v.values[1:-1], g.r[1:-1] - 1, atol=1e-12)


def test_effective_velocity_warns_on_floored_probe():
    g = RadialGrid.uniform(100, 4.0, 2)
    rho = np.full(g.r.shape, 1e-20)
    with pytest.warns(FloorWarning):
        effective_velocity(state(g, rho), ModelParams(), floor=1e-20, R_probe=2.0)


def test_energy_examples():
    g = RadialGrid.uniform(200, 1.0, 2)
    p = ModelParams(A=1.0, gamma=2.0)
    E, rate = energy(state(g, np.ones_like(g.r)), p)
    assert E == pytest.approx(0.5, abs=1e-14) and rate == 0.0
    assert energy(state(g, np.zeros_like(g.r)), p)[0] == 0.0


def test_energy_against_adaptive_quadrature():
    g = RadialGrid.uniform(8000, 40.0, 3)
    p = ModelParams(n=3, A=1.0, gamma=2.0)
    s = state(g, lambda r: np.exp(-r), lambda r: r * np.exp(-r))
    oracle = quad(lambda r: r**2 * (0.5 * np.exp(-r) * (r * np.exp(-r)) ** 2 + np.exp(-2 * r)), 0, 40,
                  epsabs=1e-14, epsrel=1e-14)[0]
    assert energy(s, p)[0] == pytest.approx(oracle, abs=1e-8)


def test_energy_dissipation_rate_against_quadrature():
    g = RadialGrid.uniform(4000, 20.0, 2)
    p = ModelParams(n=2, alpha=0.5)
    s = state(g, lambda r: np.exp(-r * r), lambda r: r * np.exp(-r * r))
    # u_r = (1-2r^2) e^{-r^2}, u/r = e^{-r^2}
    f = lambda r: r * np.exp(-r * r) * ((1 - 2 * r * r) ** 2 + 1) * np.exp(-2 * r * r)  # noqa: E731
    oracle = 2 * 0.5 * quad(f, 0, 20, epsabs=1e-14)[0]
    # u_r carries the O(h^2) error of the centred difference
    assert energy(s, p)[1] == pytest.approx(oracle, rel=1e-4)


def test_energy_rejects_positive_regime():
    g = RadialGrid.uniform(10, 1.0, 2)
    with pytest.raises(RegimeError):
        energy(state(g, np.ones_like(g.r)), ModelParams(rho_bar=1.0))


def test_bd_entropy_of_gaussian_against_symbolic_oracle():
    r = sp.symbols("r", positive=True)
    rho = sp.exp(-r**2)
    v = 2 * 1 * sp.diff(sp.log(rho), r)
    dens = rho * v**2 / 2 + sp.diff(sp.sqrt(rho), r) ** 2 + rho**2
    oracle = float(sp.integrate(r * dens, (r, 0, sp.oo)))
    g = RadialGrid.uniform(4000, 12.0, 2)
    B, _ = bd_entropy(state(g, lambda x: np.exp(-x * x)), ModelParams(alpha=1.0, gamma=2.0, A=1.0))
    assert B == pytest.approx(oracle, rel=1e-6)


def test_bd_identity_velocity_vs_root_density():
    # for u=0: rho v^2 = 16 alpha^2 ((sqrt rho)_r)^2
    g = RadialGrid.uniform(2000, 8.0, 2)
    s = state(g, lambda r: np.exp(-r * r))
    p = ModelParams(alpha=0.7)
    v = effective_velocity(s, p).values
    droot = np.gradient(np.sqrt(s.rho), g.r)
    np.testing.assert_allclose((s.rho * v**2)[1:-1], (16 * p.alpha**2 * droot**2)[1:-1], rtol=1e-4, atol=1e-10)


def _smooth_step(s):
    """C-infinity step: 1 for s <= 0, 0 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = lambda x: np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)  # noqa: E731
        return f(1 - s) / (f(1 - s) + f(s))


def test_bd_entropy_of_smooth_cutoff_density():
    g = RadialGrid.uniform(8000, 6.0, 2)
    p = ModelParams(alpha=0.5, gamma=2.0)
    prof = lambda r: 1e-3 + _smooth_step((np.asarray(r) - 2.0) / 2.0)  # noqa: E731
    s = state(g, prof)
    v = effective_velocity(s, p).values
    np.testing.assert_allclose(v[g.r < 2.0], 0.0, atol=1e-14)
    np.testing.assert_allclose(v[(g.r > 4.0) & (g.r < 6.0)], 0.0, atol=1e-14)
    B, _ = bd_entropy(s, p)

    def dens(r):
        h = 1e-6
        f = prof(np.array([r - h, r, r + h]))
        d = (f[2] - f[0]) / (2 * h)
        return r * (0.5 * (2 * p.alpha * d / f[1]) ** 2 * f[1] + d * d / (4 * f[1]) + f[1] ** 2)

    oracle = quad(dens, 0, 6.0, points=[2.0, 4.0], limit=400, epsabs=1e-12)[0]
    assert B == pytest.approx(oracle, rel=1e-4)


def test_j_gamma_values():
    assert j_gamma(1.3, 1.3, 2.0) == 0.0
    z = np.linspace(0, 5, 101)
    np.testing.assert_allclose(j_gamma(z, 1.5, 2.0), (z - 1.5) ** 2, atol=1e-14)
    assert j_gamma(0.0, 2.0, 1.5) == pytest.approx(0.5 * 2.0**1.5)
    with pytest.raises(RegimeError):
        j_gamma(1.0, 0.0, 2.0)


@settings(max_examples=50, deadline=None)
@given(z=st.floats(0, 10), rho_bar=st.floats(0.01, 5), gamma=st.floats(1.01, 4))
def test_j_gamma_is_nonnegative(z, rho_bar, gamma):
    assert j_gamma(z, rho_bar, gamma) >= -1e-12 * max(1.0, z, rho_bar) ** gamma


def test_j_gamma_energy_vanishes_at_equilibrium():
    g = RadialGrid.uniform(50, 5.0, 3)
    p = ModelParams(n=3, rho_bar=2.0)
    assert j_gamma_energy(state(g, np.full(g.r.shape, 2.0)), p) == 0.0
    with pytest.raises(RegimeError):
        j_gamma_energy(state(g, np.ones_like(g.r)), ModelParams(n=3))


def test_weighted_uv_norms():
    g = RadialGrid.uniform(2000, 10.0, 2)
    p = ModelParams(alpha=0.5)
    zero = weighted_uv_norms(state(g, lambda r: np.exp(-r * r)), p, 2)
    assert zero["rm_rho_u"] == zero["rho_u"] == zero["rm2_rho_u"] == 0.0
    s = state(g, lambda r: np.exp(-r * r), lambda r: r * np.exp(-r))
    out = weighted_uv_norms(s, p, 4)
    oracle = quad(lambda r: r * np.exp(-r * r) * (r * np.exp(-r)) ** 4, 0, 10, epsabs=1e-15)[0] ** 0.25
    assert out["rm_rho_u"] == pytest.approx(oracle, rel=1e-8)
    # v = u + 2 alpha (log rho)_r = u - 4 alpha r for this density
    oracle_v = quad(lambda r: r * np.exp(-r * r) * (r * np.exp(-r) - 4 * 0.5 * r) ** 4, 0, 10,
                    epsabs=1e-15)[0] ** 0.25
    assert out["rm_rho_v"] == pytest.approx(oracle_v, rel=1e-6)
    with pytest.raises(DomainError):
        weighted_uv_norms(s, p, 1.5)


def test_norm_spec_parse_and_column():
    spec = NormSpec.parse("v:1:2:0:5")
    assert spec == NormSpec("v", 1.0, 2.0, 0.0, 5.0)
    assert spec.column == "v_K1_p2_0-5"
    with pytest.raises(DomainError):
        NormSpec.parse("w:1:2:0:5")


def test_sample_fields():
    g = RadialGrid.uniform(400, 20.0, 2)
    p = ModelParams()
    s = make_initial_profile("algebraic", p, g, iota=3.0, u_amp=1.0)
    d = sample(s, p, D=0.25, R_probe=5.0, norm_specs=(NormSpec.parse("u:0:2:0:5"),))
    assert d.D == 0.25 and d.E == d.J  # J reduces to E in vacuum
    assert d.inf_rho == pytest.approx((1 + 25.0) ** -1.5)
    assert d.columns()[-1] == "u_K0_p2_0-5" and len(d.row()) == len(d.columns())
    assert np.all(d.P == 0.0)


def test_bound_monitor_on_equilibrium():
    g = RadialGrid.uniform(64, 10.0, 2)
    p = ModelParams(rho_bar=1.0)
    s = FluidState(g, np.ones_like(g.r), np.zeros_like(g.r))
    traj = integrate(s, p, SolverConfig(T=0.2), tail=(1.0, 0.0))
    rep = bound_monitor(traj, p, (5.0,))
    assert rep.C_up == 1.0 and rep.C_v == 0.0 and rep.lower_bound_ok and rep.all_finite


def test_bound_monitor_flags_floor_hits():
    g = RadialGrid.uniform(64, 10.0, 2)
    p = ModelParams()
    traj = Trajectory(p, SolverConfig(), rho_floor=1e-3)
    rho = np.exp(-g.r)
    traj.states.append(FluidState(g, rho, np.zeros_like(rho), 0.0))
    later = rho.copy()
    later[10:20] = 1e-3
    traj.states.append(FluidState(g, later, np.zeros_like(rho), 0.5))
    rep = bound_monitor(traj, p, (5.0,))
    assert not rep.lower_bound_ok and rep.first_failure_time == 0.5
