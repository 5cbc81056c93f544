import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mms import SMOOTH_U, make_problem

from rcns.errors import CavitationWarning, ConfigError, NumericalFailure
from rcns.grid import RadialGrid
from rcns.model import FluidState, ModelParams, make_initial_profile
from rcns.solver import (
    Operators,
    _stable_dt,
    SolverConfig,
    integrate,
    mass_flux_residual,
    pressure_term,
    rhs,
    stable_dt,
    step,
    viscous_term,
)


def equilibrium(N=128, R=10.0, n=2, rho_bar=1.0):
    g = RadialGrid.uniform(N, R, n)
    return FluidState(g, np.full(g.r.shape, rho_bar), np.zeros_like(g.r))


def vacuum_state(N=256, u_amp=1.0, n=2):
    g = RadialGrid.uniform(N, 20.0, n)
    return make_initial_profile("algebraic", ModelParams(n=n), g, iota=3.0 if n == 2 else 4.0, u_amp=u_amp)


def test_config_validation():
    with pytest.raises(ConfigError) as exc:
        SolverConfig(scheme="weno", integrator="euler", cfl=2.0, T=-1)
    msg = str(exc.value)
    assert "scheme" in msg and "integrator" in msg and "cfl" in msg and "T must" in msg


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("law", ["degenerate", "constant"])
def test_equilibrium_tendencies_vanish(n, law):
    s = equilibrium(n=n)
    p = ModelParams(n=n, rho_bar=1.0, viscosity_law=law)
    dr, du = rhs(s, p, SolverConfig())
    assert np.all(dr.values == 0.0) and np.all(du.values == 0.0)


def test_linear_velocity_patch_has_divergence_minus_three():
    g = RadialGrid.uniform(64, 4.0, 3)
    s = FluidState(g, np.ones_like(g.r), g.r.copy())
    dr, _ = rhs(s, ModelParams(n=3), SolverConfig())
    np.testing.assert_allclose(dr.values[:-1], -3.0, rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("law", ["degenerate", "constant"])
def test_manufactured_residual_is_second_order(n, law):
    p = ModelParams(n=n, alpha=0.3, viscosity_law=law)
    errs = []
    for N in (64, 128, 256):
        g = RadialGrid.uniform(N, math.pi, n)
        exact, source, _ = make_problem(p, g, SMOOTH_U)
        rho, u = exact(0.0)
        dr, du = rhs(FluidState(g, rho, u), p, SolverConfig())
        sr, su = source(0.0)
        # exact time derivatives at t=0 are -cos r and -sin r
        er = dr.values + sr + np.cos(g.r)
        eu = du.values + su + np.sin(g.r)
        errs.append(max(np.max(np.abs(er[:-1])), np.max(np.abs(eu[1:-1]))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9), orders


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.sampled_from([2, 3]), stretch=st.floats(1.0, 1.05))
def test_mass_tendency_telescopes_on_random_states(seed, n, stretch):
    rng = np.random.default_rng(seed)
    g = RadialGrid.stretched(40, 5.0, n, stretch)
    rho = rng.uniform(0.1, 3.0, g.r.size)
    u = rng.normal(size=g.r.size)
    u[0] = 0.0
    s = FluidState(g, rho, u)
    scale = float(np.sum(np.abs(rho * u)) * g.R_max**g.m)
    assert abs(mass_flux_residual(s, ModelParams(n=n), SolverConfig())) <= 1e-12 * scale


def test_symmetry_decomposition_of_velocity_tendency():
    # advection -u u_r is even in u, viscosity is odd, pressure does not see u
    s = vacuum_state(N=200)
    p = ModelParams()
    cfg = SolverConfig(scheme="centered")
    _, plus = rhs(s, p, cfg)
    _, minus = rhs(s.replace(u=-s.u), p, cfg)
    ops = Operators(s.grid)
    adv = np.zeros_like(s.u)
    adv[1:-1] = -s.u[1:-1] * ops.grad(s.u)
    floor = 1e-12 * s.rho.max()
    scale = np.max(np.abs(plus.values))
    np.testing.assert_allclose(plus.values + minus.values, 2 * (pressure_term(s, p) + adv), atol=1e-12 * scale)
    np.testing.assert_allclose(plus.values - minus.values, 2 * viscous_term(s, p, floor), atol=1e-12 * scale)


def test_stable_dt_formula():
    g = RadialGrid.uniform(100, 10.0, 2)
    s = FluidState(g, np.ones_like(g.r), np.zeros_like(g.r))
    p = ModelParams(alpha=0.5, gamma=2.0, A=1.0)
    dx = 0.1
    expected = 0.5 * min(dx / math.sqrt(2), dx**2 / (4 * 0.5))
    assert stable_dt(s, p, SolverConfig(cfl=0.5)) == pytest.approx(expected, rel=1e-12)


def test_doubling_resolution_halves_advective_bound():
    p = ModelParams(alpha=0.5)
    cfg = SolverConfig(integrator="imex")
    dts = []
    for N in (100, 200):
        g = RadialGrid.uniform(N, 10.0, 2)
        dts.append(stable_dt(FluidState(g, np.ones_like(g.r), np.zeros_like(g.r)), p, cfg))
    assert dts[0] / dts[1] == pytest.approx(2.0, rel=1e-12)


def test_degenerate_parabolic_bound_ignores_density():
    g = RadialGrid.uniform(100, 10.0, 2)
    p = ModelParams(alpha=0.5)
    cfg = SolverConfig(cfl=1.0)
    tiny = FluidState(g, np.full(g.r.shape, 1e-10), np.zeros_like(g.r))
    assert stable_dt(tiny, p, cfg) == pytest.approx(0.1**2 / 2.0, rel=1e-12)
    # the constant law has kinematic viscosity alpha/rho, so its bound shrinks with rho
    const = ModelParams(alpha=0.5, viscosity_law="constant")
    assert stable_dt(tiny, const, cfg) == pytest.approx(1e-10 * 0.1**2 / 2.0, rel=1e-12)


def test_stable_dt_rejects_nan():
    s = equilibrium()
    rho = np.array(s.rho)
    rho[3] = np.nan
    with pytest.raises(NumericalFailure):
        _stable_dt(rho, s.u, 0.0, ModelParams(), SolverConfig(), Operators(s.grid))


@pytest.mark.parametrize("integrator", ["rk4", "imex"])
def test_equilibrium_is_a_fixed_point_of_step(integrator):
    s = equilibrium()
    p = ModelParams(rho_bar=1.0)
    out = step(s, 0.37, p, SolverConfig(integrator=integrator), tail=(1.0, 0.0))
    assert np.array_equal(out.rho, s.rho) and np.array_equal(out.u, s.u)
    assert out.t == pytest.approx(0.37)


def test_rk4_local_error_is_fifth_order():
    s = vacuum_state(N=64)
    p = ModelParams()
    cfg = SolverConfig()
    ops = Operators(s.grid)
    tail = (float(s.rho[-1]), 0.0)
    dt0 = stable_dt(s, p, cfg, ops)

    def reference(dt, substeps=64):
        x = s
        for _ in range(substeps):
            x = step(x, dt / substeps, p, cfg, tail=tail, ops=ops)
        return x

    errs = []
    for dt in (dt0, dt0 / 2):
        one = step(s, dt, p, cfg, tail=tail, ops=ops)
        ref = reference(dt)
        errs.append(max(np.max(np.abs(one.rho - ref.rho)), np.max(np.abs(one.u - ref.u))))
    assert math.log2(errs[0] / errs[1]) > 4.5


def test_rk4_global_error_is_fourth_order():
    s = vacuum_state(N=48)
    p = ModelParams()
    cfg = SolverConfig()
    ops = Operators(s.grid)
    tail = (float(s.rho[-1]), 0.0)
    T = 20 * stable_dt(s, p, cfg, ops)

    def solve(k):
        x = s
        for _ in range(k):
            x = step(x, T / k, p, cfg, tail=tail, ops=ops)
        return x

    ref = solve(640)
    e = [np.max(np.abs(solve(k).u - ref.u)) for k in (20, 40)]
    assert math.log2(e[0] / e[1]) > 3.7


def test_blowup_detector_fires_beyond_stability_limit():
    s = vacuum_state(N=256)
    p = ModelParams()
    cfg = SolverConfig(cfl=1.0)
    ops = Operators(s.grid)
    tail = (float(s.rho[-1]), 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CavitationWarning)
        with pytest.raises(NumericalFailure) as exc:
            for _ in range(2000):
                s = step(s, 2 * stable_dt(s, p, cfg, ops), p, cfg, tail=tail, ops=ops)
    assert exc.value.t > 0 and exc.value.node is not None


def test_imex_survives_steps_beyond_parabolic_limit():
    s = vacuum_state(N=256)
    p = ModelParams(alpha=2.0)
    rk = SolverConfig()
    imex = SolverConfig(integrator="imex", cfl=0.5)
    dt = stable_dt(s, p, imex)
    assert dt > 10 * stable_dt(s, p, rk)
    tail = (float(s.rho[-1]), 0.0)
    x = s
    for _ in range(50):
        x = step(x, dt, p, imex, tail=tail)
    assert np.all(np.isfinite(x.u)) and np.max(np.abs(x.u)) < np.max(np.abs(s.u))


def test_imex_agrees_with_rk4_to_first_order():
    s = vacuum_state(N=128)
    p = ModelParams()
    T = 0.05
    ref = integrate(s, p, SolverConfig(T=T, cfl=0.25)).states[-1]
    errs = []
    for dt in (T / 10, T / 20):
        x = integrate(s, p, SolverConfig(T=T, integrator="imex", dt_fixed=dt)).states[-1]
        errs.append(np.max(np.abs(x.u - ref.u)))
    assert 1.6 < errs[0] / errs[1] < 2.6


def test_floor_events_and_cavitation_warning():
    s = vacuum_state(N=128)
    p = ModelParams()
    events = []
    with pytest.warns(CavitationWarning):
        step(s, 1e-4, p, SolverConfig(cavitation_fraction=0.01), floor=0.05, events=events,
             tail=(float(s.rho[-1]), 0.0))
    assert events and events[0]["kind"] == "cavitation" and events[0]["nodes"] > 0


def test_integrate_zero_time_returns_initial_snapshot():
    s = vacuum_state(N=64)
    traj = integrate(s, ModelParams(), SolverConfig(T=0.0))
    assert len(traj.states) == 1 and traj.states[0] is s and traj.ok


def test_integrate_equilibrium_keeps_all_snapshots():
    s = equilibrium()
    traj = integrate(s, ModelParams(rho_bar=1.0), SolverConfig(T=1.0), tail=(1.0, 0.0), snapshot_every=5)
    assert traj.ok and traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) > 0)
    for x in traj.states:
        assert np.max(np.abs(x.rho - 1.0)) < 1e-12 and np.max(np.abs(x.u)) < 1e-12


def test_integrate_lands_on_stop_times():
    s = vacuum_state(N=64)
    seen = []
    traj = integrate(s, ModelParams(), SolverConfig(T=0.1), stop_times=(0.03, 0.07),
                     on_stop=lambda tr, x: seen.append(x.t))
    assert seen == [0.03, 0.07]
    assert {0.03, 0.07, 0.1} <= set(traj.times)


@pytest.mark.filterwarnings("ignore::rcns.errors.CavitationWarning")
def test_integrate_records_failure_without_raising():
    s = vacuum_state(N=128)
    traj = integrate(s, ModelParams(), SolverConfig(T=1.0, dt_fixed=0.05))
    assert not traj.ok
    assert traj.failure["t"] > 0 and "node" in traj.failure


def test_mass_conserved_over_short_run():
    s = vacuum_state(N=256)
    traj = integrate(s, ModelParams(), SolverConfig(T=0.2))
    M = [x.M for x in traj.samples]
    assert max(abs(m - M[0]) for m in M) / M[0] < 1e-9


def _bd_identity_defect(N, u_amp, T=0.3):
    """max_t |(B - int r^m (sqrt rho)_r^2 + D) / same at t=0 - 1|.

    Without the (sqrt rho)_r^2 term the BD functional plus its cumulative
    dissipation is exactly conserved by the continuous system.
    """
    from rcns.diagnostics import _log_rho_r, _volume_integral

    s = vacuum_state(N=N, u_amp=u_amp)
    traj = integrate(s, ModelParams(), SolverConfig(T=T), snapshot_every=max(1, N * N // 4096))
    assert traj.ok
    vals = np.array([
        d.B - _volume_integral(x, 0.25 * x.rho * _log_rho_r(x.rho, x.grid.r) ** 2) + d.D
        for x, d in zip(traj.states, traj.samples)
    ])
    return np.max(np.abs(vals / vals[0] - 1))


@pytest.mark.parametrize("u_amp", [1.0, -5.0])
def test_bd_identity_defect_is_second_order(u_amp):
    e1, e2 = _bd_identity_defect(256, u_amp), _bd_identity_defect(512, u_amp)
    assert e2 < 0.01
    assert math.log2(e1 / e2) > 1.7
