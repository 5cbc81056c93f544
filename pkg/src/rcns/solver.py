"""Semi-discrete radial solver for the degenerate-viscosity system.

Unknowns are nodal ``(rho, u)``.  The mass equation is advanced in flux form

    w_i drho_i/dt = -(F_{i+1/2} - F_{i-1/2}),   F = r^m rho u  at midpoints,

with ``w_i`` the dual-cell volumes of :class:`~rcns.grid.RadialGrid`, so
``sum w_i rho_i`` changes only through the outer flux.  The velocity
equation is divided by ``rho``:

    u_t = -u u_r - (A gamma/(gamma-1)) (rho^{gamma-1})_r
          + (2 alpha / rho) [ (rho (u_r + m u/r))_r - m rho_r u / r ].

The viscous part is linear in ``u`` for frozen ``rho`` and is stored as a
tridiagonal stencil, which the IMEX integrator inverts.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import CavitationWarning, ConfigError, NumericalFailure
from .grid import EVEN, ODD, RadialField, RadialGrid
from .model import CONSTANT, FluidState, ModelParams

log = logging.getLogger(__name__)

CENTERED = "centered"
UPWIND = "upwind"
RK4 = "rk4"
IMEX = "imex"
BLOWUP = 1e150


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = CENTERED
    integrator: str = RK4
    cfl: float = 0.5
    T: float = 1.0
    rho_floor: float | None = None  # None: 1e-12 * max(rho_0)
    dt_fixed: float | None = None
    cavitation_fraction: float = 0.01

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))

    def violations(self):
        out = []
        if self.scheme not in (CENTERED, UPWIND):
            out.append(f"scheme must be 'centered' or 'upwind' (got {self.scheme!r})")
        if self.integrator not in (RK4, IMEX):
            out.append(f"integrator must be 'rk4' or 'imex' (got {self.integrator!r})")
        if not 0 < self.cfl <= 1:
            out.append(f"cfl must lie in (0,1] (got {self.cfl})")
        if not self.T >= 0:
            out.append(f"T must be non-negative (got {self.T})")
        if self.rho_floor is not None and not self.rho_floor > 0:
            out.append(f"rho_floor must be positive (got {self.rho_floor})")
        if self.dt_fixed is not None and not self.dt_fixed > 0:
            out.append(f"dt_fixed must be positive (got {self.dt_fixed})")
        if not 0 <= self.cavitation_fraction <= 1:
            out.append("cavitation_fraction must lie in [0,1]")
        return out


class Operators:
    """Grid-dependent stencil coefficients, built once per grid."""

    def __init__(self, grid: RadialGrid):
        r, h = np.asarray(grid.r), np.asarray(grid.h)
        self.grid = grid
        self.m = grid.m
        self.r = r
        self.h = h
        self.w = np.asarray(grid.volume_weights)
        self.rhm = np.asarray(grid.r_half) ** grid.m
        self.inv_r = np.zeros_like(r)
        self.inv_r[1:] = 1.0 / r[1:]
        h0, h1 = h[:-1], h[1:]
        # nonuniform centred first derivative at interior nodes
        self.cm = -h1 / (h0 * (h0 + h1))
        self.c0 = (h1 - h0) / (h0 * h1)
        self.cp = h0 / (h1 * (h0 + h1))
        self.dual = 0.5 * (h0 + h1)
        self.dx = np.minimum(np.concatenate([[h[0]], h]), np.concatenate([h, [h[-1]]]))
        self.dx_min = float(self.dx.min())
        # rho-independent parts of the viscous flux tau_{i+1/2} = L_i u_i + R_i u_{i+1}
        g = 1.0 / h
        m, q = self.m, self.inv_r
        self.flux_left = -g + 0.5 * m * q[:-1]
        self.flux_right = g + 0.5 * m * q[1:]
        # at the centre u/r -> u_r(0), estimated from the odd cubic u = c r + d r^3
        # through nodes 1 and 2 so the first flux keeps the interior truncation error
        r1, r2 = r[1], r[2]
        den = r1 * r2 * (r2**2 - r1**2)
        k1, k2 = r2**3 / den, -(r1**3) / den
        self.flux_right[0] = g[0] + 0.5 * m * (k1 + q[1])
        self.flux_centre_u2 = 0.5 * m * k2  # weight of u_2 in the first flux
        self.inv_dual = 1.0 / self.dual
        self.m_over_r = m * q[1:-1]

    def grad(self, f):
        """Centred derivative at interior nodes 1..N-1."""
        return self.cm * f[:-2] + self.c0 * f[1:-1] + self.cp * f[2:]

    def viscous_stencil(self, rho, params: ModelParams):
        """Tridiagonal coefficients (lower, diag, upper) of the viscous term at nodes 1..N-1."""
        if params.viscosity_law == CONSTANT:
            left, right = self.flux_left, self.flux_right
        else:
            a = 0.5 * (rho[:-1] + rho[1:])
            left, right = a * self.flux_left, a * self.flux_right
        coef = (2 * params.alpha) * self.inv_dual / rho[1:-1]
        lower = -coef * left[:-1]
        diag = coef * (left[1:] - right[:-1])
        upper = coef * right[1:]
        a0 = 1.0 if params.viscosity_law == CONSTANT else a[0]
        upper[0] -= coef[0] * a0 * self.flux_centre_u2
        if params.viscosity_law != CONSTANT:
            diag -= (2 * params.alpha) * self.m_over_r * self.grad(rho) / rho[1:-1]
        lower[0] = 0.0
        return lower, diag, upper

    def bd_rate(self, rho, params: ModelParams) -> float:
        """Fast dual-cell version of the BD dissipation rate used to accumulate ``D``."""
        lr = self.grad(np.log(rho))
        g = params.gamma
        return float(2 * params.A * params.alpha * g * np.dot(self.w[1:-1], rho[1:-1] ** g * lr * lr))


def _apply_stencil(stencil, u):
    lower, diag, upper = stencil
    return lower * u[:-2] + diag * u[1:-1] + upper * u[2:]


def _advection(u, ops, params, cfg, rho):
    du = ops.grad(u)
    ui = u[1:-1]
    if cfg.scheme == UPWIND:
        nu = 2 * params.alpha if params.viscosity_law != CONSTANT else 2 * params.alpha / rho[1:-1]
        back = (u[1:-1] - u[:-2]) / ops.h[:-1]
        fwd = (u[2:] - u[1:-1]) / ops.h[1:]
        peclet = np.abs(ui) * ops.dx[1:-1] / nu
        du = np.where(peclet > 2, np.where(ui > 0, back, fwd), du)
    return -ui * du


def _tendencies(rho, u, ops: Operators, params: ModelParams, cfg: SolverConfig, floor: float, explicit_viscous=True):
    rho = np.maximum(rho, floor)
    ru = rho * u
    F = ops.rhm * 0.5 * (ru[:-1] + ru[1:])
    drho = np.zeros_like(rho)
    drho[0] = -F[0] / ops.w[0]
    drho[1:-1] = -(F[1:] - F[:-1]) / ops.w[1:-1]
    g = params.gamma
    dpress = params.A * g / (g - 1) * ops.grad(rho ** (g - 1))
    du = np.zeros_like(u)
    du[1:-1] = _advection(u, ops, params, cfg, rho) - dpress
    if explicit_viscous:
        du[1:-1] += _apply_stencil(ops.viscous_stencil(rho, params), u)
    return drho, du


def _check_finite(rho, u, t):
    bad = ~(np.isfinite(rho) & np.isfinite(u))
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericalFailure(f"non-finite value at t={t:.6g}, node {i}", t=t, node=i)
    big = (np.abs(rho) > BLOWUP) | (np.abs(u) > BLOWUP)
    if big.any():
        i = int(np.argmax(big))
        raise NumericalFailure(f"blow-up detected at t={t:.6g}, node {i}", t=t, node=i)


def default_floor(rho0) -> float:
    return 1e-12 * float(np.max(rho0))


def rhs(state: FluidState, params: ModelParams, cfg: SolverConfig, floor: float | None = None, ops=None):
    """Tendencies ``(drho/dt, du/dt)`` of the semi-discrete system as fields."""
    ops = ops or Operators(state.grid)
    floor = default_floor(state.rho) if floor is None else floor
    below = int(np.count_nonzero(state.rho < floor))
    if below:
        log.info("rhs: %d nodes below rho_floor at t=%g", below, state.t)
    drho, du = _tendencies(state.rho, state.u, ops, params, cfg, floor)
    if not (np.all(np.isfinite(drho)) and np.all(np.isfinite(du))):
        bad = ~(np.isfinite(drho) & np.isfinite(du))
        i = int(np.argmax(bad))
        raise NumericalFailure(f"non-finite tendency at t={state.t:.6g}, node {i}", t=state.t, node=i)
    return RadialField(state.grid, drho, EVEN), RadialField(state.grid, du, ODD)


def viscous_term(state: FluidState, params: ModelParams, floor: float | None = None):
    ops = Operators(state.grid)
    floor = default_floor(state.rho) if floor is None else floor
    rho = np.maximum(state.rho, floor)
    out = np.zeros_like(state.u)
    out[1:-1] = _apply_stencil(ops.viscous_stencil(rho, params), state.u)
    return out


def pressure_term(state: FluidState, params: ModelParams):
    ops = Operators(state.grid)
    g = params.gamma
    out = np.zeros_like(state.u)
    out[1:-1] = -params.A * g / (g - 1) * ops.grad(state.rho ** (g - 1))
    return out


def _stable_dt(rho, u, t, params: ModelParams, cfg: SolverConfig, ops: Operators) -> float:
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))):
        raise NumericalFailure(f"non-finite state at t={t:.6g}", t=t)
    dx = ops.dx
    c = np.sqrt(params.A * params.gamma * rho ** (params.gamma - 1))
    dt = np.min(dx / (np.abs(u) + c))
    if cfg.integrator == RK4:
        if params.viscosity_law == CONSTANT:
            par = np.min(dx**2 * rho / (4 * params.alpha))
        else:
            # mu = alpha rho, so the kinematic viscosity is alpha everywhere
            par = ops.dx_min**2 / (4 * params.alpha)
        dt = min(dt, par)
    return float(cfg.cfl * dt)


def stable_dt(state: FluidState, params: ModelParams, cfg: SolverConfig, ops=None) -> float:
    """``cfl * min(dr/(|u|+c), dr^2 rho/(4 alpha mu))``; IMEX drops the parabolic bound."""
    return _stable_dt(state.rho, state.u, state.t, params, cfg, ops or Operators(state.grid))


def _pin(rho, u, tail):
    u[0] = 0.0
    rho[-1], u[-1] = tail


def _advance(rho0, u0, t0, dt, params, cfg, ops, floor, tail, events=None, source=None, boundary=None):
    """One integrator step on raw arrays; returns new ``(rho, u)``."""
    # overflow inside a diverging step is reported by the finite check instead
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _advance_unchecked(rho0, u0, t0, dt, params, cfg, ops, floor, tail, events, source, boundary)


def _advance_unchecked(rho0, u0, t0, dt, params, cfg, ops, floor, tail, events, source, boundary):

    def f(rho, u, t):
        if boundary is not None:
            rho = rho.copy()
            u = u.copy()
            _pin(rho, u, boundary(t))
        dr, du = _tendencies(rho, u, ops, params, cfg, floor, explicit_viscous=cfg.integrator == RK4)
        if source is not None:
            sr, su = source(t)
            dr = dr + sr
            du = du + su
            dr[-1] = du[-1] = du[0] = 0.0
        return dr, du

    if cfg.integrator == RK4:
        h2 = 0.5 * dt
        k1r, k1u = f(rho0, u0, t0)
        k2r, k2u = f(rho0 + h2 * k1r, u0 + h2 * k1u, t0 + h2)
        k3r, k3u = f(rho0 + h2 * k2r, u0 + h2 * k2u, t0 + h2)
        k4r, k4u = f(rho0 + dt * k3r, u0 + dt * k3u, t0 + dt)
        rho = rho0 + dt / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
        u = u0 + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
    else:
        # forward Euler on transport/pressure, backward Euler on viscosity
        dr, du = f(rho0, u0, t0)
        rho = rho0 + dt * dr
        rhs_u = u0 + dt * du
        lower, diag, upper = ops.viscous_stencil(np.maximum(rho0, floor), params)
        ab = np.zeros((3, diag.size))
        ab[0, 1:] = -dt * upper[:-1]
        ab[1] = 1.0 - dt * diag
        ab[2, :-1] = -dt * lower[1:]
        bvec = rhs_u[1:-1].copy()
        u_end = boundary(t0 + dt)[1] if boundary is not None else tail[1]
        bvec[-1] += dt * upper[-1] * u_end
        u = rhs_u.copy()
        u[1:-1] = solve_banded((1, 1), ab, bvec)
    t1 = t0 + dt
    _pin(rho, u, boundary(t1) if boundary is not None else tail)
    _check_finite(rho, u, t1)
    low = rho < floor
    if low.any():
        count = int(np.count_nonzero(low))
        rho[low] = floor
        frac = count / rho.size
        event = {"kind": "floor", "t": t1, "nodes": count, "fraction": frac}
        if frac > cfg.cavitation_fraction:
            event["kind"] = "cavitation"
            warnings.warn(f"density floored on {frac:.2%} of nodes at t={t1:.6g}", CavitationWarning)
        if events is not None:
            events.append(event)
        log.debug("floor activated on %d nodes at t=%g", count, t1)
    return rho, u


def step(state: FluidState, dt: float, params: ModelParams, cfg: SolverConfig, *,
         floor: float | None = None, tail=None, ops=None, events=None,
         source=None, boundary=None) -> FluidState:
    """Advance one step and apply the centre, far-field and floor conditions.

    ``tail`` is the pinned far-end ``(rho, u)``; it defaults to the current
    outer values.  ``source(t) -> (s_rho, s_u)`` and ``boundary(t) -> (rho, u)``
    are hooks for manufactured-solution runs.
    """
    ops = ops or Operators(state.grid)
    floor = default_floor(state.rho) if floor is None else floor
    tail = (float(state.rho[-1]), float(state.u[-1])) if tail is None else tail
    rho, u = _advance(np.array(state.rho), np.array(state.u), state.t, dt, params, cfg, ops, floor, tail,
                      events, source, boundary)
    return FluidState(state.grid, rho, u, state.t + dt)


@dataclass
class Trajectory:
    """Snapshots and diagnostics of one run, possibly truncated by a failure."""

    params: ModelParams
    cfg: SolverConfig
    rho_floor: float
    states: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)
    failure: dict | None = None
    steps: int = 0
    bd_dissipation: float = 0.0

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def grid(self):
        return self.states[0].grid

    @property
    def ok(self) -> bool:
        return self.failure is None


def integrate(state: FluidState, params: ModelParams, cfg: SolverConfig, *,
              tail=None, floor=None, snapshot_every: int = 10, stop_times=(),
              probe_radius: float | None = None, norm_specs=(), bd_dissipation: float = 0.0,
              on_stop=None) -> Trajectory:
    """Integrate ``state`` to ``cfg.T``; never raises on numerical failure.

    ``stop_times`` are extra times the step size is clipped to land on
    exactly (checkpoints).  ``on_stop(traj, state)`` is called at each.
    """
    from .diagnostics import sample

    floor = default_floor(state.rho) if floor is None else floor
    ops = Operators(state.grid)
    tail = (float(state.rho[-1]), float(state.u[-1])) if tail is None else tail
    traj = Trajectory(params, cfg, floor, bd_dissipation=bd_dissipation)
    T = cfg.T
    stops = sorted({float(s) for s in stop_times if state.t < s < T} | {T})
    probe = state.grid.R_max if probe_radius is None else probe_radius

    def record(s):
        traj.states.append(s)
        traj.samples.append(sample(s, params, traj.bd_dissipation, probe, norm_specs))

    record(state)
    if state.t >= T:
        return traj
    grid = state.grid
    rho, u, t = np.array(state.rho), np.array(state.u), state.t
    rate = ops.bd_rate(np.maximum(rho, floor), params)
    k = 0
    try:
        while t < T:
            dt = cfg.dt_fixed if cfg.dt_fixed is not None else _stable_dt(rho, u, t, params, cfg, ops)
            target = next(s for s in stops if s > t)
            landing = t + dt >= target - 1e-12 * max(T, 1.0)
            if landing:
                dt = target - t
            rho, u = _advance(rho, u, t, dt, params, cfg, ops, floor, tail, traj.events)
            t = target if landing else t + dt
            new_rate = ops.bd_rate(rho, params)
            traj.bd_dissipation += 0.5 * dt * (rate + new_rate)
            rate = new_rate
            k += 1
            traj.steps = k
            if landing or k % snapshot_every == 0:
                state = FluidState(grid, rho, u, t)
                record(state)
                if landing and on_stop is not None and t < T:
                    on_stop(traj, state)
    except NumericalFailure as exc:
        traj.failure = {"t": exc.t, "node": exc.node, "message": str(exc)}
        log.warning("run stopped: %s", exc)
    return traj


def run(scenario) -> Trajectory:
    """Integrate a :class:`~rcns.scenario.Scenario` from its initial data."""
    state = scenario.initial_state()
    cfg = scenario.solver
    floor = cfg.rho_floor if cfg.rho_floor is not None else default_floor(state.rho)
    return integrate(
        state, scenario.model, cfg,
        tail=scenario.tail(state),
        floor=floor,
        snapshot_every=scenario.diagnostics.snapshot_every,
        stop_times=scenario.output.checkpoint_times,
        probe_radius=scenario.diagnostics.probe_radii[0] if scenario.diagnostics.probe_radii else None,
        norm_specs=scenario.diagnostics.weighted_norms,
    )


def mass_flux_residual(state: FluidState, params: ModelParams, cfg: SolverConfig) -> float:
    """``sum w_i drho_i/dt`` plus the outgoing flux at the last midpoint; zero up to round-off."""
    ops = Operators(state.grid)
    drho, _ = _tendencies(state.rho, state.u, ops, params, cfg, 0.0)
    ru = state.rho * state.u
    outer = ops.rhm[-1] * 0.5 * (ru[-2] + ru[-1])
    return float(np.dot(ops.w, drho) + outer)
