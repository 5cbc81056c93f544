"""Particle paths and the effective velocity along them.

Along ``eta_t = u(t, eta)`` the effective velocity obeys the linear ODE

    d/dt v(t, eta) = -k rho^(gamma-1) (v - u),   k = A gamma / (2 alpha),

whose solution is

    v(t) = v0 exp(-int_0^t a) + int_0^t a u exp(-int_s^t a) ds,   a = k rho^(gamma-1).

Paths are integrated with RK4 on a trajectory interpolated by cubic splines
in ``r`` and linearly in ``t``.  The closed form is evaluated by cumulative
Simpson quadrature of the path samples and compared with a direct RK4
integration of the ODE along the same path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .diagnostics import effective_velocity
from .errors import DomainError, FloorWarning
from .grid import RadialGrid
from .model import FluidState, ModelParams
from .solver import SolverConfig, Trajectory

PATH_COLUMNS = ("t", "eta", "v_closed", "v_grid", "deviation")


@dataclass
class CharacteristicPath:
    r0: float
    t: np.ndarray
    eta: np.ndarray
    v_closed: np.ndarray | None = None
    v_direct: np.ndarray | None = None
    v_grid: np.ndarray | None = None
    exit_time: float | None = None

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.v_closed - self.v_grid)

    def rows(self):
        dev = self.deviation
        return [(t, e, vc, vg, d) for t, e, vc, vg, d in zip(self.t, self.eta, self.v_closed, self.v_grid, dev)]


class _SpaceTimeSpline:
    """Cubic in ``r`` on each snapshot, linear in ``t`` between snapshots."""

    def __init__(self, r, times, values):
        self.r = np.asarray(r)
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._cache = {}

    def _spline(self, k):
        s = self._cache.get(k)
        if s is None:
            s = self._cache[k] = CubicSpline(self.r, self.values[k])
        return s

    def __call__(self, t, x):
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        th = (t - t0) / (t1 - t0)
        x = np.clip(x, self.r[0], self.r[-1])
        return (1 - th) * self._spline(k)(x) + th * self._spline(k + 1)(x)


def _fields(traj: Trajectory, params: ModelParams):
    states = traj.states
    if len(states) < 2:
        raise DomainError("characteristics need at least two snapshots")
    times = np.array([s.t for s in states])
    if np.any(np.diff(times) <= 0):
        raise DomainError("snapshot times must be strictly increasing")
    floor = traj.rho_floor
    r = states[0].grid.r
    rho = np.array([np.maximum(s.rho, floor) for s in states])
    u = np.array([s.u for s in states])
    return r, times, rho, u


def _integrate_paths(u_int, times, r0, R_max, substeps):
    """RK4 for ``eta' = u`` at ``substeps`` steps per snapshot interval."""
    t_out = [times[0]]
    eta = np.array(r0, dtype=float)
    out = [eta.copy()]
    exited = np.full(eta.shape, np.nan)
    for k in range(len(times) - 1):
        h = (times[k + 1] - times[k]) / substeps
        for j in range(substeps):
            t = times[k] + j * h
            k1 = u_int(t, eta)
            k2 = u_int(t + h / 2, eta + h / 2 * k1)
            k3 = u_int(t + h / 2, eta + h / 2 * k2)
            k4 = u_int(t + h, eta + h * k3)
            eta = eta + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            eta = np.maximum(eta, 0.0)
            t_out.append(t + h if j < substeps - 1 else times[k + 1])
            newly = np.isnan(exited) & (eta > R_max)
            exited[newly] = t_out[-1]
            out.append(eta.copy())
    return np.array(t_out), np.array(out), exited


def flow_map(traj: Trajectory, r0, substeps: int = 4):
    """Particle paths ``eta(t, r0)``; returns one path, or a list for a sequence of seeds."""
    single = np.ndim(r0) == 0
    seeds = np.atleast_1d(np.asarray(r0, dtype=float))
    r, times, _, u = _fields(traj, traj.params)
    R_max = float(r[-1])
    if np.any(seeds < 0) or np.any(seeds > R_max):
        raise DomainError(f"seed radii must lie in [0, {R_max}]")
    u_int = _SpaceTimeSpline(r, times, u)
    t, eta, exited = _integrate_paths(u_int, times, seeds, R_max, substeps)
    paths = []
    for i, s in enumerate(seeds):
        e = eta[:, i]
        keep = slice(None)
        ex = None if np.isnan(exited[i]) else float(exited[i])
        if ex is not None:
            keep = t < ex
        paths.append(CharacteristicPath(float(s), t[keep], np.minimum(e[keep], R_max), exit_time=ex))
    return paths[0] if single else paths


def _v_grid_stack(traj, params, times):
    return np.array([effective_velocity(s.replace(rho=np.maximum(s.rho, traj.rho_floor)), params).values
                     for s in traj.states])


def v_closed_form(traj: Trajectory, params: ModelParams, r0, substeps: int = 4, v0=None):
    """Closed-form ``v`` along the paths from ``r0``, plus the direct RK4 solution.

    ``v0`` overrides the initial effective velocity at the seeds (default:
    the grid value of the first snapshot).  Returns paths with
    ``v_closed``, ``v_direct`` and ``v_grid`` filled in.
    """
    single = np.ndim(r0) == 0
    seeds = np.atleast_1d(np.asarray(r0, dtype=float))
    r, times, rho, u = _fields(traj, params)
    k = params.sound_coefficient
    a_grid = k * rho ** (params.gamma - 1)
    u_int = _SpaceTimeSpline(r, times, u)
    a_int = _SpaceTimeSpline(r, times, a_grid)
    v_stack = _v_grid_stack(traj, params, times)
    v_int = _SpaceTimeSpline(r, times, v_stack)
    R_max = float(r[-1])
    t, eta, exited = _integrate_paths(u_int, times, seeds, R_max, substeps)
    if np.any(rho <= traj.rho_floor * (1 + 1e-12)):
        warnings.warn("density reached the floor on the trajectory; closed form may be unreliable", FloorWarning)

    # closed form from path samples
    a_path = np.array([a_int(tj, eta[j]) for j, tj in enumerate(t)])
    u_path = np.array([u_int(tj, eta[j]) for j, tj in enumerate(t)])
    if v0 is None:
        v0 = CubicSpline(r, v_stack[0])(seeds)
    else:
        v0 = np.broadcast_to(np.asarray(v0, dtype=float), seeds.shape).copy()
    phi = cumulative_simpson(a_path, x=t, axis=0, initial=0.0)
    duhamel = cumulative_simpson(a_path * u_path * np.exp(phi - phi[-1]), x=t, axis=0, initial=0.0)
    v_closed = np.exp(-phi) * v0 + duhamel * np.exp(phi[-1] - phi)

    # direct RK4 on (eta, v) jointly
    v = v0.copy()
    e = seeds.copy()
    v_direct = [v.copy()]
    for j in range(len(t) - 1):
        t0, h = t[j], t[j + 1] - t[j]

        def f(tt, ee, vv):
            return u_int(tt, ee), -a_int(tt, ee) * (vv - u_int(tt, ee))

        k1e, k1v = f(t0, e, v)
        k2e, k2v = f(t0 + h / 2, e + h / 2 * k1e, v + h / 2 * k1v)
        k3e, k3v = f(t0 + h / 2, e + h / 2 * k2e, v + h / 2 * k2v)
        k4e, k4v = f(t0 + h, e + h * k3e, v + h * k3v)
        e = np.maximum(e + h / 6 * (k1e + 2 * k2e + 2 * k3e + k4e), 0.0)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        v_direct.append(v.copy())
    v_direct = np.array(v_direct)
    v_grid = np.array([v_int(tj, eta[j]) for j, tj in enumerate(t)])

    paths = []
    for i, s in enumerate(seeds):
        keep = slice(None) if np.isnan(exited[i]) else t < exited[i]
        paths.append(CharacteristicPath(
            float(s), t[keep], eta[keep, i], v_closed[keep, i], v_direct[keep, i], v_grid[keep, i],
            None if np.isnan(exited[i]) else float(exited[i]),
        ))
    return paths[0] if single else paths


@dataclass
class CrossCheckReport:
    seeds: np.ndarray
    max_deviation: np.ndarray  # closed form vs grid v, per seed
    max_direct_gap: np.ndarray  # closed form vs direct ODE, per seed
    paths: list

    @property
    def worst(self) -> float:
        return float(np.max(self.max_deviation)) if self.max_deviation.size else 0.0


def cross_check_v(traj: Trajectory, params: ModelParams, seeds, substeps: int = 4) -> CrossCheckReport:
    """Per-seed ``max_t |v_closed - v_grid(t, eta(t))|``."""
    paths = v_closed_form(traj, params, np.atleast_1d(seeds), substeps)
    dev = np.array([float(np.max(p.deviation)) for p in paths])
    gap = np.array([float(np.max(np.abs(p.v_closed - p.v_direct))) for p in paths])
    return CrossCheckReport(np.atleast_1d(np.asarray(seeds, dtype=float)), dev, gap, paths)


def synthetic_trajectory(grid: RadialGrid, times, rho_fn, u_fn, params: ModelParams,
                         rho_floor: float = 1e-300) -> Trajectory:
    """A trajectory built from prescribed fields ``rho_fn(t, r)``, ``u_fn(t, r)``."""
    r = np.asarray(grid.r)
    traj = Trajectory(params, SolverConfig(T=float(times[-1])), rho_floor)
    for t in times:
        rho = np.broadcast_to(np.asarray(rho_fn(t, r), dtype=float), r.shape)
        u = np.array(np.broadcast_to(np.asarray(u_fn(t, r), dtype=float), r.shape))
        u[0] = 0.0
        traj.states.append(FluidState(grid, rho, u, float(t)))
    return traj
