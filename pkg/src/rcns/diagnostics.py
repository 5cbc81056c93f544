"""Conserved quantities, entropy functionals and bound monitors.

Mass uses the dual-cell weights the solver's flux form telescopes against,
so discrete mass is conserved to round-off.  Every other functional is an
integral ``int r^m g dr`` evaluated with :func:`~rcns.grid.integrate_power`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FloorWarning, RegimeError
from .grid import EVEN, ODD, RadialField, ddr_values, integrate_power, over_r_values
from .model import POSITIVE, VACUUM, FluidState, ModelParams

CSV_COLUMNS = ("t", "M", "p_scalar", "E", "B", "D", "J", "sup_rho", "inf_rho", "v_sup")


def _volume_integral(state: FluidState, g) -> float:
    return integrate_power(state.grid.r, g, state.grid.m)


def _log_rho_r(rho, r):
    with np.errstate(divide="ignore"):
        return ddr_values(np.log(rho), r, EVEN)


def _floor_fraction(rho, floor, r=None, R=None):
    if floor is None:
        return 0.0
    mask = slice(None) if R is None else r <= R
    sel = rho[mask]
    return float(np.count_nonzero(sel <= floor)) / max(sel.size, 1)


def total_mass(state: FluidState, rule: str = "dual") -> float:
    """``omega_n int r^m rho dr``.

    ``rule="dual"`` (default) uses the solver's dual-cell weights, the
    discrete mass the flux form conserves to round-off.  ``rule="simpson"``
    is a higher-order quadrature of the same integral for accuracy checks.
    """
    g = state.grid
    if rule == "dual":
        return g.omega * g.integrate_volume(state.rho)
    if rule == "simpson":
        return g.omega * integrate_power(g.r, state.rho, g.m)
    raise DomainError(f"unknown mass rule {rule!r}; expected 'dual' or 'simpson'")


def radial_momentum(state: FluidState) -> float:
    """Scalar content ``int r^m rho u dr`` of the momentum."""
    return _volume_integral(state, state.rho * state.u)


def vector_momentum(state: FluidState) -> np.ndarray:
    """The momentum vector ``int rho u x/r dx``.

    Angular integration of ``x/r`` over each sphere vanishes, so for any
    radial state this is exactly the zero vector of length ``n``.
    """
    return np.zeros(state.grid.n)


def effective_velocity(state: FluidState, params: ModelParams, floor: float | None = None,
                       R_probe: float | None = None) -> RadialField:
    """``v = u + 2 alpha (log rho)_r`` as an odd profile."""
    if np.any(state.rho <= 0):
        raise DomainError(f"effective velocity needs rho > 0 (node {int(np.argmax(state.rho <= 0))})")
    if _floor_fraction(state.rho, floor, state.grid.r, R_probe) > 0.5:
        warnings.warn("density sits at the floor on most of the probe interval; v is not meaningful there",
                      FloorWarning)
    v = state.u + 2 * params.alpha * _log_rho_r(state.rho, state.grid.r)
    v[0] = 0.0
    return RadialField(state.grid, v, ODD)


def energy_dissipation_rate(state: FluidState, params: ModelParams) -> float:
    """``2 alpha int r^m (rho u_r^2 + m rho u^2/r^2) dr``."""
    r, u, rho = state.grid.r, state.u, state.rho
    ur = ddr_values(u, r, ODD)
    uor = over_r_values(u, r)
    mu = rho if params.viscosity_law != "constant" else np.ones_like(rho)
    return 2 * params.alpha * _volume_integral(state, mu * (ur**2 + state.grid.m * uor**2))


def energy(state: FluidState, params: ModelParams):
    """``(E, dE_dissipation_rate)`` with ``E = int r^m (rho u^2/2 + A rho^gamma/(gamma-1)) dr``."""
    if params.regime == POSITIVE:
        raise RegimeError("energy is the vacuum functional; use j_gamma_energy when rho_bar > 0")
    g = params.gamma
    dens = 0.5 * state.rho * state.u**2 + params.A / (g - 1) * state.rho**g
    return _volume_integral(state, dens), energy_dissipation_rate(state, params)


def _pressure_potential(rho, params):
    if params.regime == POSITIVE:
        return _j(rho, params.rho_bar, params.gamma)
    return rho**params.gamma


def bd_dissipation_rate(state: FluidState, params: ModelParams) -> float:
    """``2 A alpha gamma int r^m rho^(gamma-2) rho_r^2 dr``, written as ``rho^gamma ((log rho)_r)^2``."""
    rho = np.maximum(state.rho, np.finfo(float).tiny)
    lr = _log_rho_r(rho, state.grid.r)
    g = params.gamma
    return 2 * params.A * params.alpha * g * _volume_integral(state, rho**g * lr**2)


def bd_entropy(state: FluidState, params: ModelParams, floor: float | None = None):
    """``(B, dissipation_rate)`` with
    ``B = int r^m (rho v^2/2 + ((sqrt rho)_r)^2 + A rho^gamma/(gamma-1)) dr``.

    In the positive far-field regime ``rho^gamma`` is replaced by ``j_gamma(rho)``.
    """
    if np.any(state.rho <= 0):
        raise DomainError("BD entropy needs rho > 0")
    if _floor_fraction(state.rho, floor) > 0.5:
        warnings.warn("density sits at the floor on most of the grid", FloorWarning)
    rho = state.rho
    lr = _log_rho_r(rho, state.grid.r)
    v = state.u + 2 * params.alpha * lr
    sqrt_r = 0.5 * np.sqrt(rho) * lr
    g = params.gamma
    dens = 0.5 * rho * v**2 + sqrt_r**2 + params.A / (g - 1) * _pressure_potential(rho, params)
    return _volume_integral(state, dens), bd_dissipation_rate(state, params)


def _j(z, rho_bar, gamma):
    z = np.asarray(z, dtype=float)
    return (z**gamma - rho_bar**gamma) - gamma * rho_bar ** (gamma - 1) * (z - rho_bar)


def j_gamma(z, rho_bar: float, gamma: float):
    """``(z^gamma - rho_bar^gamma) - gamma rho_bar^(gamma-1) (z - rho_bar)``."""
    if not rho_bar > 0:
        raise RegimeError(f"j_gamma needs rho_bar > 0 (got {rho_bar})")
    if np.any(np.asarray(z) < 0):
        raise DomainError("j_gamma needs z >= 0")
    out = _j(z, rho_bar, gamma)
    return float(out) if np.ndim(out) == 0 else out


def j_gamma_energy(state: FluidState, params: ModelParams) -> float:
    """``int r^m (rho u^2/2 + A j_gamma(rho)/(gamma-1)) dr``."""
    if params.regime != POSITIVE:
        raise RegimeError("j_gamma_energy needs rho_bar > 0")
    g = params.gamma
    dens = 0.5 * state.rho * state.u**2 + params.A / (g - 1) * j_gamma(state.rho, params.rho_bar, g)
    return _volume_integral(state, dens)


def weighted_uv_norms(state: FluidState, params: ModelParams, p: float) -> dict:
    """The weighted ``L^p`` norms of ``u`` and ``v`` tracked by the a priori estimates."""
    if not p >= 2:
        raise DomainError(f"weighted (u, v) norms need p >= 2 (got {p})")
    r, m = state.grid.r, state.grid.m
    rho, u = state.rho, state.u
    v = effective_velocity(state, params).values
    au, av = np.abs(u) ** p, np.abs(v) ** p
    return {
        "rm_rho_u": integrate_power(r, rho * au, m) ** (1 / p),
        "rm_rho_v": integrate_power(r, rho * av, m) ** (1 / p),
        "rho_u": integrate_power(r, rho * au, 0) ** (1 / p),
        "rm2_rho_u": integrate_power(r, rho * au, m - 2) ** (1 / p),
    }


# --- sampling ----------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """One weighted-norm column: ``|| r^K q ||_{L^p(a,b)}`` for ``q`` in rho, u, v."""

    quantity: str
    K: float
    p: float
    a: float
    b: float

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        parts = text.strip().split(":")
        if len(parts) != 5 or parts[0] not in ("rho", "u", "v"):
            raise DomainError(f"norm spec {text!r} must read quantity:K:p:a:b with quantity in rho,u,v")
        return cls(parts[0], *(float(x) for x in parts[1:]))

    def __str__(self):
        return f"{self.quantity}:{self.K:g}:{self.p:g}:{self.a:g}:{self.b:g}"

    @property
    def column(self) -> str:
        return f"{self.quantity}_K{self.K:g}_p{self.p:g}_{self.a:g}-{self.b:g}"


def _norm_value(spec: NormSpec, state, params):
    from .grid import weighted_lp_norm

    if spec.quantity == "rho":
        f = state.rho_field
    elif spec.quantity == "u":
        f = state.u_field
    else:
        f = effective_velocity(state, params)
    b = min(spec.b, state.grid.R_max)
    return weighted_lp_norm(f, spec.K, spec.p, (spec.a, b))


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    M: float
    p_scalar: float
    E: float
    B: float
    D: float
    J: float
    sup_rho: float
    inf_rho: float
    v_sup: float
    norms: dict = field(default_factory=dict)

    @property
    def P(self) -> np.ndarray:
        return np.zeros(3)

    def columns(self):
        return list(CSV_COLUMNS) + list(self.norms)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS] + list(self.norms.values())


def sample(state: FluidState, params: ModelParams, D: float = 0.0, R_probe: float | None = None,
           norm_specs=()) -> DiagnosticsSample:
    r = state.grid.r
    R = state.grid.R_max if R_probe is None else R_probe
    rho_pos = np.maximum(state.rho, np.finfo(float).tiny)
    s = state.replace(rho=rho_pos)
    E = energy(s, params)[0] if params.regime == VACUUM else j_gamma_energy(s, params)
    B = bd_entropy(s, params)[0]
    g = params.gamma
    dens = 0.5 * s.rho * s.u**2 + params.A / (g - 1) * _j(s.rho, params.rho_bar, g)
    J = _volume_integral(s, dens)
    v = effective_velocity(s, params).values
    return DiagnosticsSample(
        t=state.t,
        M=total_mass(state),
        p_scalar=radial_momentum(state),
        E=E,
        B=B,
        D=D,
        J=J,
        sup_rho=float(np.max(state.rho)),
        inf_rho=float(np.min(state.rho[r <= R * (1 + 1e-14)])),
        v_sup=float(np.max(np.abs(v))),
        norms={spec.column: _norm_value(spec, s, params) for spec in norm_specs},
    )


# --- bound monitoring --------------------------------------------------------


@dataclass
class ProbeBounds:
    R: float
    sup_rho: float
    inf_rho: float
    sup_v: float
    rho_low0: float  # inf of the initial density on [0, R]
    floor_hit_time: float | None


@dataclass
class BoundReport:
    probes: list
    C_up: float
    C_v: float
    c1: float
    c2: float
    lower_bound_ok: bool
    first_failure_time: float | None
    regime: str

    @property
    def all_finite(self) -> bool:
        vals = [self.C_up, self.C_v, self.c1, self.c2]
        vals += [x for p in self.probes for x in (p.sup_rho, p.inf_rho, p.sup_v)]
        return all(math.isfinite(x) for x in vals)

    def as_dict(self):
        return {
            "C_up": self.C_up, "C_v": self.C_v, "c1": self.c1, "c2": self.c2,
            "lower_bound_ok": self.lower_bound_ok, "first_failure_time": self.first_failure_time,
            "regime": self.regime,
        }


def bound_monitor(traj, params: ModelParams, probes, floor_fraction: float = 0.01) -> BoundReport:
    """Running sup/inf monitors and fitted constants of the bound shapes.

    ``C_up`` and ``C_v`` are the growth of ``sup rho`` and ``sup |v|``
    relative to the initial data (``C_v = 0`` when ``v_0 = 0``).  For the
    vacuum lower bound the smallest ``c2`` with
    ``inf_{[0,R]} rho >= (rho_low(R)/e)^(c2 (sqrt R + 1))`` over all probes
    is reported together with ``c1 = 1 / min_R inf_{[0,R]} rho``; in the
    positive regime ``c1 = c2 = max(sup rho, 1/inf rho)``.
    """
    states = traj.states
    if len(states) < 2:
        raise DomainError("bound_monitor needs a trajectory with at least two samples")
    floor = traj.rho_floor
    r = states[0].grid.r
    rho_stack = np.array([s.rho for s in states])
    v_stack = np.array([np.abs(effective_velocity(s.replace(rho=np.maximum(s.rho, floor)), params).values)
                        for s in states])
    sup_rho0 = float(np.max(rho_stack[0]))
    v0 = float(np.max(v_stack[0]))
    reports = []
    first_fail = None
    for R in probes:
        inside = r <= R * (1 + 1e-14)
        sub = rho_stack[:, inside]
        hits = np.count_nonzero(sub <= floor * (1 + 1e-12), axis=1) / inside.sum()
        bad = np.nonzero(hits > floor_fraction)[0]
        t_hit = float(states[bad[0]].t) if bad.size else None
        if t_hit is not None and (first_fail is None or t_hit < first_fail):
            first_fail = t_hit
        reports.append(ProbeBounds(
            R=float(R),
            sup_rho=float(sub.max()),
            inf_rho=float(sub.min()),
            sup_v=float(v_stack[:, inside].max()),
            rho_low0=float(sub[0].min()),
            floor_hit_time=t_hit,
        ))
    C_up = float(rho_stack.max()) / sup_rho0 if sup_rho0 > 0 else math.inf
    C_v = float(v_stack.max()) / v0 if v0 > 0 else 0.0
    infs = np.array([p.inf_rho for p in reports])
    if params.regime == POSITIVE:
        c1 = c2 = max(float(rho_stack.max()), 1.0 / infs.min()) if infs.min() > 0 else math.inf
        ok = first_fail is None and math.isfinite(c1) and infs.min() >= 1.0 / c1
    else:
        c1 = 1.0 / infs.min() if infs.min() > 0 else math.inf
        c2 = 0.0
        for p in reports:
            base = math.log(p.rho_low0) - 1.0 if p.rho_low0 > 0 else -math.inf
            if p.inf_rho >= 1.0:
                continue
            if p.inf_rho <= 0 or not math.isfinite(base):
                c2 = math.inf
                break
            c2 = max(c2, math.log(p.inf_rho) / ((math.sqrt(p.R) + 1) * base))
        ok = first_fail is None and math.isfinite(c1) and math.isfinite(c2)
    return BoundReport(reports, C_up, C_v, c1, c2, bool(ok), first_fail, params.regime)
