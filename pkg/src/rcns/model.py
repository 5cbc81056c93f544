"""Physical parameters, fluid states, initial data families and hypothesis checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .grid import EVEN, ODD, RadialField, RadialGrid, cartesian_norm, ddr_values

DEGENERATE = "degenerate"
CONSTANT = "constant"
VACUUM = "vacuum"
POSITIVE = "positive_farfield"


@dataclass(frozen=True)
class ModelParams:
    n: int = 2
    alpha: float = 0.5
    gamma: float = 2.0
    A: float = 1.0
    rho_bar: float = 0.0
    viscosity_law: str = DEGENERATE

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))

    def violations(self):
        out = []
        if self.n not in (2, 3):
            out.append(f"n must be 2 or 3 (got {self.n})")
        if not self.alpha > 0:
            out.append(f"alpha must satisfy alpha>0 (got {self.alpha})")
        if not self.gamma > 1:
            out.append(f"gamma must satisfy γ>1 (got {self.gamma})")
        if not self.A > 0:
            out.append(f"A must satisfy A>0 (got {self.A})")
        if not self.rho_bar >= 0:
            out.append(f"rho_bar must be >= 0 (got {self.rho_bar})")
        if self.viscosity_law not in (DEGENERATE, CONSTANT):
            out.append(f"viscosity_law must be 'degenerate' or 'constant' (got {self.viscosity_law!r})")
        return out

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def regime(self) -> str:
        return VACUUM if self.rho_bar == 0 else POSITIVE

    @property
    def theorem_regime(self) -> bool:
        """Whether (n, gamma) lies in the range covered by the global theorems."""
        if self.viscosity_law != DEGENERATE:
            return False
        if self.n == 2:
            return self.gamma > 1
        return 1 < self.gamma < 3

    @property
    def sound_coefficient(self) -> float:
        """``A*gamma/(2*alpha)``, the damping rate factor of the effective velocity."""
        return self.A * self.gamma / (2 * self.alpha)


@dataclass(frozen=True, eq=False)
class FluidState:
    """Density and radial velocity on a shared grid at time ``t``."""

    grid: RadialGrid
    rho: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        u = np.array(self.u, dtype=float)
        if rho.shape != self.grid.r.shape or u.shape != self.grid.r.shape:
            raise ConfigError("rho and u must match the grid")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))):
            raise DomainError("fluid state contains non-finite values")
        if np.any(rho < 0):
            i = int(np.argmax(rho < 0))
            raise DomainError(f"negative density at node {i}")
        if u[0] != 0.0:
            raise DomainError("radial velocity must vanish at r=0")
        rho.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", float(self.t))

    @property
    def rho_field(self) -> RadialField:
        return RadialField(self.grid, self.rho, EVEN)

    @property
    def u_field(self) -> RadialField:
        return RadialField(self.grid, self.u, ODD)

    def replace(self, rho=None, u=None, t=None) -> "FluidState":
        return FluidState(
            self.grid,
            self.rho if rho is None else rho,
            self.u if u is None else u,
            self.t if t is None else t,
        )

    def truncate(self, R: float) -> "FluidState":
        g = self.grid.truncate(R)
        k = g.r.size
        return FluidState(g, self.rho[:k], self.u[:k], self.t)


@dataclass(frozen=True, eq=False)
class EnlargedState:
    phi: RadialField
    psi: RadialField
    u: RadialField


def _check_positive(rho):
    bad = np.flatnonzero(~(rho > 0))
    if bad.size:
        raise DomainError(f"non-positive density at node {int(bad[0])}")


def pressure(rho, params: ModelParams):
    """``P = A rho^gamma`` nodewise; accepts a RadialField or an array."""
    vals = rho.values if isinstance(rho, RadialField) else np.asarray(rho, dtype=float)
    _check_positive(vals)
    p = params.A * vals**params.gamma
    return rho.with_values(p) if isinstance(rho, RadialField) else p


def to_enlarged(state: FluidState, params: ModelParams) -> EnlargedState:
    _check_positive(state.rho)
    g = params.gamma
    phi = params.A * g / (g - 1) * state.rho ** (g - 1)
    psi = ddr_values(np.log(state.rho), state.grid.r, EVEN)
    return EnlargedState(
        RadialField(state.grid, phi, EVEN),
        RadialField(state.grid, psi, ODD),
        state.u_field,
    )


def density_from_phi(phi, params: ModelParams):
    vals = phi.values if isinstance(phi, RadialField) else np.asarray(phi)
    g = params.gamma
    return ((g - 1) * vals / (params.A * g)) ** (1.0 / (g - 1))


# --- initial data -----------------------------------------------------------

FAMILIES = ("algebraic", "exponential", "super_exponential", "positive_farfield", "constant_bump")
_VELOCITY_KEYS = {"u_amp": 0.0, "u_center": 2.0, "u_width": 1.5}
SHAPE_KEYS = {
    "algebraic": {"iota": None, **_VELOCITY_KEYS},
    "exponential": {"iota": None, **_VELOCITY_KEYS},
    "super_exponential": {"iota": None, **_VELOCITY_KEYS},
    "positive_farfield": {"perturbation": 0.0, "perturbation_width": 2.0, **_VELOCITY_KEYS},
    "constant_bump": {"level": 1.0, "height": 0.0, "bump_width": 2.0, **_VELOCITY_KEYS},
}


def smooth_bump(s):
    """``exp(1 - 1/(1-s^2))`` on ``|s|<1``, zero outside; peak value 1 at ``s=0``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def iota_bounds(family: str, params: ModelParams):
    """Open interval of admissible decay exponents for a vacuum family."""
    n, g = params.n, params.gamma
    if family == "algebraic":
        return max(n, n / (2 * g - 2)), math.inf
    if family in ("exponential", "super_exponential"):
        return 0.0, 2 - n / 2
    raise ConfigError(f"family {family!r} has no decay exponent")


def shape_defaults(family: str, params: ModelParams) -> dict:
    if family not in SHAPE_KEYS:
        raise ConfigError(f"unknown profile family {family!r}; expected one of {', '.join(FAMILIES)}")
    shape = dict(SHAPE_KEYS[family])
    if "iota" in shape:
        lo, hi = iota_bounds(family, params)
        shape["iota"] = lo + 1.0 if math.isinf(hi) else 0.5 * (lo + hi)
    return shape


def _resolve_shape(family, params, shape):
    full = shape_defaults(family, params)
    unknown = sorted(set(shape) - set(full))
    if unknown:
        raise ConfigError(f"unknown shape keys for {family}: {', '.join(unknown)}")
    full.update(shape)
    return full


def shape_violations(family: str, params: ModelParams, shape: dict):
    """Every violated admissibility condition for the given shape parameters."""
    try:
        s = _resolve_shape(family, params, shape)
    except ConfigError as exc:
        return [str(exc)]
    out = []
    if "iota" in s:
        lo, hi = iota_bounds(family, params)
        iota = s["iota"]
        if family == "algebraic" and not iota > lo:
            out.append(f"iota={iota} violates ι>max{{n, n/(2γ-2)}}={lo:g}")
        elif family != "algebraic" and not lo < iota < hi:
            out.append(f"iota={iota} violates 0<ι<2-n/2={hi:g}")
        if params.rho_bar != 0:
            out.append(f"family {family} describes far-field vacuum but rho_bar={params.rho_bar}")
    if s["u_width"] <= 0 or s["u_center"] - s["u_width"] <= 0:
        out.append("velocity bump support (u_center-u_width, u_center+u_width) must lie in r>0")
    if family == "positive_farfield":
        if params.rho_bar <= 0:
            out.append("positive_farfield needs rho_bar>0")
        elif params.rho_bar + min(s["perturbation"], 0.0) <= 0:
            out.append("perturbation makes the density non-positive")
        if s["perturbation_width"] <= 0:
            out.append("perturbation_width must be positive")
    if family == "constant_bump":
        if s["level"] <= 0 or s["level"] + min(s["height"], 0.0) <= 0:
            out.append("constant_bump density must stay positive")
        if s["bump_width"] <= 0:
            out.append("bump_width must be positive")
    return out


def make_initial_profile(family: str, params: ModelParams, grid: RadialGrid, **shape) -> FluidState:
    """Smooth positive density from ``family`` plus a compactly supported velocity bump."""
    problems = shape_violations(family, params, shape)
    if problems:
        raise ConfigError("; ".join(problems))
    s = _resolve_shape(family, params, shape)
    r = np.asarray(grid.r)
    q = 1.0 + r * r
    if family == "algebraic":
        rho = q ** (-s["iota"] / 2)
    elif family == "exponential":
        # smooth at r=0 and e^{r^iota} rho -> e as r -> inf
        rho = np.exp(1.0 - q ** (s["iota"] / 2))
    elif family == "super_exponential":
        rho = np.exp(-0.5 * q ** (s["iota"] / 2) * np.log(q))
    elif family == "positive_farfield":
        rho = params.rho_bar + s["perturbation"] * smooth_bump(r / s["perturbation_width"])
    else:
        rho = s["level"] + s["height"] * smooth_bump(r / s["bump_width"])
    u = s["u_amp"] * smooth_bump((r - s["u_center"]) / s["u_width"])
    u[0] = 0.0
    return FluidState(grid, rho, u, 0.0)


# --- hypothesis surrogates --------------------------------------------------


@dataclass(frozen=True)
class SurrogateCheck:
    name: str
    radii: tuple
    values: tuple
    finite: bool


@dataclass(frozen=True)
class HypothesisReport:
    regime: str
    order: int
    theorem_regime: bool
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.theorem_regime and all(c.finite for c in self.checks)

    @property
    def failures(self):
        out = [c.name for c in self.checks if not c.finite]
        if not self.theorem_regime:
            out.insert(0, "theorem_regime")
        return out

    def check(self, name) -> SurrogateCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _looks_finite(values) -> bool:
    """Tail test on a quantity evaluated at radii R/4, R/2, R.

    Finite when the last increment is within 1% of the value, or when the
    increments contract geometrically (ratio <= 0.75).
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return False
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if abs(d2) <= 0.01 * abs(v[2]):
        return True
    return d1 != 0 and abs(d2) <= 0.75 * abs(d1)


def validate_hypotheses(state: FluidState, params: ModelParams, order: int = 2) -> HypothesisReport:
    """Discrete surrogates for the integrability conditions on the initial data."""
    if order not in (2, 3):
        raise ConfigError("order must be 2 or 3")
    R = state.grid.R_max
    radii = (R / 4, R / 2, R)
    parts = [state.truncate(x) for x in radii]
    n = params.n
    checks = []

    def add(name, fn):
        try:
            vals = tuple(float(fn(s)) for s in parts)
        except (DomainError, FloatingPointError, ValueError):
            vals = (math.inf,) * 3
        checks.append(SurrogateCheck(name, radii, vals, _looks_finite(vals)))

    positive = bool(np.all(state.rho > 0))
    checks.append(SurrogateCheck("rho0 > 0", radii, (float(np.min(state.rho)),) * 3, positive))

    def log_rho(s):
        if not np.all(s.rho > 0):
            raise DomainError("density not positive")
        return RadialField(s.grid, np.log(s.rho), EVEN)

    def u_norm(k):
        return lambda s: cartesian_norm(s.u_field, "vector", k, 2)

    if params.regime == VACUUM:
        add("rho0 in L^1", lambda s: s.grid.omega * s.grid.integrate_volume(s.rho))
        g = params.gamma
        for k in range(1, order + 1):
            add(f"grad rho0^(γ-1) order {k - 1} in L^2",
                lambda s, k=k: cartesian_norm(RadialField(s.grid, s.rho ** (g - 1), EVEN), "scalar", k, 2))
        for k in range(2, order + 1):
            add(f"grad log rho0 in D^{k - 1}", lambda s, k=k: cartesian_norm(log_rho(s), "scalar", k, 2))
        if n == 3 and order == 2:
            add("grad log rho0 in L^inf",
                lambda s: np.max(np.abs(ddr_values(log_rho(s).values, s.grid.r, EVEN))))
    else:
        checks.append(SurrogateCheck("inf rho0 > 0", radii, (float(np.min(state.rho)),) * 3,
                                     bool(np.min(state.rho) > 0)))
        for k in range(order + 1):
            add(f"rho0 - rho_bar order {k} in L^2",
                lambda s, k=k: cartesian_norm(RadialField(s.grid, s.rho - params.rho_bar, EVEN), "scalar", k, 2))
        if n == 3 and order == 2:
            add("grad rho0 in L^inf", lambda s: np.max(np.abs(ddr_values(s.rho, s.grid.r, EVEN))))
    for k in range(order + 1):
        add(f"u0 order {k} in L^2", u_norm(k))
    return HypothesisReport(params.regime, order, params.theorem_regime, tuple(checks))
