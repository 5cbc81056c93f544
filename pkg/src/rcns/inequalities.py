"""Numerical checks of Hardy and Sobolev-type inequalities for radial fields.

Positive checks take a :class:`~rcns.grid.RadialField` and return the ratio
``LHS / RHS`` of the inequality; a bounded family supremum that is stable
under grid refinement is the numerical evidence for a finite constant.

Counterexample families are singular at a point, so they are evaluated from
analytic derivatives on logarithmically spaced meshes over a cut-off domain;
the ratio is then followed as the cut-off shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, PreconditionError
from .grid import (
    NONE,
    ODD,
    RadialField,
    RadialGrid,
    cartesian_norm,
    ddr_values,
    over_r_values,
    sphere_area,
    weighted_lp_norm,
)


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


def _need_odd(f: RadialField):
    if f.parity != ODD:
        raise PreconditionError("this check needs an odd vector profile f(r) x/r")


def _need_dim(f: RadialField, n: int):
    if n not in (2, 3):
        raise ConfigError(f"n must be 2 or 3 (got {n})")
    if f.grid.n != n:
        raise ConfigError(f"field lives on an n={f.grid.n} grid, check asked for n={n}")


# --- positive inequalities ---------------------------------------------------------


def hardy_violations(K: float, p: float, q: float, b: float):
    out = []
    if not (2 <= q < math.inf):
        out.append(f"q={q} violates q ∈ [2,∞)")
    if not (q <= p <= math.inf):
        out.append(f"p={p} violates p ∈ [q,∞]")
    if math.isinf(p):
        if not K > 0:
            out.append(f"K={K} violates K > 0 (p=∞)")
    elif not K > -1.0 / p:
        out.append(f"K={K} violates K > -1/p")
    if not b > 0:
        out.append(f"b={b} must be positive")
    return out


def hardy_check(f: RadialField, K: float, p: float, q: float, b: float) -> float:
    """``||r^K f||_{L^p(0,b)} / (||r^s f||_{L^q(0,b)} + ||r^s f_r||_{L^q(0,b)})``, ``s = K+1+1/p-1/q``."""
    problems = hardy_violations(K, p, q, b)
    if problems:
        raise ConfigError("; ".join(problems))
    s = K + 1 + (0.0 if math.isinf(p) else 1.0 / p) - 1.0 / q
    lhs = weighted_lp_norm(f, K, p, (0.0, b))
    fr = RadialField(f.grid, ddr_values(f.values, f.grid.r, f.parity), NONE)
    rhs = weighted_lp_norm(f, s, q, (0.0, b)) + weighted_lp_norm(fr, s, q, (0.0, b))
    return _ratio(lhs, rhs)


def hardy_check_ii(f: RadialField, p: float) -> float:
    """``||f/r||_{L^p(0,R)} / ||f_r||_{L^p(0,R)}`` for ``f(0) = 0``."""
    if not 1 < p < math.inf:
        raise ConfigError(f"p={p} violates p ∈ (1,∞)")
    scale = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if abs(f.values[0]) > 1e-12 * max(scale, 1e-300):
        raise PreconditionError(f"hypothesis f(0)=0 violated: f(0)={f.values[0]:g}")
    r = f.grid.r
    g = RadialField(f.grid, over_r_values(f.values, r), NONE)
    fr = RadialField(f.grid, ddr_values(f.values, r, ODD), NONE)
    return _ratio(weighted_lp_norm(g, 0.0, p), weighted_lp_norm(fr, 0.0, p))


def embed_Lnp_check(f: RadialField, n: int, p: float) -> float:
    """``||F||_{L^{np/(n-p)}} / ||grad F||_{L^p}`` for ``F = f(r) x/r``."""
    if not 1 <= p < n:
        raise ConfigError(f"p={p} violates p ∈ [1,n) with n={n}")
    _need_dim(f, n)
    _need_odd(f)
    q = n * p / (n - p)
    return _ratio(cartesian_norm(f, "vector", 0, q), cartesian_norm(f, "vector", 1, p))


def embed_Linf_check(f: RadialField, n: int) -> float:
    """``sup |F| / ||grad F||_{L^n}``."""
    _need_dim(f, n)
    _need_odd(f)
    return _ratio(float(np.max(np.abs(f.values))), cartesian_norm(f, "vector", 1, n))


def embed_W3n_check(f: RadialField, n: int) -> float:
    """``sup |grad^2 F| / ||grad^3 F||_{L^n}``."""
    if f.grid.r.size < 8:
        raise ConfigError(f"third derivatives need at least 8 grid nodes (got {f.grid.r.size})")
    _need_dim(f, n)
    _need_odd(f)
    return _ratio(cartesian_norm(f, "vector", 2, math.inf), cartesian_norm(f, "vector", 3, n))


def divcurl_check(f: RadialField, p: float):
    """``(||div F|| / ||grad F||, ||grad F|| / ||div F||)`` in ``L^p``."""
    if not 1 < p < math.inf:
        raise ConfigError(f"p={p} violates p ∈ (1,∞)")
    _need_odd(f)
    g = f.grid
    div = ddr_values(f.values, g.r, ODD) + g.m * over_r_values(f.values, g.r)
    dnorm = cartesian_norm(RadialField(g, div, NONE), "scalar", 0, p)
    gnorm = cartesian_norm(f, "vector", 1, p)
    return _ratio(dnorm, gnorm), _ratio(gnorm, dnorm)


# --- random smooth families ------------------------------------------------------


@dataclass(frozen=True)
class FunctionFamily:
    """Seeded odd profiles ``r * sum_i a_i exp(-((r-c_i)/w_i)^2)``."""

    name: str = "gaussian_bumps"
    seed: int = 0
    n_bumps: int = 8
    center_range: tuple = (0.0, 6.0)
    width_range: tuple = (0.3, 2.0)

    def parameters(self, count: int):
        rng = np.random.default_rng(self.seed)
        c = rng.uniform(*self.center_range, size=(count, self.n_bumps))
        w = rng.uniform(*self.width_range, size=(count, self.n_bumps))
        a = rng.standard_normal(size=(count, self.n_bumps))
        return c, w, a

    def evaluate(self, r, c, w, a):
        r = np.asarray(r, dtype=float)
        return r * np.sum(a[:, None] * np.exp(-(((r[None, :] - c[:, None]) / w[:, None]) ** 2)), axis=0)

    def samples(self, grid: RadialGrid, count: int):
        c, w, a = self.parameters(count)
        return [RadialField(grid, self.evaluate(grid.r, c[i], w[i], a[i]), ODD) for i in range(count)]


@dataclass
class RatioReport:
    family: str
    inequality: str
    labels: list  # cut-off values or resolutions
    ratios: list
    per_sample: list = field(default_factory=list)
    control: list = field(default_factory=list)
    threshold: float | None = None

    @property
    def max_ratio(self) -> float:
        return float(max(self.ratios)) if self.ratios else 0.0

    @property
    def growth(self) -> float:
        return self.ratios[-1] / self.ratios[0] if self.ratios and self.ratios[0] > 0 else math.inf

    @property
    def drift(self) -> float:
        """Relative change between the last two entries (refinement stability)."""
        if len(self.ratios) < 2:
            return 0.0
        a, b = self.ratios[-2], self.ratios[-1]
        return abs(b - a) / abs(a) if a else math.inf

    @property
    def control_drift(self) -> float:
        if not self.control:
            return 0.0
        c = np.asarray(self.control)
        return float((c.max() - c.min()) / c.min())

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.ratios) >= 0))

    def rows(self):
        return [(self.family, self.inequality, lab, val) for lab, val in zip(self.labels, self.ratios)]


POSITIVE_SUITES = {
    "hardy_i": lambda f: hardy_check(f, 0.5, 4, 2, 1),
    "hardy_ii": lambda f: hardy_check_ii(f, 2),
    "embed_Lnp_n3_p2": lambda f: embed_Lnp_check(f, 3, 2),
    "embed_Lnp_n2_p1": lambda f: embed_Lnp_check(f, 2, 1),
    "embed_Linf_n2": lambda f: embed_Linf_check(f, 2),
    "embed_W3n_n2": lambda f: embed_W3n_check(f, 2),
    "embed_W3n_n3": lambda f: embed_W3n_check(f, 3),
    "divcurl_p2": lambda f: divcurl_check(f, 2)[1],
}
SUITE_DIMENSION = {"embed_Lnp_n3_p2": 3, "embed_W3n_n3": 3}


def family_suite(name: str, family: FunctionFamily = FunctionFamily(), count: int = 200,
                 resolutions=(2000, 4000), R_max: float = 20.0, n: int | None = None) -> RatioReport:
    """Family supremum of one positive check at each resolution."""
    check = POSITIVE_SUITES[name]
    dim = n or SUITE_DIMENSION.get(name, 2)
    sups, per = [], []
    for N in resolutions:
        grid = RadialGrid.uniform(N, R_max, dim)
        vals = [check(f) for f in family.samples(grid, count)]
        per.append(vals)
        sups.append(float(np.max(vals)))
    return RatioReport(family.name, name, list(resolutions), sups, per_sample=per)


# --- counterexamples ---------------------------------------------------------------


def _log_mesh(a, b, points=4001):
    s = np.linspace(math.log(a), math.log(b), points)
    return s, np.exp(s)


def _radial_norm(vals, s, r, n, q):
    """``||g||_{L^q}`` over the shell for pointwise magnitudes ``vals`` on a log mesh."""
    if math.isinf(q):
        return float(np.max(np.abs(vals)))
    integrand = np.abs(vals) ** q * r**n  # r^(n-1) dr = r^n ds
    return float((sphere_area(n) * simpson(integrand, x=s)) ** (1.0 / q))


def _vector_magnitudes(f, f1, f2, f3, r, n):
    """|grad^k F| for k=0..3 from analytic derivatives of the profile."""
    m = n - 1
    g = f / r
    g1 = f1 / r - f / r**2
    g2 = f2 / r - 2 * f1 / r**2 + 2 * f / r**3
    mags = [np.abs(f), np.sqrt(f1**2 + m * g**2), np.sqrt(f2**2 + 3 * m * g1**2)]
    if f3 is not None:
        mags.append(np.sqrt(f3**2 + 6 * m * g2**2 + (3 * m * m + 6 * m) * (g1 / r) ** 2))
    return mags


def _c2_profile(r, nu):
    L = -np.log(r)
    f = r * L**nu
    f1 = L**nu - nu * L ** (nu - 1)
    f2 = (-nu * L ** (nu - 1) + nu * (nu - 1) * L ** (nu - 2)) / r
    return f, f1, f2


def _control_profile(r):
    e = np.exp(-r)
    return r * e, (1 - r) * e, (r - 2) * e


def c2_ratio(eps, n, nu=0.4, control=False, points=4001):
    """``||grad F||_inf / ||F||_{W^{2,n}}`` on ``eps < |x| < 1/e`` and the second-derivative proxy."""
    s, r = _log_mesh(eps, math.exp(-1) if not control else 10.0, points)
    f, f1, f2 = _control_profile(r) if control else _c2_profile(r, nu)
    m0, m1, m2 = _vector_magnitudes(f, f1, f2, None, r, n)
    w2n = sum(_radial_norm(v, s, r, n, n) for v in (m0, m1, m2))
    return float(np.max(m1)) / w2n, _radial_norm(m2, s, r, n, n)


def _c4_profile(z):
    """``(-log z)^(1/3)`` up to ``1/e``, continued by ``(1/(e z))^2``; returns ``g, g_r``."""
    inner = z <= math.exp(-1)
    L = -np.log(np.where(inner, z, math.exp(-1)))
    g = np.where(inner, np.cbrt(L), (math.exp(-1) / z) ** 2)
    g1 = np.where(inner, -(1.0 / 3.0) * L ** (-2.0 / 3.0) / z, -2 * math.exp(-2) / z**3)
    return g, g1


def c4_ratio(eps, n, control=False, R=50.0, points=6001):
    """``sup |g| / ||grad g||_{L^n}`` for a radial scalar on ``eps < |x| < R``."""
    s, z = _log_mesh(eps, R, points)
    if control:
        g, g1 = np.exp(-z * z), -2 * z * np.exp(-z * z)
    else:
        g, g1 = _c4_profile(z)
    return float(np.max(np.abs(g))) / _radial_norm(g1, s, z, n, n)


def c3_ratio(eps, n, control=False, points=6001):
    """``||f||_{L^n} / ||grad f||_{L^n}`` for ``f = 1/log r`` on ``e < |x| < 1/eps``."""
    s, r = _log_mesh(math.e, 1.0 / eps, points)
    if control:
        f, f1 = r * np.exp(-r), (1 - r) * np.exp(-r)
    else:
        L = np.log(r)
        f, f1 = 1.0 / L, -1.0 / (r * L * L)
    return _radial_norm(f, s, r, n, n) / _radial_norm(f1, s, r, n, n)


DEFAULT_LADDER = (1e-3, 1e-4, 1e-5, 1e-6)


def counterexample_suite(n: int, ladder=DEFAULT_LADDER, nu: float = 0.4, threshold: float = 10.0):
    """Ratio growth of the three counterexample families and their smooth controls."""
    ladder = [float(e) for e in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])) or ladder[-1] <= 0:
        raise ConfigError("cut-off ladder must be positive and strictly decreasing")
    if not 0 < nu < (n - 1) / n:
        raise ConfigError(f"nu={nu} violates nu ∈ (0,(n-1)/n)")
    reports = []

    c2 = [c2_ratio(e, n, nu) for e in ladder]
    rep = RatioReport("r|log r|^nu", "W2n_to_W1inf", ladder, [x[0] for x in c2],
                      control=[c2_ratio(e, n, control=True)[0] for e in ladder], threshold=threshold)
    rep.per_sample = [x[1] for x in c2]  # ||grad^2 F||_{L^n} proxy
    reports.append(rep)
    reports.append(RatioReport("|log z|^(1/3)", "scalar_D1n_to_Linf", ladder, [c4_ratio(e, n) for e in ladder],
                               control=[c4_ratio(e, n, control=True) for e in ladder], threshold=threshold))
    reports.append(RatioReport("1/log r", "D1n_to_Ln", ladder, [c3_ratio(e, n) for e in ladder],
                               control=[c3_ratio(e, n, control=True) for e in ladder], threshold=threshold))
    return reports
