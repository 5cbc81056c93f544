"""Radial mesh, quadrature, parity-aware derivatives and weighted norms.

Fields live on nodes ``0 = r_0 < r_1 < ... < r_N = R_max``.  Two
quadratures are provided:

* dual-cell volume weights for ``int f r^m dr`` (cell ``i`` spans the
  midpoints around ``r_i``).  These are the weights the solver's mass
  update telescopes against, so mass-like functionals use them.
* ``integrate_power`` for ``int r^s g dr``.  Integer ``s >= 0`` gives a
  smooth integrand, integrated by composite Simpson.  Other exponents use
  product integration: ``g`` piecewise linear and the power weight
  integrated exactly on each cell, which handles the singular weights
  (``s > -1``) of Hardy-type norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, DomainError, ParityError, PreconditionError

EVEN = "even"
ODD = "odd"
NONE = "none"
_PARITIES = (EVEN, ODD, NONE)
_FLIP = {EVEN: ODD, ODD: EVEN, NONE: NONE}


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class RadialGrid:
    """Immutable radial node set with cached spacings and weights."""

    def __init__(self, r, n: int):
        r = np.asarray(r, dtype=float)
        if n not in (2, 3):
            raise ConfigError(f"dimension n must be 2 or 3, got {n}")
        if r.ndim != 1 or r.size < 4:
            raise ConfigError("a radial grid needs at least 4 nodes")
        if r[0] != 0.0:
            raise ConfigError("first node must be r=0 exactly")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        self.r = _readonly(r)
        self.n = n
        self.m = n - 1
        self.omega = sphere_area(n)
        self.h = _readonly(np.diff(r))
        mid = 0.5 * (r[1:] + r[:-1])
        self.r_half = _readonly(mid)
        lo = np.concatenate([[0.0], mid])
        hi = np.concatenate([mid, [r[-1]]])
        self.volume_weights = _readonly((hi**n - lo**n) / n)
        tw = np.zeros_like(r)
        tw[:-1] += 0.5 * self.h
        tw[1:] += 0.5 * self.h
        self.trapz_weights = _readonly(tw)

    @classmethod
    def uniform(cls, N: int, R_max: float, n: int) -> "RadialGrid":
        return cls(np.linspace(0.0, R_max, N + 1), n)

    @classmethod
    def stretched(cls, N: int, R_max: float, n: int, stretch: float = 1.0) -> "RadialGrid":
        """Geometric spacing ``h_i = h_0 * stretch**i``; ``stretch=1`` is uniform."""
        if stretch <= 0:
            raise ConfigError("stretch factor must be positive")
        if stretch == 1.0:
            return cls.uniform(N, R_max, n)
        steps = stretch ** np.arange(N)
        r = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(r * (R_max / r[-1]), n)

    @property
    def N(self) -> int:
        return self.r.size - 1

    @property
    def R_max(self) -> float:
        return float(self.r[-1])

    def __len__(self):
        return self.r.size

    def __repr__(self):
        return f"RadialGrid(N={self.N}, R_max={self.R_max:g}, n={self.n})"

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (self.n == other.n and np.array_equal(self.r, other.r))

    def integrate(self, values) -> float:
        """Trapezoid rule for ``int f dr`` (exact for degree <= 1)."""
        return float(np.dot(self.trapz_weights, values))

    def integrate_volume(self, values) -> float:
        """Dual-cell rule for ``int f r^m dr`` (exact for constant ``f``)."""
        return float(np.dot(self.volume_weights, values))

    def truncate(self, R: float) -> "RadialGrid":
        return RadialGrid(self.r[self.r <= R * (1 + 1e-14)], self.n)

    def field(self, values, parity: str = NONE) -> "RadialField":
        return RadialField(self, values, parity)

    def sample(self, func, parity: str = NONE) -> "RadialField":
        return RadialField(self, func(np.asarray(self.r)), parity)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Nodal values of a radial profile.

    ``parity`` selects the ghost extension at ``r=0``: ``"even"`` for
    scalars ``f(|x|)``, ``"odd"`` for vector profiles ``f(r) x/r`` (which
    must vanish at the centre), ``"none"`` for one-sided stencils.
    """

    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    parity: str = NONE

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise ConfigError(f"field has {v.size} values for {self.grid.r.size} nodes")
        if self.parity not in _PARITIES:
            raise ConfigError(f"unknown parity tag {self.parity!r}")
        if self.parity == ODD and v[0] != 0.0:
            raise PreconditionError("odd (vector-profile) field must vanish at r=0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def r(self):
        return self.grid.r

    def with_values(self, values, parity=None) -> "RadialField":
        return RadialField(self.grid, values, self.parity if parity is None else parity)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def ddr_values(f, r, parity=NONE):
    """Second-order nodal derivative with a parity ghost at ``r=0``."""
    d = np.gradient(f, r, edge_order=2)
    if parity == EVEN:
        d[0] = 0.0
    elif parity == ODD:
        # antisymmetric ghost f(-r1) = -f(r1), centred difference
        d[0] = f[1] / r[1]
    return d


def over_r_values(f, r):
    """``f/r`` for an odd profile, with the L'Hopital value ``f_r(0)`` at the centre."""
    out = np.empty_like(f)
    out[1:] = f[1:] / r[1:]
    out[0] = f[1] / r[1]
    return out


def ddr(f: RadialField) -> RadialField:
    return RadialField(f.grid, ddr_values(f.values, f.grid.r, f.parity), _FLIP[f.parity])


def over_r(f: RadialField) -> RadialField:
    if f.parity != ODD:
        raise ParityError("f/r is only regular at r=0 for odd profiles")
    return RadialField(f.grid, over_r_values(f.values, f.grid.r), EVEN)


def div_radial(f: RadialField, m: int | None = None) -> RadialField:
    """Divergence ``f_r + (m/r) f`` of the vector field ``f(r) x/r``."""
    if f.parity != ODD:
        raise ParityError("div_radial needs an odd-vector-profile field")
    m = f.grid.m if m is None else m
    fr = ddr_values(f.values, f.grid.r, ODD)
    return RadialField(f.grid, fr + m * over_r_values(f.values, f.grid.r), EVEN)


def _power_integral(x0, x1, e):
    """``int_{x0}^{x1} r^e dr`` per cell, with the logarithmic case ``e = -1``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if e == -1:
            return np.log(x1 / x0)
        return (x1 ** (e + 1) - x0 ** (e + 1)) / (e + 1)


def _cell_moments(x0, x1, s):
    """Exact ``int r^s (x1-r)/h`` and ``int r^s (r-x0)/h`` over each cell."""
    h = x1 - x0
    if s == 0:
        half = 0.5 * h
        return half, half.copy()
    m0 = _power_integral(x0, x1, s)
    m1 = _power_integral(x0, x1, s + 1)
    with np.errstate(invalid="ignore"):
        a = (x1 * m0 - m1) / h
        b = (m1 - x0 * m0) / h
    if x0[0] == 0.0 and s <= -1:
        a[0] = np.inf
        b[0] = h[0] ** (s + 1) / (s + 2) if s > -2 else np.inf
    return a, b


def integrate_power(r, g, s: float) -> float:
    """``int r^s g(r) dr``: Simpson for integer ``s >= 0``, product integration otherwise."""
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=float)
    if s >= 0 and float(s).is_integer() and r.size >= 3:
        return float(simpson(g * r ** int(s), x=r))
    a, b = _cell_moments(r[:-1], r[1:], s)
    with np.errstate(invalid="ignore"):
        left = g[:-1] * a
        right = g[1:] * b
    if r[0] == 0.0 and s <= -1:
        if g[0] != 0.0 or (s <= -2 and g[1] != 0.0):
            return math.inf
        left[0] = 0.0
        right[0] = 0.0 if s <= -2 else right[0]
    return float(np.sum(left) + np.sum(right))


def _restrict(f: RadialField, a: float, b: float):
    r = f.grid.r
    if a < 0 or b > r[-1] * (1 + 1e-14) or a >= b:
        raise DomainError(f"interval [{a}, {b}] not inside [0, {r[-1]}]")
    b = min(b, float(r[-1]))
    # drop nodes so close to an endpoint that they would make a sliver cell
    tol = 1e-9 * float(np.min(np.diff(r)))
    inside = (r > a + tol) & (r < b - tol)
    rr = np.concatenate([[a], r[inside], [b]])
    vv = np.interp(rr, r, f.values)
    return rr, vv


def weighted_lp_norm(f: RadialField, K: float, p: float, interval=None) -> float:
    """``(int_a^b |r^K f|^p dr)^(1/p)``, or the nodal sup for ``p = inf``."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    a, b = (0.0, f.grid.R_max) if interval is None else interval
    r, v = _restrict(f, a, b)
    if math.isinf(p):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(v == 0.0, 0.0, np.abs(v) * r ** K if K else np.abs(v))
        return float(np.max(w))
    return integrate_power(r, np.abs(v) ** p, K * p) ** (1.0 / p)


def vector_gradient_magnitude(f: RadialField, k: int) -> np.ndarray:
    """Pointwise Frobenius norm of ``grad^k`` of ``f(r) x/r``.

    Uses ``|grad F|^2 = f_r^2 + m (f/r)^2``,
    ``|grad^2 F|^2 = f_rr^2 + 3m ((f/r)_r)^2`` and
    ``|grad^3 F|^2 = f_rrr^2 + 6m ((f/r)_rr)^2 + (3m^2+6m) ((f/r)_r / r)^2``.
    """
    if f.parity != ODD:
        raise ParityError("vector norms need an odd-vector-profile field")
    m = f.grid.m
    if k == 0:
        return np.abs(f.values)
    g = over_r(f)
    if k == 1:
        return np.sqrt(ddr(f).values ** 2 + m * g.values**2)
    frr = ddr(ddr(f))
    gr = ddr(g)
    if k == 2:
        return np.sqrt(frr.values**2 + 3 * m * gr.values**2)
    if k == 3:
        frrr = ddr(frr).values
        grr = ddr(gr).values
        hh = over_r(gr).values
        return np.sqrt(frrr**2 + 6 * m * grr**2 + (3 * m * m + 6 * m) * hh**2)
    raise ConfigError(f"vector derivative order {k} not supported (k <= 3)")


def scalar_gradient_magnitude(f: RadialField, k: int) -> np.ndarray:
    if f.parity == ODD:
        raise ParityError("scalar norms need an even (or untagged) field")
    if k == 0:
        return np.abs(f.values)
    if k > 3:
        raise ConfigError(f"scalar derivative order {k} not supported (k <= 3)")
    # grad f = f_r x/r is a vector profile with h = f_r
    fr = ddr_values(f.values, f.grid.r, EVEN)
    fr[0] = 0.0
    return vector_gradient_magnitude(RadialField(f.grid, fr, ODD), k - 1)


def cartesian_norm(f: RadialField, kind: str, k: int, q: float, interval=None) -> float:
    """``||grad^k F||_{L^q}`` over the shell ``a <= |x| < b`` via the radial expression.

    The surface factor ``omega_n^(1/q)`` is included, so the value is the
    n-dimensional norm itself.
    """
    if kind == "vector":
        mag = vector_gradient_magnitude(f, k)
    elif kind == "scalar":
        mag = scalar_gradient_magnitude(f, k)
    else:
        raise ConfigError(f"unknown field kind {kind!r}")
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    mf = RadialField(f.grid, mag, NONE)
    a, b = (0.0, f.grid.R_max) if interval is None else interval
    r, v = _restrict(mf, a, b)
    if math.isinf(q):
        return float(np.max(np.abs(v)))
    return (f.grid.omega * integrate_power(r, np.abs(v) ** q, f.grid.m)) ** (1.0 / q)
