"""Scenario files: an INI-style description of one run.

Sections and keys (every key optional)::

    [scenario]        name, seed
    [model]           n, alpha, gamma, A, rho_bar, viscosity_law
    [initial]         family, plus the family's shape keys
    [grid]            N, R_max, stretch
    [solver]          scheme, integrator, cfl, T, rho_floor, dt_fixed, cavitation_fraction
    [diagnostics]     probe_radii, snapshot_every, weighted_norms, tol_mass
    [characteristics] seeds, substeps
    [output]          directory, checkpoint_times

Lists are comma separated.  ``rho_floor = auto`` and ``dt_fixed = none``
select the defaults.  Parsing collects every violation before failing.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import math
import warnings
from dataclasses import dataclass, field

from .diagnostics import NormSpec
from .errors import ConfigError, ScenarioError
from .grid import RadialGrid
from .model import (
    POSITIVE,
    SHAPE_KEYS,
    FluidState,
    ModelParams,
    make_initial_profile,
    shape_defaults,
    shape_violations,
)
from .solver import SolverConfig


class TheoremRegimeWarning(UserWarning):
    """Parameters lie outside the range covered by the global existence theorem."""


@dataclass(frozen=True)
class GridSpec:
    N: int = 1024
    R_max: float = 20.0
    stretch: float = 1.0

    def build(self, n: int) -> RadialGrid:
        return RadialGrid.stretched(self.N, self.R_max, n, self.stretch)


@dataclass(frozen=True)
class DiagnosticsPlan:
    probe_radii: tuple = (5.0,)
    snapshot_every: int = 10
    weighted_norms: tuple = ()
    tol_mass: float = 1e-6


@dataclass(frozen=True)
class CharacteristicsPlan:
    seeds: tuple = ()
    substeps: int = 4


@dataclass(frozen=True)
class OutputPlan:
    directory: str = "out"
    checkpoint_times: tuple = ()


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    seed: int = 0
    model: ModelParams = ModelParams()
    family: str = "algebraic"
    shape: dict = field(default_factory=dict)
    grid: GridSpec = GridSpec()
    solver: SolverConfig = SolverConfig()
    diagnostics: DiagnosticsPlan = DiagnosticsPlan()
    characteristics: CharacteristicsPlan = CharacteristicsPlan()
    output: OutputPlan = OutputPlan()

    def make_grid(self) -> RadialGrid:
        return self.grid.build(self.model.n)

    def initial_state(self) -> FluidState:
        return make_initial_profile(self.family, self.model, self.make_grid(), **self.shape)

    def tail(self, initial: FluidState):
        """Far-end Dirichlet values: the initial tail (vacuum) or ``rho_bar`` (positive)."""
        if self.model.regime == POSITIVE:
            return (self.model.rho_bar, 0.0)
        return (float(initial.rho[-1]), 0.0)

    def with_resolution(self, N: int) -> "Scenario":
        return dataclasses.replace(self, grid=dataclasses.replace(self.grid, N=int(N)))

    def with_(self, **sections) -> "Scenario":
        return dataclasses.replace(self, **sections)

    @property
    def hash(self) -> bytes:
        """SHA-256 of the canonical text, ignoring the output directory."""
        text = serialize_scenario(dataclasses.replace(self, output=dataclasses.replace(self.output, directory="")))
        return hashlib.sha256(text.encode()).digest()


# --- parsing ---------------------------------------------------------------------

_AUTO = ("auto", "none", "")


def _float(text):
    return float(text)


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _optional_float(text):
    return None if text.strip().lower() in _AUTO else float(text)


def _norms(text):
    return tuple(NormSpec.parse(x) for x in text.split(",") if x.strip())


_SCHEMA = {
    "scenario": {"name": str, "seed": _int},
    "model": {"n": _int, "alpha": _float, "gamma": _float, "A": _float, "rho_bar": _float, "viscosity_law": str},
    "grid": {"N": _int, "R_max": _float, "stretch": _float},
    "solver": {"scheme": str, "integrator": str, "cfl": _float, "T": _float, "rho_floor": _optional_float,
               "dt_fixed": _optional_float, "cavitation_fraction": _float},
    "diagnostics": {"probe_radii": _floats, "snapshot_every": _int, "weighted_norms": _norms, "tol_mass": _float},
    "characteristics": {"seeds": _floats, "substeps": _int},
    "output": {"directory": str, "checkpoint_times": _floats},
}
_ALL_SHAPE_KEYS = sorted({k for keys in SHAPE_KEYS.values() for k in keys})


def _read_section(cp, name, errors):
    schema = _SCHEMA[name]
    out = {}
    if not cp.has_section(name):
        return out
    for key, raw in cp.items(name):
        if key not in schema:
            errors.append(f"[{name}] unknown key {key!r}")
            continue
        try:
            out[key] = schema[key](raw.strip())
        except (ValueError, ConfigError) as exc:
            errors.append(f"[{name}] {key}: cannot read {raw!r} ({exc})")
    return out


def _build(cls, kwargs, section, errors):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        errors.extend(f"[{section}] {msg}" for msg in str(exc).split("; "))
    except TypeError as exc:
        errors.append(f"[{section}] {exc}")
    return None


def parse_scenario(text: str) -> Scenario:
    """Validated :class:`Scenario` from configuration text.

    Raises :class:`~rcns.errors.ScenarioError` listing every violation.
    Parameters outside the theorem's gamma range only emit a
    :class:`TheoremRegimeWarning`.
    """
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str  # keys are case sensitive (A, N, T, R_max)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError([f"syntax: {exc}"]) from None
    errors = []
    for sec in cp.sections():
        if sec not in _SCHEMA and sec != "initial":
            errors.append(f"unknown section [{sec}]")
    vals = {name: _read_section(cp, name, errors) for name in _SCHEMA}

    model = _build(ModelParams, vals["model"], "model", errors)
    initial = dict(cp.items("initial")) if cp.has_section("initial") else {}
    family = initial.pop("family", None)
    if family is None:
        family = "positive_farfield" if model is not None and model.rho_bar > 0 else "algebraic"
    family = family.strip()
    shape = {}
    for key, raw in initial.items():
        if key not in _ALL_SHAPE_KEYS:
            errors.append(f"[initial] unknown key {key!r}")
            continue
        try:
            shape[key] = float(raw)
        except ValueError:
            errors.append(f"[initial] {key}: cannot read {raw!r} as a number")
    if model is not None:
        if family not in SHAPE_KEYS:
            errors.append(f"[initial] unknown family {family!r}")
        else:
            errors.extend(f"[initial] {msg}" for msg in shape_violations(family, model, shape))

    grid = _build(GridSpec, vals["grid"], "grid", errors)
    if grid is not None:
        if grid.N < 3:
            errors.append("[grid] N must be at least 3")
        if not grid.R_max > 0:
            errors.append("[grid] R_max must be positive")
        if not grid.stretch > 0:
            errors.append("[grid] stretch must be positive")
    solver = _build(SolverConfig, vals["solver"], "solver", errors)
    diag = _build(DiagnosticsPlan, vals["diagnostics"], "diagnostics", errors)
    if diag is not None:
        if diag.snapshot_every < 1:
            errors.append("[diagnostics] snapshot_every must be >= 1")
        if any(not r > 0 for r in diag.probe_radii):
            errors.append("[diagnostics] probe radii must be positive")
    chars = _build(CharacteristicsPlan, vals["characteristics"], "characteristics", errors)
    if chars is not None and chars.substeps < 1:
        errors.append("[characteristics] substeps must be >= 1")
    if chars is not None and grid is not None and any(not 0 <= s <= grid.R_max for s in chars.seeds):
        errors.append("[characteristics] seeds must lie in [0, R_max]")
    output = _build(OutputPlan, vals["output"], "output", errors)
    if output is not None and solver is not None and any(not 0 < c < solver.T for c in output.checkpoint_times):
        errors.append("[output] checkpoint times must lie in (0, T)")
    if errors:
        raise ScenarioError(errors)
    if not model.theorem_regime and model.rho_bar == 0 and model.viscosity_law == "degenerate":
        warnings.warn(
            f"n={model.n}, gamma={model.gamma} lies outside the global existence range "
            "(gamma in (1,inf) for n=2, (1,3) for n=3)",
            TheoremRegimeWarning,
        )
    sc = vals["scenario"]
    return Scenario(
        name=sc.get("name", "scenario"),
        seed=sc.get("seed", 0),
        model=model,
        family=family,
        shape=shape,
        grid=grid,
        solver=solver,
        diagnostics=diag,
        characteristics=chars,
        output=output,
    )


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# --- serialization ---------------------------------------------------------------


def _fmt(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _spec_text(spec: NormSpec) -> str:
    return ":".join([spec.quantity] + [repr(float(x)) for x in (spec.K, spec.p, spec.a, spec.b)])


def serialize_scenario(sc: Scenario) -> str:
    """Canonical text; ``parse_scenario(serialize_scenario(s)) == s``."""
    lines = []

    def section(name, items):
        lines.append(f"[{name}]")
        for k, v in items:
            lines.append(f"{k} = {v}")
        lines.append("")

    section("scenario", [("name", sc.name), ("seed", sc.seed)])
    m = sc.model
    section("model", [("n", m.n), ("alpha", _fmt(m.alpha)), ("gamma", _fmt(m.gamma)), ("A", _fmt(m.A)),
                      ("rho_bar", _fmt(m.rho_bar)), ("viscosity_law", m.viscosity_law)])
    shape = {k: v for k, v in sorted(sc.shape.items())}
    section("initial", [("family", sc.family)] + [(k, _fmt(float(v))) for k, v in shape.items()])
    section("grid", [("N", sc.grid.N), ("R_max", _fmt(float(sc.grid.R_max))), ("stretch", _fmt(float(sc.grid.stretch)))])
    s = sc.solver
    section("solver", [("scheme", s.scheme), ("integrator", s.integrator), ("cfl", _fmt(float(s.cfl))),
                       ("T", _fmt(float(s.T))), ("rho_floor", _fmt(s.rho_floor)),
                       ("dt_fixed", "none" if s.dt_fixed is None else _fmt(float(s.dt_fixed))),
                       ("cavitation_fraction", _fmt(float(s.cavitation_fraction)))])
    d = sc.diagnostics
    section("diagnostics", [("probe_radii", _fmt(tuple(float(x) for x in d.probe_radii))),
                            ("snapshot_every", d.snapshot_every),
                            ("weighted_norms", ", ".join(_spec_text(x) for x in d.weighted_norms)),
                            ("tol_mass", _fmt(float(d.tol_mass)))])
    c = sc.characteristics
    section("characteristics", [("seeds", _fmt(tuple(float(x) for x in c.seeds))), ("substeps", c.substeps)])
    o = sc.output
    section("output", [("directory", o.directory),
                       ("checkpoint_times", _fmt(tuple(float(x) for x in o.checkpoint_times)))])
    return "\n".join(lines)


def resolved_shape(sc: Scenario) -> dict:
    """Shape keys with family defaults filled in."""
    full = shape_defaults(sc.family, sc.model)
    full.update(sc.shape)
    return full
