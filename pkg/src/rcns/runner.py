"""Run orchestration and artifact files.

A run directory holds::

    scenario.cfg            canonical scenario text
    diagnostics.csv         one row per snapshot
    snapshots/snap_K.csv    r, rho, u, v at each snapshot (index.csv lists them)
    bounds.csv              per-probe monitors
    events.csv              floor activations and failures
    characteristics/        path CSVs when seeds are configured
    checkpoints/            binary restart files at the checkpoint times
    summary.json            pass/fail of every monitored check

Every CSV starts with a ``# rcns <kind> v<version>`` comment line and
writes floats with 17 significant digits so files are exact and
byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .characteristics import PATH_COLUMNS, cross_check_v
from .checkpoint import read_checkpoint, write_checkpoint
from .diagnostics import bound_monitor, effective_velocity, total_mass
from .errors import ConfigError
from .model import FluidState
from .scenario import Scenario, load_scenario, serialize_scenario
from .solver import Trajectory, default_floor, integrate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECKS = 0, 1, 2, 3


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    if x is None:
        return ""
    return str(x)


def write_csv(path, kind: str, columns, rows, comment: str | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# rcns {kind} v{SCHEMA_VERSION}\n")
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def read_csv(path):
    """``(columns, rows)`` of a CSV written by :func:`write_csv`; numeric cells become floats."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for row in reader:
        out = []
        for x in row:
            try:
                out.append(float(x))
            except ValueError:
                out.append(x)
        rows.append(out)
    return columns, rows


def output_root(scenario: Scenario) -> Path:
    """``$RCNS_OUT/<name>`` when the variable is set, else the scenario's directory."""
    env = os.environ.get("RCNS_OUT")
    if env:
        return Path(env) / scenario.name
    return Path(scenario.output.directory)


@dataclass
class RunResult:
    exit_code: int
    outdir: Path
    trajectory: Trajectory | None
    summary: dict


def _write_snapshots(outdir, traj, params):
    snapdir = outdir / "snapshots"
    index = []
    for k, s in enumerate(traj.states):
        v = effective_velocity(s.replace(rho=np.maximum(s.rho, traj.rho_floor)), params).values
        name = f"snap_{k:05d}.csv"
        write_csv(snapdir / name, "snapshot", ["r", "rho", "u", "v"], zip(s.grid.r, s.rho, s.u, v),
                  comment=f"t={s.t!r}")
        index.append((k, s.t, name))
    write_csv(snapdir / "index.csv", "snapshot-index", ["k", "t", "file"], index)


def _diagnostic_rows(traj, M0):
    for s in traj.samples:
        yield s.row() + [(s.M - M0) / M0 if M0 else 0.0]


def checks_summary(scenario: Scenario, traj: Trajectory, bounds=None, M0=None) -> dict:
    """Pass/fail of the monitored checks; mass drift is relative to ``M0`` (default: first sample)."""
    samples = traj.samples
    M0 = samples[0].M if M0 is None else M0
    drift = max(abs(s.M - M0) / M0 for s in samples) if M0 else 0.0
    D = np.array([s.D for s in samples])
    checks = {
        "numerical_success": traj.failure is None,
        "mass_conserved": bool(drift < scenario.diagnostics.tol_mass),
        "bd_dissipation_nondecreasing": bool(np.all(np.diff(D) >= 0)),
        "momentum_vector_zero": True,
        "scalar_momentum_finite": bool(all(math.isfinite(s.p_scalar) for s in samples)),
    }
    if bounds is not None:
        checks["bounds_finite"] = bounds.all_finite
        checks["lower_bound"] = bounds.lower_bound_ok
    out = {
        "scenario": scenario.name,
        "steps": traj.steps,
        "t_final": samples[-1].t,
        "mass_drift": drift,
        "checks": checks,
        "passed": all(checks.values()),
        "failure": traj.failure,
    }
    if bounds is not None:
        out["bounds"] = bounds.as_dict()
    return out


def run_scenario(scenario: Scenario, outdir=None, restart=None, force: bool = False) -> RunResult:
    """Run, write every artifact and return the exit code of the run contract."""
    outdir = Path(outdir) if outdir is not None else output_root(scenario)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "scenario.cfg").write_text(serialize_scenario(scenario), encoding="utf-8")
    initial = scenario.initial_state()
    cfg = scenario.solver
    floor = cfg.rho_floor if cfg.rho_floor is not None else default_floor(initial.rho)
    tail = scenario.tail(initial)
    state, D0 = initial, 0.0
    if restart is not None:
        ck = read_checkpoint(restart)
        if ck.scenario_hash != scenario.hash and not force:
            raise ConfigError(f"checkpoint {restart} was written by a different scenario (use --force)")
        state = FluidState(initial.grid, ck.rho, ck.u, ck.t)
        D0 = ck.extra[0] if ck.extra else 0.0
    ckdir = outdir / "checkpoints"

    def on_stop(traj, s):
        ckdir.mkdir(exist_ok=True)
        write_checkpoint(ckdir / f"t_{s.t:.6f}.ckpt", scenario.hash, s.t, s.rho, s.u, (traj.bd_dissipation,))

    diag = scenario.diagnostics
    traj = integrate(
        state, scenario.model, cfg, tail=tail, floor=floor,
        snapshot_every=diag.snapshot_every, stop_times=scenario.output.checkpoint_times,
        probe_radius=diag.probe_radii[0] if diag.probe_radii else None,
        norm_specs=diag.weighted_norms, bd_dissipation=D0, on_stop=on_stop,
    )
    columns = traj.samples[0].columns() + ["mass_drift"]
    # drift is measured against the scenario's initial data, also after a restart
    M0 = total_mass(initial)
    write_csv(outdir / "diagnostics.csv", "diagnostics", columns, _diagnostic_rows(traj, M0))
    _write_snapshots(outdir, traj, scenario.model)
    events = list(traj.events)
    if traj.failure:
        events.append({"kind": "failure", **traj.failure})
    write_csv(outdir / "events.csv", "events", ["kind", "t", "nodes", "fraction", "node", "message"],
              [[e.get(k) for k in ("kind", "t", "nodes", "fraction", "node", "message")] for e in events])
    bounds = None
    if len(traj.states) >= 2:
        bounds = bound_monitor(traj, scenario.model, diag.probe_radii or (initial.grid.R_max,))
        write_csv(outdir / "bounds.csv", "bounds", ["R", "sup_rho", "inf_rho", "sup_v", "rho_low0", "floor_hit_time"],
                  [[p.R, p.sup_rho, p.inf_rho, p.sup_v, p.rho_low0, p.floor_hit_time] for p in bounds.probes])
        if scenario.characteristics.seeds and traj.failure is None:
            write_characteristics(outdir, traj, scenario)
    summary = checks_summary(scenario, traj, bounds, M0)
    if traj.failure is not None:
        code = EXIT_NUMERICAL
    elif not summary["passed"]:
        code = EXIT_CHECKS
    else:
        code = EXIT_OK
    summary["exit_code"] = code
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default), encoding="utf-8")
    return RunResult(code, outdir, traj, summary)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(type(x))


def write_characteristics(outdir, traj, scenario, seeds=None) -> dict:
    seeds = scenario.characteristics.seeds if seeds is None else seeds
    rep = cross_check_v(traj, scenario.model, seeds, scenario.characteristics.substeps)
    cdir = Path(outdir) / "characteristics"
    for p in rep.paths:
        write_csv(cdir / f"path_r{p.r0:.6g}.csv", "path", PATH_COLUMNS, p.rows(),
                  comment=f"r0={p.r0!r} exit_time={p.exit_time}")
    rows = list(zip(rep.seeds, rep.max_deviation, rep.max_direct_gap))
    write_csv(cdir / "summary.csv", "path-summary", ["r0", "max_deviation", "max_closed_vs_direct"], rows)
    return {"worst_deviation": rep.worst, "worst_closed_vs_direct": float(np.max(rep.max_direct_gap))}


def load_trajectory(run_dir) -> tuple:
    """Rebuild ``(scenario, trajectory)`` from a run directory's snapshots."""
    run_dir = Path(run_dir)
    scenario = load_scenario(run_dir / "scenario.cfg")
    grid = scenario.make_grid()
    _, index = read_csv(run_dir / "snapshots" / "index.csv")
    initial = scenario.initial_state()
    cfg = scenario.solver
    floor = cfg.rho_floor if cfg.rho_floor is not None else default_floor(initial.rho)
    traj = Trajectory(scenario.model, cfg, floor)
    for _, t, name in index:
        _, rows = read_csv(run_dir / "snapshots" / name)
        arr = np.array(rows, dtype=float)
        if arr.shape[0] != grid.r.size:
            raise ConfigError(f"snapshot {name} does not match the scenario grid")
        traj.states.append(FluidState(grid, arr[:, 1], arr[:, 2], t))
    return scenario, traj


# --- inequality suites ------------------------------------------------------------

SUITE_DEFAULTS = {
    "name": "inequalities",
    "seed": "0",
    "samples": "200",
    "resolutions": "2000, 4000",
    "R_max": "20",
    "suites": "all",
    "dims": "2, 3",
    "ladder": "1e-3, 1e-4, 1e-5, 1e-6",
    "nu": "0.4",
    "directory": "out",
}
_FAMILY_FILES = {"r|log r|^nu": "r_log_r_nu", "|log z|^(1/3)": "log_z_cube_root", "1/log r": "inverse_log_r"}


def parse_suite(text: str) -> dict:
    import configparser

    from .errors import ScenarioError

    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    cp.read_string(text)
    errors, cfg = [], dict(SUITE_DEFAULTS)
    for sec in cp.sections():
        if sec not in ("suite", "output"):
            errors.append(f"unknown section [{sec}]")
            continue
        for k, v in cp.items(sec):
            if k not in SUITE_DEFAULTS:
                errors.append(f"[{sec}] unknown key {k!r}")
            else:
                cfg[k] = v
    try:
        out = {
            "name": cfg["name"],
            "seed": int(cfg["seed"]),
            "samples": int(cfg["samples"]),
            "resolutions": tuple(int(x) for x in cfg["resolutions"].split(",")),
            "R_max": float(cfg["R_max"]),
            "dims": tuple(int(x) for x in cfg["dims"].split(",")),
            "ladder": tuple(float(x) for x in cfg["ladder"].split(",")),
            "nu": float(cfg["nu"]),
            "directory": cfg["directory"],
        }
    except ValueError as exc:
        errors.append(str(exc))
        out = {}
    from .inequalities import POSITIVE_SUITES

    names = [s.strip() for s in cfg["suites"].split(",")]
    if names == ["all"]:
        names = list(POSITIVE_SUITES)
    unknown = [s for s in names if s not in POSITIVE_SUITES]
    if unknown:
        errors.append(f"unknown suites: {', '.join(unknown)}")
    if errors:
        raise ScenarioError(errors)
    out["suites"] = tuple(names)
    return out


def run_inequality_suite(cfg: dict, outdir=None) -> dict:
    from .inequalities import FunctionFamily, counterexample_suite, family_suite

    outdir = Path(outdir) if outdir is not None else (
        Path(os.environ["RCNS_OUT"]) / cfg["name"] if os.environ.get("RCNS_OUT") else Path(cfg["directory"]))
    outdir.mkdir(parents=True, exist_ok=True)
    cols = ["family", "inequality", "cutoff_or_resolution", "ratio"]
    fam = FunctionFamily(seed=cfg["seed"])
    summary = {"positive": {}, "counterexamples": {}}
    rows = []
    for name in cfg["suites"]:
        rep = family_suite(name, fam, cfg["samples"], cfg["resolutions"], cfg["R_max"])
        rows += rep.rows()
        summary["positive"][name] = {"family_sup": rep.ratios, "drift": rep.drift, "stable": rep.drift < 0.03}
    write_csv(outdir / f"{fam.name}.csv", "inequality", cols, rows)
    by_family = {}
    for n in cfg["dims"]:
        for rep in counterexample_suite(n, cfg["ladder"], cfg["nu"]):
            key = _FAMILY_FILES[rep.family]
            by_family.setdefault(key, []).extend(
                [(rep.family, f"{rep.inequality}_n{n}", e, x) for e, x in zip(rep.labels, rep.ratios)]
                + [("control", f"{rep.inequality}_n{n}", e, x) for e, x in zip(rep.labels, rep.control)])
            summary["counterexamples"][f"{key}_n{n}"] = {
                "ratios": rep.ratios, "growth": rep.growth, "grows_10x": rep.growth >= 10,
                "control_drift": rep.control_drift, "control_within_1pct": rep.control_drift < 0.01,
            }
    for key, frows in by_family.items():
        write_csv(outdir / f"{key}.csv", "inequality", cols, frows)
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default), encoding="utf-8")
    return summary
