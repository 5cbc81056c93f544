"""Command line entry point: ``rcns run|validate|inequalities|characteristics|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ChecksumError, ConfigError, ScenarioError
from .model import validate_hypotheses
from .runner import (
    EXIT_CONFIG,
    EXIT_OK,
    load_trajectory,
    parse_suite,
    read_csv,
    run_inequality_suite,
    run_scenario,
    write_characteristics,
)
from .scenario import load_scenario


def _load(path, args):
    sc = load_scenario(path)
    if getattr(args, "resolution_override", None):
        sc = sc.with_resolution(args.resolution_override)
    return sc


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def cmd_run(args) -> int:
    sc = _load(args.scenario, args)
    res = run_scenario(sc, args.out, restart=args.restart, force=args.force)
    s = res.summary
    _say(args, f"{sc.name}: t={s['t_final']:.6g} steps={s['steps']} mass_drift={s['mass_drift']:.3e}")
    for name, ok in s["checks"].items():
        _say(args, f"  {'PASS' if ok else 'FAIL'}  {name}")
    if s["failure"]:
        _say(args, f"  numerical failure at t={s['failure']['t']}: {s['failure']['message']}")
    _say(args, f"artifacts in {res.outdir}")
    return res.exit_code


def cmd_validate(args) -> int:
    sc = _load(args.scenario, args)
    _say(args, f"{sc.name}: valid (theorem_regime={sc.model.theorem_regime}, regime={sc.model.regime})")
    rep = validate_hypotheses(sc.initial_state(), sc.model)
    for c in rep.checks:
        _say(args, f"  {'ok ' if c.finite else 'BAD'}  {c.name}: {c.values[-1]:.4g}")
    return EXIT_OK


def cmd_inequalities(args) -> int:
    cfg = parse_suite(Path(args.suite).read_text(encoding="utf-8"))
    summary = run_inequality_suite(cfg, args.out)
    for name, r in summary["positive"].items():
        _say(args, f"  {name}: family sup {r['family_sup'][-1]:.6g}, drift {r['drift']:.2e}")
    for name, r in summary["counterexamples"].items():
        _say(args, f"  {name}: growth {r['growth']:.4g}, control drift {r['control_drift']:.2e}")
    return EXIT_OK


def cmd_characteristics(args) -> int:
    sc, traj = load_trajectory(args.run_dir)
    seeds = tuple(args.seeds) if args.seeds else (sc.characteristics.seeds or tuple(np.linspace(0.5, 5.0, 10)))
    out = write_characteristics(args.run_dir, traj, sc, seeds)
    _say(args, f"max |v_closed - v_grid| = {out['worst_deviation']:.3e}; "
               f"closed form vs direct ODE = {out['worst_closed_vs_direct']:.3e}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
    cols, rows = read_csv(run_dir / "diagnostics.csv")
    print(f"{summary['scenario']}: {len(rows)} samples to t={summary['t_final']:.6g}, exit {summary['exit_code']}")
    last = dict(zip(cols, rows[-1]))
    for key in ("M", "E", "B", "D", "sup_rho", "inf_rho", "v_sup"):
        print(f"  {key:8s} {last[key]:.10g}")
    for name, ok in summary["checks"].items():
        print(f"  {'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if summary["passed"] else summary["exit_code"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcns", description="Radial compressible Navier-Stokes with degenerate viscosity")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="integrate a scenario and write artifacts")
    r.add_argument("scenario")
    r.add_argument("--restart", help="checkpoint file to resume from")
    r.add_argument("--force", action="store_true", help="accept a checkpoint from a different scenario")
    r.add_argument("--resolution-override", type=int, metavar="N")
    r.add_argument("--out", help="output directory (default: RCNS_OUT/<name> or [output] directory)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", parents=[common], help="check a scenario file and its initial data")
    v.add_argument("scenario")
    v.add_argument("--resolution-override", type=int, metavar="N")
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("inequalities", parents=[common], help="run the inequality suites")
    i.add_argument("suite")
    i.add_argument("--out")
    i.set_defaults(func=cmd_inequalities)

    c = sub.add_parser("characteristics", parents=[common], help="cross-check v along particle paths")
    c.add_argument("run_dir")
    c.add_argument("--seeds", type=float, nargs="+")
    c.set_defaults(func=cmd_characteristics)

    rp = sub.add_parser("report", parents=[common], help="summarize a run directory")
    rp.add_argument("run_dir")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if not args.quiet else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            return args.func(args)
    except ScenarioError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ChecksumError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
