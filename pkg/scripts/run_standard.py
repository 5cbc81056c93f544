"""Run one scenario file, then cross-check v along particle paths.

    python scripts/run_standard.py [scripts/configs/standard_vacuum.cfg] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

from rcns.runner import run_scenario, write_characteristics
from rcns.scenario import load_scenario

HERE = Path(__file__).resolve().parent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("scenario", nargs="?", default=str(HERE / "configs" / "standard_vacuum.cfg"))
    p.add_argument("--out")
    args = p.parse_args(argv)
    sc = load_scenario(args.scenario)
    res = run_scenario(sc, args.out)
    s = res.summary
    print(f"{sc.name}: exit {res.exit_code}, t={s['t_final']:.6g}, steps={s['steps']}, mass drift {s['mass_drift']:.3e}")
    for name, ok in s["checks"].items():
        print(f"  {'PASS' if ok else 'FAIL'}  {name}")
    if res.trajectory is not None and sc.characteristics.seeds:
        out = write_characteristics(res.outdir, res.trajectory, sc)
        print(f"  characteristics: max |v_closed - v_grid| = {out['worst_deviation']:.3e}")
    print(f"artifacts in {res.outdir}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
