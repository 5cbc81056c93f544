"""Positive inequality families and the counterexample ladders.

    python scripts/inequality_suite.py [scripts/configs/suite.cfg] [--out DIR]
"""

import argparse
from pathlib import Path

from rcns.runner import parse_suite, run_inequality_suite

HERE = Path(__file__).resolve().parent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("suite", nargs="?", default=str(HERE / "configs" / "suite.cfg"))
    p.add_argument("--out")
    args = p.parse_args(argv)
    summary = run_inequality_suite(parse_suite(Path(args.suite).read_text(encoding="utf-8")), args.out)
    print("positive families (sup over samples, resolution drift):")
    for name, r in summary["positive"].items():
        print(f"  {name:40s} {r['family_sup'][-1]:.6g}  drift {r['drift']:.2e}")
    print("counterexamples (ratio growth over the cutoff ladder, control drift):")
    for name, r in summary["counterexamples"].items():
        print(f"  {name:40s} growth {r['growth']:.4g}  control {r['control_drift']:.2e}")


if __name__ == "__main__":
    main()
