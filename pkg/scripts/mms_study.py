"""Manufactured-solution convergence orders for both viscosity laws and n = 2, 3.

    python scripts/mms_study.py [--N 128 256 512 1024]

Uses the manufactured problem in tests/mms.py.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from mms import mms_orders  # noqa: E402

from rcns.model import ModelParams  # noqa: E402


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, nargs="+", default=[128, 256, 512, 1024])
    args = p.parse_args(argv)
    for law in ("degenerate", "constant"):
        for n in (2, 3):
            params = ModelParams(n=n, alpha=0.05, gamma=2.0, A=1.0, viscosity_law=law)
            errs, orders = mms_orders(params, tuple(args.N))
            print(f"{law:10s} n={n}: errors " + " ".join(f"{e:.3e}" for e in errs)
                  + " | orders " + " ".join(f"{o:.3f}" for o in orders))


if __name__ == "__main__":
    main()
