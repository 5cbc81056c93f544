"""Resolution study: sup rho, v_sup, mass drift and B + D on N = 512, 1024, 2048.

    python scripts/convergence_study.py [scenario.cfg] [--N 512 1024 2048]
"""

import argparse
import dataclasses
import warnings
from pathlib import Path

from rcns.diagnostics import bound_monitor
from rcns.scenario import load_scenario
from rcns.solver import run

HERE = Path(__file__).resolve().parent


def study(sc, Ns):
    rows = []
    for N in Ns:
        # dt scales like dr^2, so scale the cadence to keep snapshot times comparable
        every = max(1, sc.diagnostics.snapshot_every * (N * N) // (1024 * 1024))
        s = sc.with_resolution(N).with_(diagnostics=dataclasses.replace(sc.diagnostics, snapshot_every=every))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = run(s)
        B0 = traj.samples[0].B
        rep = bound_monitor(traj, s.model, s.diagnostics.probe_radii)
        rows.append(dict(
            N=N,
            ok=traj.ok,
            sup_rho=max(d.sup_rho for d in traj.samples),
            v_sup=max(d.v_sup for d in traj.samples),
            mass_drift=max(abs(d.M - traj.samples[0].M) for d in traj.samples) / traj.samples[0].M,
            bd_ratio=max((d.B + d.D) / B0 for d in traj.samples) if B0 > 0 else float("nan"),
            floor_hit=any(p.floor_hit_time is not None for p in rep.probes),
        ))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("scenario", nargs="?", default=str(HERE / "configs" / "large_data.cfg"))
    p.add_argument("--N", type=int, nargs="+", default=[512, 1024, 2048])
    args = p.parse_args(argv)
    rows = study(load_scenario(args.scenario), args.N)
    print(f"{'N':>6} {'ok':>3} {'sup rho':>12} {'v_sup':>12} {'mass drift':>11} {'max(B+D)/B0':>12} floor")
    for r in rows:
        print(f"{r['N']:>6} {str(r['ok'])[0]:>3} {r['sup_rho']:12.7f} {r['v_sup']:12.7f} "
              f"{r['mass_drift']:11.2e} {r['bd_ratio']:12.6f} {r['floor_hit']}")
    for a, b in zip(rows, rows[1:]):
        print(f"N {a['N']} -> {b['N']}: relative change sup rho {abs(b['sup_rho'] - a['sup_rho']) / b['sup_rho']:.2e}, "
              f"v_sup {abs(b['v_sup'] - a['v_sup']) / b['v_sup']:.2e}")


if __name__ == "__main__":
    main()
