#!/usr/bin/env python3
"""Inviscid variable-density refinement study.

Halves the time step and reports the convergence order of the energy
drift and of the per-cut budget residual.

    python scripts/euler_convergence.py --n 128 --t-end 0.05
"""

import argparse
import math

import numpy as np

import vdflux as vf
from vdflux.budget import flux_spectrum

THIRD = 1.0 / 3.0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--t-end", type=float, default=0.05)
    ap.add_argument("--dt0", type=float, default=2.5e-3)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--contrast", type=float, default=0.2)
    args = ap.parse_args()

    grid = vf.TorusGrid(2, args.n)
    rho = vf.density_profile(grid, args.contrast, seed=21, decay=2.0, band_hi=3)
    u = vf.random_besov(grid, THIRD, 3.0, 1.0, seed=22, band=(0, 4), divergence_free=True)
    u = vf.Field(grid, u.values / np.abs(u.values).max())
    initial = vf.SolutionState(rho=rho, u=u)

    energy_errors = []
    residuals = {}
    dts = [args.dt0 / 2 ** k for k in range(args.levels)]
    for dt in dts:
        cfg = vf.SolverConfig(grid=grid, mu=0.0, t_end=args.t_end, dt=dt, snapshot_every=1)
        states = vf.run(cfg, initial=initial).states
        de = abs(vf.total_energy(states[-1]) - vf.total_energy(states[0]))
        energy_errors.append(de)
        spec = flux_spectrum(states, vf.make_cutoff("smooth"))
        for q in range(-1, grid.q_max + 1):
            residuals.setdefault(q, []).append(spec.at(states[-1].t, q).residual)
        print(f"dt={dt:g}: |E(t)-E(0)| = {de:.3e}")

    halvings = args.levels - 1
    print(f"energy drift order : "
          f"{math.log2(energy_errors[0] / max(energy_errors[-1], 1e-300)) / halvings:.2f}")
    for q, errs in sorted(residuals.items()):
        if errs[0] <= 1e-11:
            print(f"Q={q:2d}: residuals at round-off floor ({errs[0]:.1e})")
            continue
        order = math.log2(errs[0] / max(errs[-1], 1e-300)) / halvings
        print(f"Q={q:2d}: residual {errs[0]:.2e} -> {errs[-1]:.2e}, order {order:.2f}")


if __name__ == "__main__":
    main()
