"""Searching for a strictly p-plurisubharmonic boundary-composite weight.

Given a domain r < 0 and a convex field phi, the composite
-(-r * exp(-K*phi))^eta trades boundary blow-up (small eta) against
interior stiffness (large K).  The search scans a (K, eta) grid, scores
the worst sampled p-trace, and reports the feasible region; the stiffness
probe explains the trend as the domain gets eccentric.
"""

import warnings

import numpy as np

from pconvex import (compose_df, df_search, lattice_samples, min_p_trace,
                     parse, stiffness_floor)
from pconvex.errors import InfeasibleOnGrid


def main():
    disk = parse("x1^2+x2^2-1", n=2)
    phi = parse("x1^2+x2^2", n=2)
    pts = lattice_samples(disk, ([-1, -1], [1, 1]), per_axis=27)
    print(f"== grid search on the unit disk ({len(pts)} samples) ==")
    res = df_search(disk, phi, pts, 1,
                    [0.25, 0.5, 1.0, 2.0, 4.0],
                    [0.05, 0.1, 0.2, 0.4, 0.6, 0.8])
    print(f"   feasible pairs: {len(res.feasible_pairs)}; "
          f"picked K={res.K}, eta={res.eta}")
    print(f"   eta ceiling {res.eta_max_feasible}, K floor "
          f"{res.K_min_feasible}")

    rho = compose_df(disk, phi, res.K, res.eta)
    worst = min(min_p_trace(rho.eval_jet2(x).hess, 1) for x in pts)
    print(f"   certificate via the composed expression tree: "
          f"min 1-trace {worst:.4f} > 0")

    print("\n== eccentricity sweep: ellipses x1^2/a^2 + x2^2 = 1 ==")
    print(f"   {'a':>3s} {'K floor':>9s} {'eta ceiling':>12s} "
          f"{'best feasible eta':>18s}")
    for a in (1.0, 2.0, 4.0, 8.0):
        r = parse(f"x1^2/{a * a}+x2^2-1", n=2)
        samples = lattice_samples(r, ([-a, -1], [a, 1]), per_axis=41)
        probe = stiffness_floor(r, phi, samples, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InfeasibleOnGrid)
            sweep = df_search(r, phi, samples, 1,
                              [0.25, 0.5, 1, 2, 4, 8, 16],
                              [0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8])
        print(f"   {a:3.0f} {probe.K_floor:9.1f} {probe.eta_ceiling:12.2e} "
              f"{str(sweep.eta_max_feasible):>18s}")
    print("   flatter boundaries demand stiffer K and flatter eta.")


if __name__ == "__main__":
    main()
