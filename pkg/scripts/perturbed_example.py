"""Orbit search for a = 3 pi, V = 0.01 (cos 2 pi x1 + cos 2 pi x2), tau = 1."""

import argparse
import time

import numpy as np

from magtorus import MagneticField, Potential, SearchConfig, TrigPoly, find_orbits, predict
from magtorus.atlas import morse_audit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--amp", type=float, default=0.01)
    args = ap.parse_args()

    field = MagneticField.constant(3 * np.pi)
    V = Potential.autonomous(TrigPoly.from_rows(2, 0.0, [(1, 0, args.amp, 0.0), (0, 1, args.amp, 0.0)]), 1.0)
    t0 = time.perf_counter()
    res = find_orbits(field, V, 1.0, (0, 0), SearchConfig(seed=args.seed, budget=args.budget))
    dt = time.perf_counter() - t0
    print(f"{res.n_converged}/{res.n_seeds} seeds converged, {len(res)} distinct orbits in {dt:.1f} s")
    print(f"{'x0':>22} {'|p|max':>9} {'action':>12} {'det(M-I)':>11} {'morse':>5} {'deg':>4}")
    for o in res:
        print(f"{str(np.round(o.initial.x, 6)):>22} {o.max_p:9.2e} {o.action_total:12.6f} "
              f"{o.det_m:11.3e} {o.morse_index:5d} {o.cz_index:4d}")
    rep = morse_audit(res.orbits, predict(field, 1.0))
    print("audit", "PASS" if rep.passed else "FAIL", rep.as_dict()["per_degree"])


if __name__ == "__main__":
    main()
