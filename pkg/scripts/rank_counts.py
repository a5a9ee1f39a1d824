#!/usr/bin/env python3
"""Tabulate independent detection counts n_Z versus number of scans Z.

Writes one CSV per mode-span cutoff with columns Z,n_detections, plus a
combined summary table to stdout showing the plateau d^2 - (d-1)/2 and the
number of scans needed to reach it.
"""

import argparse
import os

from oamtomo.experiments import parse_spec, run_rank_analysis, write_rank_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/rank_counts", help="output directory")
    ap.add_argument("--ell-max", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6, 7])
    ap.add_argument("--z-max", type=int, default=10)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    print(f"{'ell_max':>8} {'d':>4} {'plateau':>8} {'Z_min':>6}")
    for ell_max in args.ell_max:
        spec = parse_spec(
            {"kind": "rank_analysis", "basis": {"ell_max": ell_max}, "z_max": args.z_max}
        )
        rows = run_rank_analysis(spec)
        path = os.path.join(args.out, f"rank_ellmax{ell_max}.csv")
        write_rank_csv(path, rows)
        d = 2 * ell_max + 1
        plateau = max(n for _, n in rows)
        z_min = min(z for z, n in rows if n == plateau)
        print(f"{ell_max:>8} {d:>4} {plateau:>8} {z_min:>6}")


if __name__ == "__main__":
    main()
