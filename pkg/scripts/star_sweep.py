"""Transfer error against JT for star graphs with two-site arms.

Writes one CSV row per (M, JT) and prints, for each M, the smallest JT on
the grid that brings the transfer error below the threshold.

    python3 scripts/star_sweep.py --arms 1 2 3 4 --output star_sweep.csv
"""

import argparse
import csv
import sys
import time

from heisenberg_adiabatic.dynamics import default_jt_grid, star_instances, sweep


def minimal_jt(rows, threshold):
    """{M: smallest JT with error < threshold, or None}."""
    out = {}
    for row in rows:
        m = row.params["M"]
        out.setdefault(m, None)
        if row.status == "ok" and row.error < threshold and out[m] is None:
            out[m] = row.T
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arms", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--arm-length", type=int, default=2)
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--threshold", type=float, default=0.01)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--output", "-o")
    args = ap.parse_args(argv)

    t0 = time.time()
    grid = default_jt_grid(args.points)
    rows = sweep(star_instances(args.arms, args.arm_length), grid, threads=args.threads)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out)
    w.writerow(["M", "K", "JT", "error", "min_gap", "steps", "status"])
    for r in rows:
        w.writerow([r.params["M"], r.params["K"], f"{r.T:.15g}", f"{r.error:.15g}",
                    f"{r.min_gap:.15g}", r.steps, r.status])
    if out is not sys.stdout:
        out.close()
    for m, jt in minimal_jt(rows, args.threshold).items():
        label = "none on grid" if jt is None else f"{jt:.6g}"
        print(f"M={m}: minimal JT with error < {args.threshold:g}: {label}", file=sys.stderr)
    print(f"elapsed {time.time() - t0:.1f} s", file=sys.stderr)


if __name__ == "__main__":
    main()
