"""Lowest levels of the m = 1/2 sector and the s = 1/2 gap along the star transfer schedule.

Time is given as a fraction of T, so the table does not depend on T.

    python3 scripts/star_levels.py --arms 3 --arm-length 2 -o star_levels.csv
"""

import argparse
import csv
import sys

from heisenberg_adiabatic.network import HALF
from heisenberg_adiabatic.protocol import arm_end, star_graph, transfer_schedule
from heisenberg_adiabatic.spectral import levels_over_schedule


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arms", type=int, default=3)
    ap.add_argument("--arm-length", type=int, default=2)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--samples", type=int, default=101)
    ap.add_argument("--output", "-o")
    args = ap.parse_args(argv)

    net = star_graph(args.arms, args.arm_length)
    sched = transfer_schedule(net, 0, arm_end(0, args.arm_length), 1.0)
    trace = levels_over_schedule(sched, HALF, k=args.k, n_samples=args.samples)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out)
    w.writerow(["t_over_T"] + [f"E_{i}" for i in range(trace.levels.shape[1])] + ["gap"])
    for t, row, gap in zip(trace.times, trace.levels, trace.gap_in_sector):
        w.writerow([f"{t:.6g}"] + [f"{e:.12g}" for e in row] + [f"{gap:.12g}"])
    if out is not sys.stdout:
        out.close()
    i = int(trace.gap_in_sector.argmin())
    print(f"minimal s=1/2 gap {trace.min_gap:.6g} J at t/T = {trace.times[i]:.3g}", file=sys.stderr)


if __name__ == "__main__":
    main()
