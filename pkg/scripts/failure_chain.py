"""The five-site chain whose receiver cannot be split off compatibly.

Prints the verifier's report, the s = 1/2 gap at a few times and the
transfer error over the default JT grid.

    python3 scripts/failure_chain.py
"""

import argparse

import numpy as np

from heisenberg_adiabatic.dynamics import default_jt_grid, simulate_transfer
from heisenberg_adiabatic.network import HALF
from heisenberg_adiabatic.protocol import failure_chain, transfer_schedule, transfer_spec, verify
from heisenberg_adiabatic.spectral import sector_gap


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=25)
    args = ap.parse_args(argv)

    net, sender, receiver = failure_chain()
    sched = transfer_schedule(net, sender, receiver, 1.0)
    report = verify(transfer_spec(sender, receiver), sched)
    for line in report.diagnostics:
        print(line)
    print("verdict:", "pass" if report.passed else "fail")

    for frac in np.linspace(0, 1, 6):
        g = sector_gap(net, sched.couplings_at(frac), HALF, raise_on_degenerate=False)
        print(f"t/T={frac:.1f}  E0={g.ground_energy:+.6f}  gap={g.gap:.3e}")

    print("JT,error")
    for jt in default_jt_grid(args.points):
        res = simulate_transfer(sched.with_duration(jt), min(sender), min(receiver))
        print(f"{jt:.6g},{res.error:.6f}")


if __name__ == "__main__":
    main()
