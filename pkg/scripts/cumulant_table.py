"""Closed-form cumulants next to the numerically assembled ones, entry by entry."""

import argparse

import numpy as np

from paratcl import cumulants as cm
from paratcl import moments as mo
from paratcl.model import ModelParams
from paratcl.qcore import FockConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--times", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    ap.add_argument("--cutoff", type=int, default=16)
    ap.add_argument("--order", type=int, default=3, choices=[1, 2, 3, 4])
    ap.add_argument("--k4-time", type=float, default=None, help="also compare K4 with its asymptote here")
    args = ap.parse_args()

    p = ModelParams()
    ts = np.array([0.0] + sorted(args.times))
    ks = mo.numeric_cumulants(p, FockConfig(args.cutoff), ts, args.order)
    print(f"{'t':>6} " + " ".join(f"{'K' + str(n):>10}" for n in range(args.order + 1)))
    for i, t in enumerate(ts):
        diffs = [np.max(np.abs(ks[i, n] - cm.analytic_cumulant(n, p, t).matrix)) for n in range(min(args.order, 3) + 1)]
        print(f"{t:6.2f} " + " ".join(f"{d:10.2e}" for d in diffs))
    if args.k4_time:
        k4 = mo.numeric_cumulants(p, FockConfig(args.cutoff), np.array([0.0, args.k4_time]), 4)[-1, 4]
        print(f"K4({args.k4_time:g}) vs asymptote: {np.max(np.abs(k4 - cm.k4_infinity(p).matrix)):.3e}")


if __name__ == "__main__":
    main()
