"""Scan the second-order decay rate gamma + f2(t) for sign changes over a detuning/damping grid."""

import argparse

import numpy as np

from paratcl import cumulants as cm
from paratcl.model import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.05, 0.2, 0.5, 1.0, 2.0])
    ap.add_argument("--detunings", type=float, nargs="+", default=[0.1, 0.3, 1.0, 3.0])
    args = ap.parse_args()

    print("min over t of (gamma + f2(t)); negative entries mark a transiently negative rate")
    print(f"{'gamma':>7} " + " ".join(f"{'dw=' + format(d, 'g'):>10}" for d in args.detunings))
    for g in args.gammas:
        row = []
        for d in args.detunings:
            p = ModelParams(omega_a=1.0 + d, omega_c=1.0, gamma=g)
            t = np.linspace(0.0, 40 / g + 40 / d, 100001)
            row.append(cm.k2_rate(p, t).min())
        print(f"{g:7.3g} " + " ".join(f"{v:10.4f}" for v in row))


if __name__ == "__main__":
    main()
