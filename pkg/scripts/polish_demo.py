"""Exact excited population against the matched Markov solution with and without R."""

import argparse

import numpy as np

from paratcl import dynamics as dy
from paratcl.model import ModelParams
from paratcl.qcore import FockConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=0.05)
    ap.add_argument("--t-max", type=float, default=None, help="default 40/gamma")
    ap.add_argument("--points", type=int, default=401)
    ap.add_argument("--every", type=int, default=40, help="print every n-th grid point")
    args = ap.parse_args()

    p = ModelParams(lam=args.lam)
    grid = dy.TimeGrid(args.t_max or 40 / p.gamma, args.points)
    rho = dy.initial_state("plus")
    exact = dy.propagate_exact(p, FockConfig.auto(p.z), rho, grid, spot_checks=0)
    with_r = dy.matched_trajectory(p, rho, grid, True)
    without = dy.matched_trajectory(p, rho, grid, False)
    print(f"{'t':>8} {'exact':>12} {'with R':>12} {'without R':>12}")
    for i in range(0, grid.n_points, args.every):
        print(f"{grid.points[i]:8.2f} {exact.rho11[i]:12.8f} {with_r.rho11[i]:12.8f} {without.rho11[i]:12.8f}")
    late = grid.points >= 5 / p.gamma
    for label, traj in (("with R", with_r), ("without R", without)):
        err = np.abs(exact.rho11 - traj.rho11)
        print(f"{label:>10}: terminal error {err[-1]:.3e}, max error for t >= 5/gamma {err[late].max():.3e}")


if __name__ == "__main__":
    main()
