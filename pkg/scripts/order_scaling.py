"""Fit the error exponent of TCL-N against the exact oracle as lambda is halved."""

import argparse

from paratcl import dynamics as dy
from paratcl.model import ModelParams
from paratcl.qcore import FockConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--state", default="excited", choices=["ground", "excited", "plus"])
    ap.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--window", type=float, default=3.0, help="error window in units of 1/gamma")
    ap.add_argument("--source", default="analytic", choices=["analytic", "numeric"])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    p = ModelParams()
    grid = dy.TimeGrid(args.window / p.gamma, 301)
    rows = dy.order_scaling_report(
        p, dy.initial_state(args.state), grid, args.orders, args.lambdas, FockConfig.auto(p.z), args.source, args.jobs
    )
    print(f"state={args.state} window=[0, {grid.t_max:g}] source={args.source}")
    print("N  " + "  ".join(f"lam={x:<8g}" for x in args.lambdas) + "  slope")
    for r in rows:
        errs = "  ".join(f"{e:12.4e}" for e in r.max_errors)
        print(f"{r.order}  {errs}  {r.slope:6.3f}  (expected {r.order + 1})")


if __name__ == "__main__":
    main()
