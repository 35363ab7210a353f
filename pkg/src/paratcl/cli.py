"""Command-line front end.

    paratcl <subcommand> --config <path> [--out DIR] [--jobs N] [--order N] [--source analytic|numeric]

Exit codes: 0 success, 1 validation failure, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import __version__
from . import cumulants as cm
from . import dynamics as dy
from . import moments as mo
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError

SUBCOMMANDS = ("simulate-exact", "simulate-tcl", "compare", "cumulant-table", "polish-demo", "scaling", "validate")
TRAJ_COLUMNS = ("t", "rho00_re", "rho01_re", "rho01_im", "rho11_re", "trace_dev", "min_eig", "top_fock_pop")
EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def fmt(x) -> str:
    return format(float(x), ".17g")


def header_lines(cfg: RunConfig, command: str) -> list[str]:
    lines = [f"# paratcl {__version__}", f"# command: {command}"]
    lines += [f"# [{section}] {key} = {value}" for section, key, value in cfg.resolved()]
    lines.append(f"# resolved fock_cutoff = {cfg.fock.cutoff}")
    return lines


def render_csv(cfg: RunConfig, command: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("\n".join(header_lines(cfg, command)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def trajectory_rows(traj: dy.Trajectory):
    exact = traj.method == "exact"
    dev = traj.trace_deviation()
    for i, t in enumerate(traj.t):
        r = traj.states[i]
        yield [
            t,
            r[0, 0].real,
            r[0, 1].real,
            r[0, 1].imag,
            r[1, 1].real,
            dev[i],
            traj.diagnostics["min_eig"][i] if exact else "",
            traj.diagnostics["top_fock_pop"][i] if exact else "",
        ]


def plot_script(files: list[tuple[str, str, str]]) -> str:
    """gnuplot script; ``files`` holds (csv name, column, title) triples."""
    lines = [
        "# gnuplot script; run with: gnuplot -persist plot.gp",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        "set xlabel 't'",
    ]
    parts = [f"'{name}' using 't':'{col}' with lines title '{title}'" for name, col, title in files]
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


class Runner:
    def __init__(self, cfg: RunConfig, jobs: int = 1, out=None):
        self.cfg = cfg
        self.jobs = max(1, jobs)
        self.out = out if out is not None else sys.stdout
        self.grid = dy.TimeGrid(cfg.t_max, cfg.n_points)
        self.written: list[str] = []
        self.plots: list[tuple[str, str, str]] = []

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.directory, name)

    def save(self, name: str, text: str):
        self.written.append(write_text(self.path(name), text))

    def exact(self) -> dy.Trajectory:
        c = self.cfg
        return dy.propagate_exact(c.model, c.fock, c.rho_a0(), self.grid, c.ode_rel_tol, c.ode_abs_tol)

    def tcl(self) -> dy.Trajectory:
        c = self.cfg
        return dy.propagate_tcl(
            c.model, c.rho_a0(), self.grid, c.order, c.source, c.fock, c.ode_rel_tol, c.ode_abs_tol
        )

    def tcl_name(self) -> str:
        return f"tcl{self.cfg.order}_{self.cfg.source}.csv"

    def simulate_exact(self, command):
        traj = self.exact()
        self.save("exact.csv", render_csv(self.cfg, command, TRAJ_COLUMNS, trajectory_rows(traj)))
        self.plots.append(("exact.csv", "rho11_re", "exact"))
        print(f"exact: expm spot-check deviation {traj.diagnostics['expm_check'][0]:.3e}", file=self.out)

    def simulate_tcl(self, command):
        traj = self.tcl()
        self.save(self.tcl_name(), render_csv(self.cfg, command, TRAJ_COLUMNS, trajectory_rows(traj)))
        self.plots.append((self.tcl_name(), "rho11_re", traj.method))
        print(f"{traj.method}: max trace deviation {traj.trace_deviation().max():.3e}", file=self.out)

    def compare(self, command):
        exact, tcl = self.exact(), self.tcl()
        comp = dy.compare(exact, tcl)
        self.save("exact.csv", render_csv(self.cfg, command, TRAJ_COLUMNS, trajectory_rows(exact)))
        self.save(self.tcl_name(), render_csv(self.cfg, command, TRAJ_COLUMNS, trajectory_rows(tcl)))
        name = f"compare_{self.tcl_name()}"
        rows = ([t, d] for t, d in zip(comp.t, comp.distance))
        self.save(name, render_csv(self.cfg, command, ("t", "trace_distance"), rows))
        self.plots.append((name, "trace_distance", f"exact vs {tcl.method}"))
        print(
            f"{tcl.method} vs exact: max {fmt(comp.max)} at t={fmt(comp.time_of_max)}, terminal {fmt(comp.terminal)}",
            file=self.out,
        )

    def cumulant_table(self, command):
        c = self.cfg
        t = self.grid.points
        n_max = c.order
        numeric = mo.numeric_cumulants(c.model, c.fock, t, n_max)
        cols = ("t", "n", "row", "col", "analytic_re", "analytic_im", "numeric_re", "numeric_im", "abs_diff")
        rows = []
        for i, s in enumerate(t):
            for n in range(n_max + 1):
                # the closed forms stop at K3; K4 is reported against its long-time limit
                a = cm.analytic_cumulant(n, c.model, s).matrix
                m = numeric[i, n]
                for r in range(4):
                    for q in range(4):
                        rows.append(
                            [s, str(n), str(r), str(q), a[r, q].real, a[r, q].imag, m[r, q].real, m[r, q].imag,
                             abs(a[r, q] - m[r, q])]
                        )
        self.save("cumulant_table.csv", render_csv(c, command, cols, rows))
        worst = {n: float(np.max(np.abs(numeric[:, n] - np.array([cm.analytic_cumulant(n, c.model, s).matrix for s in t]))))
                 for n in range(n_max + 1)}
        for n, e in worst.items():
            label = " (analytic side is K4(inf))" if n == 4 else ""
            print(f"K{n}: max |analytic - numeric| = {e:.3e}{label}", file=self.out)

    def polish_demo(self, command):
        c = self.cfg
        rho = c.rho_a0()
        exact = self.exact().interaction_frame(c.model)
        with_r = dy.matched_trajectory(c.model, rho, self.grid, True)
        without = dy.matched_trajectory(c.model, rho, self.grid, False)
        err_r = np.abs(exact.rho11 - with_r.rho11)
        err_0 = np.abs(exact.rho11 - without.rho11)
        cols = ("t", "rho11_exact", "rho11_matched_R", "rho11_matched_noR", "err_matched_R", "err_matched_noR")
        rows = zip(self.grid.points, exact.rho11, with_r.rho11, without.rho11, err_r, err_0)
        self.save("polish.csv", render_csv(c, command, cols, rows))
        summary = [
            ["matched_R", err_r[-1], err_r.max()],
            ["matched_noR", err_0[-1], err_0.max()],
        ]
        self.save("polish_summary.csv", render_csv(c, command, ("method", "terminal_error", "max_error"), summary))
        self.plots += [
            ("polish.csv", "rho11_exact", "exact"),
            ("polish.csv", "rho11_matched_R", "matched with R"),
            ("polish.csv", "rho11_matched_noR", "matched without R"),
        ]
        print(f"terminal excited-population error: with R {fmt(err_r[-1])}, without R {fmt(err_0[-1])}", file=self.out)

    def scaling(self, command):
        c = self.cfg
        rows = dy.order_scaling_report(
            c.model, c.rho_a0(), self.grid, c.scaling_orders, c.lambda_list, c.fock, c.source, self.jobs
        )
        table = []
        for row in rows:
            for lam, err in zip(row.lambdas, row.max_errors):
                table.append([str(row.order), lam, err, row.slope])
            print(f"N={row.order}: slope {row.slope:.4f} (expected {row.order + 1})", file=self.out)
        self.save("scaling.csv", render_csv(c, command, ("order", "lambda", "max_error", "slope"), table))

    def validate(self, command) -> int:
        from .validation import run_checks

        results = run_checks(self.cfg.model, jobs=self.jobs)
        lines = header_lines(self.cfg, command) + ["name\tstatus\ttolerance"] + [r.line() for r in results]
        n_pass = sum(r.passed for r in results)
        lines.append(f"# {n_pass}/{len(results)} checks passed")
        report = "\n".join(lines) + "\n"
        self.save("validate_report.tsv", report)
        self.out.write(report)
        return EXIT_OK if n_pass == len(results) else EXIT_VALIDATION

    def finish(self):
        if self.cfg.emit_plot_script and self.plots:
            self.save("plot.gp", plot_script(self.plots))


def run_subcommand(cfg: RunConfig, name: str, jobs: int = 1, out=None) -> int:
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    runner = Runner(cfg, jobs, out)
    method = getattr(runner, name.replace("-", "_"))
    code = method(name)
    runner.finish()
    return EXIT_OK if code is None else code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paratcl", description="TCL corrections to the parametric approximation")
    ap.add_argument("--version", action="version", version=f"paratcl {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI-style run configuration")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for scaling and validate")
        p.add_argument("--order", type=int, choices=(1, 2, 3, 4), help="TCL order (overrides [task] order)")
        p.add_argument("--source", choices=("analytic", "numeric"), help="cumulant source (overrides [task] source)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.out:
            overrides["directory"] = args.out
        if args.order:
            overrides["order"] = args.order
        if args.source:
            overrides["source"] = args.source
        if overrides:
            cfg = cfg.with_overrides(**overrides)
        return run_subcommand(cfg, args.command, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
