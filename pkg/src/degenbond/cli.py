"""Command-line front end.

Verbs:
  run       one problem on one grid, write configured outputs
  sweep     convergence study over doubling node counts (rate table CSV)
  compare   fitted scheme vs the central-difference reference at chosen nodes
  plotdata  solution snapshot as plottable CSV
  selftest  quick built-in verification checks

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Node counts are NODE counts (21 nodes = 20 subintervals); the sweep
requires consecutive entries to double the subinterval count.
DEGENBOND_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import runner
from .config import RunConfig, parse_config
from .errors import ConfigError, SolverError
from .mesh import uniform_spatial, uniform_time
from .model import example_problem, factor_coefficients
from .timestep import TridiagonalSystem, march, solve_tridiagonal

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(args) -> RunConfig:
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
    else:
        text = "problem=example1\n"
    cfg = parse_config(text)
    if getattr(args, "xi", None) is not None:
        cfg = replace(cfg, xi=args.xi)
        if not 0.0 <= cfg.xi <= 1.0:
            raise ConfigError(f"xi: must lie in [0, 1], got {cfg.xi}")
    if getattr(args, "scheme", None):
        cfg = replace(cfg, scheme=args.scheme)
    if getattr(args, "snapshot_t", None) is not None:
        cfg = replace(cfg, snapshot_t=args.snapshot_t)
    if getattr(args, "nodes", None):
        counts = tuple(int(n) for n in args.nodes.split(","))
        cfg = replace(cfg, node_list=counts)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = runner.run_single(cfg, out_dir=args.out_dir)
    for scheme, report in sorted(result.reports.items()):
        print(f"{scheme}: C={report.c_norm:.9g} L2={report.l2_norm:.9g} "
              f"H1={report.h1_norm:.9g}")
    for scheme, res in sorted(result.results.items()):
        flag = "yes" if res.all_m_matrix else "NO"
        print(f"{scheme}: min P = {res.min_solution:.9g}, M-matrix at every level: {flag}")
    for path in result.written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    node_counts = cfg.node_list or (21, 41, 81, 161, 321)
    table = runner.run_convergence_sweep(cfg, node_counts, out_dir=args.out_dir)
    print("N,C_norm,C_RC,L2_norm,L2_RC,H1_norm,H1_RC")
    for row in table.rows:
        rc = lambda v: "" if v is None else f"{v:.2f}"
        print(f"{row.n_nodes},{row.c_norm:.9g},{rc(row.c_rc)},{row.l2_norm:.9g},"
              f"{rc(row.l2_rc)},{row.h1_norm:.9g},{rc(row.h1_rc)}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    if cfg.scheme != "both":
        cfg = replace(cfg, scheme="both")
    node_counts = cfg.node_list or (41,)
    t_report = cfg.snapshot_t if cfg.snapshot_t is not None else 0.25
    report_nodes = cfg.report_nodes
    if report_nodes is None:
        report_nodes = (0, 1, node_counts[0] - 2, node_counts[0] - 1)
    rows = runner.run_ab_comparison(cfg, node_counts, report_nodes, t_report,
                                    out_dir=args.out_dir)
    print("N,node,r,abs_err_fitted,abs_err_scheme_b")
    for row in rows:
        print(",".join(runner._fmt(v) for v in row))
    return EXIT_OK


def _cmd_plotdata(args) -> int:
    cfg = _load_config(args)
    if "plotdata_csv" not in cfg.outputs:
        cfg = replace(cfg, outputs=tuple(cfg.outputs) + ("plotdata_csv",))
    result = runner.run_single(cfg, out_dir=args.out_dir)
    for path in result.written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    """Fast internal checks; prints one PASS/FAIL line each."""
    checks: list[tuple[str, bool]] = []

    mesh = uniform_spatial(8, 1.0)
    checks.append(("dual cells tile [0,R]", abs(float(np.sum(mesh.hbar)) - 1.0) < 1e-12))

    spec = example_problem("example1")
    factored = factor_coefficients(spec)
    r = np.linspace(0.05, 0.95, 7)
    recon = r * (1.0 - r) * factored.w0(r)
    checks.append(("volatility factorization roundtrip",
                   bool(np.all(np.abs(recon - spec.w(r)) <= 1e-12))))

    sys3 = TridiagonalSystem(
        sub=np.array([0.0, -1.0, -1.0]),
        diag=np.array([2.0, 2.0, 2.0]),
        sup=np.array([-1.0, -1.0, 0.0]),
        rhs=np.array([1.0, 0.0, 1.0]),
    )
    x = solve_tridiagonal(sys3)
    checks.append(("tridiagonal solve", bool(np.allclose(x, 1.0, atol=1e-12))))

    tmesh = uniform_time(50, 0.05)
    result = march(spec, mesh, tmesh, 0.5)
    checks.append(("fitted march is M-matrix/monotone",
                   result.all_m_matrix and result.min_solution > -1e-12))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degenbond",
        description="Fitted finite-volume solver for the degenerate bond-pricing equation",
        epilog="N values are node counts: N=21 means 20 subintervals.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key=value config file")
        p.add_argument("--out-dir", default="out", help="directory for CSV outputs")
        p.add_argument("--nodes", help="comma-separated node counts (e.g. 21,41,81)")
        p.add_argument("--xi", type=float, help="splitting parameter in [0,1]")
        p.add_argument("--scheme", choices=("fitted", "scheme_b", "both"))
        p.add_argument("--snapshot-t", dest="snapshot_t", type=float,
                       help="time level for snapshots / comparisons")

    for verb, fn in (("run", _cmd_run), ("sweep", _cmd_sweep), ("compare", _cmd_compare),
                     ("plotdata", _cmd_plotdata), ("selftest", _cmd_selftest)):
        p = sub.add_parser(verb)
        common(p)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
