"""Experiment orchestration: single runs, convergence sweeps, scheme
comparisons, plot data.  All outputs are flat CSV files with '#'-prefixed
header comments carrying the config digest, so byte-identical reruns are
checkable by diff.  Floats print with 9 significant digits.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .analysis import ErrorReport, NormAccumulator, RateTable, double_mesh_rates
from .config import RunConfig, build_problem, build_spatial_mesh, build_time_mesh
from .errors import SnapshotMissing, ValidationError
from .mesh import SpatialMesh, TimeMesh, uniform_time
from .model import ProblemSpec
from .reference_scheme import march_scheme_b
from .timestep import MarchResult, march

THREADS_ENV = "DEGENBOND_THREADS"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return f"{float(x):.9g}"


def write_csv(path, comments: Sequence[str], header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _comments(cfg: RunConfig, extra: Sequence[str] = ()) -> list[str]:
    out = [f"config_digest={cfg.digest()}", f"problem={cfg.problem_id}"]
    out.extend(extra)
    return out


@dataclass
class SingleRunResult:
    config: RunConfig
    mesh: SpatialMesh
    time_mesh: TimeMesh
    results: dict[str, MarchResult]          # scheme id -> march result
    reports: dict[str, ErrorReport]          # scheme id -> norms (if exact)
    snapshots: dict[str, np.ndarray]         # scheme id -> values at snapshot_t
    snapshot_time: Optional[float]
    written: list[Path]


def _schemes(cfg: RunConfig) -> list[str]:
    return ["fitted", "scheme_b"] if cfg.scheme == "both" else [cfg.scheme]


def _march_one(
    scheme: str,
    spec: ProblemSpec,
    mesh: SpatialMesh,
    tmesh: TimeMesh,
    cfg: RunConfig,
    snapshot_level: Optional[int],
) -> tuple[MarchResult, Optional[ErrorReport], Optional[np.ndarray]]:
    accumulator = None
    if spec.exact is not None:
        accumulator = NormAccumulator(mesh, tmesh, spec.exact,
                                      scheme_id=scheme, problem_id=spec.label)
    snapshot: dict[str, np.ndarray] = {}

    def on_level(j, t, p):
        if accumulator is not None:
            accumulator.observe(j, t, p)
        if snapshot_level is not None and j == snapshot_level:
            snapshot["values"] = p.copy()

    if scheme == "fitted":
        result = march(spec, mesh, tmesh, cfg.xi, on_level=on_level)
    else:
        result = march_scheme_b(spec, mesh, tmesh, cfg.xi, on_level=on_level)
    report = accumulator.report() if accumulator is not None else None
    return result, report, snapshot.get("values")


def _snapshot_level(tmesh: TimeMesh, snapshot_t: Optional[float]) -> Optional[int]:
    if snapshot_t is None:
        return tmesh.n_steps
    idx = int(np.argmin(np.abs(tmesh.levels - snapshot_t)))
    if abs(float(tmesh.levels[idx]) - snapshot_t) > 1e-9 * max(1.0, tmesh.T):
        raise SnapshotMissing(
            f"t={snapshot_t:g} is not a time level (nearest: {float(tmesh.levels[idx]):g})"
        )
    return idx


def run_single(cfg: RunConfig, out_dir=None) -> SingleRunResult:
    """One problem, one grid; writes the outputs requested by the config."""
    spec = build_problem(cfg)
    mesh = build_spatial_mesh(cfg, R=spec.R)
    tmesh = build_time_mesh(cfg, spec.T)
    snap_level = _snapshot_level(tmesh, cfg.snapshot_t)
    snap_t = float(tmesh.levels[snap_level])

    results: dict[str, MarchResult] = {}
    reports: dict[str, ErrorReport] = {}
    snapshots: dict[str, np.ndarray] = {}
    diagnostics_rows: dict[str, list] = {}
    for scheme in _schemes(cfg):
        result, report, snapshot = _march_one(scheme, spec, mesh, tmesh, cfg, snap_level)
        results[scheme] = result
        if report is not None:
            reports[scheme] = report
        if snapshot is not None:
            snapshots[scheme] = snapshot
        diagnostics_rows[scheme] = [
            (d.level, d.t, d.min_solution, d.diag_dominance_margin, d.is_m_matrix)
            for d in result.diagnostics
        ]

    written: list[Path] = []
    if out_dir is not None:
        out = Path(out_dir)
        for scheme in results:
            tag = f"{cfg.problem_id}_{scheme}"
            if "solution_csv" in cfg.outputs:
                path = out / f"{tag}_solution.csv"
                final = results[scheme].final
                write_csv(path, _comments(cfg, [f"scheme={scheme}", f"t={_fmt(final.time)}"]),
                          ["r", "P"],
                          zip(mesh.nodes, final.values))
                written.append(path)
            if "diagnostics_csv" in cfg.outputs:
                path = out / f"{tag}_diagnostics.csv"
                write_csv(path, _comments(cfg, [f"scheme={scheme}"]),
                          ["j", "t", "min_solution", "diag_dominance_margin", "is_m_matrix"],
                          diagnostics_rows[scheme])
                written.append(path)
            if "plotdata_csv" in cfg.outputs:
                path = out / f"{tag}_plotdata.csv"
                written.append(emit_plotdata(
                    snapshots[scheme], spec, mesh, snap_t, path, cfg))
    return SingleRunResult(
        config=cfg, mesh=mesh, time_mesh=tmesh, results=results, reports=reports,
        snapshots=snapshots, snapshot_time=snap_t, written=written,
    )


def emit_plotdata(values: np.ndarray, spec: ProblemSpec, mesh: SpatialMesh,
                  t: float, path, cfg: RunConfig) -> Path:
    """Two/three-column snapshot CSV: r, numerical P and, if known, exact u."""
    if values is None:
        raise SnapshotMissing("no snapshot captured for plot data")
    if spec.exact is not None:
        u = np.asarray(spec.exact.u(mesh.nodes, t), dtype=float)
        rows = zip(mesh.nodes, values, u)
        header = ["r", "P", "u"]
    else:
        rows = zip(mesh.nodes, values)
        header = ["r", "P"]
    write_csv(path, _comments(cfg, [f"t={_fmt(t)}"]), header, rows)
    return Path(path)


def _sweep_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_report(cfg: RunConfig, spec: ProblemSpec, n_nodes: int, scheme: str) -> ErrorReport:
    mesh = build_spatial_mesh(cfg, n_nodes=n_nodes, R=spec.R)
    tmesh = build_time_mesh(cfg, spec.T)
    acc = NormAccumulator(mesh, tmesh, spec.exact, scheme_id=scheme, problem_id=spec.label)

    def on_level(j, t, p):
        acc.observe(j, t, p)

    if scheme == "fitted":
        march(spec, mesh, tmesh, cfg.xi, on_level=on_level)
    else:
        march_scheme_b(spec, mesh, tmesh, cfg.xi, on_level=on_level)
    return acc.report()


def run_convergence_sweep(cfg: RunConfig, node_counts: Sequence[int],
                          out_dir=None) -> RateTable:
    """Fixed tau, doubling node counts; emits the rate-table CSV.

    node_counts are node counts (21, 41, ...); consecutive entries must
    double the subinterval count.  Partial rows are flushed if a run fails.
    """
    if not node_counts:
        raise ValidationError("nodes", "need at least one node count")
    for prev, here in zip(node_counts, node_counts[1:]):
        if here - 1 != 2 * (prev - 1):
            raise ValidationError("nodes", f"subintervals must double: {prev} -> {here}")
    spec = build_problem(cfg)
    if spec.exact is None:
        raise ValidationError("manufactured", "a convergence sweep needs an exact solution")
    scheme = "fitted" if cfg.scheme == "both" else cfg.scheme

    workers = min(_sweep_workers(), len(node_counts))
    reports: list[Optional[ErrorReport]] = [None] * len(node_counts)
    failure: Optional[BaseException] = None
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_report, cfg, spec, n, scheme) for n in node_counts]
            for slot, fut in enumerate(futures):
                try:
                    reports[slot] = fut.result()
                except Exception as exc:  # keep earlier rows for the partial flush
                    failure = exc
                    break
    else:
        for slot, n in enumerate(node_counts):
            try:
                reports[slot] = _run_report(cfg, spec, n, scheme)
            except Exception as exc:
                failure = exc
                break

    done = [r for r in reports if r is not None]
    table = double_mesh_rates(done) if done else RateTable(scheme, spec.label)
    if out_dir is not None and done:
        path = Path(out_dir) / f"{cfg.problem_id}_{scheme}_rates.csv"
        write_csv(
            path,
            _comments(cfg, [f"scheme={scheme}", f"M={cfg.m_steps}", f"xi={_fmt(cfg.xi)}",
                            "node counts are nodes (subintervals = nodes - 1)"]),
            ["N", "C_norm", "C_RC", "L2_norm", "L2_RC", "H1_norm", "H1_RC"],
            [(r.n_nodes, r.c_norm, r.c_rc, r.l2_norm, r.l2_rc, r.h1_norm, r.h1_rc)
             for r in table.rows],
        )
    if failure is not None:
        raise failure
    return table


def run_ab_comparison(cfg: RunConfig, node_counts: Sequence[int],
                      report_nodes: Sequence[int], t_report: float,
                      out_dir=None) -> list[tuple]:
    """|P - u| at selected nodes for the fitted and the reference scheme.

    Returns rows (n_nodes, node_index, r, err_fitted, err_reference); the
    comparison marches both schemes to t_report.
    """
    if cfg.scheme != "both":
        raise ValidationError("scheme", "the comparison needs scheme=both")
    if not report_nodes:
        raise ValidationError("report_nodes", "need at least one node index")
    spec = build_problem(cfg)
    if spec.exact is None:
        raise ValidationError("manufactured", "the comparison needs an exact solution")
    if not (0 < t_report <= spec.T):
        raise ValidationError("snapshot_t", f"must lie in (0, T], got {t_report}")

    rows = []
    for n_nodes in node_counts:
        for idx in report_nodes:
            if not 0 <= idx < n_nodes:
                raise ValidationError("report_nodes", f"index {idx} out of range for N={n_nodes}")
        mesh = build_spatial_mesh(cfg, n_nodes=n_nodes, R=spec.R)
        # keep the configured step size when marching only to t_report
        m_steps = max(1, round(cfg.m_steps * t_report / spec.T))
        tmesh = uniform_time(m_steps, t_report)
        fitted = march(spec, mesh, tmesh, cfg.xi)
        reference = march_scheme_b(spec, mesh, tmesh, cfg.xi)
        u = np.asarray(spec.exact.u(mesh.nodes, t_report), dtype=float)
        err_a = np.abs(fitted.final.values - u)
        err_b = np.abs(reference.final.values - u)
        for idx in report_nodes:
            rows.append((n_nodes, idx, float(mesh.nodes[idx]),
                         float(err_a[idx]), float(err_b[idx])))
    if out_dir is not None:
        path = Path(out_dir) / f"{cfg.problem_id}_comparison.csv"
        write_csv(
            path,
            _comments(cfg, [f"t={_fmt(t_report)}", f"xi={_fmt(cfg.xi)}"]),
            ["N", "node", "r", "abs_err_fitted", "abs_err_scheme_b"],
            rows,
        )
    return rows
