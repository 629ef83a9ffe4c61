"""Error norms, double-mesh convergence rates, pointwise rate estimation.

Norms over the space-time grid of the error z = P - u:

    C:  max_ij |z_i^j| / max_ij |P_i^j|        (relative to the numerical max)
    L2: sqrt( sum_ij h tau (z_i^j)^2 )         (i = 0..N, j = 0..M)
    H1: sqrt( sum_{i=1..N-1, j} h tau [ z^2 + (z'_central)^2 ] )

with the single uniform h and tau as printed; the discrete derivative is
the central difference for both the numerical and the exact field.  On
non-uniform grids the dual-cell measures replace h (the report is then
flagged "generalized").

Rates: the double-mesh principle RC = log2(ER^N / ER^{2N}) per norm per
doubling, and the pointwise two/three-grid estimate at a shared node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log, sqrt
from typing import Optional, Sequence

import numpy as np

from .errors import MissingExact, RateUndefined
from .mesh import SpatialMesh, TimeMesh


@dataclass(frozen=True)
class ErrorReport:
    c_norm: float
    l2_norm: float
    h1_norm: float
    n_nodes: int
    m_steps: int
    scheme_id: str = "fitted"
    problem_id: str = "custom"
    generalized: bool = False

    def norm(self, which: str) -> float:
        return {"c": self.c_norm, "l2": self.l2_norm, "h1": self.h1_norm}[which]


@dataclass
class RateRow:
    n_nodes: int
    c_norm: float
    c_rc: Optional[float]
    l2_norm: float
    l2_rc: Optional[float]
    h1_norm: float
    h1_rc: Optional[float]


@dataclass
class RateTable:
    scheme_id: str
    problem_id: str
    rows: list[RateRow] = field(default_factory=list)


class NormAccumulator:
    """Streaming accumulation of the space-time norms, one level at a time.

    Feed every level j = 0..M exactly once through observe(); the march's
    on_level hook does this directly.
    """

    def __init__(self, mesh: SpatialMesh, time_mesh: TimeMesh, exact,
                 scheme_id: str = "fitted", problem_id: str = "custom"):
        if exact is None:
            raise MissingExact("error norms need an exact solution")
        self._mesh = mesh
        self._tmesh = time_mesh
        self._u = exact.u if hasattr(exact, "u") else exact
        self._scheme_id = scheme_id
        self._problem_id = problem_id

        self._uniform = mesh.is_uniform()
        if self._uniform:
            self._wspace = np.full(len(mesh.nodes), float(mesh.h[0]))
        else:
            self._wspace = mesh.hbar.copy()
        nodes = mesh.nodes
        self._dr = nodes[2:] - nodes[:-2]

        tau = time_mesh.tau
        if time_mesh.n_steps == 0:
            self._wtime = np.ones(1)
        else:
            self._wtime = np.concatenate([tau, tau[-1:]])

        self._max_err = 0.0
        self._max_p = 0.0
        self._l2 = 0.0
        self._h1 = 0.0
        self._seen = 0

    def observe(self, j: int, t: float, p: np.ndarray) -> None:
        u = np.asarray(self._u(self._mesh.nodes, t), dtype=float)
        e = np.asarray(p, dtype=float) - u
        self._max_err = max(self._max_err, float(np.max(np.abs(e))))
        self._max_p = max(self._max_p, float(np.max(np.abs(p))))
        wt = float(self._wtime[j])
        self._l2 += wt * float(np.sum(self._wspace * e * e))
        dp = (p[2:] - p[:-2]) / self._dr
        du = (u[2:] - u[:-2]) / self._dr
        de = dp - du
        ei = e[1:-1]
        self._h1 += wt * float(np.sum(self._wspace[1:-1] * (ei * ei + de * de)))
        self._seen += 1

    def report(self) -> ErrorReport:
        denom = self._max_p if self._max_p > 0 else 1.0
        return ErrorReport(
            c_norm=self._max_err / denom,
            l2_norm=sqrt(self._l2),
            h1_norm=sqrt(self._h1),
            n_nodes=len(self._mesh.nodes),
            m_steps=self._tmesh.n_steps,
            scheme_id=self._scheme_id,
            problem_id=self._problem_id,
            generalized=not self._uniform,
        )


def error_norms(history: np.ndarray, exact, mesh: SpatialMesh, time_mesh: TimeMesh,
                scheme_id: str = "fitted", problem_id: str = "custom") -> ErrorReport:
    """Norms from a stored (M+1, N+1) solution history."""
    acc = NormAccumulator(mesh, time_mesh, exact, scheme_id=scheme_id, problem_id=problem_id)
    for j, t in enumerate(time_mesh.levels):
        acc.observe(j, float(t), history[j])
    return acc.report()


def double_mesh_rates(reports: Sequence[ErrorReport]) -> RateTable:
    """RC = log2(ER^N / ER^{2N}) per norm between consecutive reports.

    Reports must double the subinterval count and share scheme, problem
    and time-step count.
    """
    if not reports:
        raise ValueError("need at least one report")
    table = RateTable(scheme_id=reports[0].scheme_id, problem_id=reports[0].problem_id)
    prev: Optional[ErrorReport] = None
    for rep in reports:
        if prev is not None:
            if rep.n_nodes - 1 != 2 * (prev.n_nodes - 1):
                raise ValueError(
                    f"subinterval counts must double: {prev.n_nodes - 1} -> {rep.n_nodes - 1}"
                )
            if (rep.scheme_id, rep.problem_id) != (prev.scheme_id, prev.problem_id):
                raise ValueError("reports mix schemes or problems")
            rcs = []
            for which in ("c", "l2", "h1"):
                e_prev, e_here = prev.norm(which), rep.norm(which)
                if e_prev == 0.0 or e_here == 0.0:
                    raise RateUndefined(f"{which}-norm vanished; rate undefined")
                rcs.append(log(e_prev / e_here) / log(2.0))
            row = RateRow(rep.n_nodes, rep.c_norm, rcs[0], rep.l2_norm, rcs[1],
                          rep.h1_norm, rcs[2])
        else:
            row = RateRow(rep.n_nodes, rep.c_norm, None, rep.l2_norm, None,
                          rep.h1_norm, None)
        table.rows.append(row)
        prev = rep
    return table


def runge_rate(p_h: float, p_h2: float, p_h4: Optional[float] = None,
               exact: Optional[float] = None) -> float:
    """Pointwise convergence order at one shared node and time.

    Two-grid form when the exact value is supplied,
    s = log2 |(u - P_h)/(u - P_h2)|; three-grid otherwise,
    s = log2 |(P_h - P_h2)/(P_h2 - P_h4)|.
    """
    if exact is not None:
        num = exact - p_h
        den = exact - p_h2
    else:
        if p_h4 is None:
            raise RateUndefined("three-grid estimate needs the h/4 solution")
        num = p_h - p_h2
        den = p_h2 - p_h4
    if den == 0.0 or num == 0.0:
        raise RateUndefined("zero numerator or denominator in the rate quotient")
    return log(abs(num / den)) / log(2.0)
