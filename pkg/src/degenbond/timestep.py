"""Two-level theta-weighted stepping of the semi-discrete system.

Each step solves

    (xi E^{j+1} + G^j) P^{j+1} = [G^j - (1-xi) E^j] P^j + xi F^{j+1} + (1-xi) F^j

with G^j the lumped mass diagonal hbar_i / tau_j.  xi = 0 is explicit Euler
(conditionally stable), xi = 1 backward Euler, xi = 1/2 Crank-Nicolson.

The tridiagonal solve is plain forward elimination without pivoting; that
is justified per step by the M-matrix diagnostic, which reproduces the
boundary-row elimination of the monotonicity proof (rows 0,1 fold into row
2, rows N-1,N into row N-2) and then checks the sign pattern and weak
diagonal dominance of the reduced system.  A failed diagnostic does not
abort the march - the step is flagged so experiments can probe how large a
time step breaks monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import SemiDiscreteSystem, assemble_system
from .errors import NonFiniteSolution, SingularSystem
from .mesh import SpatialMesh, TimeMesh
from .model import FactoredCoefficients, ProblemSpec, factor_coefficients


@dataclass
class TridiagonalSystem:
    sub: np.ndarray    # A_i, i = 1..N (index 0 unused)
    diag: np.ndarray   # B_i, i = 0..N
    sup: np.ndarray    # C_i, i = 0..N-1 (index N unused)
    rhs: np.ndarray    # F_i

    @property
    def n(self) -> int:
        return len(self.diag)

    def residual(self, x: np.ndarray) -> np.ndarray:
        out = self.diag * x - self.rhs
        out[1:] += self.sub[1:] * x[:-1]
        out[:-1] += self.sup[:-1] * x[1:]
        return out


@dataclass
class StepDiagnostics:
    level: int                    # index j+1 of the level just computed
    t: float
    is_m_matrix: bool
    diag_dominance_margin: float  # min over reduced rows of B - |A| - |C|
    min_solution: float = float("nan")


@dataclass(frozen=True)
class SolutionField:
    values: np.ndarray
    time: float


@dataclass
class MarchResult:
    final: SolutionField
    diagnostics: list[StepDiagnostics]
    history: Optional[np.ndarray] = None   # (M+1, N+1) when requested

    @property
    def min_solution(self) -> float:
        if not self.diagnostics:
            return float(np.min(self.final.values))
        return min(d.min_solution for d in self.diagnostics)

    @property
    def all_m_matrix(self) -> bool:
        return all(d.is_m_matrix for d in self.diagnostics)


def build_step_system(
    e_next: SemiDiscreteSystem,
    e_curr: SemiDiscreteSystem,
    p_curr: np.ndarray,
    xi: float,
    tau: float,
) -> TridiagonalSystem:
    """Assemble one time step's tridiagonal system."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    g = e_next.hbar_weights / tau
    sub = -xi * e_next.e_sub
    diag = g + xi * e_next.e_diag
    sup = -xi * e_next.e_super
    rhs = (g - (1.0 - xi) * e_curr.e_diag) * p_curr
    rhs[1:] += (1.0 - xi) * e_curr.e_sub[1:] * p_curr[:-1]
    rhs[:-1] += (1.0 - xi) * e_curr.e_super[:-1] * p_curr[1:]
    rhs += xi * e_next.load + (1.0 - xi) * e_curr.load
    return TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas elimination without pivoting.

    Raises SingularSystem when a forward-elimination pivot underflows to
    effectively zero.  The caller is expected to have established diagonal
    dominance or the M-matrix property; this routine only guards against
    outright breakdown.
    """
    a = system.sub.tolist()
    b = system.diag.tolist()
    c = system.sup.tolist()
    d = system.rhs.tolist()
    n = len(b)
    cp = [0.0] * n
    dp = [0.0] * n
    piv = b[0]
    if abs(piv) < 1e-300:
        raise SingularSystem("zero pivot at row 0")
    cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if abs(piv) < 1e-300:
            raise SingularSystem(f"zero pivot at row {i}")
        cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = [0.0] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.asarray(x)


def check_m_matrix(system: TridiagonalSystem, level: int = 0, t: float = float("nan")) -> StepDiagnostics:
    """Diagnose the M-matrix property of the reduced step matrix.

    Folds rows 0,1 into row 2 and rows N,N-1 into row N-2 (the elimination
    used by the monotonicity proof), then requires a positive diagonal,
    non-positive off-diagonals, weak diagonal dominance everywhere and
    strict dominance in at least one row.
    """
    a, b, c = system.sub, system.diag, system.sup
    n = system.n
    last = n - 1
    bad = StepDiagnostics(level=level, t=t, is_m_matrix=False,
                          diag_dominance_margin=float("-inf"))
    if n < 5:
        bad.diag_dominance_margin = float("nan")
        return bad

    if b[0] <= 0 or b[last] <= 0:
        return bad
    delta_l = b[1] - a[1] * c[0] / b[0]
    delta_r = b[last - 1] - c[last - 1] * a[last] / b[last]
    if delta_l <= 0 or delta_r <= 0:
        return bad

    diag_red = b[2 : last - 1].copy()
    sub_red = a[2 : last - 1].copy()
    sup_red = c[2 : last - 1].copy()
    diag_red[0] -= a[2] * c[1] / delta_l
    sub_red[0] = 0.0
    diag_red[-1] -= c[last - 2] * a[last - 1] / delta_r
    sup_red[-1] = 0.0

    margins = diag_red - np.abs(sub_red) - np.abs(sup_red)
    margin = float(np.min(margins))
    ok = (
        bool(np.all(diag_red > 0))
        and bool(np.all(sub_red <= 0))
        and bool(np.all(sup_red <= 0))
        and margin >= 0.0
        and float(np.max(margins)) > 0.0
    )
    return StepDiagnostics(level=level, t=t, is_m_matrix=ok, diag_dominance_margin=margin)


def march_semidiscrete(
    assembler: Callable[[float], SemiDiscreteSystem],
    initial: Callable[[np.ndarray], np.ndarray],
    mesh: SpatialMesh,
    time_mesh: TimeMesh,
    xi: float,
    *,
    on_level: Optional[Callable[[int, float, np.ndarray], None]] = None,
    on_step: Optional[Callable[[StepDiagnostics], None]] = None,
    store_history: bool = False,
) -> MarchResult:
    """Shared marching loop over a per-time-level assembler."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")
    levels = time_mesh.levels
    n_nodes = len(mesh.nodes)
    p = np.broadcast_to(np.asarray(initial(mesh.nodes), dtype=float), (n_nodes,)).copy()
    history = np.empty((len(levels), n_nodes)) if store_history else None
    if store_history:
        history[0] = p
    if on_level is not None:
        on_level(0, float(levels[0]), p)

    diagnostics: list[StepDiagnostics] = []
    e_curr = assembler(float(levels[0]))
    for j in range(time_mesh.n_steps):
        t_next = float(levels[j + 1])
        e_next = assembler(t_next)
        step = build_step_system(e_next, e_curr, p, xi, float(time_mesh.tau[j]))
        diag = check_m_matrix(step, level=j + 1, t=t_next)
        p = solve_tridiagonal(step)
        if not np.all(np.isfinite(p)):
            raise NonFiniteSolution(f"non-finite solution values at t={t_next:g}")
        diag.min_solution = float(np.min(p))
        diagnostics.append(diag)
        if store_history:
            history[j + 1] = p
        if on_level is not None:
            on_level(j + 1, t_next, p)
        if on_step is not None:
            on_step(diag)
        e_curr = e_next

    final = SolutionField(values=p, time=float(levels[-1]))
    return MarchResult(final=final, diagnostics=diagnostics, history=history)


def march(
    spec: ProblemSpec,
    mesh: SpatialMesh,
    time_mesh: TimeMesh,
    xi: float,
    *,
    factored: Optional[FactoredCoefficients] = None,
    on_level: Optional[Callable[[int, float, np.ndarray], None]] = None,
    on_step: Optional[Callable[[StepDiagnostics], None]] = None,
    store_history: bool = False,
) -> MarchResult:
    """March the fitted finite-volume scheme from t=0 to t=T."""
    if factored is None:
        factored = factor_coefficients(spec)

    def assembler(t: float) -> SemiDiscreteSystem:
        return assemble_system(spec, factored, mesh, t)

    return march_semidiscrete(
        assembler, spec.initial, mesh, time_mesh, xi,
        on_level=on_level, on_step=on_step, store_history=store_history,
    )
