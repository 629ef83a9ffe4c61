"""Classical central-difference baseline for the accuracy comparison.

Interior rows discretize the non-conservative equation directly on a
uniform grid: three-point second difference for the diffusion term,
central difference for the convection term.  At the degenerate endpoints
the equation itself reduces to a transport equation (the diffusion and,
at r = 0, the reaction vanish), which is closed with first-order one-sided
differences taken into the domain - the upwind direction, since the
characteristics leave the interval through both ends.

No fitting, no mesh grading: this scheme exists as the baseline whose
boundary-adjacent errors the fitted scheme is measured against.
"""

from __future__ import annotations

import numpy as np

from .assembly import SemiDiscreteSystem, load_vector
from .errors import NonUniformMesh
from .mesh import SpatialMesh, TimeMesh
from .model import ProblemSpec
from .timestep import MarchResult, march_semidiscrete

BOUNDARY_CLOSURE = "upwind_first_order"


def assemble_scheme_b(spec: ProblemSpec, mesh: SpatialMesh, t: float) -> SemiDiscreteSystem:
    """Central-difference operator in the shared semi-discrete layout.

    Uses unit mass weights (finite differences carry no cell measure), so
    the shared stepping code applies verbatim.  Off-diagonal entries are
    sign-indefinite here by design; no positivity check applies.
    """
    if not mesh.is_uniform():
        raise NonUniformMesh("the reference scheme is defined on uniform grids only")
    nodes = mesh.nodes
    h = float(mesh.h[0])
    lam = spec.lam(t)
    n = mesh.n_cells

    e_sub = np.zeros(n + 1)
    e_diag = np.empty(n + 1)
    e_super = np.zeros(n + 1)

    ri = nodes[1:-1]
    beta = 0.5 * spec.w(ri) ** 2              # diffusion
    gamma = spec.theta(ri) + lam * spec.w(ri)  # convection
    e_sub[1:-1] = beta / (h * h) - gamma / (2.0 * h)
    e_super[1:-1] = beta / (h * h) + gamma / (2.0 * h)
    e_diag[1:-1] = 2.0 * beta / (h * h) + ri

    # transport closures dP/dt - theta(0) P_r = 0 and
    # dP/dt - theta(R) P_r + R P = 0, one-sided differences into the
    # domain.  These rows are boundary CONDITIONS: they carry no
    # manufactured forcing (the source term arises in the equation, not in
    # the closures), which is the baseline's boundary-accuracy handicap
    # that the scheme comparison quantifies.
    th0 = float(spec.theta(np.asarray(0.0)))
    thR = float(spec.theta(np.asarray(mesh.R)))
    e_diag[0] = th0 / h
    e_super[0] = th0 / h
    e_sub[-1] = -thR / h
    e_diag[-1] = -thR / h + mesh.R

    weights = np.ones(n + 1)
    load = load_vector(spec.forcing, mesh, t, weights=weights)
    load[0] = 0.0
    load[-1] = 0.0
    return SemiDiscreteSystem(
        e_sub=e_sub,
        e_diag=e_diag,
        e_super=e_super,
        hbar_weights=weights,
        load=load,
        t=t,
        scheme="reference_" + BOUNDARY_CLOSURE,
    )


def march_scheme_b(
    spec: ProblemSpec,
    mesh: SpatialMesh,
    time_mesh: TimeMesh,
    xi: float = 0.5,
    *,
    on_level=None,
    on_step=None,
    store_history: bool = False,
) -> MarchResult:
    """Crank-Nicolson march of the reference operator."""

    def assembler(t: float) -> SemiDiscreteSystem:
        return assemble_scheme_b(spec, mesh, t)

    return march_semidiscrete(
        assembler, spec.initial, mesh, time_mesh, xi,
        on_level=on_level, on_step=on_step, store_history=store_history,
    )
