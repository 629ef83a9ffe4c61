"""Assembly of the semi-discrete system  dP_i/dt * hbar_i + (E P)_i = load_i.

Row i of E combines the degeneracy-weighted face fluxes of the dual cell
around r_i with the lumped reaction quadrature Q_i^h:

    (E P)_i = -e_sub[i] P_{i-1} + e_diag[i] P_i - e_super[i] P_{i+1}

where e_super[i] = D_i cR_i, e_sub[i] = -D_{i-1} cL_{i-1} and
e_diag[i] = Q_i - D_i cL_i + D_{i-1} cR_{i-1}  (D_i the outer polynomial at
face i, cL/cR the face weights).  The two boundary rows see only their one
interior face: the physical flux through r = 0 and r = R vanishes with the
degeneracy, which is what closes the system without boundary conditions.

The interior off-diagonals e_{i,l} with i,l in 1..N-1 are provably positive
for admissible coefficients; assembly raises AssemblyError when they are
not, which signals a drift-case misclassification.  The four entries
coupling to rows 0 and N are sign-indefinite by construction and are not
checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AssemblyError
from .fitted_flux import FaceFlux, face_coefficient_values, interior_weight_arrays, \
    left_boundary_flux, right_boundary_flux
from .mesh import SpatialMesh
from .model import FactoredCoefficients, ProblemSpec


@dataclass
class SemiDiscreteSystem:
    e_sub: np.ndarray      # e_sub[i] = e_{i,i-1}, i = 1..N (index 0 unused)
    e_diag: np.ndarray     # e_diag[i] = e_{i,i},  i = 0..N
    e_super: np.ndarray    # e_super[i] = e_{i,i+1}, i = 0..N-1 (index N unused)
    hbar_weights: np.ndarray
    load: np.ndarray
    t: float
    scheme: str = "fitted"

    @property
    def n_nodes(self) -> int:
        return len(self.e_diag)

    def apply(self, p: np.ndarray) -> np.ndarray:
        """(E p)_i with the sign convention above."""
        out = self.e_diag * p
        out[1:] -= self.e_sub[1:] * p[:-1]
        out[:-1] -= self.e_super[:-1] * p[1:]
        return out

    def dump_csv(self, path) -> None:
        """Debug dump: one row per node with the three diagonals and the load."""
        with open(path, "w", newline="\n") as fh:
            fh.write("i,e_sub,e_diag,e_super,load\n")
            for i in range(self.n_nodes):
                fh.write(
                    f"{i},{self.e_sub[i]:.17g},{self.e_diag[i]:.17g},"
                    f"{self.e_super[i]:.17g},{self.load[i]:.17g}\n"
                )


def reaction_quadrature(spec: ProblemSpec, mesh: SpatialMesh, t: float) -> np.ndarray:
    """Lumped reaction weights Q_i^h over the dual cells.

    Interior cells use the node value r_i times the cell measure plus exact
    telescoping of the theta', lambda w', (ww')' integrals through the face
    values.  The half cells at the ends integrate r exactly and carry NO
    endpoint terms: the theta(0) (resp. theta(R)) from the telescoped
    reaction integral cancels exactly against the convective flux
    theta(0) P_0 through the degenerate outer face (w and ww' vanish there
    identically), which is why the boundary rows never reference an outer
    face at all.  For drifts vanishing at both ends the cancellation is
    trivially 0 = 0.
    """
    nodes, mids, hbar = mesh.nodes, mesh.midpoints, mesh.hbar
    lam = spec.lam(t)
    th_m = spec.theta(mids)
    w_m = spec.w(mids)
    wwp_m = spec.ww_prime(mids)

    q = np.empty(len(nodes))
    q[1:-1] = (
        nodes[1:-1] * hbar[1:-1]
        + (th_m[1:] - th_m[:-1])
        + lam * (w_m[1:] - w_m[:-1])
        - (wwp_m[1:] - wwp_m[:-1])
    )
    rN = mesh.R
    m0, mN = mids[0], mids[-1]
    q[0] = 0.5 * m0 * m0 + th_m[0] + lam * w_m[0] - wwp_m[0]
    q[-1] = 0.5 * (rN * rN - mN * mN) - th_m[-1] - lam * w_m[-1] + wwp_m[-1]
    return q


def load_vector(
    forcing: Optional[Callable], mesh: SpatialMesh, t: float,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Lumped source: forcing(r_i, t) * hbar_i (or the supplied weights)."""
    if weights is None:
        weights = mesh.hbar
    if forcing is None:
        return np.zeros(len(mesh.nodes))
    return np.asarray(forcing(mesh.nodes, t), dtype=float) * weights


def assemble_interior_rows(
    fluxes: Sequence[FaceFlux],
    degeneracy_factors: np.ndarray,
    q_h: np.ndarray,
    mesh: SpatialMesh,
    t: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rows 1..N-1 from the face-flux weights (reference, loop form).

    Returns (e_sub, e_diag, e_super) with only those rows populated; rows
    0 and N are finished by `assemble_boundary_rows`.
    """
    n = mesh.n_cells
    e_sub = np.zeros(n + 1)
    e_diag = np.zeros(n + 1)
    e_super = np.zeros(n + 1)
    D = degeneracy_factors
    for i in range(1, n):
        left, right = fluxes[i - 1], fluxes[i]
        e_sub[i] = -D[i - 1] * left.coeff_left
        e_super[i] = D[i] * right.coeff_right
        e_diag[i] = q_h[i] - D[i] * right.coeff_left + D[i - 1] * left.coeff_right
    _check_offdiag_signs(e_sub, e_super, n)
    return e_sub, e_diag, e_super


def assemble_boundary_rows(
    arrays: tuple[np.ndarray, np.ndarray, np.ndarray],
    left_flux: FaceFlux,
    right_flux: FaceFlux,
    q0: float,
    qN: float,
    degeneracy_factors: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Complete rows 0 and N: each sees a single degeneracy-weighted face."""
    e_sub, e_diag, e_super = arrays
    D = degeneracy_factors
    e_diag[0] = q0 - D[0] * left_flux.coeff_left
    e_super[0] = D[0] * left_flux.coeff_right
    e_sub[-1] = -D[-1] * right_flux.coeff_left
    e_diag[-1] = qN + D[-1] * right_flux.coeff_right
    return e_sub, e_diag, e_super


def _check_offdiag_signs(e_sub: np.ndarray, e_super: np.ndarray, n: int) -> None:
    # positivity is proven for e_{i,l} with both indices in 1..N-1
    bad_sub = np.flatnonzero(e_sub[2:n] <= 0.0)
    bad_sup = np.flatnonzero(e_super[1 : n - 1] <= 0.0)
    if len(bad_sub) or len(bad_sup):
        rows = sorted(set((bad_sub + 2).tolist()) | set((bad_sup + 1).tolist()))
        raise AssemblyError(
            f"interior off-diagonal entries lost positivity at rows {rows}; "
            "the drift case is likely misclassified"
        )


def assemble_system(
    spec: ProblemSpec,
    factored: FactoredCoefficients,
    mesh: SpatialMesh,
    t: float,
) -> SemiDiscreteSystem:
    """Production assembly: vectorized over faces, checked signs."""
    n = mesh.n_cells
    a, b, D = face_coefficient_values(factored, mesh, t)
    cL = np.empty(n)
    cR = np.empty(n)
    cL[1:-1], cR[1:-1] = interior_weight_arrays(mesh, a, b)
    lf = left_boundary_flux(float(a[0]), float(b[0]))
    rf = right_boundary_flux(float(a[-1]), float(b[-1]), face_index=n - 1)
    cL[0], cR[0] = lf.coeff_left, lf.coeff_right
    cL[-1], cR[-1] = rf.coeff_left, rf.coeff_right

    q = reaction_quadrature(spec, mesh, t)
    e_sub = np.zeros(n + 1)
    e_diag = np.empty(n + 1)
    e_super = np.zeros(n + 1)
    e_sub[1:] = -D * cL
    e_super[:-1] = D * cR
    e_diag[0] = q[0] - D[0] * cL[0]
    e_diag[1:-1] = q[1:-1] - D[1:] * cL[1:] + D[:-1] * cR[:-1]
    e_diag[-1] = q[-1] + D[-1] * cR[-1]
    _check_offdiag_signs(e_sub, e_super, n)

    return SemiDiscreteSystem(
        e_sub=e_sub,
        e_diag=e_diag,
        e_super=e_super,
        hbar_weights=mesh.hbar.copy(),
        load=load_vector(spec.forcing, mesh, t),
        t=t,
    )
