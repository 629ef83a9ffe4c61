"""Fitted two-point flux approximations at the dual-cell faces.

At an interior face r_{i+1/2} the numerical flux is the exact constant-flux
solution of the local boundary value problem

    (a_f * r(R-r) v' + b_f * v)' = 0,    v(r_i) = P_i,  v(r_{i+1}) = P_{i+1},

which resolves to a two-point combination rho = cR*P_{i+1} + cL*P_i whose
weights involve (r/(R-r))^(alpha/R), alpha = b_f/a_f.  Evaluated here in the
numerically safe single-ratio form: with

    dL  = ln(r_{i+1}/(R-r_{i+1})) - ln(r_i/(R-r_i))  > 0
    d   = alpha * dL / R          (the actual exponent gap)
    K   = a_f * R / dL

the weights are cL = -K*phi(d), cR = b_f + K*phi(d), phi(d) = d/expm1(d).
This is algebraically identical to the power-quotient form, free of
cancellation as alpha -> 0 (phi(0) = 1 recovers the pure-diffusion limit
flux (P_{i+1}-P_i)*a_f*R/dL), degrades gracefully to the upwind limit for
huge |d|, and transports a constant state with exactly b_f * c.

At the first and last faces the local problem is degenerate (the r or R-r
factor vanishes inside the interval), so a constant-source variant is
solved instead; the resulting flux is the arithmetic-average form
rho = [(a_f+b_f) P_out - (a_f-b_f) P_in] / 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalOverflow
from .mesh import SpatialMesh
from .model import FactoredCoefficients

# Exponent gap below which the expm1 quotient is replaced by its alpha -> 0
# limit phi = 1 (they agree to ~1e-16 there, far inside the 1e-9 continuity
# budget; the switch exists so that the b -> 0 limit is exact).
ALPHA_SWITCH = 1e-7
# Above this gap the power quotient is evaluated through exp(-|d|) to avoid
# overflow; the weights converge to the pure upwind pair.
_LARGE_D = 0.5


class FluxKind(enum.Enum):
    INTERIOR = "interior"
    LEFT_BOUNDARY = "left_boundary"
    RIGHT_BOUNDARY = "right_boundary"


@dataclass(frozen=True)
class FaceFlux:
    face_index: int
    coeff_left: float    # weight on P_i
    coeff_right: float   # weight on P_{i+1}
    alpha: float         # fitting ratio b/a at the face
    kind: FluxKind

    def apply(self, p_left: float, p_right: float) -> float:
        return self.coeff_left * p_left + self.coeff_right * p_right


def _weights_from_geometry(
    r_lo: np.ndarray, r_hi: np.ndarray, a: np.ndarray, b: np.ndarray, R: float
) -> tuple[np.ndarray, np.ndarray]:
    """(cL, cR) arrays for interior faces with node pairs (r_lo, r_hi).

    Single source of the weight arithmetic: both the scalar FaceFlux path
    and the per-level assembly sweep go through here, so they agree to the
    last bit.
    """
    dL = np.log(r_hi / r_lo) + np.log((R - r_lo) / (R - r_hi))
    alpha = b / a
    d = alpha * dL / R
    K = a * R / dL

    cL = np.empty_like(d)
    cR = np.empty_like(d)
    small = np.abs(d) <= _LARGE_D
    if np.any(small):
        ds = d[small]
        tiny = np.abs(ds) <= ALPHA_SWITCH
        # limit form below the switch: series for d/(e^d - 1); exact
        # pure-diffusion flux at d = 0
        safe = np.where(tiny, 1.0, ds)
        phi = np.where(tiny, 1.0 - ds / 2.0 + ds * ds / 12.0, safe / np.expm1(safe))
        s = K[small] * phi
        cL[small] = -s
        cR[small] = b[small] + s
    big = ~small
    if np.any(big):
        db, bb = d[big], b[big]
        em = np.exp(-np.abs(db))
        pos = db > 0
        cL[big] = np.where(pos, -bb * em / (1.0 - em), bb / (1.0 - em))
        cR[big] = np.where(pos, bb / (1.0 - em), -bb * em / (1.0 - em))
    if not (np.all(np.isfinite(cL)) and np.all(np.isfinite(cR))):
        raise NumericalOverflow("non-finite fitted weights in interior face sweep")
    return cL, cR


def interior_flux(mesh: SpatialMesh, a_face: float, b_face: float, i: int, R: float) -> FaceFlux:
    """Fitted flux at the interior face r_{i+1/2}, 1 <= i <= N-2."""
    if not (1 <= i <= mesh.n_cells - 2):
        raise ValueError(f"face index {i} is not interior for N={mesh.n_cells}")
    if a_face <= 0.0:
        raise ValueError(f"face diffusion coefficient must be positive, got {a_face!r}")
    cL, cR = _weights_from_geometry(
        np.asarray([mesh.nodes[i]]), np.asarray([mesh.nodes[i + 1]]),
        np.asarray([a_face]), np.asarray([b_face]), R,
    )
    return FaceFlux(face_index=i, coeff_left=float(cL[0]), coeff_right=float(cR[0]),
                    alpha=b_face / a_face, kind=FluxKind.INTERIOR)


def left_boundary_flux(a_face: float, b_face: float) -> FaceFlux:
    """Flux at r_{1/2} from the degenerate constant-source local problem."""
    if a_face <= 0.0:
        raise ValueError(f"face diffusion coefficient must be positive, got {a_face!r}")
    return FaceFlux(
        face_index=0,
        coeff_left=-0.5 * (a_face - b_face),
        coeff_right=0.5 * (a_face + b_face),
        alpha=b_face / a_face,
        kind=FluxKind.LEFT_BOUNDARY,
    )


def right_boundary_flux(a_face: float, b_face: float, face_index: int = -1) -> FaceFlux:
    """Flux at r_{N-1/2}; coeff_right weights P_N, coeff_left weights P_{N-1}."""
    if a_face <= 0.0:
        raise ValueError(f"face diffusion coefficient must be positive, got {a_face!r}")
    return FaceFlux(
        face_index=face_index,
        coeff_left=-0.5 * (a_face - b_face),
        coeff_right=0.5 * (a_face + b_face),
        alpha=b_face / a_face,
        kind=FluxKind.RIGHT_BOUNDARY,
    )


def face_coefficient_values(
    factored: FactoredCoefficients, mesh: SpatialMesh, t: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a_face, b_face, degeneracy_factor) arrays over the N faces at time t.

    Interior faces carry the case's interior a; the first face keeps the
    right-end polynomial inside a (a * (R - r)) and the last face the
    left-end one (a * r).  degeneracy_factor is the polynomial multiplying
    the whole flux in the flux-difference term.
    """
    mids = mesh.midpoints
    a = np.asarray(factored.a(mids), dtype=float).copy()
    a[0] = factored.a_left_face(mids[0])
    a[-1] = factored.a_right_face(mids[-1])
    b = np.asarray(factored.b(mids, t), dtype=float)
    degeneracy = np.asarray(factored.outer(mids), dtype=float)
    return a, b, degeneracy


def face_fluxes(
    factored: FactoredCoefficients, mesh: SpatialMesh, t: float
) -> tuple[list[FaceFlux], np.ndarray]:
    """All N face fluxes at time t plus their degeneracy factors."""
    a, b, degeneracy = face_coefficient_values(factored, mesh, t)
    n = mesh.n_cells
    fluxes = [left_boundary_flux(float(a[0]), float(b[0]))]
    for i in range(1, n - 1):
        fluxes.append(interior_flux(mesh, float(a[i]), float(b[i]), i, mesh.R))
    fluxes.append(right_boundary_flux(float(a[n - 1]), float(b[n - 1]), face_index=n - 1))
    return fluxes, degeneracy


def interior_weight_arrays(
    mesh: SpatialMesh, a: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Interior weights for faces 1..N-2 as arrays (cL, cR).

    The assembly loop calls this once per time level with the full face
    coefficient arrays.
    """
    nodes = mesh.nodes
    return _weights_from_geometry(nodes[1:-2], nodes[2:-1], a[1:-1], b[1:-1], mesh.R)
