"""Primal / dual spatial grids and time grids.

The spatial grid carries N+1 nodes 0 = r_0 < ... < r_N = R.  Dual cells are
centered at the nodes and bounded by the interval midpoints r_{i+1/2}; the
boundary cells (0, r_{1/2}) and (r_{N-1/2}, R) are half cells with measures
h_0/2 and h_{N-1}/2.  Meshes are immutable; `refined()` doubles the cell
count through the same node generator so that every parent node reappears
bit-exactly at the even indices of the child (needed for double-mesh error
comparison at shared nodes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMesh


@dataclass(frozen=True)
class SpatialMesh:
    nodes: np.ndarray       # r_0 .. r_N
    h: np.ndarray           # h_i = r_{i+1} - r_i, length N
    midpoints: np.ndarray   # r_{1/2} .. r_{N-1/2}, length N
    hbar: np.ndarray        # dual-cell measures, length N+1
    grading: float = 1.0    # node generator parameter, 1.0 = uniform

    def __post_init__(self):
        for name in ("nodes", "h", "midpoints", "hbar"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        self.nodes.flags.writeable = False
        self.h.flags.writeable = False
        self.midpoints.flags.writeable = False
        self.hbar.flags.writeable = False

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.h - self.h[0]) <= rtol * self.R))

    def refined(self) -> "SpatialMesh":
        """Mesh with doubled cell count; parent nodes coincide bit-exactly."""
        if self.grading == 1.0:
            return uniform_spatial(2 * self.n_cells, self.R)
        return graded_spatial(2 * self.n_cells, self.R, self.grading)


@dataclass(frozen=True)
class TimeMesh:
    levels: np.ndarray            # t_0 .. t_M
    tau: np.ndarray = field(default=None)  # steps, length M

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "tau", np.diff(levels))
        if len(levels) < 1 or (len(levels) > 1 and np.any(self.tau <= 0)):
            raise InvalidMesh("time levels must be strictly increasing")
        self.levels.flags.writeable = False
        self.tau.flags.writeable = False

    @property
    def n_steps(self) -> int:
        return len(self.levels) - 1

    @property
    def T(self) -> float:
        return float(self.levels[-1])


def _finish_spatial(nodes: np.ndarray, grading: float) -> SpatialMesh:
    h = np.diff(nodes)
    if np.any(h <= 0):
        raise InvalidMesh("nodes must be strictly increasing")
    midpoints = 0.5 * (nodes[:-1] + nodes[1:])
    hbar = np.empty(len(nodes))
    hbar[0] = 0.5 * h[0]
    hbar[-1] = 0.5 * h[-1]
    hbar[1:-1] = 0.5 * (h[:-1] + h[1:])
    return SpatialMesh(nodes=nodes, h=h, midpoints=midpoints, hbar=hbar, grading=grading)


def uniform_spatial(n_cells: int, R: float) -> SpatialMesh:
    """Uniform grid with n_cells subintervals on [0, R]."""
    if n_cells < 4:
        raise InvalidMesh(f"need at least 4 cells, got {n_cells}")
    if R <= 0:
        raise InvalidMesh("R must be positive")
    nodes = R * (np.arange(n_cells + 1) / n_cells)
    return _finish_spatial(nodes, grading=1.0)


def graded_spatial(n_cells: int, R: float, grading_exponent: float) -> SpatialMesh:
    """Grid symmetrically concentrated toward both endpoints.

    Maps s = i/n through s <= 1/2: R*2^(p-1)*s^p, s > 1/2: R*(1 - 2^(p-1)*(1-s)^p).
    Exponent 1 reproduces the uniform grid bit-exactly.
    """
    if grading_exponent < 1:
        raise InvalidMesh("grading exponent must be >= 1")
    if grading_exponent == 1.0:
        return uniform_spatial(n_cells, R)
    if n_cells < 4:
        raise InvalidMesh(f"need at least 4 cells, got {n_cells}")
    p = float(grading_exponent)
    s = np.arange(n_cells + 1) / n_cells
    lo = 2.0 ** (p - 1.0) * s**p
    hi = 1.0 - 2.0 ** (p - 1.0) * (1.0 - s) ** p
    nodes = R * np.where(s <= 0.5, lo, hi)
    return _finish_spatial(nodes, grading=p)


def uniform_time(n_steps: int, T: float) -> TimeMesh:
    """Uniform time grid with n_steps steps of size T/n_steps."""
    if n_steps < 1:
        raise InvalidMesh(f"need at least 1 time step, got {n_steps}")
    if T <= 0:
        raise InvalidMesh("T must be positive")
    return TimeMesh(levels=T * (np.arange(n_steps + 1) / n_steps))
