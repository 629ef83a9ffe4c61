import math

import numpy as np
import pytest

from degenbond.errors import NonUniformMesh
from degenbond.mesh import TimeMesh, graded_spatial, uniform_spatial, uniform_time
from degenbond.model import example_problem
from degenbond.reference_scheme import assemble_scheme_b, march_scheme_b
from degenbond.timestep import march


def test_rejects_nonuniform_mesh():
    spec = example_problem("example3")
    mesh = graded_spatial(10, 1.0, 2.0)
    with pytest.raises(NonUniformMesh):
        assemble_scheme_b(spec, mesh, 0.0)


def test_interior_row_central_transport_form():
    # at an interior node the convection part must be the central quotient
    spec = example_problem("example3")
    mesh = uniform_spatial(10, 1.0)
    h = 0.1
    sys_ = assemble_scheme_b(spec, mesh, 0.0)
    i = 5
    r = mesh.nodes[i]
    beta = 0.5 * spec.w(r) ** 2
    gamma = spec.theta(r) + spec.lam(0.0) * spec.w(r)
    assert math.isclose(sys_.e_sub[i], beta / h**2 - gamma / (2 * h), rel_tol=1e-13)
    assert math.isclose(sys_.e_super[i], beta / h**2 + gamma / (2 * h), rel_tol=1e-13)
    assert math.isclose(sys_.e_diag[i], 2 * beta / h**2 + r, rel_tol=1e-13)


def test_boundary_rows_upwind_directions():
    spec = example_problem("example3")   # theta(0) = 0.5 > 0, theta(1) = -0.5 < 0
    mesh = uniform_spatial(10, 1.0)
    h = 0.1
    sys_ = assemble_scheme_b(spec, mesh, 0.0)
    # left: forward difference with speed theta(0)
    assert math.isclose(sys_.e_diag[0], 0.5 / h, rel_tol=1e-13)
    assert math.isclose(sys_.e_super[0], 0.5 / h, rel_tol=1e-13)
    # right: backward difference with speed theta(R), reaction R present
    assert math.isclose(sys_.e_sub[-1], 0.5 / h, rel_tol=1e-13)
    assert math.isclose(sys_.e_diag[-1], 0.5 / h + 1.0, rel_tol=1e-13)
    # closure rows are unforced boundary conditions
    assert sys_.load[0] == 0.0 and sys_.load[-1] == 0.0
    assert np.all(sys_.load[1:-1] != 0.0)


def test_zero_horizon_returns_initial():
    spec = example_problem("example3")
    mesh = uniform_spatial(10, 1.0)
    res = march_scheme_b(spec, mesh, TimeMesh(levels=[0.0]))
    assert np.allclose(res.final.values, np.exp(-mesh.nodes))


def test_interior_second_order_convergence():
    # away from the degenerate ends the classical scheme approaches its
    # second order (the first-order closure error transported inward decays
    # faster than it refines, so the observed rate climbs toward 2)
    spec = example_problem("example3")
    errs = []
    for nsub in (80, 320):
        mesh = uniform_spatial(nsub, 1.0)
        tmesh = uniform_time(1000, 1.0)
        res = march_scheme_b(spec, mesh, tmesh)
        u = np.exp(-mesh.nodes - 1.0)
        inner = (mesh.nodes >= 0.25) & (mesh.nodes <= 0.75)
        errs.append(np.max(np.abs(res.final.values - u)[inner]))
    rate = math.log(errs[0] / errs[-1]) / math.log(4.0)
    assert rate >= 1.6


def test_fitted_beats_reference_near_degeneracy():
    # the headline comparison: boundary-node errors at N=41, T=0.25
    spec = example_problem("example3")
    mesh = uniform_spatial(40, 1.0)
    tmesh = uniform_time(250, 0.25)
    fitted = march(spec, mesh, tmesh, 0.5)
    reference = march_scheme_b(spec, mesh, tmesh, 0.5)
    u = np.exp(-mesh.nodes - 0.25)
    err_a = np.abs(fitted.final.values - u)
    err_b = np.abs(reference.final.values - u)
    for idx in (0, 1, 39, 40):
        assert err_a[idx] < err_b[idx]
