import math

import numpy as np
import pytest

from degenbond.assembly import (
    assemble_boundary_rows,
    assemble_interior_rows,
    assemble_system,
    load_vector,
    reaction_quadrature,
)
from degenbond.errors import AssemblyError
from degenbond.fitted_flux import face_fluxes
from degenbond.mesh import uniform_spatial
from degenbond.model import DriftDegeneracy, example_problem, factor_coefficients
from conftest import random_admissible_problem


def test_reaction_quadrature_pure_reaction():
    # theta = w = 0 functions (quadrature-level check): Q_i = r_i hbar_i inside
    spec = example_problem("example1", manufactured=False)
    from dataclasses import replace
    zero = lambda r: 0.0 * r
    spec = replace(spec, theta=zero, w=zero, w_prime=zero, theta_prime=zero,
                   ww_prime_prime=zero, case_tag=None)
    mesh = uniform_spatial(8, 1.0)
    q = reaction_quadrature(spec, mesh, 0.0)
    assert np.allclose(q[1:-1], mesh.nodes[1:-1] * mesh.hbar[1:-1], atol=1e-15)


def test_reaction_quadrature_example1_frozen_values():
    spec = example_problem("example1")
    mesh = uniform_spatial(20, 1.0)
    q = reaction_quadrature(spec, mesh, 0.0)
    # scalar oracle at i=10 (r=0.5): 0.5*0.05 + [theta]+lam[w]-[ww'] face diffs
    assert math.isclose(q[10], 0.0499375, rel_tol=1e-12)
    # boundary cell: h0^2/8 + theta(0.025) + 0.25 w(0.025) - (ww')(0.025)
    assert math.isclose(q[0], 0.007625, rel_tol=1e-12)


def test_load_vector_shapes_and_values():
    mesh = uniform_spatial(4, 1.0)
    assert np.allclose(load_vector(None, mesh, 0.0), 0.0)
    ones = load_vector(lambda r, t: np.ones_like(r), mesh, 0.0)
    assert np.allclose(ones, [0.125, 0.25, 0.25, 0.25, 0.125])
    linear = load_vector(lambda r, t: r, mesh, 0.0)
    assert math.isclose(linear[2], 0.5 * 0.25, rel_tol=1e-14)


def test_assembled_offdiagonals_positive_example1():
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(4, 1.0)
    system = assemble_system(spec, fact, mesh, 0.0)
    assert np.all(system.e_sub[2:4] > 0)
    assert np.all(system.e_super[1:3] > 0)


def test_assembly_boundary_row_closed_form():
    # e_{0,1} = (h0/4)(R - h0/2)(a_1/2 + b_1/2) with the module-model values
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(20, 1.0)
    system = assemble_system(spec, fact, mesh, 0.0)
    a_half = 0.5 * (1 - 0.025)
    b_half = 1.0 + (0.25 - 0.95) * 1.0
    expect = (0.05 / 4) * (1 - 0.025) * (a_half + b_half)
    assert math.isclose(system.e_super[0], expect, rel_tol=1e-13)
    # with b = a the left diagonal entry reduces to Q_0 exactly
    q = reaction_quadrature(spec, mesh, 0.0)
    from degenbond.fitted_flux import left_boundary_flux
    lf = left_boundary_flux(a_half, a_half)
    deg0 = 0.025 * (1 - 0.025)
    assert math.isclose(q[0] - deg0 * lf.coeff_left, q[0], rel_tol=1e-14)


def test_loop_and_vectorized_assembly_agree():
    for pid in ("example1", "example3"):
        spec = example_problem(pid)
        fact = factor_coefficients(spec)
        mesh = uniform_spatial(13, 1.0)
        t = 0.42
        fast = assemble_system(spec, fact, mesh, t)
        fluxes, deg = face_fluxes(fact, mesh, t)
        q = reaction_quadrature(spec, mesh, t)
        arrays = assemble_interior_rows(fluxes, deg, q, mesh, t)
        e_sub, e_diag, e_super = assemble_boundary_rows(
            arrays, fluxes[0], fluxes[-1], q[0], q[-1], deg)
        assert np.allclose(e_sub, fast.e_sub, rtol=1e-14, atol=1e-15)
        assert np.allclose(e_diag, fast.e_diag, rtol=1e-14, atol=1e-15)
        assert np.allclose(e_super, fast.e_super, rtol=1e-14, atol=1e-15)


def test_constant_state_matches_exact_quadrature():
    """For P = c the discrete operator must reproduce the exact dual-cell
    balance: antiderivative-based quadrature of the reaction term minus the
    exact flux difference of the constant state (uniform grid => the r
    integral is exact too)."""
    spec = example_problem("example1", manufactured=False)
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(8, 1.0)
    t, c = 0.3, 1.7
    system = assemble_system(spec, fact, mesh, t)
    applied = system.apply(np.full(9, c))

    lam = spec.lam(t)
    # antiderivative of r + theta' + lam w' - (ww')' for example1 coefficients
    F = lambda s: s * s / 2 + s * (1 - s) + lam * s * (1 - s) - s * (1 - s) * (1 - 2 * s)
    mids = mesh.midpoints
    from degenbond.fitted_flux import face_coefficient_values
    a, b, deg = face_coefficient_values(fact, mesh, t)
    flux_const = deg * b * c          # constant state carries flux b*c per face
    for i in range(1, 8):
        q_exact = (F(mids[i]) - F(mids[i - 1])) * c
        expect = q_exact - (flux_const[i] - flux_const[i - 1])
        assert math.isclose(applied[i], expect, rel_tol=1e-12, abs_tol=1e-13)
    # boundary cells: outer-face flux theta(0)*c resp. theta(R)*c cancels the
    # endpoint term of the antiderivative (theta(0)=theta(R)=0 here)
    q0 = (F(mids[0]) - F(0.0)) * c
    assert math.isclose(applied[0], q0 - flux_const[0], rel_tol=1e-12)
    qN = (F(1.0) - F(mids[-1])) * c
    assert math.isclose(applied[-1], qN + flux_const[-1], rel_tol=1e-12)


def test_offdiagonal_positivity_randomized(rng):
    mesh = uniform_spatial(12, 1.0)
    n = mesh.n_cells
    trials_per_case = 250
    for case in DriftDegeneracy:
        for _ in range(trials_per_case):
            spec = random_admissible_problem(case, rng)
            fact = factor_coefficients(spec)
            t = float(rng.uniform(0.0, 1.0))
            system = assemble_system(spec, fact, mesh, t)
            assert np.all(system.e_sub[2:n] > 0)
            assert np.all(system.e_super[1:n - 1] > 0)


def test_row_consistency_rate():
    # (E P)_i / hbar_i -> -(w^2/2)P'' - (theta + lam w)P' + r P for P = exp(-r)
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    errs = []
    for nsub in (20, 160):
        mesh = uniform_spatial(nsub, 1.0)
        system = assemble_system(spec, fact, mesh, 0.0)
        r = mesh.nodes
        p = np.exp(-r)
        lh = system.apply(p) / mesh.hbar
        w = spec.w(r)
        exact = -0.5 * w * w * p + (spec.theta(r) + spec.lam(0.0) * w) * p + r * p
        errs.append(np.max(np.abs((lh - exact)[1:-1])))
    rate = math.log(errs[0] / errs[1]) / math.log(160 / 20)
    assert rate >= 0.9


def test_assembly_time_dependence_only_through_b_and_lambda():
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(10, 1.0)
    s1 = assemble_system(spec, fact, mesh, 0.0)
    s2 = assemble_system(spec, fact, mesh, 0.9)
    # different lambda(t) must change the convection-coupled entries
    assert not np.allclose(s1.e_super[:-1], s2.e_super[:-1])
    # but the mass weights are time independent
    assert np.array_equal(s1.hbar_weights, s2.hbar_weights)


def test_sign_guard_raises_on_bad_flux_weights():
    from degenbond.fitted_flux import FaceFlux, FluxKind
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(5, 1.0)
    fluxes, deg = face_fluxes(fact, mesh, 0.0)
    q = reaction_quadrature(spec, mesh, 0.0)
    broken = list(fluxes)
    good = broken[2]
    broken[2] = FaceFlux(face_index=2, coeff_left=good.coeff_left,
                         coeff_right=-abs(good.coeff_right), alpha=good.alpha,
                         kind=FluxKind.INTERIOR)
    with pytest.raises(AssemblyError):
        assemble_interior_rows(broken, deg, q, mesh, 0.0)


def test_debug_dump_csv(tmp_path):
    spec = example_problem("example1")
    fact = factor_coefficients(spec)
    mesh = uniform_spatial(5, 1.0)
    system = assemble_system(spec, fact, mesh, 0.0)
    path = tmp_path / "dump.csv"
    system.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,e_sub,e_diag,e_super,load"
    assert len(lines) == 7
