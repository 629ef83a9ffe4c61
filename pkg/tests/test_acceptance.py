"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Node counts are node counts (N nodes = N-1 subintervals), tau = 0.001
unless a criterion says otherwise.  The TABLE* constants are the pinned
regression targets for the tracked experiments; absolute norms are checked
within a factor of two (the forcing quadrature is not pinned down to the
digit by the scheme definition), convergence rates at their stated
tolerances.
"""

import math
import time

import numpy as np
import pytest

import degenbond as db
from degenbond.reference_scheme import march_scheme_b

TABLE1 = {  # nodes: (C, L2, H1)
    21: (1.481e-2, 2.552e-3, 2.725e-2),
    41: (7.607e-3, 9.415e-4, 1.978e-2),
    81: (3.855e-3, 3.402e-4, 1.418e-2),
    161: (1.941e-3, 1.216e-4, 1.010e-2),
    321: (9.738e-4, 4.324e-5, 7.169e-3),
}
TABLE2 = {
    21: (1.003e-2, 1.482e-3, 1.541e-2),
    41: (5.156e-3, 5.443e-4, 1.111e-2),
    81: (2.614e-3, 1.962e-4, 7.937e-3),
    161: (1.316e-3, 7.005e-5, 5.641e-3),
    321: (6.604e-4, 2.489e-5, 3.998e-3),
}
TABLE3_C = {21: 2.253e-2, 41: 8.382e-3, 81: 4.920e-3, 161: 2.732e-3}
TABLE4 = {  # node index: (scheme A, scheme B) at N=41, T=0.25
    0: (1.773e-3, 7.874e-3),
    1: (2.483e-3, 1.216e-2),
    39: (3.263e-3, 4.157e-3),
    40: (7.607e-4, 3.071e-3),
}


def _report(criterion, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance {criterion}] {status} {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def _sweep(problem, xi, node_counts, m_steps=1000):
    spec = db.example_problem(problem)
    reports = []
    for n in node_counts:
        mesh = db.uniform_spatial(n - 1, spec.R)
        tmesh = db.uniform_time(m_steps, spec.T)
        acc = db.NormAccumulator(mesh, tmesh, spec.exact, problem_id=problem)
        db.march(spec, mesh, tmesh, xi, on_level=lambda j, t, p: acc.observe(j, t, p))
        reports.append(acc.report())
    return reports


def _within_factor(value, reference, factor=2.0):
    return reference / factor <= value <= reference * factor


_bond_runs_cache = {}


def _bond_runs():
    """Shared marches for criteria 5 and 6: payoff-1 bond problems."""
    if not _bond_runs_cache:
        for problem in ("example1", "example2", "example3"):
            spec = db.example_problem(problem, manufactured=False)
            for xi in (0.5, 1.0):
                for nodes in (21, 81):
                    mesh = db.uniform_spatial(nodes - 1, spec.R)
                    tmesh = db.uniform_time(1000, spec.T)
                    track = {"max": 1.0}

                    def on_level(j, t, p, track=track):
                        track["max"] = max(track["max"], float(np.max(p)))

                    res = db.march(spec, mesh, tmesh, xi, on_level=on_level)
                    _bond_runs_cache[(problem, xi, nodes)] = (res, track["max"])
    return _bond_runs_cache


def test_criterion_1_table1_reproduction():
    start = time.perf_counter()
    reports = _sweep("example1", 0.5, list(TABLE1))
    elapsed = time.perf_counter() - start
    table = db.double_mesh_rates(reports)
    for rep in reports:
        c_ref, l2_ref, h1_ref = TABLE1[rep.n_nodes]
        ok = (_within_factor(rep.c_norm, c_ref) and _within_factor(rep.l2_norm, l2_ref)
              and _within_factor(rep.h1_norm, h1_ref))
        if not ok:
            _report(1, False, f"norms out of range at N={rep.n_nodes}: {rep}")
    last = table.rows[-1]
    rc_ok = (abs(last.c_rc - 1.00) <= 0.15 and abs(last.l2_rc - 1.49) <= 0.15
             and abs(last.h1_rc - 0.49) <= 0.15)
    _report(
        1, rc_ok and elapsed < 60.0,
        f"RC=({last.c_rc:.2f},{last.l2_rc:.2f},{last.h1_rc:.2f}) "
        f"vs (1.00,1.49,0.49), norms within x2, sweep {elapsed:.1f}s",
    )


def test_criterion_2_table2_reproduction():
    reports = _sweep("example2", 0.5, list(TABLE2))
    table = db.double_mesh_rates(reports)
    for rep in reports:
        c_ref, l2_ref, h1_ref = TABLE2[rep.n_nodes]
        ok = (_within_factor(rep.c_norm, c_ref) and _within_factor(rep.l2_norm, l2_ref)
              and _within_factor(rep.h1_norm, h1_ref))
        if not ok:
            _report(2, False, f"norms out of range at N={rep.n_nodes}: {rep}")
    last = table.rows[-1]
    finest = reports[-1]
    rc_ok = (abs(last.c_rc - 1.00) <= 0.15 and abs(last.l2_rc - 1.49) <= 0.15
             and abs(last.h1_rc - 0.49) <= 0.15)
    _report(
        2, rc_ok and _within_factor(finest.c_norm, 6.604e-4),
        f"C(321)={finest.c_norm:.3e} vs 6.604e-4, "
        f"RC=({last.c_rc:.2f},{last.l2_rc:.2f},{last.h1_rc:.2f})",
    )


def test_criterion_3_table3_reproduction():
    reports = _sweep("example3", 1.0, list(TABLE3_C))
    c_norms = [rep.c_norm for rep in reports]
    within = all(_within_factor(c, TABLE3_C[rep.n_nodes])
                 for c, rep in zip(c_norms, reports))
    monotone = all(a > b for a, b in zip(c_norms, c_norms[1:]))
    _report(3, within and monotone,
            "C=" + ",".join(f"{c:.3e}" for c in c_norms)
            + " vs printed {2.253e-2,8.382e-3,4.920e-3,2.732e-3}, monotone="
            + str(monotone))


def test_criterion_4_table4_comparison():
    spec = db.example_problem("example3")
    mesh = db.uniform_spatial(40, 1.0)
    tmesh = db.uniform_time(250, 0.25)
    fitted = db.march(spec, mesh, tmesh, 0.5)
    reference = march_scheme_b(spec, mesh, tmesh, 0.5)
    u = spec.exact.u(mesh.nodes, 0.25)
    err_a = np.abs(fitted.final.values - u)
    err_b = np.abs(reference.final.values - u)
    lines = []
    ok = True
    for idx, (ref_a, ref_b) in TABLE4.items():
        a_val, b_val = float(err_a[idx]), float(err_b[idx])
        ok = ok and a_val < b_val
        ok = ok and _within_factor(a_val, ref_a, 10.0) and _within_factor(b_val, ref_b, 10.0)
        lines.append(f"n{idx}: A={a_val:.3e} B={b_val:.3e}")
    _report(4, ok, "; ".join(lines))


def test_criterion_5_monotonicity_bounds():
    worst_min, worst_max = 0.0, 1.0
    for (problem, xi, nodes), (res, pmax) in _bond_runs().items():
        worst_min = min(worst_min, res.min_solution)
        worst_max = max(worst_max, pmax)
    _report(5, worst_min >= -1e-12 and worst_max <= 1.0 + 1e-12,
            f"min P = {worst_min:.3e} >= -1e-12, max P = {worst_max:.12f} <= 1+1e-12")


def test_criterion_6_m_matrix_every_level():
    bad = [key for key, (res, _) in _bond_runs().items() if not res.all_m_matrix]
    _report(6, not bad, f"violations: {bad or 'none'} across "
            f"{sum(len(r.diagnostics) for r, _ in _bond_runs().values())} steps")


def test_criterion_7_flux_consistency_order():
    spec = db.example_problem("example1")
    fact = db.factor_coefficients(spec)
    errs = {}
    for nsub in (40, 640):
        mesh = db.uniform_spatial(nsub, 1.0)
        a, b, _ = db.face_coefficient_values(fact, mesh, 0.0)
        mids = mesh.midpoints
        v_nodes = np.exp(-mesh.nodes)
        vm, vp = np.exp(-mids), -np.exp(-mids)
        exact = a * mids * (1 - mids) * vp + b * vm
        exact[0] = a[0] * mids[0] * vp[0] + b[0] * vm[0]
        exact[-1] = a[-1] * (1 - mids[-1]) * vp[-1] + b[-1] * vm[-1]
        from degenbond.fitted_flux import interior_weight_arrays
        cl, cr = interior_weight_arrays(mesh, a, b)
        approx = np.empty(nsub)
        approx[1:-1] = cl * v_nodes[1:-2] + cr * v_nodes[2:-1]
        approx[0] = db.left_boundary_flux(float(a[0]), float(b[0])).apply(v_nodes[0], v_nodes[1])
        approx[-1] = db.right_boundary_flux(float(a[-1]), float(b[-1])).apply(v_nodes[-2], v_nodes[-1])
        errs[nsub] = float(np.max(np.abs(exact - approx)))
    order = math.log(errs[40] / errs[640]) / math.log(640 / 40)
    _report(7, order >= 0.9, f"max flux errors {errs[40]:.3e} -> {errs[640]:.3e}, "
            f"observed order {order:.3f} >= 0.9")


def test_criterion_8_runge_pointwise_rate():
    spec = db.example_problem("example3")
    values = []
    for nsub in (40, 80, 160):
        mesh = db.uniform_spatial(nsub, 1.0)
        res = db.march(spec, mesh, db.uniform_time(1000, 1.0), 0.5)
        idx = int(np.argmin(np.abs(mesh.nodes - 0.5)))
        assert mesh.nodes[idx] == 0.5
        values.append(float(res.final.values[idx]))
    s = db.runge_rate(*values)
    _report(8, 1.6 <= s <= 2.4, f"three-grid s at r=0.5, t=1: {s:.3f} in [1.6, 2.4]")


def test_criterion_9_temporal_orders():
    spec = db.example_problem("example1")
    mesh = db.uniform_spatial(160, 1.0)
    orders = {}
    for xi in (0.5, 1.0):
        sols = [db.march(spec, mesh, db.uniform_time(m, 1.0), xi).final.values
                for m in (250, 500, 1000)]
        d1 = float(np.max(np.abs(sols[0] - sols[1])))
        d2 = float(np.max(np.abs(sols[1] - sols[2])))
        orders[xi] = math.log2(d1 / d2)
    _report(9, orders[0.5] >= 1.8 and orders[1.0] >= 0.9,
            f"Richardson orders: CN {orders[0.5]:.2f} >= 1.8, implicit {orders[1.0]:.2f} >= 0.9")


def test_criterion_10_assembly_oracle_equivalence():
    """Independent scalar re-evaluation of the assembled coefficients.

    The oracle computes every entry from the printed closed forms with
    plain math.pow power quotients - a different evaluation path from the
    production exp/expm1 arithmetic.
    """
    R, lam = 1.0, 0.25
    n = 8
    spec = db.example_problem("example1")
    fact = db.factor_coefficients(spec)
    mesh = db.uniform_spatial(n, R)
    system = db.assemble_system(spec, fact, mesh, 0.0)

    h = R / n
    r = [i * h for i in range(n + 1)]
    mid = [(r[i] + r[i + 1]) / 2 for i in range(n)]
    theta = lambda s: s * (1 - s)
    w = lambda s: s * (1 - s)
    wwp = lambda s: s * (1 - s) * (1 - 2 * s)
    w_prime = lambda s: 1 - 2 * s
    a_int = 0.5                      # w0^2 / 2
    b_at = lambda s: 1.0 + (lam - w_prime(s)) * 1.0
    D_at = lambda s: s * (R - s)     # degeneracy weight at a face
    a0 = a_int * (R - mid[0])        # first face keeps (R - r) inside a
    aN = a_int * mid[-1]             # last face keeps r inside a

    def g(k, alpha):
        return math.pow(r[k] / (R - r[k]), alpha / R)

    def q_at(i):
        if i == 0:
            return h * h / 8 + theta(mid[0]) + lam * w(mid[0]) - wwp(mid[0])
        if i == n:
            return (h / 4) * (2 * R - h / 2) - theta(mid[-1]) - lam * w(mid[-1]) + wwp(mid[-1])
        hbar = h
        return (r[i] * hbar + theta(mid[i]) - theta(mid[i - 1])
                + lam * (w(mid[i]) - w(mid[i - 1])) - wwp(mid[i]) + wwp(mid[i - 1]))

    e_sub = [0.0] * (n + 1)
    e_diag = [0.0] * (n + 1)
    e_super = [0.0] * (n + 1)
    # rows 0 and N (half cells, boundary-face averages)
    b0, bN = b_at(mid[0]), b_at(mid[-1])
    e_diag[0] = (h / 4) * (R - h / 2) * (a0 - b0) + q_at(0)
    e_super[0] = (h / 4) * (R - h / 2) * (a0 + b0)
    e_sub[n] = (h / 4) * (R - h / 2) * (aN - bN)
    e_diag[n] = (h / 4) * (R - h / 2) * (aN + bN) + q_at(n)
    # row 1 mixes the first boundary face with interior face 1
    b1 = b_at(mid[1])
    alpha1 = b1 / a_int
    e_sub[1] = 0.5 * D_at(mid[0]) * (a0 - b0)
    e_diag[1] = (0.5 * D_at(mid[0]) * (a0 + b0) + q_at(1)
                 + D_at(mid[1]) * b1 * g(1, alpha1) / (g(2, alpha1) - g(1, alpha1)))
    e_super[1] = D_at(mid[1]) * b1 * g(2, alpha1) / (g(2, alpha1) - g(1, alpha1))
    # rows 2..N-2: both faces interior
    for i in range(2, n - 1):
        b_lo, b_hi = b_at(mid[i - 1]), b_at(mid[i])
        al_lo, al_hi = b_lo / a_int, b_hi / a_int
        e_sub[i] = D_at(mid[i - 1]) * b_lo * g(i - 1, al_lo) / (g(i, al_lo) - g(i - 1, al_lo))
        e_super[i] = D_at(mid[i]) * b_hi * g(i + 1, al_hi) / (g(i + 1, al_hi) - g(i, al_hi))
        e_diag[i] = (q_at(i)
                     + D_at(mid[i]) * b_hi * g(i, al_hi) / (g(i + 1, al_hi) - g(i, al_hi))
                     + D_at(mid[i - 1]) * b_lo * g(i, al_lo) / (g(i, al_lo) - g(i - 1, al_lo)))
    # row N-1 mixes interior face N-2 with the last boundary face
    b_lo = b_at(mid[n - 2])
    al_lo = b_lo / a_int
    e_sub[n - 1] = D_at(mid[n - 2]) * b_lo * g(n - 2, al_lo) / (g(n - 1, al_lo) - g(n - 2, al_lo))
    e_diag[n - 1] = (D_at(mid[n - 2]) * b_lo * g(n - 1, al_lo)
                     / (g(n - 1, al_lo) - g(n - 2, al_lo))
                     + 0.5 * D_at(mid[-1]) * (aN - bN) + q_at(n - 1))
    e_super[n - 1] = 0.5 * D_at(mid[-1]) * (aN + bN)

    worst = 0.0
    for i in range(n + 1):
        for mine, oracle in ((system.e_sub[i], e_sub[i]), (system.e_diag[i], e_diag[i]),
                             (system.e_super[i], e_super[i])):
            if oracle == 0.0 and mine == 0.0:
                continue
            worst = max(worst, abs(mine - oracle) / max(abs(oracle), 1e-300))
    _report(10, worst <= 1e-12, f"max relative deviation from scalar oracle: {worst:.2e}")


def test_high_resolution_reference_converges():
    """Supplementary (not a numbered criterion): the forced problem keeps
    converging to the manufactured solution at high resolution, tying the
    forcing construction to the solver end to end."""
    spec = db.example_problem("example1")
    mesh = db.uniform_spatial(2560, 1.0)
    tmesh = db.uniform_time(1000, 1.0)
    acc = db.NormAccumulator(mesh, tmesh, spec.exact, problem_id="example1")
    db.march(spec, mesh, tmesh, 0.5, on_level=lambda j, t, p: acc.observe(j, t, p))
    rep = acc.report()
    # one eighth of the N=321 error, consistent with first order in space
    assert rep.c_norm < 2e-4, rep
    assert rep.l2_norm < 4e-6, rep
