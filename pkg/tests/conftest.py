"""Shared fixtures: random admissible problems for every drift-degeneracy case."""

import numpy as np
import pytest

from degenbond.model import DriftDegeneracy, ProblemSpec


def random_admissible_problem(case: DriftDegeneracy, rng: np.random.Generator,
                              R: float = 1.0) -> ProblemSpec:
    """Random coefficients satisfying the admissibility assumptions.

    w = c r(R-r)(1 + eps r) with c > 0 and small |eps| (so w0 stays positive);
    theta is drawn from the requested factorization family with the right
    endpoint signs; lambda is constant in time.
    """
    c = rng.uniform(0.3, 3.0)
    eps = rng.uniform(-0.5 / R, 0.5 / R)
    lam0 = rng.uniform(-1.0, 1.0)

    def w(r):
        return c * r * (R - r) * (1.0 + eps * r)

    def w_prime(r):
        return c * (R - 2.0 * r + 2.0 * eps * R * r - 3.0 * eps * r * r)

    def w_second(r):
        return c * (-2.0 + 2.0 * eps * R - 6.0 * eps * r)

    def ww_prime_prime(r):
        return w_prime(r) ** 2 + w(r) * w_second(r)

    k1 = rng.uniform(0.2, 2.0)
    k2 = rng.uniform(-1.0, 1.0)
    if case is DriftDegeneracy.BOTH_ENDS:
        # theta0 = k1 + k2 r with nonzero endpoint values
        if abs(k1 + k2 * R) < 0.05:
            k2 = (0.1 - k1) / R
        theta = lambda r: r * (R - r) * (k1 + k2 * r)
        theta_prime = lambda r: (R - 2.0 * r) * (k1 + k2 * r) + r * (R - r) * k2
    elif case is DriftDegeneracy.LEFT_END:
        # theta0 = -(k1 + k3 r) < 0 everywhere, so theta0(R) < 0
        k3 = rng.uniform(0.0, 1.0)
        theta = lambda r: -r * (k1 + k3 * r)
        theta_prime = lambda r: -(k1 + 2.0 * k3 * r)
    elif case is DriftDegeneracy.RIGHT_END:
        k3 = rng.uniform(0.0, 1.0)
        theta = lambda r: (R - r) * (k1 + k3 * r)
        theta_prime = lambda r: -(k1 + k3 * r) + (R - r) * k3
    else:
        # theta = k1 - slope r with a sign change inside (0, R)
        slope = rng.uniform(1.1, 3.0) * k1 / R
        theta = lambda r: k1 - slope * r
        theta_prime = lambda r: -slope + 0.0 * r
    return ProblemSpec(
        R=R,
        T=1.0,
        w=w,
        w_prime=w_prime,
        ww_prime_prime=ww_prime_prime,
        theta=theta,
        theta_prime=theta_prime,
        lam=lambda t: lam0,
        initial=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        case_tag=case,
        label=f"random-{case.value}",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
