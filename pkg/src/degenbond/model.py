"""Continuous problem definition and coefficient factorization.

The forward pricing equation on (r, t) in [0, R] x (0, T] is

    P_t - (w^2/2) P_rr - (theta + lambda(t) w) P_r + r P = f,   P(r, 0) = P0(r),

with volatility w vanishing at both ends (w = r(R-r) w0, w0 > 0) and drift
theta satisfying theta(0) >= 0 >= theta(R).  No boundary conditions are
imposed: the equation itself degenerates to a transport equation at r = 0
and r = R, so the initial data determines the solution on the closed
interval.

The discretization works from the conservative form

    P_t - d/dr[ (w^2/2) P_r + (theta + (lambda - w') w) P ]
        + (r + theta' + lambda w' - (ww')') P = f

and needs the drift factored against its endpoint degeneracy: the flux is
written as m(r) * rho(P) where the outer polynomial m picks up exactly the
endpoint zeros shared by theta (m = r(R-r), r, R-r, or 1).  DriftDegeneracy
records which pattern applies; FactoredCoefficients carries the resulting
face coefficients a, b and the weight polynomials.

All coefficient callables must accept numpy arrays (they are evaluated on
whole face arrays at every time level).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousCase, DegenerateFactor, ValidationError

Scalar = float
Fn1 = Callable[[np.ndarray], np.ndarray]          # r -> value
Fn2 = Callable[[np.ndarray, float], np.ndarray]   # (r, t) -> value


class DriftDegeneracy(enum.Enum):
    """At which endpoints the drift theta vanishes (and so which polynomial
    factor the flux construction pulls out of the conservative flux)."""

    BOTH_ENDS = "both"        # theta = r(R-r) theta0
    LEFT_END = "left"         # theta = r theta0,      theta0(R) < 0
    RIGHT_END = "right"       # theta = (R-r) theta0,  theta0(0) > 0
    NO_END = "neither"        # theta = theta0,        theta0(0) > 0 > theta0(R)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution with the derivatives the forcing construction needs."""

    u: Fn2
    u_t: Fn2
    u_r: Fn2
    u_rr: Fn2


@dataclass(frozen=True)
class ProblemSpec:
    R: float
    T: float
    w: Fn1
    theta: Fn1
    lam: Callable[[float], float]
    w_prime: Fn1
    theta_prime: Fn1
    ww_prime_prime: Fn1           # derivative of w*w'
    initial: Fn1
    case_tag: Optional[DriftDegeneracy] = None
    forcing: Optional[Fn2] = None
    exact: Optional[ExactSolution] = None
    label: str = "custom"

    def ww_prime(self, r):
        return self.w(r) * self.w_prime(r)


@dataclass(frozen=True)
class FactoredCoefficients:
    """Case-resolved coefficient functions for the fitted flux.

    a: interior-face diffusion coefficient (the flux there is
       a * r(R-r) * P' + b * P).  At the first and last faces the
       construction keeps one endpoint polynomial inside a:
       a_left_face = a * (R-r), a_right_face = a * r.
    b: convection coefficient shared by every face of the case.
    weight_left/weight_right: pulled-out polynomial factors (r or 1,
       R-r or 1); their product is the multiplier outside rho in the
       flux-difference term.
    """

    case: DriftDegeneracy
    R: float
    w0: Fn1
    theta0: Fn1
    a: Fn1
    b: Fn2
    weight_left: Fn1
    weight_right: Fn1

    def outer(self, r):
        return self.weight_left(r) * self.weight_right(r)

    def a_left_face(self, r):
        return self.a(r) * (self.R - r)

    def a_right_face(self, r):
        return self.a(r) * r


def _theta_scale(spec: ProblemSpec) -> float:
    sample = spec.theta(np.linspace(0.05 * spec.R, 0.95 * spec.R, 19))
    return max(float(np.max(np.abs(sample))), 1e-300)


def classify_case(spec: ProblemSpec) -> DriftDegeneracy:
    """Pick the drift factorization matching theta's endpoint behavior.

    Sampled at r = R*1e-6 and R*(1-1e-6): a drift vanishing (at least)
    linearly at an end shows up there at ~1e-6 of its interior scale, a
    non-vanishing one at ~1 of it, so a relative threshold of 1e-3 splits
    the two with three orders of margin either side.  Invariant under
    theta -> c*theta, c > 0.  A drift vanishing at both ends faster than
    r(R-r) still maps to BOTH_ENDS: that factorization stays valid with
    theta0 -> 0 at the ends.
    """
    R = spec.R
    eps = 1e-6
    scale = _theta_scale(spec)
    tl = float(spec.theta(np.asarray(R * eps)))
    tr = float(spec.theta(np.asarray(R * (1.0 - eps))))
    left_vanishes = abs(tl) <= 1e-3 * scale
    right_vanishes = abs(tr) <= 1e-3 * scale

    if left_vanishes and right_vanishes:
        return DriftDegeneracy.BOTH_ENDS
    if left_vanishes:
        # theta = r * theta0 needs theta0(R) = theta(R)/R < 0
        if tr >= -1e-8 * scale:
            raise AmbiguousCase(
                f"theta(R)={tr:g} does not satisfy the strict sign condition "
                "theta0(R) < 0 of the left-end factorization"
            )
        return DriftDegeneracy.LEFT_END
    if right_vanishes:
        if tl <= 1e-8 * scale:
            raise AmbiguousCase(
                f"theta(0)={tl:g} does not satisfy the strict sign condition "
                "theta0(0) > 0 of the right-end factorization"
            )
        return DriftDegeneracy.RIGHT_END
    if tl <= 1e-8 * scale or tr >= -1e-8 * scale:
        raise AmbiguousCase(
            f"theta endpoint values ({tl:g}, {tr:g}) match no factorization: "
            "need theta(0) > 0 > theta(R) when theta vanishes at neither end"
        )
    return DriftDegeneracy.NO_END


def _quotient(numer_fn, r, at_left_limit, at_right_limit, R):
    """Evaluate a quotient function with exact-endpoint limits substituted."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    left = r <= 0.0
    right = r >= R
    mid = ~(left | right)
    if np.any(mid):
        out[mid] = numer_fn(r[mid])
    if np.any(left):
        out[left] = at_left_limit
    if np.any(right):
        out[right] = at_right_limit
    return out[0] if scalar else out


def factor_coefficients(spec: ProblemSpec) -> FactoredCoefficients:
    """Resolve w0, theta0 and the case's face coefficients a, b.

    Endpoint values of the quotients use one-sided limits computed from the
    supplied analytic derivatives (e.g. w0(0) = w'(0)/R).
    """
    case = spec.case_tag if spec.case_tag is not None else classify_case(spec)
    R = spec.R
    w, theta, lam, w_prime = spec.w, spec.theta, spec.lam, spec.w_prime

    w0_left = float(spec.w_prime(np.asarray(0.0))) / R
    w0_right = -float(spec.w_prime(np.asarray(R))) / R
    if w0_left <= 0.0 or w0_right <= 0.0:
        raise DegenerateFactor(
            f"w0 endpoint limits ({w0_left:g}, {w0_right:g}) must be positive"
        )

    def w0(r):
        return _quotient(lambda x: w(x) / (x * (R - x)), r, w0_left, w0_right, R)

    th0_left = float(spec.theta_prime(np.asarray(0.0)))
    th0_right = float(spec.theta_prime(np.asarray(R)))
    t_at_0 = float(spec.theta(np.asarray(0.0)))
    t_at_R = float(spec.theta(np.asarray(R)))

    if case is DriftDegeneracy.BOTH_ENDS:
        def theta0(r):
            return _quotient(lambda x: theta(x) / (x * (R - x)), r,
                             th0_left / R, -th0_right / R, R)

        def a(r):
            return 0.5 * w0(r) ** 2

        def wfac(r):  # r(R-r) w0 / m(r)
            return w0(r)

        weight_left = lambda r: np.asarray(r, dtype=float) + 0.0
        weight_right = lambda r: R - np.asarray(r, dtype=float)
    elif case is DriftDegeneracy.LEFT_END:
        def theta0(r):
            return _quotient(lambda x: theta(x) / x, r, th0_left, t_at_R / R, R)

        def a(r):
            return 0.5 * w0(r) ** 2 * (R - r)

        def wfac(r):
            return (R - r) * w0(r)

        weight_left = lambda r: np.asarray(r, dtype=float) + 0.0
        weight_right = lambda r: np.ones_like(np.asarray(r, dtype=float))
    elif case is DriftDegeneracy.RIGHT_END:
        def theta0(r):
            return _quotient(lambda x: theta(x) / (R - x), r, t_at_0 / R, -th0_right, R)

        def a(r):
            return 0.5 * w0(r) ** 2 * r

        def wfac(r):
            return r * w0(r)

        weight_left = lambda r: np.ones_like(np.asarray(r, dtype=float))
        weight_right = lambda r: R - np.asarray(r, dtype=float)
    else:
        theta0 = lambda r: theta(r)

        def a(r):
            return 0.5 * w0(r) ** 2 * r * (R - r)

        def wfac(r):
            return w(r)

        weight_left = lambda r: np.ones_like(np.asarray(r, dtype=float))
        weight_right = lambda r: np.ones_like(np.asarray(r, dtype=float))

    def b(r, t):
        return theta0(r) + (lam(t) - w_prime(r)) * wfac(r)

    # w0 must stay bounded away from zero on the whole interval
    probe = np.linspace(0.0, R, 257)
    w0_min = float(np.min(w0(probe)))
    if w0_min <= 0.0:
        raise DegenerateFactor(f"w0 has non-positive values (min {w0_min:g})")

    return FactoredCoefficients(
        case=case, R=R, w0=w0, theta0=theta0, a=a, b=b,
        weight_left=weight_left, weight_right=weight_right,
    )


def reaction_coefficient(spec: ProblemSpec) -> Fn2:
    """Zeroth-order coefficient of the conservative form:
    q(r, t) = r + theta'(r) + lambda(t) w'(r) - (ww')'(r)."""

    def q(r, t):
        return r + spec.theta_prime(r) + spec.lam(t) * spec.w_prime(r) - spec.ww_prime_prime(r)

    return q


def manufactured_forcing(spec: ProblemSpec, exact: ExactSolution) -> Fn2:
    """Right-hand side that makes `exact.u` solve the pricing equation."""

    def f(r, t):
        wv = spec.w(r)
        return (
            exact.u_t(r, t)
            - 0.5 * wv * wv * exact.u_rr(r, t)
            - (spec.theta(r) + spec.lam(t) * wv) * exact.u_r(r, t)
            + r * exact.u(r, t)
        )

    return f


def with_manufactured_solution(spec: ProblemSpec, exact: ExactSolution) -> ProblemSpec:
    """Attach an exact solution: derives the forcing and the initial data."""
    return replace(
        spec,
        exact=exact,
        forcing=manufactured_forcing(spec, exact),
        initial=lambda r: exact.u(r, 0.0),
    )


def validate_problem(spec: ProblemSpec, samples: int = 257) -> None:
    """Check the admissibility assumptions on w and theta.

    Raises ValidationError on violation; also checks that a declared
    case_tag is consistent with the sampled endpoint behavior.
    """
    R = spec.R
    if R <= 0:
        raise ValidationError("R", "must be positive")
    if spec.T < 0:
        raise ValidationError("T", "must be non-negative")
    w_scale = max(float(np.max(np.abs(spec.w(np.linspace(0, R, 33))))), 1e-300)
    if abs(float(spec.w(np.asarray(0.0)))) > 1e-12 * w_scale:
        raise ValidationError("w", "w(0) must vanish")
    if abs(float(spec.w(np.asarray(R)))) > 1e-12 * w_scale:
        raise ValidationError("w", "w(R) must vanish")
    interior = np.linspace(0, R, samples)[1:-1]
    if np.any(spec.w(interior) <= 0):
        raise ValidationError("w", "w must be positive on (0, R)")
    th_scale = _theta_scale(spec)
    if float(spec.theta(np.asarray(0.0))) < -1e-12 * th_scale:
        raise ValidationError("theta", "theta(0) must be >= 0")
    if float(spec.theta(np.asarray(R))) > 1e-12 * th_scale:
        raise ValidationError("theta", "theta(R) must be <= 0")
    if spec.case_tag is not None:
        inferred = classify_case(spec)
        if inferred is not spec.case_tag:
            raise ValidationError(
                "case_tag",
                f"declared {spec.case_tag.value!r} but sampled quotients give {inferred.value!r}",
            )
    if spec.exact is not None and spec.forcing is None:
        raise ValidationError("forcing", "an exact solution requires the derived forcing")


# --- built-in problems -------------------------------------------------------

def _exp_decay_solution() -> ExactSolution:
    """u(r, t) = exp(-r - t), the standard verification solution."""
    u = lambda r, t: np.exp(-r - t)
    return ExactSolution(
        u=u,
        u_t=lambda r, t: -np.exp(-r - t),
        u_r=lambda r, t: -np.exp(-r - t),
        u_rr=lambda r, t: np.exp(-r - t),
    )


def _base_example(theta, theta_prime, case, label) -> ProblemSpec:
    R = 1.0
    return ProblemSpec(
        R=R,
        T=1.0,
        w=lambda r: r * (R - r),
        w_prime=lambda r: R - 2.0 * r,
        # (w w')' for w = r(R-r): d/dr [r(R-r)(R-2r)]
        ww_prime_prime=lambda r: R * R - 6.0 * R * r + 6.0 * r * r,
        theta=theta,
        theta_prime=theta_prime,
        lam=lambda t: 0.25 / (1.0 + t * t),
        initial=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        case_tag=case,
        label=label,
    )


def example_problem(problem_id: str, manufactured: bool = True, payoff: float = 1.0) -> ProblemSpec:
    """Built-in problems; all use R = T = 1, lambda(t) = 0.25/(1+t^2),
    w = r(1-r).  The drift distinguishes them:

    example1: theta = r(1-r)          (vanishes at both ends)
    example2: theta = r(1-r)(0.5-r)   (vanishes at both ends)
    example3: theta = 0.5 - r         (vanishes at neither end)

    manufactured=True attaches u = exp(-r-t) with its forcing; otherwise
    the initial condition is the constant bond payoff.
    """
    if problem_id == "example1":
        spec = _base_example(
            theta=lambda r: r * (1.0 - r),
            theta_prime=lambda r: 1.0 - 2.0 * r,
            case=DriftDegeneracy.BOTH_ENDS,
            label="example1",
        )
    elif problem_id == "example2":
        spec = _base_example(
            theta=lambda r: r * (1.0 - r) * (0.5 - r),
            theta_prime=lambda r: 0.5 - 3.0 * r + 3.0 * r * r,
            case=DriftDegeneracy.BOTH_ENDS,
            label="example2",
        )
    elif problem_id == "example3":
        spec = _base_example(
            theta=lambda r: 0.5 - r,
            theta_prime=lambda r: -np.ones_like(np.asarray(r, dtype=float)),
            case=DriftDegeneracy.NO_END,
            label="example3",
        )
    else:
        raise ValidationError("problem", f"unknown problem id {problem_id!r}")
    if manufactured:
        return with_manufactured_solution(spec, _exp_decay_solution())
    if payoff != 1.0:
        spec = replace(spec, initial=lambda r: payoff * np.ones_like(np.asarray(r, dtype=float)))
    return spec


BUILTIN_PROBLEMS = ("example1", "example2", "example3")
