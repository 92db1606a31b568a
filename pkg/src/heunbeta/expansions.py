"""Incomplete-Beta series solutions of the confluent Heun equation.

A solution is written as ``u = exp(s z) * sum_n a_n w_n(z)`` where the
expansion functions are ``u_n = B_z(gamma0 + n, delta0)`` (single mode) or
``u_n - u_{n+1}`` (difference mode).  Five families are supported:

=====  ===============  ==========  ===================  ==========
tag    constraint       mode        delta0               recurrence
=====  ===============  ==========  ===================  ==========
A      alpha = 0        single      1 - delta            3-term
B      sigma = 0        single      1 - delta            3-term
C      sigma = 4 p alpha difference -delta               3-term
D      alpha = 0        difference  free (gamma - 2 - N) 4-term
E      B = A, C = 0     single      1 - delta            4-term
=====  ===============  ==========  ===================  ==========

Every family starts from ``a_0 = 1`` with ``gamma0 = 1 - gamma``.  Family E
multiplies the Beta series by ``exp(s z)`` with ``s = -sigma/gamma``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .che_core import CheParams
from .errors import ConstraintViolation, DomainError, PivotBreakdown, UnsupportedFamily
from .special_functions import beta_ladder

__all__ = [
    "EQ_TOL",
    "ZERO_TOL",
    "Family",
    "BetaSeries",
    "RecurrenceCoeffs",
    "SeriesValue",
    "Diagnostics",
    "check_family",
    "default_delta0",
    "recurrence_coeffs",
    "build_series",
    "derive_family_e",
    "family_e_coeffs",
    "evaluate",
    "evaluate_with_derivatives",
    "convergence_diagnostics",
]

EQ_TOL = 1e-12
# coefficients below ZERO_TOL * max|a_k| count as vanished when detecting termination
ZERO_TOL = 1e-12
DEFAULT_MAX_TERMS = 2000
DEFAULT_TAIL_TOL = 1e-14


class Family(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"

    @property
    def mode(self):
        return "difference" if self in (Family.C, Family.D) else "single"

    @property
    def order(self):
        """Number of previous coefficients entering the recurrence."""
        return 3 if self in (Family.D, Family.E) else 2


class RecurrenceCoeffs(NamedTuple):
    R: complex
    Q: complex
    P: complex
    L: Optional[complex] = None


class SeriesValue(NamedTuple):
    value: complex
    tail_bound: float
    terms: int


class Diagnostics(NamedTuple):
    coeff_ratio_tail: np.ndarray
    term_ratio_tail: np.ndarray
    estimated_limit: float


@dataclass(frozen=True, eq=False)
class BetaSeries:
    family: Family
    params: CheParams
    gamma0: complex
    delta0: complex
    s: complex
    mode: str
    coeffs: np.ndarray
    terminated: bool
    tail_tol: float = DEFAULT_TAIL_TOL

    @property
    def N(self):
        """Index of the last coefficient of a terminated series."""
        return len(self.coeffs) - 1 if self.terminated else None

    def evaluate(self, z):
        return evaluate(self, z)

    def evaluate_with_derivatives(self, z):
        return evaluate_with_derivatives(self, z)

    def truncated(self, m):
        """Copy keeping the first ``m`` coefficients (marked non-terminated)."""
        return BetaSeries(
            self.family, self.params, self.gamma0, self.delta0, self.s, self.mode,
            self.coeffs[:m].copy(), False, 0.0,
        )


def _family(family):
    try:
        return Family(family)
    except ValueError:
        raise UnsupportedFamily(f"unknown family {family!r}") from None


def check_family(family, params, tol=EQ_TOL):
    """Raise ConstraintViolation unless ``params`` fit ``family``."""
    family = _family(family)
    if family in (Family.A, Family.D):
        if abs(params.alpha) > tol:
            raise ConstraintViolation(f"family {family.value}: alpha = 0 required (alpha = {params.alpha})")
    elif family is Family.B:
        if abs(params.sigma) > tol:
            raise ConstraintViolation(f"family B: sigma = 0 required (sigma = {params.sigma})")
    elif family is Family.C:
        gap = params.sigma - 4 * params.p * params.alpha
        if abs(gap) > tol:
            raise ConstraintViolation(f"family C: sigma = 4*p*alpha required (gap = {gap})")
    else:
        g, p, a, d, sig = params.gamma, params.p, params.alpha, params.delta, params.sigma
        b = g * (-4 * p + g + d)
        c = -4 * p * a * g * g
        val = sig * sig + b * sig + c
        if abs(val) > tol * max(1.0, abs(sig) ** 2, abs(b * sig), abs(c)):
            raise ConstraintViolation(
                "family E: sigma must solve sigma^2 + gamma(-4p+gamma+delta) sigma"
                f" - 4 p alpha gamma^2 = 0 (value {val})"
            )


def default_delta0(family, params, N_hint=0):
    family = _family(family)
    if family is Family.C:
        return -params.delta
    if family is Family.D:
        return params.gamma - 2 - N_hint
    return 1 - params.delta


def _raw_coeffs(family, p, alpha, gamma, delta, sigma, delta0, n):
    # plain arithmetic so sigma may be a numpy Polynomial
    def g(k):
        return 1 - gamma + k

    if family is Family.A:
        R = (gamma - 1 + g(n)) * g(n - 1)
        Q = 4 * p * g(n - 1) - (gamma - 1 + g(n - 1)) * (g(n - 2) + delta0) + sigma
        P = -4 * p * (g(n - 2) + delta0)
        return R, Q, P, None
    if family is Family.B:
        R = (gamma - 1 + g(n)) * g(n - 2)
        Q = 4 * p * g(n - 2) - (gamma - 1 + g(n - 1)) * (g(n - 3) + delta0)
        P = -4 * p * (g(n - 3) + delta0) - 4 * p * alpha
        return R, Q, P, None
    if family is Family.C:
        R = (gamma - 1 + g(n)) * g(n - 1)
        Q = -(gamma - 1 + g(n - 1)) * (g(n - 2) + delta0) + sigma + 4 * p * g(n - 1)
        P = -4 * p * (g(n - 2) + delta0) - sigma
        return R, Q, P, None
    if family is Family.D:
        e = gamma + delta - 2 + delta0
        R = (gamma - 1 + g(n)) * g(n - 1)
        Q = (4 * p * g(n - 1) - (gamma - 1 + g(n - 1)) * (g(n - 2) + delta0)
             - (e + g(n)) * g(n - 1) + sigma)
        P = (-4 * p * (g(n - 2) + delta0) - 4 * p * g(n - 1)
             + (e + g(n - 1)) * (g(n - 2) + delta0) - sigma)
        L = 4 * p * (g(n - 2) + delta0)
        return R, Q, P, L
    raise UnsupportedFamily("family E coefficients come from family_e_coeffs")


def recurrence_coeffs(family, params, delta0, n):
    """``R_n, Q_n, P_n`` (and ``L_n`` for D) of the family recurrence.

    ``R_n a_n + Q_n a_{n-1} + P_n a_{n-2} [+ L_n a_{n-3}] = 0``.
    """
    family = _family(family)
    if family is Family.E:
        raise UnsupportedFamily("use family_e_coeffs for family E")
    pr = params
    return RecurrenceCoeffs(*_raw_coeffs(
        family, pr.p, pr.alpha, pr.gamma, pr.delta, pr.sigma, complex(delta0), n))


def family_e_coeffs(params, s, delta0, n):
    """Four-term recurrence for the Beta series of ``v = exp(-s z) u``.

    With ``q = 2s + 4p`` and ``A = s(s + 4p)``, substituting
    ``v_n' = z**2 v_{n-2}'`` and applying the step-up identities gives

        R_n = -(gamma - 1 + g_n) g_{n-3}
        Q_n = -q g_{n-3} + (gamma - 1 + g_{n-1})(g_{n-4} + delta0)
        P_n = q (g_{n-4} + delta0)
        L_n = A

    where ``g_k = 1 - gamma + k``.
    """
    gamma = params.gamma

    def g(k):
        return 1 - gamma + k

    q = 2 * s + 4 * params.p
    A = s * (s + 4 * params.p)
    R = -(gamma - 1 + g(n)) * g(n - 3)
    Q = -q * g(n - 3) + (gamma - 1 + g(n - 1)) * (g(n - 4) + delta0)
    P = q * (g(n - 4) + delta0)
    return RecurrenceCoeffs(R, Q, P, A)


def _closes(coeff_fn, a, order, tol=1e-10):
    """True when the recurrence rows past ``a[-1]`` vanish with the tail set to zero."""
    N = len(a) - 1
    for n in range(N + 1, N + order + 1):
        R, Q, P, L = coeff_fn(n)
        c = (Q, P, L)[:order]
        prev = [a[n - k] if 0 <= n - k <= N else 0j for k in range(1, order + 1)]
        r = sum(ck * ak for ck, ak in zip(c, prev))
        scale = sum(abs(ck * ak) for ck, ak in zip(c, prev)) + abs(R) * max(abs(x) for x in prev)
        if abs(r) > tol * scale:
            return False
    return True


def _generate(coeff_fn, order, max_terms):
    """Forward recurrence from ``a_0 = 1``; returns (coeffs, terminated)."""
    a = [1.0 + 0j]
    peak = 1.0
    zeros = 0
    for n in range(1, max_terms):
        R, Q, P, L = coeff_fn(n)
        if abs(R) <= 1e-14 * max(1.0, abs(Q), abs(P)):
            raise PivotBreakdown(f"R_{n} = 0: recurrence cannot be solved for a_{n}")
        acc = Q * a[n - 1] + (P * a[n - 2] if n >= 2 else 0)
        if order == 3 and n >= 3:
            acc += L * a[n - 3]
        an = -acc / R
        a.append(an)
        zeros = zeros + 1 if abs(an) <= ZERO_TOL * peak else 0
        peak = max(peak, abs(an))
        if zeros == order and _closes(coeff_fn, a[: n - order + 1], order):
            return np.array(a[: n - order + 1], dtype=complex), True
    return np.array(a, dtype=complex), False


def _check_gamma(params):
    if abs(params.gamma - 1) <= EQ_TOL:
        raise PivotBreakdown("gamma = 1: leading coefficients vanish")
    if params.gamma.real >= 1:
        raise DomainError(f"Beta expansions need Re(gamma) < 1, got gamma = {params.gamma}")


def build_series(family, params, delta0_override=None, max_terms=DEFAULT_MAX_TERMS,
                 tail_tol=DEFAULT_TAIL_TOL, eq_tol=EQ_TOL):
    """Generate the coefficients of a family expansion.

    Generation stops early (``terminated=True``) once two consecutive
    coefficients vanish for three-term families, three for four-term ones;
    otherwise ``max_terms`` coefficients are kept.
    """
    family = _family(family)
    if family is Family.E:
        return derive_family_e(params, max_terms=max_terms, tail_tol=tail_tol, eq_tol=eq_tol)
    check_family(family, params, eq_tol)
    _check_gamma(params)
    if delta0_override is not None and family is not Family.D:
        raise ConstraintViolation(f"delta0 is fixed for family {family.value}")
    delta0 = complex(delta0_override) if delta0_override is not None else default_delta0(family, params)
    pr = params

    def coeff_fn(n):
        return _raw_coeffs(family, pr.p, pr.alpha, pr.gamma, pr.delta, pr.sigma, delta0, n)

    coeffs, terminated = _generate(coeff_fn, family.order, max_terms)
    return BetaSeries(family, params, 1 - params.gamma, delta0, 0j, family.mode,
                      coeffs, terminated, tail_tol)


def derive_family_e(params, max_terms=DEFAULT_MAX_TERMS, tail_tol=DEFAULT_TAIL_TOL, eq_tol=EQ_TOL):
    """Series for the branch where the pretransform leaves ``A z**2`` as the
    potential term (``B = A``, ``C = 0``)."""
    check_family(Family.E, params, eq_tol)
    _check_gamma(params)
    s = -params.sigma / params.gamma
    delta0 = 1 - params.delta

    def coeff_fn(n):
        return family_e_coeffs(params, s, delta0, n)

    coeffs, terminated = _generate(coeff_fn, 3, max_terms)
    return BetaSeries(Family.E, params, 1 - params.gamma, delta0, s, "single",
                      coeffs, terminated, tail_tol)


def _check_domain(series, z):
    if abs(z) < 1:
        return
    if z == 1 and series.delta0.real > 0:
        return
    raise DomainError(f"z = {z} outside the convergence region |z| < 1")


def _terms_needed(series, z):
    n = len(series.coeffs)
    if series.terminated or series.tail_tol <= 0:
        return n
    r = abs(z)
    if r >= 1:
        return n
    if r < 1e-300:
        return 1
    est = int(math.log(series.tail_tol * 1e-2) / math.log(r)) + 20
    return max(1, min(n, est))


def _sum_terms(series, z, m):
    """Partial sum over the first ``m`` coefficients and the last term."""
    a = series.coeffs[:m]
    extra = 1 if series.mode == "difference" else 0
    u, d0 = beta_ladder(series.gamma0, series.delta0, z, m + extra)
    w = u[:m] - u[1:m + 1] if extra else u
    terms = a * w
    return terms.sum(), terms, d0


def _summed(series, z):
    z = complex(z)
    _check_domain(series, z)
    n = len(series.coeffs)
    m = _terms_needed(series, z)
    while True:
        total, terms, d0 = _sum_terms(series, z, m)
        if series.terminated:
            bound = 0.0
        elif abs(z) >= 1:
            bound = math.inf
        else:
            bound = float(abs(terms[-1]) * abs(z) / (1 - abs(z)))
        if m >= n or bound <= series.tail_tol * max(abs(total), 1e-300):
            return total, bound, m, d0
        m = min(n, 2 * m)


def evaluate(series, z, return_bound=False):
    """Value of the series at ``z`` (times ``exp(s z)`` for family E).

    With ``return_bound`` a :class:`SeriesValue` carrying the geometric tail
    estimate ``|a_M w_M| |z| / (1 - |z|)`` is returned instead.
    """
    z = complex(z)
    if z == 0:
        _check_domain(series, z)
        return SeriesValue(0j, 0.0, 0) if return_bound else 0j
    total, bound, m, _ = _summed(series, z)
    if series.s != 0:
        e = np.exp(series.s * z)
        total, bound = total * e, bound * abs(e)
    total = complex(total)
    return SeriesValue(total, bound, m) if return_bound else total


def evaluate_with_derivatives(series, z):
    """``(u, u', u'')`` with analytic derivatives.

    Uses ``u_n' = z**n u_0'`` so the derivative sums collapse to a polynomial
    in ``z`` times ``u_0' = z**(gamma0-1) (1-z)**(delta0-1)``.
    """
    z = complex(z)
    if z == 0 or z == 1:
        raise DomainError("derivatives are singular at z = 0 and z = 1")
    v, _, m, d0 = _summed(series, z)
    a = series.coeffs[:m]
    # d0'/d0
    logd = (series.gamma0 - 1) / z - (series.delta0 - 1) / (1 - z)
    pz = npoly.polyval(z, a)
    dpz = npoly.polyval(z, npoly.polyder(a)) if m > 1 else 0j
    if series.mode == "difference":
        dv = d0 * (1 - z) * pz
        d2v = d0 * (logd * (1 - z) * pz - pz + (1 - z) * dpz)
    else:
        dv = d0 * pz
        d2v = d0 * (logd * pz + dpz)
    if series.s == 0:
        return complex(v), complex(dv), complex(d2v)
    s = series.s
    e = np.exp(s * z)
    return complex(e * v), complex(e * (dv + s * v)), complex(e * (d2v + 2 * s * dv + s * s * v))


def convergence_diagnostics(series, z, tail=20):
    """Coefficient ratios ``a_{n+1}/a_n`` and expansion-function ratios
    ``|w_{n+1}/w_n|`` over the last ``tail`` indices."""
    if series.terminated:
        empty = np.array([], dtype=complex)
        return Diagnostics(empty, np.array([]), math.nan)
    a = series.coeffs
    n = len(a)
    k = min(tail, n - 1)
    ratios = a[n - k:] / a[n - k - 1:n - 1]
    z = complex(z)
    extra = 1 if series.mode == "difference" else 0
    u, _ = beta_ladder(series.gamma0, series.delta0, z, n + extra)
    w = u[:n] - u[1:n + 1] if extra else u
    with np.errstate(divide="ignore", invalid="ignore"):
        # far tails can underflow to zero; report nan there
        term_ratios = np.abs(w[n - k:] / w[n - k - 1:n - 1])
    return Diagnostics(ratios, term_ratios, float(abs(ratios[-1])))
