"""Termination of the Beta-series families and the resulting closed forms.

A terminated series is a finite Beta sum, which reduces to

    u = A * u_0 + phi(z) * u_0',   u_0 = B_z(gamma0, delta0),

with ``phi`` a polynomial.  This follows from ``u_n' = z**n u_0'`` and the
step-up recurrence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from .che_core import CheParams, residual_report
from .errors import (
    ConstraintViolation,
    ConvergenceError,
    NotTerminating,
    StepBreakdown,
    UnsupportedFamily,
)
from .expansions import (
    EQ_TOL,
    BetaSeries,
    Family,
    _raw_coeffs,
    build_series,
    check_family,
)
from .special_functions import inc_beta, inc_beta_derivative, nonpositive_integer

__all__ = [
    "TerminationCondition",
    "SigmaPolynomial",
    "FiniteBetaSum",
    "ElementarySolution",
    "DSolution",
    "detect_termination",
    "termination_delta",
    "sigma_polynomial",
    "poly_roots",
    "closed_form_solution",
    "solve_family_d",
    "family_a_crossref",
    "reduce_to_elementary",
]

RELATIONS = {
    Family.A: "gamma+delta-2=N",
    Family.B: "gamma+delta-alpha-1=N",
    Family.C: "gamma+delta-alpha-1=N",
    Family.D: "delta0=gamma-2-N",
}


class TerminationCondition(NamedTuple):
    family: Family
    N: int
    relation: str
    residual: float


@dataclass(frozen=True)
class SigmaPolynomial:
    """Condition ``Q_{N+1} a_N + P_{N+1} a_{N-1} = 0`` as a polynomial in sigma.

    ``coeffs`` are ascending and normalised to a monic polynomial.  For
    family B sigma does not enter, so ``coeffs`` holds the single scalar that
    must vanish.  ``condition_value`` is the unnormalised condition at the
    sigma implied by the input parameters (``4 p alpha`` for family C).
    """

    family: Family
    N: int
    coeffs: np.ndarray
    delta: complex
    condition_value: complex

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def scalar(self):
        return self.degree == 0

    def __call__(self, sigma):
        return npoly.polyval(complex(sigma), self.coeffs)


@dataclass(frozen=True)
class FiniteBetaSum:
    series: BetaSeries

    def __post_init__(self):
        if not self.series.terminated:
            raise NotTerminating("series is not terminated")
        if self.series.coeffs[-1] == 0:
            raise NotTerminating("last coefficient vanishes")

    @property
    def N(self):
        return len(self.series.coeffs) - 1

    @property
    def coeffs(self):
        return self.series.coeffs

    @property
    def params(self):
        return self.series.params

    def evaluate(self, z):
        return self.series.evaluate(z)

    def evaluate_with_derivatives(self, z):
        return self.series.evaluate_with_derivatives(z)


@dataclass(frozen=True)
class ElementarySolution:
    """``u = A_const * B_z(gamma0, delta0) + phi(z) * z**(gamma0-1) (1-z)**(delta0-1)``.

    ``phi`` always carries the factor ``z - 1``; ``chi = phi / (z - 1)`` is kept
    so evaluation near ``z = 1`` does not depend on that factor surviving rounding.
    """

    A_const: complex
    phi: np.ndarray
    gamma0: complex
    delta0: complex
    chi: Optional[np.ndarray] = None

    @property
    def u0_polynomial(self):
        """Polynomial factor of ``u_0`` when it is elementary, else None.

        With ``gamma0 + delta0 = -m`` one has
        ``u_0 = z**gamma0 (1-z)**delta0 / gamma0 * sum_k (-m)_k/(1+gamma0)_k z**k``.
        """
        m = nonpositive_integer(self.gamma0 + self.delta0)
        if m is None:
            return None
        out = [1.0 + 0j]
        for k in range(m):
            out.append(out[-1] * (k - m) / (1 + self.gamma0 + k))
        return np.array(out)

    @property
    def fully_elementary(self):
        return abs(self.A_const) <= EQ_TOL or self.u0_polynomial is not None

    def evaluate(self, z):
        z = complex(z)
        if z == 0:
            return 0j
        d0 = inc_beta_derivative(self.gamma0, self.delta0, z)
        u0 = inc_beta(self.gamma0, self.delta0, z)
        if self.chi is not None:
            return self.A_const * u0 + (z - 1) * npoly.polyval(z, self.chi) * d0
        return self.A_const * u0 + npoly.polyval(z, self.phi) * d0


class DSolution(NamedTuple):
    delta: complex
    sigma: complex


def termination_delta(family, params, N):
    """The ``delta`` that makes ``family`` terminate at ``N``."""
    family = Family(family)
    if family is Family.A:
        return 2 - params.gamma + N
    if family in (Family.B, Family.C):
        return 1 - params.gamma + params.alpha + N
    raise UnsupportedFamily(f"no delta relation for family {family.value}")


def detect_termination(params, family, N_max, delta0=None, tol=EQ_TOL):
    """Smallest ``N <= N_max`` whose right-hand termination relation holds."""
    family = Family(family)
    check_family(family, params)
    if family is Family.E:
        return None
    if family is Family.A:
        r = params.gamma + params.delta - 2
    elif family in (Family.B, Family.C):
        r = params.gamma + params.delta - params.alpha - 1
    else:
        if delta0 is None:
            raise ValueError("family D needs delta0 to detect termination")
        r = params.gamma - 2 - complex(delta0)
    for N in range(N_max + 1):
        res = abs(r - N)
        if res < tol:
            return TerminationCondition(family, N, RELATIONS[family], float(res))
    return None


def sigma_polynomial(params, family, N):
    """Termination condition for families A, B, C at ``N``.

    ``delta`` is set from the family relation; for A and C sigma is treated as
    an unknown and the coefficients ``a_n(sigma)`` are propagated exactly as
    polynomials, giving a polynomial of degree ``N + 1``.
    """
    family = Family(family)
    if family in (Family.D, Family.E):
        raise UnsupportedFamily(
            "family D has a two-equation condition (use solve_family_d); "
            "family E fixes sigma already" if family is Family.D else
            "family E fixes sigma through the pretransform"
        )
    if N < 0:
        raise ValueError("N must be non-negative")
    delta = termination_delta(family, params, N)
    pr = params.replace(delta=delta)
    delta0 = (-delta) if family is Family.C else 1 - delta
    if family is Family.B:
        sig = 0j
    else:
        sig = Polynomial([0, 1], domain=[-1, 1], window=[-1, 1])

    def coeffs(n):
        R, Q, P, _ = _raw_coeffs(family, pr.p, pr.alpha, pr.gamma, delta, sig, delta0, n)
        return R, Q, P

    a_prev2, a_prev = 0j, Polynomial([1.0 + 0j]) if family is not Family.B else 1.0 + 0j
    for n in range(1, N + 1):
        R, Q, P = coeffs(n)
        a_new = -(Q * a_prev + P * a_prev2) / R
        a_prev2, a_prev = a_prev, a_new
    _, Q, P = coeffs(N + 1)
    cond = Q * a_prev + P * a_prev2
    if family is Family.B:
        val = complex(cond)
        return SigmaPolynomial(family, N, np.array([val]), delta, val)
    raw = np.asarray(cond.coef, dtype=complex)
    raw = np.concatenate([raw, np.zeros(N + 2 - len(raw), dtype=complex)])[: N + 2]
    if raw[-1] == 0:
        raise ArithmeticError("sigma polynomial lost its leading coefficient")
    at = 4 * pr.p * pr.alpha if family is Family.C else pr.sigma
    return SigmaPolynomial(family, N, raw / raw[-1], delta, complex(npoly.polyval(at, raw)))


def _sort_key(x):
    x = complex(x)
    return (round(x.real, 10), round(x.imag, 10))


def poly_roots(coeffs, max_iter=1000, tol=1e-12):
    """All complex roots of ``sum_k coeffs[k] x**k``.

    Durand-Kerner simultaneous iteration followed by Newton polishing on the
    original coefficients.  Roots are sorted by real then imaginary part.
    """
    c = np.asarray(coeffs, dtype=complex)
    if len(c) < 2:
        raise ValueError("polynomial degree must be at least 1")
    if c[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    n = len(c) - 1
    monic = c / c[-1]
    if n == 1:
        return [complex(-monic[0])]
    # Fujiwara bound on root magnitude
    bound = 2 * max(abs(monic[n - k]) ** (1.0 / k) for k in range(1, n + 1))
    bound = max(bound, 1e-3)
    z = bound * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        biggest = 0.0
        for i in range(n):
            den = np.prod(z[i] - np.delete(z, i))
            if den == 0:
                den = 1e-300
            step = npoly.polyval(z[i], monic) / den
            z[i] -= step
            biggest = max(biggest, abs(step) / max(1.0, abs(z[i])))
        if biggest < 1e-15:
            break
    dc = npoly.polyder(c)
    roots = []
    for r in z:
        for _ in range(3):
            f, df = npoly.polyval(r, c), npoly.polyval(r, dc)
            if df == 0:
                break
            r2 = r - f / df
            if abs(npoly.polyval(r2, c)) < abs(f):
                r = r2
            else:
                break
        scale = float(np.sum(np.abs(c) * np.abs(r) ** np.arange(n + 1)))
        # the evaluation scale degenerates at an exact zero root; fall back to the coefficients
        scale = max(scale, float(np.max(np.abs(c))) * np.finfo(float).eps)
        if abs(npoly.polyval(r, c)) > tol * scale:
            raise ConvergenceError(f"root {r} did not converge (|p| = {abs(npoly.polyval(r, c))})")
        roots.append(complex(r))
    return sorted(roots, key=_sort_key)


def closed_form_solution(params, family, N):
    """The finite Beta sum obtained when ``family`` terminates at ``N``."""
    family = Family(family)
    if family is Family.E:
        raise UnsupportedFamily("family E series do not terminate")
    delta0 = None
    if family is Family.D:
        delta0 = params.gamma - 2 - N
    else:
        want = termination_delta(family, params, N)
        if abs(params.delta - want) > EQ_TOL:
            raise NotTerminating(f"{RELATIONS[family]} fails for N={N}: need delta = {want}")
    series = build_series(family, params, delta0_override=delta0, max_terms=N + 8)
    if not series.terminated or len(series.coeffs) != N + 1:
        got = f"N={series.N}" if series.terminated else "no termination"
        raise NotTerminating(f"family {family.value} series does not terminate at N={N} ({got})")
    return FiniteBetaSum(series)


def _d_conditions(params, N, delta, sigma):
    delta0 = params.gamma - 2 - N
    pr = params

    def co(n):
        return _raw_coeffs(Family.D, pr.p, 0j, pr.gamma, delta, sigma, delta0, n)

    a = {-3: 0j, -2: 0j, -1: 0j, 0: 1.0 + 0j}
    for n in range(1, N + 1):
        R, Q, P, L = co(n)
        a[n] = -(Q * a[n - 1] + P * a[n - 2] + L * a[n - 3]) / R
    _, Q, P, L = co(N + 1)
    f1 = Q * a[N] + P * a[N - 1] + L * a[N - 2]
    _, _, P, L = co(N + 2)
    f2 = P * a[N] + L * a[N - 1]
    return np.array([f1, f2])


def _newton2(fun, x, max_iter=100):
    x = np.array(x, dtype=complex)
    for _ in range(max_iter):
        f = fun(x)
        J = np.empty((2, 2), dtype=complex)
        for j in range(2):
            h = 1e-6 * max(1.0, abs(x[j]))
            e = np.zeros(2, dtype=complex)
            e[j] = h
            J[:, j] = (fun(x + e) - fun(x - e)) / (2 * h)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if not np.all(np.isfinite(x)):
            return None
        if np.max(np.abs(dx) / np.maximum(1.0, np.abs(x))) < 1e-14:
            return x
    return None


def solve_family_d(params, N, n_random=20, seed=0):
    """``(delta, sigma)`` pairs terminating the four-term series at ``N``.

    The two closing conditions are polynomial in ``(delta, sigma)``.  They
    are solved by Newton iteration seeded from family A termination points
    for ``N' = 0 .. N+2`` plus ``n_random`` random complex seeds; every
    returned pair is confirmed by rebuilding the series and checking that it
    terminates with ``N + 1`` coefficients and solves the equation.
    """
    if abs(params.alpha) > EQ_TOL:
        raise ConstraintViolation("family D: alpha = 0 required")
    g = params.gamma
    seeds = []
    for Np in range(N + 3):
        d = 2 - g + Np
        try:
            sp = sigma_polynomial(params.replace(alpha=0j), Family.A, Np)
            for r in poly_roots(sp.coeffs):
                seeds.append((d, r))
        except ConvergenceError:
            pass
    rng = np.random.default_rng(seed)
    scale = 1 + 4 * abs(params.p) + abs(g)
    for _ in range(n_random):
        d = 2 - g + (N + 1) * (rng.normal() + 1j * rng.normal())
        s = scale * (N + 1) * (rng.normal() + 1j * rng.normal())
        seeds.append((d, s))

    def fun(x):
        return _d_conditions(params, N, x[0], x[1])

    found = []
    for seed_pt in seeds:
        x = _newton2(fun, seed_pt)
        if x is None:
            continue
        if any(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y))) < 1e-8 for y in found):
            continue
        found.append(x)

    out = []
    for delta, sigma in found:
        pr = params.replace(delta=delta, sigma=sigma)
        try:
            series = build_series(Family.D, pr, delta0_override=g - 2 - N, max_terms=N + 8)
        except ArithmeticError:
            continue
        if not series.terminated or len(series.coeffs) != N + 1 or series.coeffs[-1] == 0:
            continue
        if residual_report(series).normalized > 1e-9:
            continue
        out.append(DSolution(complex(delta), complex(sigma)))
    return sorted(out, key=lambda s: _sort_key(s.delta) + _sort_key(s.sigma))


def family_a_crossref(params, delta, sigma, N_max, tol=1e-8):
    """``N'`` such that ``(delta, sigma)`` terminates the family A series, else None."""
    pr = params.replace(delta=delta, sigma=sigma)
    r = pr.gamma + pr.delta - 2
    for Np in range(N_max + 1):
        if abs(r - Np) < tol:
            try:
                series = build_series(Family.A, pr, max_terms=Np + 8)
            except ArithmeticError:
                return None
            if series.terminated and len(series.coeffs) == Np + 1:
                return Np
            return None
    return None


def reduce_to_elementary(finite_sum):
    """Rewrite a finite Beta sum as ``A u_0 + phi(z) u_0'``.

    Uses ``u_{n+1} = (g_n u_n + z**(n+1) (z-1) u_0') / (g_n + delta0)`` with
    ``g_n = gamma0 + n``, tracking ``u_n = c_n u_0 + (z - 1) chi_n(z) u_0'``
    so that ``chi_{n+1} = (g_n chi_n + z**(n+1)) / (g_n + delta0)``.
    """
    series = finite_sum.series if isinstance(finite_sum, FiniteBetaSum) else finite_sum
    if series.s != 0:
        raise UnsupportedFamily("exponentially transformed sums are not reduced")
    a = np.asarray(series.coeffs, dtype=complex)
    if series.mode == "difference":
        b = np.concatenate([a, [0j]]) - np.concatenate([[0j], a])
    else:
        b = a
    g0, d0 = series.gamma0, series.delta0
    # u_n = c_n u_0 + (z - 1) chi_n(z) u_0'
    c = 1.0 + 0j
    chi = np.zeros(1, dtype=complex)
    A = b[0] * c
    chi_sum = b[0] * chi
    for n in range(len(b) - 1):
        gn = g0 + n
        den = gn + d0
        if abs(den) <= 1e-12 * max(1.0, abs(gn)):
            raise StepBreakdown(f"gamma0 + {n} + delta0 = 0: cannot step to u_{n + 1}")
        zpow = np.zeros(n + 2, dtype=complex)
        zpow[n + 1] = 1
        c = gn * c / den
        chi = npoly.polyadd(gn * chi, zpow) / den
        A += b[n + 1] * c
        chi_sum = npoly.polyadd(chi_sum, b[n + 1] * chi)
    chi_sum = np.trim_zeros(chi_sum, "b") if np.any(chi_sum) else np.zeros(1, complex)
    phi = npoly.polymul([-1, 1], chi_sum)
    phi = np.trim_zeros(phi, "b") if np.any(phi) else np.zeros(1, complex)
    return ElementarySolution(complex(A), phi, g0, d0, chi_sum)
