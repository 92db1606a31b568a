"""Incomplete Beta function and the pieces of 2F1 it needs.

Everything here works on Python ``complex`` scalars, with principal branches
for ``z**a`` and ``(1 - z)**b``.  The incomplete Beta function is evaluated
through

    B_z(a, b) = z**a (1 - z)**b / a * 2F1(1, a + b; 1 + a; z),

using the power series for |z| <= R_SWITCH and Gauss' continued fraction
beyond it.
"""

from __future__ import annotations

import cmath

import numpy as np
from scipy.special import loggamma

from .errors import ConvergenceError, DomainError

__all__ = [
    "R_SWITCH",
    "MAX_ITER",
    "REL_STOP",
    "INT_TOL",
    "gauss_2f1_row1",
    "inc_beta",
    "inc_beta_derivative",
    "beta_step_up",
    "beta_ladder",
    "nonpositive_integer",
]

R_SWITCH = 0.75
MAX_ITER = 10_000
REL_STOP = 1e-15
INT_TOL = 1e-12

_TINY = 1e-300


def nonpositive_integer(x, tol=INT_TOL):
    """Return ``m >= 0`` when ``x`` lies within ``tol`` of ``-m``, else None."""
    x = complex(x)
    if abs(x.imag) > tol:
        return None
    m = round(-x.real)
    if m >= 0 and abs(x.real + m) <= tol:
        return int(m)
    return None


def _cf_coeff(j, beta, cm1):
    # Gauss continued fraction for 2F1(1, beta; cm1 + 1; z); cm1 = c - 1
    if j == 1:
        return beta / (cm1 + 1)
    m, odd = divmod(j, 2)
    if odd:
        return (beta + m) * (cm1 + m) / ((cm1 + 2 * m) * (cm1 + 2 * m + 1))
    return m * (cm1 - beta + m) / ((cm1 + 2 * m - 1) * (cm1 + 2 * m))


def _2f1_series(beta, c, z):
    term = total = 1.0 + 0j
    for k in range(MAX_ITER):
        term *= (beta + k) / (c + k) * z
        total += term
        if abs(term) <= REL_STOP * abs(total):
            return total
    raise ConvergenceError(f"2F1(1, {beta}; {c}; {z}) series did not converge")


def _2f1_contfrac(beta, c, z):
    # modified Lentz on 1 + a1/(1 + a2/(1 + ...)), a_j = -k_j z; result is 1/f
    cm1 = c - 1
    f = 1.0 + 0j
    C, D = f, 0j
    for j in range(1, MAX_ITER + 1):
        aj = -_cf_coeff(j, beta, cm1) * z
        D = 1 + aj * D
        if D == 0:
            D = _TINY
        C = 1 + aj / C
        if C == 0:
            C = _TINY
        D = 1 / D
        delta = C * D
        f *= delta
        if abs(delta - 1) < REL_STOP:
            return 1 / f
    raise ConvergenceError(f"2F1(1, {beta}; {c}; {z}) continued fraction did not converge")


def gauss_2f1_row1(beta, c, z):
    """Gauss hypergeometric function with first parameter fixed at one.

    Returns ``2F1(1, beta; c; z)``.  When ``beta`` is a non-positive integer
    the series is a finite polynomial and is summed exactly.
    """
    beta, c, z = complex(beta), complex(c), complex(z)
    if nonpositive_integer(c) is not None:
        raise DomainError(f"third parameter c={c} is a non-positive integer")
    m = nonpositive_integer(beta)
    if m is not None:
        term = total = 1.0 + 0j
        for k in range(m):
            term *= (k - m) / (c + k) * z
            total += term
        return total
    if z == 1:
        if (c - 1 - beta).real <= 0:
            raise DomainError("2F1(1, beta; c; 1) diverges unless Re(c - 1 - beta) > 0")
        return (c - 1) / (c - 1 - beta)
    if abs(z) >= 1:
        raise DomainError(f"|z| = {abs(z)} outside the unit disk")
    if abs(z) <= R_SWITCH:
        return _2f1_series(beta, c, z)
    return _2f1_contfrac(beta, c, z)


def _power_pair(z, e0, e1):
    """z**e0 * (1 - z)**e1 on principal branches, with finite limits at 0 and 1."""
    if z == 0:
        if e0 == 0:
            return 1.0 + 0j
        if e0.real > 0:
            return 0j
        raise DomainError(f"z**({e0}) is singular at z = 0")
    if z == 1:
        if e1 == 0:
            return 1.0 + 0j
        if e1.real > 0:
            return 0j
        raise DomainError(f"(1 - z)**({e1}) is singular at z = 1")
    return cmath.exp(e0 * cmath.log(z) + e1 * cmath.log(1 - z))


def inc_beta(a, b, z):
    """Incomplete Beta function ``B_z(a, b)``.

    Requires ``Re(a) > 0``.  Defined for ``|z| < 1`` and, when ``Re(b) > 0``,
    at ``z = 1`` where it equals the complete Beta function.
    """
    a, b, z = complex(a), complex(b), complex(z)
    if a.real <= 0:
        raise DomainError(f"inc_beta needs Re(a) > 0, got a={a}")
    if z == 0:
        return 0j
    if z == 1:
        if b.real <= 0:
            raise DomainError(f"B_1(a, b) needs Re(b) > 0, got b={b}")
        return _complete_beta(a, b)
    if abs(z) >= 1:
        raise DomainError(f"inc_beta defined for |z| < 1, got |z|={abs(z)}")
    # small b makes B(a, b) - B_{1-z}(b, a) cancel, so keep b away from zero
    if (b.real >= 0.1 and abs(1 - z) < 0.5 and z.real > (a.real + 1) / (a.real + b.real + 2)
            and nonpositive_integer(a + b) is None):
        # 2F1 is ill-conditioned next to z = 1; reflect instead
        return _complete_beta(a, b) - _inc_beta_direct(b, a, 1 - z)
    return _inc_beta_direct(a, b, z)


def _complete_beta(a, b):
    return complex(np.exp(loggamma(a) + loggamma(b) - loggamma(a + b)))


def _inc_beta_direct(a, b, z):
    pref = _power_pair(z, a, b) / a
    if pref == 0:
        return 0j
    return pref * gauss_2f1_row1(a + b, 1 + a, z)


def inc_beta_derivative(a, b, z):
    """``d/dz B_z(a, b) = z**(a-1) (1-z)**(b-1)``."""
    a, b, z = complex(a), complex(b), complex(z)
    return _power_pair(z, a - 1, b - 1)


def beta_step_up(a, b, u, du, z):
    """Raise the first Beta parameter by one.

    Given ``u = B_z(a, b)`` and ``du = u'``, returns ``B_z(a + 1, b)`` from
    ``z(z-1) u' = -a u + (a + b) B_z(a + 1, b)``.
    """
    a, b, z = complex(a), complex(b), complex(z)
    if a + b == 0:
        raise DomainError("a + b = 0: step-up recurrence divides by zero")
    return (z * (z - 1) * du + a * u) / (a + b)


def beta_ladder(gamma0, delta0, z, count):
    """Values ``B_z(gamma0 + n, delta0)`` for ``n = 0 .. count-1``.

    The top value is computed directly and the rest by the downward form of
    the step-up recurrence, which is stable for |z| < 1.  Also returns the
    derivative of the ``n = 0`` member.
    """
    gamma0, delta0, z = complex(gamma0), complex(delta0), complex(z)
    u = np.empty(count, dtype=complex)
    if z == 1:
        # complete Beta values; the derivative may be infinite there
        d0 = inc_beta_derivative(gamma0, delta0, z) if delta0.real >= 1 else complex("nan")
        u[count - 1] = inc_beta(gamma0 + count - 1, delta0, z)
        for n in range(count - 2, -1, -1):
            u[n] = (gamma0 + n + delta0) * u[n + 1] / (gamma0 + n)
        return u, d0
    d0 = inc_beta_derivative(gamma0, delta0, z)
    if z == 0:
        u[:] = 0
        return u, d0
    top = count - 1
    u[top] = inc_beta(gamma0 + top, delta0, z)
    w = z * (z - 1)
    if count > 1:
        # z**n d0 by repeated multiplication; exact up to gradual underflow
        zn = z ** np.arange(count, dtype=float)
        dn = d0 * zn
        for n in range(top - 1, -1, -1):
            g = gamma0 + n
            u[n] = ((g + delta0) * u[n + 1] - w * dn[n]) / g
    return u, d0

