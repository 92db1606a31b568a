"""The confluent Heun equation

    u'' + (4p + gamma/z + delta/(z-1)) u' + (4 p alpha z - sigma)/(z(z-1)) u = 0,

its residual, an adaptive Runge-Kutta oracle and the exponential
pretransform ``u = exp(s z) v``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, StepSizeError

__all__ = [
    "CheParams",
    "TransformedParams",
    "ResidualReport",
    "FunctionSolution",
    "che_residual",
    "residual_report",
    "chebyshev_grid",
    "integrate_che",
    "transform_exponential",
    "transformed_residual",
    "exponential_factor",
    "sigma_roots_family_e",
]


@dataclass(frozen=True)
class CheParams:
    """The five equation parameters, stored as complex numbers."""

    p: complex = 0j
    alpha: complex = 0j
    gamma: complex = 0.5 + 0j
    delta: complex = 0.5 + 0j
    sigma: complex = 0j

    def __post_init__(self):
        for name in ("p", "alpha", "gamma", "delta", "sigma"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise DomainError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.gamma == 0:
            raise DomainError("gamma = 0 is not allowed")

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {k: getattr(self, k) for k in ("p", "alpha", "gamma", "delta", "sigma")}


@dataclass(frozen=True)
class TransformedParams:
    """Coefficients of the equation satisfied by ``v = exp(-s z) u``.

    ``v'' + (2s + 4p + gamma/z + delta/(z-1)) v'
         + (A z(z-1) + B z + C)/(z(z-1)) v = 0``
    """

    s: complex
    A: complex
    B: complex
    C: complex
    base: CheParams


@dataclass
class ResidualReport:
    grid: np.ndarray
    residuals: np.ndarray
    max_residual: float
    scale: float
    values: np.ndarray = field(repr=False, default=None)

    @property
    def normalized(self):
        return self.max_residual / self.scale if self.scale > 0 else self.max_residual


@dataclass(frozen=True)
class FunctionSolution:
    """Adapter turning a callable ``z -> (u, u', u'')`` into a solution."""

    params: CheParams
    func: object

    def evaluate_with_derivatives(self, z):
        return tuple(complex(x) for x in self.func(z))

    def evaluate(self, z):
        return self.evaluate_with_derivatives(z)[0]


def _coefficients(params, z):
    if z == 0 or z == 1:
        raise DomainError(f"z = {z} is a singular point of the equation")
    c1 = 4 * params.p + params.gamma / z + params.delta / (z - 1)
    c0 = (4 * params.p * params.alpha * z - params.sigma) / (z * (z - 1))
    return c1, c0


def che_residual(solution, z, params=None):
    """Left-hand side of the equation for ``solution`` at ``z``.

    ``solution`` needs ``evaluate_with_derivatives(z) -> (u, u', u'')``; the
    equation parameters default to ``solution.params``.
    """
    z = complex(z)
    params = params if params is not None else solution.params
    c1, c0 = _coefficients(params, z)
    u, du, d2u = solution.evaluate_with_derivatives(z)
    return d2u + c1 * du + c0 * u


def chebyshev_grid(a=0.05, b=0.95, n=33):
    """``n`` Chebyshev-Lobatto points on ``[a, b]``, ascending."""
    k = np.arange(n)
    x = -np.cos(np.pi * k / (n - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def residual_report(solution, grid=None, params=None):
    """Residual of ``solution`` over a grid (Chebyshev on [0.05, 0.95] by default)."""
    grid = chebyshev_grid() if grid is None else np.asarray(grid)
    params = params if params is not None else solution.params
    res = np.empty(len(grid))
    vals = np.empty((len(grid), 3), dtype=complex)
    for i, z in enumerate(grid):
        z = complex(z)
        c1, c0 = _coefficients(params, z)
        u, du, d2u = solution.evaluate_with_derivatives(z)
        vals[i] = u, du, d2u
        res[i] = abs(d2u + c1 * du + c0 * u)
    scale = float(np.abs(vals).max()) if len(grid) else 0.0
    return ResidualReport(
        grid=grid, residuals=res, max_residual=float(res.max()) if len(grid) else 0.0,
        scale=scale, values=vals,
    )


# Dormand-Prince 5(4)
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def integrate_che(params, z0, u0, du0, z1, tol=1e-10, h0=None, max_steps=1_000_000):
    """Integrate the equation from ``z0`` to ``z1`` along the real axis.

    Dormand-Prince 5(4) with local error control: each accepted step has
    ``max_i |err_i| / max(1, |y_i|) <= tol``.  Returns ``(u, u')`` at ``z1``.
    """
    z0, z1 = float(z0), float(z1)
    if not (0 < z0 < 1 and 0 < z1 < 1):
        raise DomainError("integration endpoints must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.array([u0, du0], dtype=complex)
    if z0 == z1:
        return complex(y[0]), complex(y[1])

    def f(z, y):
        c1, c0 = _coefficients(params, z)
        return np.array([y[1], -c1 * y[1] - c0 * y[0]])

    direction = 1.0 if z1 > z0 else -1.0
    span = abs(z1 - z0)
    h = min(span, h0 if h0 else 1e-3 * span) * direction
    z = z0
    k = np.empty((7, 2), dtype=complex)
    k[0] = f(z, y)
    hmin = 1e-14 * max(abs(z0), abs(z1))
    for _ in range(max_steps):
        if (z1 - z) * direction <= 0:
            return complex(y[0]), complex(y[1])
        if (z + h - z1) * direction > 0:
            h = z1 - z
        for i in range(1, 7):
            k[i] = f(z + _C[i] * h, y + h * np.dot(_A[i], k[:i]))
        y_new = y + h * np.dot(_B5, k)
        err = h * np.dot(_E, k)
        sc = np.maximum(1.0, np.maximum(np.abs(y), np.abs(y_new)))
        en = float(np.max(np.abs(err) / sc)) / tol
        if en <= 1.0:
            z = z + h
            y = y_new
            k[0] = k[6]
            fac = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
        else:
            fac = max(0.2, 0.9 * en ** -0.2)
        h *= fac
        if abs(h) < hmin and (z1 - z) * direction > hmin:
            raise StepSizeError(f"step size underflow at z = {z}")
    raise StepSizeError("maximum number of steps exceeded")


def transform_exponential(params, s):
    """Coefficients after substituting ``u = exp(s z) v``."""
    s = complex(s)
    p, a, g, d, sig = params.p, params.alpha, params.gamma, params.delta, params.sigma
    return TransformedParams(
        s=s, A=s * (s + 4 * p), B=4 * p * a + s * (g + d), C=-(s * g + sig), base=params,
    )


def transformed_residual(tp, v_derivs, z):
    """Residual of the transformed equation for ``(v, v', v'')`` at ``z``."""
    z = complex(z)
    if z == 0 or z == 1:
        raise DomainError(f"z = {z} is a singular point of the equation")
    b = tp.base
    v, dv, d2v = v_derivs
    c1 = 2 * tp.s + 4 * b.p + b.gamma / z + b.delta / (z - 1)
    c0 = (tp.A * z * (z - 1) + tp.B * z + tp.C) / (z * (z - 1))
    return d2v + c1 * dv + c0 * v


def exponential_factor(derivs, s, z):
    """Map ``(v, v', v'')`` to the derivatives of ``exp(s z) v``."""
    v, dv, d2v = derivs
    e = cmath.exp(complex(s) * complex(z))
    return e * v, e * (dv + s * v), e * (d2v + 2 * s * dv + s * s * v)


def sigma_roots_family_e(params):
    """Both ``sigma`` making ``B = A`` and ``C = 0`` after the pretransform.

    Returns ``((sigma1, s1), (sigma2, s2))`` with ``s = -sigma/gamma``; the
    ``sigma`` field of ``params`` is ignored.
    """
    p, a, g, d = params.p, params.alpha, params.gamma, params.delta
    b = g * (-4 * p + g + d)
    c = -4 * p * a * g * g
    root = cmath.sqrt(b * b - 4 * c)
    # cancellation-free pair
    q = -0.5 * (b + root if (b.conjugate() * root).real >= 0 else b - root)
    if q == 0:
        roots = (0j, 0j)
    else:
        roots = (q, c / q)
    roots = tuple(sorted(roots, key=lambda r: (round(r.real, 12), round(r.imag, 12))))
    return tuple((r, -r / g) for r in roots)
