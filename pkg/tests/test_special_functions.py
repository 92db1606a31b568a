import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from heunbeta.errors import ConvergenceError, DomainError
from heunbeta.special_functions import (
    beta_ladder,
    beta_step_up,
    gauss_2f1_row1,
    inc_beta,
    inc_beta_derivative,
    nonpositive_integer,
)


def quad_beta(a, b, z):
    """Independent oracle: adaptive quadrature with the algebraic endpoint weight."""
    val, _ = quad(lambda t: (1 - t) ** (b - 1), 0, z, weight="alg", wvar=(a - 1, 0),
                  epsabs=0, epsrel=1e-12, limit=200)
    return val


# frozen values from a 30-digit reference
FROZEN = [
    ((0.5, 0.5, 0.3), 1.1592794807274085756),
    ((2.0, 3.0, 0.6), 0.0684),
    ((0.5, -1.5, 0.5), 2.6666666666666666667),
    ((1.3, -0.7, 0.9), 5.0896360249747057815),
    ((0.25, 2.5, 0.99), 2.996633183329772523),
    ((3.5, -2.2, 0.2), 0.0017755777441874248071),
]


@pytest.mark.parametrize("args,want", FROZEN)
def test_inc_beta_frozen(args, want):
    assert inc_beta(*args) == pytest.approx(want, rel=1e-13)


def test_inc_beta_complex_frozen():
    got = inc_beta(0.7 + 0.2j, -0.4 + 0.5j, 0.4 + 0.3j)
    want = 0.98530771903449505813 + 0.26672268780564477663j
    assert abs(got - want) < 1e-13 * abs(want)


def test_inc_beta_examples():
    assert inc_beta(1, 1, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert inc_beta(1, 2, 0.5) == pytest.approx(0.375, abs=1e-15)
    assert inc_beta(0.5, 0.5, 0.25) == pytest.approx(math.pi / 3, rel=1e-14)


def test_inc_beta_at_zero_and_one():
    assert inc_beta(0.3, -2.0, 0) == 0
    assert inc_beta(0.5, 0.5, 1) == pytest.approx(math.pi, rel=1e-14)
    with pytest.raises(DomainError):
        inc_beta(0.5, -0.5, 1)


@pytest.mark.parametrize("a,z", [(0, 0.5), (-0.3, 0.5), (0.5, 1.2), (0.5, -1.0)])
def test_inc_beta_domain(a, z):
    with pytest.raises(DomainError):
        inc_beta(a, 0.5, z)


def test_inc_beta_derivative_examples():
    assert inc_beta_derivative(1, 1, 0.3) == pytest.approx(1)
    assert inc_beta_derivative(2, 1, 0.5) == pytest.approx(0.5)


def test_inc_beta_derivative_against_finite_difference():
    # z**(a-1) (1-z)**(b-1) at a=0.5, b=-0.5, z=0.5 is 0.5**-0.5 * 0.5**-1.5 = 4
    h = 1e-5
    fd = (inc_beta(0.5, -0.5, 0.5 + h) - inc_beta(0.5, -0.5, 0.5 - h)) / (2 * h)
    got = inc_beta_derivative(0.5, -0.5, 0.5)
    assert got == pytest.approx(4, rel=1e-14)
    assert abs(fd - got) < 1e-8


def test_inc_beta_derivative_singular():
    with pytest.raises(DomainError):
        inc_beta_derivative(0.5, 1.0, 0)
    with pytest.raises(DomainError):
        inc_beta_derivative(1.0, 0.5, 1)
    assert inc_beta_derivative(2.0, 2.0, 0) == 0


def test_gauss_examples():
    assert gauss_2f1_row1(0, 2, 0.7) == 1
    assert gauss_2f1_row1(-1, 2, 0.5) == pytest.approx(0.75)
    assert gauss_2f1_row1(1.5, 1.5, 0.5) == pytest.approx(2, rel=1e-14)


def test_gauss_frozen():
    assert gauss_2f1_row1(2.3, 3.1, 0.8) == pytest.approx(2.8979663332430561336, rel=1e-13)
    got = gauss_2f1_row1(-0.5 + 0.4j, 1.7, 0.5 - 0.6j)
    assert abs(got - (1.0257321512452000708 + 0.35604537029401966244j)) < 1e-13


def test_gauss_series_and_fraction_agree_at_switch():
    for beta, c in [(2.3, 3.1), (-0.7 + 0.2j, 1.4), (0.5, 0.8)]:
        lo = gauss_2f1_row1(beta, c, 0.7499999)
        hi = gauss_2f1_row1(beta, c, 0.7500001)
        assert abs(lo - hi) < 1e-5 * abs(lo)


def test_gauss_forbidden_c():
    with pytest.raises(DomainError):
        gauss_2f1_row1(0.5, -2, 0.3)
    with pytest.raises(DomainError):
        gauss_2f1_row1(0.5, 1.5, 1.5)


def test_gauss_unit_point():
    assert gauss_2f1_row1(0.5, 2.0, 1) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        gauss_2f1_row1(1.5, 2.0, 1)


def test_convergence_cap(monkeypatch):
    import heunbeta.special_functions as sf
    monkeypatch.setattr(sf, "MAX_ITER", 3)
    with pytest.raises(ConvergenceError):
        sf.gauss_2f1_row1(0.5, 1.5, 0.5)


def test_nonpositive_integer():
    assert nonpositive_integer(-3) == 3
    assert nonpositive_integer(0) == 0
    assert nonpositive_integer(-2 + 1e-13) == 2
    assert nonpositive_integer(1) is None
    assert nonpositive_integer(-2.5) is None
    assert nonpositive_integer(-2 + 1e-6j) is None


def test_step_up_examples():
    assert beta_step_up(1, 1, 0.5, 1, 0.5) == pytest.approx(0.125)
    u = inc_beta(0.5, 0.5, 0.3)
    du = inc_beta_derivative(0.5, 0.5, 0.3)
    assert beta_step_up(0.5, 0.5, u, du, 0.3) == pytest.approx(quad_beta(1.5, 0.5, 0.3), rel=1e-11)
    with pytest.raises(DomainError):
        beta_step_up(0.5, -0.5, u, du, 0.3)


def test_ladder_matches_direct():
    u, d0 = beta_ladder(0.3, -1.7, 0.85, 40)
    assert d0 == pytest.approx(inc_beta_derivative(0.3, -1.7, 0.85))
    for n in (0, 1, 5, 17, 39):
        want = inc_beta(0.3 + n, -1.7, 0.85)
        assert abs(u[n] - want) <= 1e-13 * abs(want)


def test_ladder_at_zero():
    u, _ = beta_ladder(1.5, 0.5, 0, 4)
    assert np.all(u == 0)


@pytest.mark.parametrize("a,b,m", [(0.5, -2.5, 2), (1.2, -4.2, 3), (0.3, -0.3, 0), (2.5, -7.5, 5)])
def test_elementary_polynomial_case(a, b, m):
    # a + b = -m: the hypergeometric factor is a degree-m polynomial
    for z in (0.1, 0.5, 0.93):
        poly = sum(math.prod((j - m) / (1 + a + j) for j in range(k)) * z ** k for k in range(m + 1))
        want = z ** a * (1 - z) ** b / a * poly
        assert abs(inc_beta(a, b, z) - want) <= 1e-12 * abs(want)


# properties -----------------------------------------------------------------

reals_a = st.floats(0.05, 3.0)
reals_b = st.floats(-2.0, 2.0)
unit = st.floats(0.05, 0.95)


@settings(max_examples=150, deadline=None)
@given(reals_a, reals_b, unit)
def test_quadrature_agreement(a, b, z):
    ref = quad_beta(a, b, z)
    assert abs(inc_beta(a, b, z) - ref) <= 1e-9 * abs(ref)


@settings(max_examples=150, deadline=None)
@given(reals_a, reals_b, unit)
def test_step_up_identity(a, b, z):
    assume(abs(a + b) > 1e-3)
    u0, u1 = inc_beta(a, b, z), inc_beta(a + 1, b, z)
    du = inc_beta_derivative(a, b, z)
    lhs = z * (z - 1) * du
    rhs = -a * u0 + (a + b) * u1
    scale = max(abs(lhs), abs(a * u0), abs((a + b) * u1))
    assert abs(lhs - rhs) < 1e-10 * scale


@settings(max_examples=150, deadline=None)
@given(st.floats(1.05, 4.0), reals_b, unit)
def test_step_down_identity(a, b, z):
    du = inc_beta_derivative(a, b, z)
    lhs = (z - 1) * du
    lo, hi = inc_beta(a - 1, b, z), inc_beta(a, b, z)
    rhs = -(a - 1) * lo + (a - 1 + b) * hi
    scale = max(abs(lhs), abs((a - 1) * lo), abs((a - 1 + b) * hi))
    assert abs(lhs - rhs) < 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(reals_a, reals_b, unit)
def test_derivative_shift(a, b, z):
    assert inc_beta_derivative(a + 1, b, z) == pytest.approx(z * inc_beta_derivative(a, b, z),
                                                            rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(reals_a, reals_b, unit)
def test_beta_ode(a, b, z):
    # analytic second derivative of z**(a-1) (1-z)**(b-1) integrand form
    d1 = inc_beta_derivative(a, b, z)
    d2 = d1 * ((a - 1) / z - (b - 1) / (1 - z))
    lhs = d2 + ((1 - a) / z + (1 - b) / (z - 1)) * d1
    assert abs(lhs) <= 1e-10 * max(abs(d2), abs(d1 * (1 - a) / z), abs(d1 * (1 - b) / (z - 1)))


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=0.9), reals_a, reals_b)
def test_complex_step_up(z, a, b):
    assume(abs(z) > 0.05 and abs(a + b) > 1e-3)
    assume(not (abs(z.imag) < 1e-8 and z.real < 0))
    u0, u1 = inc_beta(a, b, z), inc_beta(a + 1, b, z)
    du = inc_beta_derivative(a, b, z)
    lhs = z * (z - 1) * du
    scale = max(abs(lhs), abs(a * u0), abs((a + b) * u1))
    assert abs(lhs - (-a * u0 + (a + b) * u1)) < 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(0.55, 0.98))
def test_reflection_continuity(a, b, z):
    # complementary-argument form near z = 1 against quadrature
    ref = quad_beta(a, b, z)
    assert abs(inc_beta(a, b, z) - ref) <= 1e-10 * abs(ref)


def test_principal_branch():
    z = -0.4 + 0.3j
    got = inc_beta_derivative(0.5, 0.5, z)
    want = cmath.exp(-0.5 * cmath.log(z) - 0.5 * cmath.log(1 - z))
    assert abs(got - want) < 1e-15
