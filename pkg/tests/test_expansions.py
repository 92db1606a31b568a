import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from heunbeta.che_core import CheParams, chebyshev_grid, residual_report, sigma_roots_family_e
from heunbeta.errors import (
    ConstraintViolation,
    DomainError,
    PivotBreakdown,
    UnsupportedFamily,
)
from heunbeta.expansions import (
    BetaSeries,
    Family,
    build_series,
    convergence_diagnostics,
    derive_family_e,
    evaluate,
    evaluate_with_derivatives,
    family_e_coeffs,
    recurrence_coeffs,
)
from heunbeta.special_functions import inc_beta

GENERIC_A = CheParams(p=0.2, alpha=0, gamma=0.5, delta=0.3, sigma=0.7)


def test_family_properties():
    assert Family.C.mode == Family.D.mode == "difference"
    assert Family.A.mode == "single"
    assert Family.D.order == Family.E.order == 3
    assert Family.B.order == 2


def test_recurrence_r0_vanishes():
    for fam, pr in [(Family.A, GENERIC_A), (Family.C, CheParams(p=0.2, alpha=0.1, sigma=0.08))]:
        assert recurrence_coeffs(fam, pr, 0.3, 0).R == 0


def test_recurrence_a_n1():
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.5, sigma=-0.6)
    assert recurrence_coeffs(Family.A, pr, 1 - pr.delta, 1).R == pytest.approx(0.5)


def test_recurrence_d_fourth_coefficient_vanishes():
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.1, sigma=0.2)
    # gamma_{n-2} + delta0 = 0 at n = 4 for delta0 = gamma - 3
    rc = recurrence_coeffs(Family.D, pr, pr.gamma - 3, 4)
    assert rc.L == 0
    assert recurrence_coeffs(Family.A, pr, 0.1, 3).L is None


def test_recurrence_e_unsupported():
    with pytest.raises(UnsupportedFamily):
        recurrence_coeffs(Family.E, GENERIC_A, 0.5, 2)


def test_generic_a_frozen_coefficients():
    ser = build_series(Family.A, GENERIC_A, max_terms=10)
    # hand evaluation of the first two rows
    assert ser.coeffs[:3] == pytest.approx([1, -2.2, 2.5 / 3], rel=1e-14)


def test_build_a_n0():
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.5, sigma=-0.6)
    ser = build_series(Family.A, pr)
    assert ser.terminated and ser.N == 0
    assert np.array_equal(ser.coeffs, [1])
    assert ser.gamma0 == 0.5 and ser.delta0 == -0.5


def test_build_b_n1():
    pr = CheParams(p=0.25, alpha=-0.5, gamma=0.5, delta=1.0, sigma=0)
    ser = build_series(Family.B, pr)
    assert ser.terminated
    assert ser.coeffs == pytest.approx([1, -1])


def test_build_generic_not_terminated():
    ser = build_series(Family.A, GENERIC_A, max_terms=200)
    assert not ser.terminated and ser.N is None
    assert len(ser.coeffs) == 200
    assert abs(ser.coeffs[-1] / ser.coeffs[-2] - 1) < 0.05


@pytest.mark.parametrize("family,params,needle", [
    (Family.A, CheParams(alpha=0.1), "alpha = 0 required"),
    (Family.D, CheParams(alpha=0.1), "alpha = 0 required"),
    (Family.B, CheParams(sigma=0.2), "sigma = 0 required"),
    (Family.C, CheParams(p=0.3, alpha=1, sigma=0.5), "sigma = 4*p*alpha required"),
    (Family.E, CheParams(p=0.3, alpha=1, sigma=0.5), "family E"),
])
def test_constraint_violations(family, params, needle):
    with pytest.raises(ConstraintViolation, match=needle.replace("*", r"\*")):
        build_series(family, params)


def test_gamma_checks():
    with pytest.raises(PivotBreakdown):
        build_series(Family.A, CheParams(gamma=1))
    with pytest.raises(DomainError):
        build_series(Family.A, CheParams(gamma=1.5))


def test_delta0_override_only_for_d():
    with pytest.raises(ConstraintViolation):
        build_series(Family.A, GENERIC_A, delta0_override=0.2)
    ser = build_series(Family.D, CheParams(p=0.3, gamma=0.5, delta=1.5, sigma=-0.6),
                       delta0_override=-1.5)
    assert ser.delta0 == -1.5


def test_evaluate_n0_is_inc_beta():
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.5, sigma=-0.6)
    ser = build_series(Family.A, pr)
    for z in (0.1, 0.5, 0.9, 0.3 + 0.2j):
        assert evaluate(ser, z) == inc_beta(0.5, -0.5, z)


def test_difference_mode_single_term():
    pr = CheParams(p=0.3, gamma=0.5, delta=1.5, sigma=-0.6)
    ser = BetaSeries(Family.D, pr, 0.5, -1.5, 0j, "difference", np.array([1 + 0j]), True)
    assert evaluate(ser, 0.5) == pytest.approx(2, rel=1e-14)


def test_evaluate_zero_and_domain():
    ser = build_series(Family.A, GENERIC_A, max_terms=50)
    assert evaluate(ser, 0) == 0
    with pytest.raises(DomainError):
        evaluate(ser, 1.2)
    with pytest.raises(DomainError):
        evaluate_with_derivatives(ser, 0)


def test_evaluate_at_one():
    # delta0 = 1 - delta has positive real part, so the series converges at z = 1
    ser = build_series(Family.A, GENERIC_A, max_terms=400)
    v = evaluate(ser, 1)
    assert abs(v - evaluate(ser, 0.9999999)) < 5e-3 * abs(v)
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.5, sigma=-0.6)
    with pytest.raises(DomainError):
        evaluate(build_series(Family.A, pr), 1)


def test_tail_bound_reported():
    ser = build_series(Family.A, GENERIC_A, max_terms=2000, tail_tol=1e-12)
    res = evaluate(ser, 0.8, return_bound=True)
    assert 0 < res.tail_bound <= 1e-12 * abs(res.value)
    assert res.terms < 2000
    full = ser.truncated(2000)
    assert abs(evaluate(full, 0.8) - res.value) <= 10 * res.tail_bound + 1e-15


def test_diagnostics():
    ser = build_series(Family.A, GENERIC_A, max_terms=200)
    d = convergence_diagnostics(ser, 0.5)
    assert len(d.coeff_ratio_tail) == len(d.term_ratio_tail) == 20
    assert abs(d.coeff_ratio_tail[-1] - 1) < 0.05
    assert abs(d.term_ratio_tail[-1] - 0.5) < 0.05
    assert d.estimated_limit == pytest.approx(abs(d.coeff_ratio_tail[-1]))
    pr = CheParams(p=0.3, alpha=0, gamma=0.5, delta=1.5, sigma=-0.6)
    d = convergence_diagnostics(build_series(Family.A, pr), 0.5)
    assert len(d.coeff_ratio_tail) == 0 and np.isnan(d.estimated_limit)


def test_family_e_zero_root_matches_a():
    base = CheParams(p=0.3, alpha=0, gamma=0.5, delta=0.4)
    roots = [r for r, _ in sigma_roots_family_e(base)]
    zero = min(roots, key=abs)
    assert zero == 0
    e = derive_family_e(base.replace(sigma=zero), max_terms=60)
    a = build_series(Family.A, base.replace(sigma=0), max_terms=60)
    assert e.s == 0
    assert np.max(np.abs(e.coeffs - a.coeffs)) <= 1e-14 * np.max(np.abs(a.coeffs))


def test_family_e_example_residual():
    base = CheParams(p=0.25, alpha=1, gamma=0.5, delta=0.5)
    for sig, s in sigma_roots_family_e(base):
        ser = derive_family_e(base.replace(sigma=sig), tail_tol=1e-12)
        assert ser.s == pytest.approx(-sig / 0.5)
        assert residual_report(ser).normalized < 1e-8


def test_family_e_not_a_root():
    with pytest.raises(ConstraintViolation):
        derive_family_e(CheParams(p=0.25, alpha=1, gamma=0.5, delta=0.5, sigma=0.3))


def test_family_e_coefficients_shape():
    rc = family_e_coeffs(CheParams(p=0.1, alpha=0.2, gamma=0.3, delta=0.4), 0.5, 0.6, 5)
    assert rc.L == pytest.approx(0.5 * (0.5 + 0.4))


# properties -----------------------------------------------------------------

def _rows_vanish(ser, coeff_fn, order):
    a = ser.coeffs
    for n in range(1, len(a)):
        R, Q, P, L = coeff_fn(n)
        terms = [R * a[n], Q * a[n - 1]]
        if n >= 2:
            terms.append(P * a[n - 2])
        if order == 3 and n >= 3:
            terms.append(L * a[n - 3])
        assert abs(sum(terms)) <= 1e-12 * max(abs(t) for t in terms)


gam = st.floats(-0.9, 0.9).filter(lambda g: abs(g) > 0.05)
small = st.floats(-0.8, 0.8)


@settings(max_examples=40, deadline=None)
@given(small, gam, st.floats(-1, 2), small, st.sampled_from("ABCD"))
def test_recurrence_consistency(p, g, d, x, fam):
    fam = Family(fam)
    alpha = 0 if fam in (Family.A, Family.D) else x
    sigma = {Family.A: x, Family.D: x, Family.B: 0, Family.C: 4 * p * alpha}[fam]
    pr = CheParams(p=p, alpha=alpha, gamma=g, delta=d, sigma=sigma)
    ser = build_series(fam, pr, max_terms=60)
    _rows_vanish(ser, lambda n: recurrence_coeffs(fam, pr, ser.delta0, n), fam.order)


@settings(max_examples=25, deadline=None)
@given(small, small, gam, st.floats(-1, 2))
def test_family_e_recurrence_consistency(p, a, g, d):
    base = CheParams(p=p, alpha=a, gamma=g, delta=d)
    sig, s = sigma_roots_family_e(base)[1]
    ser = derive_family_e(base.replace(sigma=sig), max_terms=60)
    _rows_vanish(ser, lambda n: family_e_coeffs(base, s, ser.delta0, n), 3)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.6, 0.6), gam, st.floats(-0.5, 1.5), st.floats(-1, 1))
def test_residual_decay(p, g, d, sigma):
    pr = CheParams(p=p, gamma=g, delta=d, sigma=sigma)
    ser = build_series(Family.A, pr, max_terms=60)
    assume(not ser.terminated)
    grid = chebyshev_grid(0.05, 0.6)
    r1 = residual_report(ser.truncated(20), grid).normalized
    r2 = residual_report(ser.truncated(40), grid).normalized
    assume(r1 > 1e-13)
    assert r2 < r1


@settings(max_examples=25, deadline=None)
@given(small, gam, st.integers(0, 3))
def test_terminated_residual(p, g, N):
    # every root of the family A sigma polynomial terminates the series at N
    from heunbeta.termination import poly_roots, sigma_polynomial
    assume(abs(p) > 1e-2)  # p = 0 lets a_N vanish at one root
    sp = sigma_polynomial(CheParams(p=p, gamma=g, delta=0.5), Family.A, N)
    for r in poly_roots(sp.coeffs):
        ser = build_series(Family.A, CheParams(p=p, gamma=g, delta=sp.delta, sigma=r))
        assert ser.terminated and ser.N == N
        assert residual_report(ser).normalized < 1e-9


def test_family_d_agrees_with_a():
    from heunbeta.termination import solve_family_d
    base = CheParams(p=0.3, gamma=0.5, delta=1.5)
    for d, s in solve_family_d(base, 1):
        ser = build_series(Family.D, base.replace(delta=d, sigma=s), delta0_override=0.5 - 3)
        assert ser.terminated
        assert residual_report(ser).normalized < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.sampled_from("ACE"), st.floats(0.1, 0.9))
def test_derivatives_match_finite_differences(fam, z):
    fam = Family(fam)
    if fam is Family.A:
        ser = build_series(fam, GENERIC_A, max_terms=400)
    elif fam is Family.C:
        ser = build_series(fam, CheParams(p=0.2, alpha=0.4, gamma=0.3, delta=0.2, sigma=0.32),
                           max_terms=400)
    else:
        base = CheParams(p=0.25, alpha=1, gamma=0.5, delta=0.5)
        ser = derive_family_e(base.replace(sigma=sigma_roots_family_e(base)[0][0]))
    u, du, d2u = evaluate_with_derivatives(ser, z)
    h = 1e-5
    up, um = evaluate(ser, z + h), evaluate(ser, z - h)
    assert abs((up - um) / (2 * h) - du) <= 1e-6 * max(abs(du), abs(u))
    assert abs((up - 2 * u + um) / h ** 2 - d2u) <= 1e-3 * max(abs(d2u), abs(du), abs(u))
