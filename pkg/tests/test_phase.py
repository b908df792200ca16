import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from fourthderiv.phase import (DomainError, PowerPhase, VdcConditionError, certify_vdc,
                               delta_bar_k, delta_h, extend_c4, from_config, monomial,
                               paper_example_phase, polynomial, quartic_phase, taylor_tail,
                               taylor_tail_deriv, u_phase)

rng = np.random.default_rng(7)


@pytest.mark.parametrize("M", [16, 64, 1000, 65536])
def test_certificate_of_lower_bound_example(M):
    cert = certify_vdc(paper_example_phase(M))
    assert cert.lambda_ == pytest.approx(0.24 * M**-4, rel=1e-14)
    assert cert.ratio == 1.0
    assert cert.mode == "exact"


def test_cubic_has_no_certificate():
    with pytest.raises(VdcConditionError):
        certify_vdc(monomial(1, 3, 50))


def test_certificate_with_quintic_term():
    M = 16
    f = polynomial([0, 0, 0, 0, Fraction(1, 100 * M**4), Fraction(1, M**6)], M)
    cert = certify_vdc(f)
    # f''''(x) = 0.24/M^4 + 120 x / M^6, increasing
    lo = 0.24 / M**4 + 120 / M**6
    hi = 0.24 / M**4 + 120 * M / M**6
    assert cert.lambda_ == pytest.approx(lo, rel=1e-13)
    assert cert.ratio == pytest.approx(hi / lo, rel=1e-13)
    grid = certify_vdc(f.add(polynomial([0], M)), grid_step=0.5)
    assert grid.lambda_ == pytest.approx(lo, rel=1e-13)


def test_grid_certificate_for_power_phase():
    f = PowerPhase(1e-3, 4.5, 40)
    cert = certify_vdc(f, grid_step=0.25)
    a = 4.5 * 3.5 * 2.5 * 1.5
    assert cert.lambda_ == pytest.approx(1e-3 * a, rel=1e-12)
    assert cert.ratio == pytest.approx(40**0.5, rel=1e-12)


def test_grid_step_validation():
    with pytest.raises(ValueError):
        certify_vdc(paper_example_phase(20), grid_step=2.0)


def test_delta_h_examples():
    f = monomial(1, 2, 20)
    assert delta_h(f, 5, 2) == 40
    assert delta_h(f, 5, 0) == 0
    lin = polynomial([0, Fraction(3, 7)], 100)
    for m in (10, 37, 60):
        assert delta_h(lin, m, 4, exact=True) == 2 * Fraction(3, 7) * 4


def test_delta_h_antisymmetric():
    f = polynomial([Fraction(1, 3), -2, Fraction(5, 11), 1, Fraction(1, 9)], 200)
    for _ in range(50):
        h = int(rng.integers(0, 40))
        m = int(rng.integers(1 + h, 200 - h + 1))
        assert delta_h(f, m, h, exact=True) == -delta_h(f, m, -h, exact=True)


def test_delta_h_domain():
    with pytest.raises(DomainError):
        delta_h(paper_example_phase(20), 2, 3)


def test_delta_bar_k():
    M = 100
    f = paper_example_phase(M)
    assert delta_bar_k(f, 10, 0, order=3) == 0
    for m, k in [(1, 5), (30, 12), (80, 20)]:
        assert delta_bar_k(f, m, k, order=3, exact=True) == Fraction(24 * k, 100 * M**4)
    assert delta_bar_k(f, 10, 3, order=2) == pytest.approx(0.12 * (13**2 - 10**2) / M**4,
                                                             rel=1e-13)
    with pytest.raises(ValueError):
        delta_bar_k(f, 10, 3, order=4)


def test_taylor_tail_quartic_exact():
    c = Fraction(3, 17)
    f = monomial(c, 4, 50)
    for m, y in [(5, 0), (7, 3), (20, -6), (11, Fraction(5, 2))]:
        assert taylor_tail(f, m, y, exact=True) == c * Fraction(y) ** 4


def test_taylor_tail_against_quadrature():
    M = 32
    f = monomial(Fraction(1, M**5), 5, M)
    m, y = 4, 2

    def integrand(t):
        return (y - t) ** 3 / 6 * f.deriv(m + t, 4)

    oracle, _ = quad(integrand, 0, y, epsabs=0, epsrel=1e-13)
    assert taylor_tail(f, m, y) == pytest.approx(oracle, rel=1e-10)
    assert float(taylor_tail(f, m, y, exact=True)) == pytest.approx(oracle, rel=1e-12)


def test_taylor_tail_derivative_bounds():
    """|v^(j)(y)| <= Q^(4-j) lambda ratio for |y| <= Q."""
    M, Q = 4096, 64
    f = polynomial([0, 0, 0, 0, Fraction(1, 10**13), Fraction(1, 10**18)], M)
    cert = certify_vdc(f)
    for _ in range(100):
        m = int(rng.integers(Q + 1, M - Q))
        y = float(rng.uniform(-Q, Q))
        for j in range(5):
            v = taylor_tail_deriv(f, m, y, j)
            assert abs(v) <= Q ** (4 - j) * cert.lambda_ * cert.ratio * (1 + 1e-9)
    # sampled differentiation of the tail agrees with the analytic derivative
    m, y, s = 2000, 20.0, 1e-2
    fd = (taylor_tail(f, m, y + s) - taylor_tail(f, m, y - s)) / (2 * s)
    assert fd == pytest.approx(taylor_tail_deriv(f, m, y, 1), rel=1e-5)


def test_u_phase_cubic_vanishes():
    f = polynomial([1, Fraction(2, 3), Fraction(-1, 5), Fraction(1, 7)], 80)
    assert u_phase(f, 30, 1, 2, 3, 2, exact=True) == 0
    assert u_phase(f, 30, 1, 2, 3, 2) == pytest.approx(0, abs=1e-9)


def test_u_phase_quartic_closed_form():
    c = Fraction(2, 9)
    f = monomial(c, 4, 200)
    for m, r, q, h, n in [(50, 1, 2, 3, 2), (80, -2, 3, 4, 5), (100, 3, -4, 6, 1)]:
        expect = c * ((n + q + h) ** 4 - (n + q - h) ** 4 - (n + h + r) ** 4 + (n - h - r) ** 4)
        assert u_phase(f, m, r, q, h, n, exact=True) == expect


def test_u_phase_lower_bound_example_value():
    M = 64
    f = paper_example_phase(M)
    m, r, q, h, n = 30, 1, 2, 3, 2
    expect = Fraction(1, 100 * M**4) * ((n + q + h) ** 4 - (n + q - h) ** 4
                                        - (n + h + r) ** 4 + (n - h - r) ** 4)
    assert u_phase(f, m, r, q, h, n) == pytest.approx(float(expect), rel=1e-9)


def test_extend_c4_quintic():
    f = monomial(1, 5, 4)
    g = extend_c4(f, 10)
    # 1024 + 5*256 + 10*64 + 10*16 + 5*4
    assert g.exact_deriv(5, 0) == 3124
    assert g.deriv(5.0, 0) == pytest.approx(3124)
    assert g.deriv(7.0, 4) == pytest.approx(f.deriv(4.0, 4))


def test_extend_c4_continuity():
    f = PowerPhase(0.01, 4.7, 50)
    g = extend_c4(f, 200)
    for j in range(5):
        left = f.deriv(50.0, j)
        right = g.tail.deriv(0.0, j)
        assert right == pytest.approx(left, rel=1e-12)
        assert g.deriv(49.999999, j) == pytest.approx(g.deriv(50.000001, j), rel=1e-4)


def test_extend_c4_low_degree_unchanged():
    f = polynomial([1, 2, 3, 4, Fraction(1, 5)], 30)
    g = extend_c4(f, 300)
    assert g.M == 300
    for x in (2, 17, 30, 31, 250):
        assert g.exact_deriv(x, 0) == f.exact_deriv(x, 0)


def test_extend_c4_keeps_lambda():
    f = monomial(Fraction(1, 10**6), 5, 100)
    g = extend_c4(f, 400)
    assert certify_vdc(g).lambda_ == pytest.approx(certify_vdc(f).lambda_, rel=1e-12)
    with pytest.raises(ValueError):
        extend_c4(f, 50)


def test_polynomial_derivatives_match_sympy():
    x = sp.symbols("x")
    coeffs = [Fraction(3, 2), -1, Fraction(2, 7), Fraction(-5, 3), Fraction(1, 11), Fraction(1, 13)]
    f = polynomial(coeffs, 100)
    expr = sum(sp.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(coeffs))
    for j in range(5):
        d = sp.diff(expr, x, j)
        for pt in (1, Fraction(7, 3), 50, 100):
            val = d.subs(x, sp.Rational(pt.numerator, pt.denominator) if isinstance(pt, Fraction) else pt)
            assert f.exact_deriv(pt, j) == Fraction(int(sp.numer(val)), int(sp.denom(val)))


@pytest.mark.parametrize("f", [
    paper_example_phase(200),
    polynomial([0, 0.3, -0.02, 1e-4, 1e-6, 1e-9], 200),
    PowerPhase(1e-4, 4.5, 200),
    extend_c4(PowerPhase(1e-4, 4.5, 100), 200),
], ids=["paper_example", "polynomial", "power", "extended"])
def test_derivatives_match_central_differences(f):
    s = 1e-3
    for x in rng.uniform(2, 198, size=100):
        if abs(x - getattr(f, "join", -1)) < 2 * s:
            continue  # the continuation is only C^4 at the join
        for j in range(1, 5):
            fd = (f.deriv(x + s, j - 1) - f.deriv(x - s, j - 1)) / (2 * s)
            bound = s**2 * abs(f.deriv(x, min(j + 1, 4))) + 1e-9 * abs(f.deriv(x, j - 1)) / s
            assert abs(fd - f.deriv(x, j)) <= bound + 1e-7 * abs(f.deriv(x, j))


def test_exact_reduction_beyond_double_precision():
    f = polynomial([0, Fraction(1, 7), 0, Fraction(2, 3), Fraction(1, 3)], 10**6)
    ms = [999_983, 123_457, 10**6]
    got = f.frac_at(ms)
    for m, g in zip(ms, got):
        v = f.exact_deriv(m, 0)
        assert g == pytest.approx(float(v - math.floor(v)), abs=1e-15)


def test_quartic_phase_fourth_derivative():
    f = quartic_phase(2.0**-26, 65536)
    assert f.exact_deriv(12345, 4) == Fraction(2) ** -26


def test_from_config():
    f = from_config({"family": "monomial", "coefficient": 0.5, "exponent": 4, "M": 30})
    assert f.deriv(2.0, 0) == 8.0
    g = from_config({"family": "polynomial", "coefficients": [1, 0, 1], "M": 10})
    assert g.exact_deriv(3, 0) == 10
    p = from_config({"family": "monomial", "coefficient": 1.0, "exponent": 4.5, "M": 10})
    assert isinstance(p, PowerPhase)
    with pytest.raises(ValueError):
        from_config({"family": "custom", "M": 5})
    with pytest.raises(ValueError):
        from_config({"family": "monomial", "coefficient": 1, "exponent": 4})


def test_domain_end_validation():
    with pytest.raises(ValueError):
        polynomial([1], 0)
