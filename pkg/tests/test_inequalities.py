import math
from fractions import Fraction

import numpy as np
import pytest

from fourthderiv import diophantine as dio
from fourthderiv import inequalities as ineq
from fourthderiv.forms import p1_form, p2_form
from fourthderiv.phase import paper_example_phase, polynomial, quartic_phase

rng = np.random.default_rng(5)


def _naive_weyl_rhs(a, Q, R):
    M, H = a.shape
    total = 0.0
    for q in range(-(Q - 1), Q):
        for r in range(-(R - 1), R):
            acc = 0j
            for m in range(M):
                for h in range(H):
                    if 0 <= m + q < M and 0 <= h + r < H:
                        acc += a[m + q, h] * np.conj(a[m, h + r])
            total += (1 - abs(q) / Q) * (1 - abs(r) / R) * acc.real
    return (M + Q) * (H + R) / (Q * R) * total, M * H / (Q * R) * total


def test_weyl_constant_table():
    M, H = 9, 5
    rep = ineq.check_weyl_aa(np.ones((M, H)), 1, 1)
    assert rep.lhs == pytest.approx((M * H) ** 2)
    assert rep.extra["correlation"] == pytest.approx(M * H)
    assert rep.extra["ratio_paper"] == pytest.approx(1.0)
    assert rep.passed


def test_weyl_random_unimodular_against_loops():
    a = np.exp(2j * np.pi * rng.random((16, 16)))
    rep = ineq.check_weyl_aa(a, 4, 4)
    rhs, rhs_paper = _naive_weyl_rhs(a, 4, 4)
    assert rep.rhs == pytest.approx(rhs, rel=1e-9)
    assert rep.extra["rhs_paper"] == pytest.approx(rhs_paper, rel=1e-9)
    assert rep.passed and 0 < rep.ratio < 1


def test_weyl_single_point():
    a = np.zeros((7, 6), dtype=complex)
    a[3, 2] = np.exp(0.4j)
    rep = ineq.check_weyl_aa(a, 3, 2)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs >= 1.0 and rep.passed


def test_weyl_range_errors():
    a = np.ones((4, 4))
    for Q, R in [(0, 1), (5, 1), (1, 5)]:
        with pytest.raises(ValueError):
            ineq.check_weyl_aa(a, Q, R)


def test_weyl_strengthened_form_never_fails():
    for _ in range(300):
        M, H = (int(v) for v in rng.integers(1, 33, size=2))
        a = rng.standard_normal((M, H)) + 1j * rng.standard_normal((M, H))
        a /= np.abs(a).max()
        rep = ineq.check_weyl_aa(a, int(rng.integers(1, M + 1)), int(rng.integers(1, H + 1)))
        assert rep.passed


def _product_weight(shape):
    def phi(pts):
        v = np.ones(pts.shape[0])
        for j, s in enumerate(shape):
            v = v * pts[:, j] / s
        return v[None, :]
    return phi


def test_partial_summation_one_dimension():
    a = rng.integers(-1, 2, size=(1, 20)).astype(complex)
    rep = ineq.check_partial_summation(a, lambda pts: np.ones((1, pts.shape[0])), 1.0)
    partial = np.abs(np.cumsum(a[0])).max()
    assert rep.lhs == pytest.approx(abs(a.sum()))
    assert rep.rhs == pytest.approx(2 * partial)
    assert rep.passed


def test_partial_summation_two_dimensions():
    shape = (6, 9)
    a = rng.integers(-1, 2, size=(1,) + shape).astype(complex)
    rep = ineq.check_partial_summation(a, _product_weight(shape), 1.0)
    # corner-box maximum by brute force
    best = max(abs(a[0, :i, :j].sum()) for i in range(1, 7) for j in range(1, 10))
    assert rep.rhs == pytest.approx(4 * best)
    assert rep.passed


def test_partial_summation_three_dimensions_exact_max():
    shape = (3, 4, 2)
    a = rng.standard_normal((2,) + shape) + 0j
    rep = ineq.check_partial_summation(a, lambda p: np.tile(_product_weight(shape)(p), (2, 1)), 1.0)
    best = max(sum(abs(a[i, :x, :y, :z].sum()) for i in range(2))
               for x in range(1, 4) for y in range(1, 5) for z in range(1, 3))
    assert rep.rhs == pytest.approx(8 * best)
    assert rep.passed


def test_partial_summation_zero_table():
    rep = ineq.check_partial_summation(np.zeros((1, 4, 4)), _product_weight((4, 4)), 1.0)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.ratio == 0 and rep.passed


def test_partial_summation_rejects_bad_D():
    shape = (5, 5)
    with pytest.raises(ineq.PreconditionError):
        ineq.check_partial_summation(np.ones((1,) + shape), lambda p: 3 * _product_weight(shape)(p), 1.0)


def test_third_derivative_cases():
    mu, M = 1e-3, 2**10
    g = polynomial([0, 0, 0, Fraction(mu) / 6], M)
    plain = ineq.check_third_derivative(g, None, M, mu)
    assert plain.rhs == pytest.approx(M * mu ** (1 / 6) + mu ** (-1 / 3))
    assert 0 < plain.ratio < 1
    u = polynomial([0, Fraction(math.sqrt(mu))], M)
    twisted = ineq.check_third_derivative(g, u, M, mu)
    assert 0.1 < twisted.ratio / plain.ratio < 10
    one = ineq.check_third_derivative(g, None, 1, mu)
    assert one.lhs == pytest.approx(1.0) and one.rhs >= mu ** (-1 / 3)


def test_third_derivative_certificate_violations():
    mu = 1e-3
    g = polynomial([0, 0, 0, Fraction(mu) / 6], 100)
    with pytest.raises(ineq.CertificateError):
        ineq.check_third_derivative(g, None, 100, 2 * mu)
    with pytest.raises(ineq.CertificateError):
        ineq.check_third_derivative(g, polynomial([0, 1], 100), 100, mu)


def test_shift_identity():
    for a, N in [([1] * 30, 4), ([3, -1, 4, 1, -5], 1), ([int(v) for v in rng.integers(-50, 50, 100)], 7)]:
        rep = ineq.check_shift_identity(a, N)
        assert rep.exact and rep.residual == 0 and rep.passed
    rep = ineq.check_shift_identity([1] * 30, 4)
    assert rep.lhs == 30 == rep.rhs
    floats = np.exp(2j * np.pi * rng.random(200))
    rep = ineq.check_shift_identity(floats, 9)
    assert not rep.exact and rep.relative < 1e-12 and rep.passed


def test_decomposition_cubic_exact():
    f = polynomial([Fraction(1, 2), Fraction(3, 5), Fraction(-2, 7), Fraction(1, 9)], 100)
    for m, r, q, h, n in [(40, 1, 2, 3, 2), (50, -2, -3, 4, 5), (30, 0, 1, 1, 1)]:
        rep = ineq.check_phase_decomposition(f, m, r, q, h, n)
        assert rep.exact and rep.residual == 0
        lhs, terms = ineq.decomposition_terms(f, m, r, q, h, n, True)
        assert terms[-1] == 0  # quartic tail vanishes


def test_decomposition_lower_bound_example_float():
    f = paper_example_phase(64)
    rep = ineq.check_phase_decomposition(f, 30, 1, 2, 3, 2, exact=False)
    assert rep.relative < 1e-12
    assert ineq.check_phase_decomposition(f, 30, 1, 2, 3, 2).residual == 0


def test_decomposition_r_zero_forms():
    f = quartic_phase(Fraction(1, 1000), 200)
    m, q, h, n = 60, 3, 4, 2
    lhs, terms = ineq.decomposition_terms(f, m, 0, q, h, n, True)
    assert p1_form(0, q, h, n) == q * h
    assert p2_form(0, q, h, n) == h * q * q + 2 * h * q * n
    direct = (f.exact_deriv(m + n + q + h) - f.exact_deriv(m + n + q - h)
              - f.exact_deriv(m + n + h) + f.exact_deriv(m + n - h))
    assert lhs == direct == sum(terms)


def test_decomposition_sign_of_cubic_correction():
    """With +r^3/3 f''' the identity would fail whenever r f''' != 0."""
    f = polynomial([0, 0, 0, Fraction(1, 6)], 100)
    m, r, q, h, n = 40, 2, 1, 3, 2
    lhs, terms = ineq.decomposition_terms(f, m, r, q, h, n, True)
    flipped = terms[:3] + [-terms[3]] + terms[4:]
    assert sum(terms) == lhs
    assert sum(flipped) != lhs


def test_decomposition_domain():
    with pytest.raises(Exception):
        ineq.check_phase_decomposition(paper_example_phase(20), 2, 1, 2, 3, 2)


def _inputs(x, y, ranges, mu=None):
    X1 = ineq.scan_form_max(ranges, p1_form)
    X2 = ineq.scan_form_max(ranges, p2_form)
    spread = float(np.max(y) - np.min(y))
    return dio.SpacingInputs(np.asarray(x, float), np.asarray(y, float), X1, X2,
                             mu if mu is not None else max(spread, 1e-3))


def test_double_sieve_zero_coefficients():
    ranges = (3, 3, 2, 2)
    inp = _inputs(rng.random(10), rng.random(10) * 1e-3, ranges)
    rep = ineq.check_double_sieve(inp, ranges, b=0.0)
    assert rep.lhs == 0 and rep.ratio == 0


def test_double_sieve_constant_sequences():
    R, Q, H, N, M = 3, 3, 2, 2, 12
    # integer constants make every inner term equal to 1
    inp = _inputs([2.0] * M, [-1.0] * M, (R, Q, H, N))
    rep = ineq.check_double_sieve(inp, (R, Q, H, N))
    assert rep.extra["spacing_B"] == M * M
    assert rep.lhs == pytest.approx((2 * (R - 1) * M * 2 * (Q - 1) * H * N) ** 2, rel=1e-12)
    logq = max(math.log(Q), 1.0)
    core = R * (1 + inp.X1) * (1 + inp.mu * inp.X2) * rep.extra["spacing_N"] * M * M * logq**2
    assert rep.rhs == pytest.approx(N * core)
    assert rep.extra["rhs_without_N"] == pytest.approx(core)


def test_double_sieve_preconditions():
    ranges = (3, 3, 2, 2)
    good = _inputs(rng.random(8), rng.random(8), ranges)
    with pytest.raises(ineq.PreconditionError):
        ineq.check_double_sieve(dio.SpacingInputs(good.x, good.y, good.X1, good.X2, 1e-6), ranges)
    with pytest.raises(ineq.PreconditionError):
        ineq.check_double_sieve(dio.SpacingInputs(good.x, good.y, 1.0, good.X2, good.mu), ranges)


def test_double_sieve_step5_desk_instance():
    lam, M = 1e-3, 200
    f = quartic_phase(Fraction(lam), M)
    ms = np.arange(1, M + 1, dtype=float)
    ranges = (2, 4, 2, 3)
    inp = _inputs(2 * f.deriv(ms, 2), f.deriv(ms, 3), ranges, mu=M * lam)
    rep = ineq.check_double_sieve(inp, ranges)
    assert math.isfinite(rep.ratio) and rep.ratio > 0


def test_ratio_report_conventions():
    assert ineq.safe_ratio(0, 0) == 0
    assert ineq.safe_ratio(1, 0) == math.inf
    rep = ineq.RatioReport.build("x", 3.0, 4.0, {})
    assert rep.ratio == 0.75
    assert set(rep.as_row()) == {"check_id", "lhs", "rhs", "ratio", "passed", "params"}
