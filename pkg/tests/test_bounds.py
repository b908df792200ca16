import math
from fractions import Fraction

import numpy as np
import pytest

from fourthderiv import bounds
from fourthderiv.phase import VdcConditionError, monomial, paper_example_phase, quartic_phase


def test_parameters_at_two_to_minus_26():
    sel = bounds.select_parameters(2.0**-26)
    assert (sel.M0, sel.H, sel.R, sel.Q, sel.N) == (65536, 16, 4, 64, 64)
    assert sel.transfer_constant == pytest.approx(4 * 256 * 65536 * 2.0**-26)


def test_exponents():
    assert bounds.EXPONENTS == {"M0": Fraction(8, 13), "H": Fraction(2, 13), "R": Fraction(1, 13),
                                "Q": Fraction(3, 13), "N": Fraction(3, 13)}


def test_threshold_boundary():
    t = bounds.r_threshold()
    assert t == pytest.approx(2.9078e-4, rel=1e-4)
    with pytest.raises(bounds.ParameterError):
        bounds.select_parameters(1.01 * t)
    assert bounds.select_parameters(0.99 * t).R == 2
    with pytest.raises(ValueError):
        bounds.select_parameters(1.5)


def test_selection_monotone():
    prev = None
    for k in range(12, 60):
        sel = bounds.select_parameters(2.0**-k)
        cur = (sel.M0, sel.H, sel.R, sel.Q, sel.N)
        if prev is not None:
            assert all(c >= p for c, p in zip(cur, prev))
        assert 2 * sel.R <= sel.H
        prev = cur


def test_selection_constant_overrides():
    sel = bounds.select_parameters(2.0**-26, {"Q": 0.5, "N": 2})
    assert sel.Q == 32 and sel.N == 128
    with pytest.raises(ValueError):
        bounds.select_parameters(2.0**-26, {"X": 1})


def test_check_bound_thm1_at_M0():
    M = 4096
    rep = bounds.check_bound(bounds.thm1_phase(M), M, "thm1")
    assert rep.lambda_ == pytest.approx(M ** (-13 / 8), rel=1e-12)
    eps = bounds.DEFAULT_EPSILON
    lam = rep.lambda_
    assert rep.bound_value == pytest.approx(M**eps * (M * lam ** (1 / 13) + lam ** (-7 / 13)))
    assert rep.ratio == pytest.approx(rep.sum_modulus / rep.bound_value)


def test_vdc14_linear_in_M():
    lam = 1e-6
    a = bounds.bound_value("vdc14", 1000, lam)
    assert bounds.bound_value("vdc14", 2000, lam) == pytest.approx(2 * a)


def test_large_lambda_is_flagged():
    rep = bounds.check_bound(quartic_phase(2, 50), 50, "vdc14")
    assert any("lambda >= 1" in n for n in rep.notes)
    with pytest.raises(VdcConditionError):
        bounds.check_bound(monomial(1, 3, 50), 50, "thm1")


def test_range_flags():
    lam = 1e-6
    assert bounds.in_bound_range("short14", math.ceil(lam ** (-3 / 7)), lam)
    assert not bounds.in_bound_range("vdc14", 10, lam)
    assert bounds.in_bound_range("thm1", 1, lam)


def test_lower_bound_example():
    rep = bounds.lower_bound_example(200)
    assert rep.lambda_ == pytest.approx(0.24 * 200.0**-4, rel=1e-14)
    f = paper_example_phase(200)
    direct = abs(sum(np.exp(2j * np.pi * float(f.exact_deriv(m) % 1)) for m in range(1, 201)))
    assert rep.sum_modulus == pytest.approx(direct, rel=1e-12)
    assert rep.ratio == pytest.approx(direct / rep.lambda_ ** -0.25, rel=1e-12)
    ratios = [bounds.lower_bound_example(M).ratio for M in (100, 200, 400, 800)]
    assert max(ratios) / min(ratios) < 2
    with pytest.raises(ValueError):
        bounds.lower_bound_example(8)


def test_sweep_constants():
    assert bounds.BETA_WINDOW == (Fraction(9, 28), Fraction(3, 7))
    assert bounds.CONJECTURE_EXPONENTS == {"conj1": Fraction(3, 38), "conj2": Fraction(1, 12)}


def test_sweep_beta_small_grid():
    cfg = {"M_grid": [256, 512, 1024], "mode": "beta"}
    res = bounds.sweep_beta(cfg)
    assert len(res.reports) == 3 * len(bounds.DEFAULT_B_GRID)
    assert res.fit["rank"] == 3
    assert res.beta_min is None or 0 < res.beta_min <= 1
    again = bounds.sweep_beta(cfg, workers=2)
    assert [r.as_row() for r in again.reports] == [r.as_row() for r in res.reports]
    assert again.fit == res.fit
    summary = res.summary()
    assert summary["beta_window"] == [9 / 28, 3 / 7]


def test_sweep_thm1_collinear_fit():
    res = bounds.sweep_beta({"mode": "thm1", "M_grid": [256, 512, 1024, 2048]})
    assert res.fit["rank"] == 2 and res.fit["exponent_lambda"] is None


def test_sweep_errors():
    with pytest.raises(bounds.DegenerateFitError):
        bounds.sweep_beta({"mode": "thm1", "M_grid": [256, 512]})
    with pytest.raises(ValueError):
        bounds.SweepConfig.from_dict({"mode": "nope"})
    with pytest.raises(ValueError):
        bounds.SweepConfig.from_dict({"bogus": 1})


def test_sweep_lambda_grid():
    cfg = bounds.SweepConfig.from_dict({"lambda_grid": [2.0**-13, 2.0**-26], "mode": "conj1"})
    assert list(cfg.M_grid) == [256, 65536]


def test_smallest_beta():
    mk = lambda M, lam, ratio: bounds.BoundReport(M, lam, ratio, 1.0, ratio, "short14", True, [])
    # b = log M / log(1/lambda) is 0.5, 1/3, 0.25 for these three cells
    reps = [mk(100, 1e-4, 0.5), mk(100, 1e-6, 0.9), mk(100, 1e-8, 2.0)]
    assert bounds.smallest_beta(reps) == pytest.approx(1 / 3)
    assert bounds.smallest_beta([mk(100, 1e-4, 2.0), mk(100, 1e-6, 0.5)]) is None
    assert bounds.smallest_beta(reps[:2]) == pytest.approx(1 / 3)


def test_pipeline_small_lambda():
    rep = bounds.run_pipeline(2.0**-13)
    assert rep.selection.M0 == 256
    ids = [r.check_id for r in rep.ratios]
    assert ids == ["a_process", "dyadic_h1", "a_process_dyadic", "weyl_aa", "remainder_00",
                   "remainder_q0", "remainder_r0", "differenced_4_10", "shift_4_12",
                   "double_sieve", "sieve_4_21", "spacing_b", "spacing_n"]
    assert all(math.isfinite(r.ratio) and r.ratio > 0 for r in rep.ratios)
    assert rep.exact_ok
    assert rep.info["K"] == pytest.approx(1 / (rep.info["certificate"]["lambda_"] * rep.info["X2"]))
    b = rep.ratio("spacing_b")
    assert b.rhs == pytest.approx(256 * math.log(256))


def test_pipeline_uses_derivative_sequences():
    rep = bounds.run_pipeline(2.0**-13)
    assert rep.info["mu"] == pytest.approx(256 * 2.0**-13)


def test_pipeline_budget():
    from fourthderiv.diophantine import BudgetExceeded
    with pytest.raises(BudgetExceeded):
        bounds.run_pipeline(2.0**-13, budget=bounds.PipelineBudget(max_tuples=10))
