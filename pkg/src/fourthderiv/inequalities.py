"""Executable forms of the lemma-level inequalities and identities.

Inequalities whose constants are only known to exist produce a
:class:`RatioReport` (both sides and their ratio).  Identities produce an
:class:`ExactReport` with the residual and the tolerance it was judged at.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import diophantine as dio
from .expsum import e, stable_sum, sum_sieve_form, sieve_grid, r_values
from .forms import p1_form, p2_form
from .phase import PhaseFunction, PolynomialPhase, delta_h, u_phase


class PreconditionError(ValueError):
    """Inputs do not meet a lemma's hypotheses, so its conclusion is not tested."""


class CertificateError(PreconditionError):
    """Derivative-size hypotheses fail on the sampled points."""


def safe_ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


@dataclass
class RatioReport:
    check_id: str
    lhs: float
    rhs: float
    ratio: float
    params: dict
    passed: bool | None = None  # None when no pass/fail form exists
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(cls, check_id: str, lhs, rhs, params: dict, passed=None, **extra) -> "RatioReport":
        lhs, rhs = float(lhs), float(rhs)
        return cls(check_id, lhs, rhs, safe_ratio(lhs, rhs), dict(params), passed, extra)

    def as_row(self) -> dict:
        return {"check_id": self.check_id, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "passed": self.passed, "params": self.params}


@dataclass
class ExactReport:
    check_id: str
    lhs: object
    rhs: object
    residual: float
    relative: float
    tolerance: float
    exact: bool
    params: dict

    @property
    def passed(self) -> bool:
        if self.exact:
            return self.residual == 0
        return self.relative <= self.tolerance


# -- Lemma 1 ------------------------------------------------------------

def weighted_correlations(a: np.ndarray, Q: int, R: int):
    """Weighted shifted correlations on the grid ``|q| < Q``, ``|r| < R``.

    Returns ``(W, qs, rs)`` where ``W[i, j]`` is the real part of
    ``(1-|q|/Q)(1-|r|/R) sum_{m,h} a(m+q, h) conj(a(m, h+r))`` at
    ``q = qs[i]``, ``r = rs[j]``.
    """
    M, H = a.shape
    F = np.fft.fft2(a, s=(2 * M, 2 * H))
    X = np.fft.ifft2(F * np.conj(F))  # X[s, t] = sum a(m+s, h+t) conj(a(m, h))
    qs = np.arange(-(Q - 1), Q)
    rs = np.arange(-(R - 1), R)
    # sum a(m+q, h) conj(a(m, h+r)) equals X[q, -r]
    C = X[np.ix_(qs % (2 * M), (-rs) % (2 * H))].real
    w = np.outer(1 - np.abs(qs) / Q, 1 - np.abs(rs) / R)
    return w * C, qs, rs


def check_weyl_aa(a, Q: int, R: int, constant: float = 1.0) -> RatioReport:
    """Two-dimensional differencing inequality for a table ``a`` on ``[1,M] x [1,H]``.

    The pass/fail form uses the prefactor ``(M+Q)(H+R)/(QR)``; the ratio
    against ``MH/(QR)`` is reported as ``extra['ratio_paper']``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("a must be a non-empty 2-d table")
    if not np.all(np.isfinite(a)):
        raise ValueError("a must be finite")
    M, H = a.shape
    if not (1 <= Q <= M and 1 <= R <= H):
        raise ValueError(f"need 1 <= Q <= M={M} and 1 <= R <= H={H}, got Q={Q}, R={R}")
    lhs = abs(stable_sum(a)) ** 2
    wc, _, _ = weighted_correlations(a, Q, R)
    corr = math.fsum(wc.ravel())
    rhs = constant * (M + Q) * (H + R) / (Q * R) * corr
    rhs_paper = M * H / (Q * R) * corr
    # FFT rounding in the correlation sum
    slack = 1e-9 * max(1.0, float(np.sum(np.abs(a)) ** 2))
    return RatioReport.build(
        "weyl_aa", lhs, rhs, {"M": M, "H": H, "Q": Q, "R": R},
        passed=bool(lhs <= rhs + slack), rhs_paper=rhs_paper,
        ratio_paper=safe_ratio(lhs, rhs_paper), correlation=corr, constant=constant,
    )


# -- Lemma 2 ------------------------------------------------------------

def _mixed_partial(phi: Callable, x: np.ndarray, axes: Sequence[int], step: float) -> np.ndarray:
    """Central-difference mixed partial of ``phi`` along distinct ``axes``."""
    total = 0.0
    for signs in itertools.product((1, -1), repeat=len(axes)):
        shift = np.zeros(x.shape[-1])
        for ax, s in zip(axes, signs):
            shift[ax] = s * step
        total = total + np.prod(signs) * phi(x + shift)
    return total / (2 * step) ** len(axes)


def verify_smooth_weight(phi: Callable, shape: Sequence[int], D: float, samples: int = 64,
                         seed: int = 0, rtol: float = 1e-4) -> float:
    """Largest value of ``|d^r phi| * M_j1...M_jr / D`` over sampled points.

    ``phi`` maps an ``(n, k)`` array of points to ``(I, n)`` values (one row
    per family member).  Raises :class:`PreconditionError` if the bound of
    ``D`` fails by more than ``rtol`` (finite differences are approximate).
    """
    k = len(shape)
    rng = np.random.default_rng(seed)
    upper = np.array(shape, dtype=float)
    corners = np.array(list(itertools.product(*[(1.0, float(s)) for s in shape])))
    pts = np.vstack([corners, 1 + rng.random((samples, k)) * (upper - 1)])
    step = 1e-3
    inner = np.clip(pts, 1 + step, np.maximum(upper - step, 1 + step))
    worst = 0.0
    for order in range(k + 1):
        for axes in itertools.combinations(range(k), order):
            vals = np.abs(_mixed_partial(phi, inner, axes, step) if axes else phi(pts))
            scale = float(np.prod([shape[j] for j in axes])) if axes else 1.0
            worst = max(worst, float(np.max(vals)) * scale / D)
    if worst > 1 + rtol:
        raise PreconditionError(f"D={D} does not bound the weight derivatives (worst {worst:.6g} D)")
    return worst


def check_partial_summation(a, phi: Callable, D: float, verify: bool = True) -> RatioReport:
    """Multidimensional partial summation.

    ``a`` has shape ``(I, M1, ..., Mk)``; ``phi`` is as in
    :func:`verify_smooth_weight`.  The maximum over corner boxes
    ``[1,M1'] x ... x [1,Mk']`` is taken over every such box, for any ``k``,
    via cumulative sums.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2:
        raise ValueError("a must have shape (I, M1, ..., Mk)")
    shape = a.shape[1:]
    k = len(shape)
    if D <= 0:
        raise ValueError("D must be positive")
    worst = verify_smooth_weight(phi, shape, D) if verify else None
    grids = np.meshgrid(*[np.arange(1, s + 1, dtype=float) for s in shape], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.asarray(phi(pts)).reshape((a.shape[0],) + tuple(shape))
    lhs = math.fsum(np.abs(np.sum((a * weights).reshape(a.shape[0], -1), axis=1)))
    prefix = a
    for ax in range(1, k + 1):
        prefix = np.cumsum(prefix, axis=ax)
    box_totals = np.sum(np.abs(prefix), axis=0)
    best = float(box_totals.max())
    arg = np.unravel_index(int(np.argmax(box_totals)), box_totals.shape)
    rhs = 2**k * D * best
    return RatioReport.build(
        "partial_sum", lhs, rhs, {"k": k, "shape": list(shape), "I": int(a.shape[0]), "D": D},
        passed=bool(lhs <= rhs * (1 + 1e-12) + 1e-12), best_box=[int(i) + 1 for i in arg],
        weight_check=worst,
    )


# -- Lemma 3 ------------------------------------------------------------

def check_third_derivative(g: PhaseFunction, u: PhaseFunction | None, M: int, mu: float,
                           C: float = 4.0) -> RatioReport:
    """Sum of ``e(g(m) + u(m))`` against ``M mu^(1/6) + mu^(-1/3)``.

    Hypotheses checked on ``{1, 1.5, ..., M}``: ``mu <= |g'''| <= C mu`` and
    ``|u'| <= C mu^(1/2)``.
    """
    if M < 1 or mu <= 0:
        raise ValueError("need M >= 1 and mu > 0")
    xs = np.arange(1.0, M + 0.25, 0.5)
    g3 = np.abs(np.atleast_1d(g.deriv(xs, 3)))
    if g3.min() < mu * (1 - 1e-12) or g3.max() > C * mu * (1 + 1e-12):
        raise CertificateError(f"|g'''| in [{g3.min():.6g}, {g3.max():.6g}] not within [mu, {C}mu]")
    frac = g.frac_at(np.arange(1, M + 1))
    if u is not None:
        u1 = np.abs(np.atleast_1d(u.deriv(xs, 1)))
        if u1.max() > C * math.sqrt(mu) * (1 + 1e-12):
            raise CertificateError(f"|u'| reaches {u1.max():.6g} > {C} mu^(1/2)")
        frac = frac + u.frac_at(np.arange(1, M + 1))
    lhs = abs(stable_sum(e(frac)))
    rhs = M * mu ** (1 / 6) + mu ** (-1 / 3)
    return RatioReport.build("third_deriv", lhs, rhs, {"M": M, "mu": mu, "C": C,
                                                      "twisted": u is not None})


# -- exact identities -------------------------------------------------------

def _is_rational_seq(values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def check_shift_identity(a: Sequence, N: int) -> ExactReport:
    """``sum_m a(m) == (1/N) sum_{n<=N} sum_{1-n <= m <= M-n} a(m+n)``.

    Rational inputs are compared exactly; otherwise the residual is taken
    relative to ``sum |a(m)|`` with tolerance 1e-12.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    vals = list(a)
    M = len(vals)
    exact = _is_rational_seq(vals)
    if exact:
        lhs = sum((Fraction(v) for v in vals), Fraction(0))
        rhs = Fraction(0)
        for n in range(1, N + 1):
            # m runs over 1-n .. M-n, so m + n covers 1 .. M
            rhs += sum((Fraction(vals[m + n - 1]) for m in range(1 - n, M - n + 1)), Fraction(0))
        rhs /= N
        residual = abs(lhs - rhs)
        return ExactReport("shift", lhs, rhs, float(residual),
                           float(residual / max(abs(lhs), 1)), 0.0, True, {"M": M, "N": N})
    arr = np.asarray(vals, dtype=complex)
    lhs = stable_sum(arr)
    shifted = [stable_sum(arr[np.arange(1 - n, M - n + 1) + n - 1]) for n in range(1, N + 1)]
    rhs = complex(math.fsum(s.real for s in shifted), math.fsum(s.imag for s in shifted)) / N
    residual = abs(lhs - rhs)
    scale = max(float(np.sum(np.abs(arr))), 1e-300)
    return ExactReport("shift", lhs, rhs, residual, residual / scale, 1e-12, False,
                       {"M": M, "N": N})


def decomposition_terms(f: PhaseFunction, m, r, q, h, n, exact: bool):
    """Both sides of the Taylor decomposition of the doubly differenced phase.

    Returns ``(lhs, [rhs terms])`` with
    ``lhs = Delta_h f(m+n+q) - Delta_{h+r} f(m+n)`` and terms
    ``-2r f'(m)``, ``2 f''(m) P1``, ``f'''(m) P2``, ``-(r^3/3) f'''(m)``,
    ``u_{m,r}(q,h,n)``.
    """
    d = (lambda j: f.exact_deriv(m, j)) if exact else (lambda j: f.deriv(float(m), j))
    p1 = p1_form(r, q, h, n)
    p2 = p2_form(r, q, h, n)
    lhs = delta_h(f, m + n + q, h, exact=exact) - delta_h(f, m + n, h + r, exact=exact)
    cube = Fraction(r**3, 3) if exact else r**3 / 3.0
    terms = [-2 * r * d(1), 2 * d(2) * p1, d(3) * p2, -cube * d(3),
             u_phase(f, m, r, q, h, n, exact=exact)]
    return lhs, terms


def check_phase_decomposition(f: PhaseFunction, m: int, r: int, q: int, h: int, n: int,
                              exact: bool | None = None) -> ExactReport:
    """Verify the Taylor decomposition of ``Delta_h f(m+n+q) - Delta_{h+r} f(m+n)``.

    With ``exact`` (default: whenever ``f`` has an exact evaluator) the check
    is in rational arithmetic and requires a zero residual.  Otherwise the
    residual is relative to the largest ``|f|`` value or term involved, at
    1e-10 for polynomial phases and 1e-8 for others.
    """
    exact = f.is_exact if exact is None else exact
    if exact and not f.is_exact:
        raise ValueError("exact evaluation requested for a phase without one")
    pts = [m, m + n + q + h, m + n + q - h, m + n + h + r, m + n - h - r]
    f.check_domain(*pts)
    lhs, terms = decomposition_terms(f, m, r, q, h, n, exact)
    params = {"m": m, "r": r, "q": q, "h": h, "n": n, "family": f.family}
    if exact:
        rhs = sum(terms, Fraction(0))
        residual = abs(lhs - rhs)
        scale = max([abs(f.exact_deriv(p, 0)) for p in pts] + [abs(t) for t in terms] + [Fraction(1, 10**300)])
        return ExactReport("decomposition", lhs, rhs, float(residual), float(residual / scale),
                           0.0, True, params)
    rhs = math.fsum(terms)
    residual = abs(lhs - rhs)
    scale = max([abs(f.deriv(float(p), 0)) for p in pts] + [abs(t) for t in terms] + [1e-300])
    tol = 1e-10 if isinstance(f, PolynomialPhase) else 1e-8
    return ExactReport("decomposition", lhs, rhs, residual, residual / scale, tol, False, params)


# -- Lemma 4 ------------------------------------------------------------

def scan_form_max(ranges, P: Callable) -> float:
    """``max |P(r, q, h, n)|`` over ``0<|r|<R``, ``0<|q|<Q``, ``H<=h<2H``, ``1<=n<=N``."""
    R, Q, H, N = (int(v) for v in ranges)
    q, h, n = sieve_grid(Q, H, N)
    best = 0.0
    for r in r_values(R):
        vals = np.asarray(P(np.full(q.shape, r), q, h, n), dtype=float)
        if vals.size:
            best = max(best, float(np.max(np.abs(vals))))
    return best


def scan_preconditions(inputs: dio.SpacingInputs, ranges, P1: Callable, P2: Callable) -> dict:
    y = np.asarray(inputs.y, dtype=float)
    spread = float(y.max() - y.min()) if y.size else 0.0
    p1max = scan_form_max(ranges, P1)
    p2max = scan_form_max(ranges, P2)
    problems = []
    if spread > inputs.mu:
        problems.append(f"max |y_m - y_m'| = {spread:.17g} exceeds mu = {inputs.mu:.17g}")
    if p1max > inputs.X1:
        problems.append(f"max |P1| = {p1max:.17g} exceeds X1 = {inputs.X1:.17g}")
    if p2max > inputs.X2:
        problems.append(f"max |P2| = {p2max:.17g} exceeds X2 = {inputs.X2:.17g}")
    if problems:
        raise PreconditionError("; ".join(problems))
    return {"y_spread": spread, "P1_max": p1max, "P2_max": p2max}


def check_double_sieve(inputs: dio.SpacingInputs, ranges, b=None, P1: Callable = p1_form,
                       P2: Callable = p2_form, budget: int = dio.DEFAULT_BUDGET) -> RatioReport:
    """``S~^2`` against ``R (1+X1)(1+mu X2) N 𝒩 ℬ (log Q)^2``.

    Hypotheses on ``y`` spread and on ``max |P_i|`` are scanned before
    anything else.  ``extra['rhs_without_N']`` drops the factor ``N``.
    """
    R, Q, H, N = (int(v) for v in ranges)
    scan = scan_preconditions(inputs, (R, Q, H, N), P1, P2)
    s_tilde = sum_sieve_form(inputs.x, inputs.y, b, (R, Q, H, N), P1, P2)
    n_count = dio.count_spacing_N((R, Q, H, N), inputs.mu, P1, P2, budget=budget)
    b_count = dio.count_spacing_B(inputs, budget=budget)
    logq = max(math.log(Q), 1.0)
    core = R * (1 + inputs.X1) * (1 + inputs.mu * inputs.X2) * n_count.count * b_count.count * logq**2
    return RatioReport.build(
        "double_sieve", s_tilde**2, N * core,
        {"M": len(inputs.x), "R": R, "Q": Q, "H": H, "N": N, "X1": inputs.X1, "X2": inputs.X2,
         "mu": inputs.mu},
        s_tilde=s_tilde, spacing_N=n_count.count, spacing_B=b_count.count,
        best_Q1=n_count.details.get("best_Q1"), rhs_without_N=core,
        ratio_without_N=safe_ratio(s_tilde**2, core), **scan,
    )
