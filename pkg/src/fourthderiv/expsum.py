"""Evaluation of the exponential sums used throughout the package.

Phases are reduced modulo 1 before any trigonometric evaluation.  Sums of
unit-modulus terms are accumulated block-wise with ``math.fsum`` (fixed block
boundaries) and the block totals are combined along a fixed pairwise tree
with compensated additions, so a result never depends on how the work was
split between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .forms import p1_form, p2_form
from .phase import PhaseFunction

EPS = np.finfo(float).eps
BLOCK = 1024
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ComplexSum:
    value: complex
    terms: int
    error_bound: float

    def __abs__(self) -> float:
        return abs(self.value)


def e(frac) -> np.ndarray:
    """``exp(2 pi i x)`` for phases already reduced modulo 1."""
    t = np.asarray(frac, dtype=float)
    t = t - np.round(t)  # into [-1/2, 1/2]
    theta = TWO_PI * t
    return np.cos(theta) + 1j * np.sin(theta)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bp = s - a
    return s, (a - (s - bp)) + (b - bp)


def _tree_reduce(parts: list[tuple[float, float]]) -> float:
    """Pairwise tree over (sum, compensation) pairs in fixed index order."""
    if not parts:
        return 0.0
    level = parts
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            (s1, c1), (s2, c2) = level[i], level[i + 1]
            s, err = _two_sum(s1, s2)
            nxt.append((s, c1 + c2 + err))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    s, c = level[0]
    return s + c


def block_partials(values: np.ndarray) -> list[tuple[complex, complex]]:
    """Per-block ``fsum`` partials of a complex vector (fixed block size)."""
    values = np.asarray(values, dtype=complex).ravel()
    out = []
    for start in range(0, values.size, BLOCK):
        chunk = values[start:start + BLOCK]
        out.append((math.fsum(chunk.real), math.fsum(chunk.imag)))
    return out


def reduce_partials(partials: Sequence[tuple[float, float]]) -> complex:
    re = _tree_reduce([(p[0], 0.0) for p in partials])
    im = _tree_reduce([(p[1], 0.0) for p in partials])
    return complex(re, im)


def stable_sum(values: np.ndarray) -> complex:
    return reduce_partials(block_partials(values))


def combine(sums: Iterable[ComplexSum]) -> ComplexSum:
    """Merge independently computed cells in the order given."""
    sums = list(sums)
    value = reduce_partials([(s.value.real, s.value.imag) for s in sums])
    return ComplexSum(
        value=value,
        terms=sum(s.terms for s in sums),
        error_bound=sum(s.error_bound for s in sums) + EPS * abs(value),
    )


def _phase_error(f: PhaseFunction, m: np.ndarray) -> float:
    """Absolute rounding in the reduced phases (0 when reduction is exact)."""
    if f.is_exact:
        return 0.0
    return float(np.sum(np.abs(f.deriv(np.asarray(m, dtype=float), 0)))) * EPS


def _from_terms(values: np.ndarray, phase_err: float) -> ComplexSum:
    value = stable_sum(values)
    n = int(values.size)
    bound = n * 6.0 * EPS + TWO_PI * phase_err + EPS * abs(value)
    return ComplexSum(value=value, terms=n, error_bound=bound)


def sum_phase(f: PhaseFunction, M: int | None = None, *, start: int = 1) -> ComplexSum:
    """``sum_{m=start}^{M} e(f(m))``."""
    M = f.M if M is None else int(M)
    if M > f.M:
        raise ValueError(f"M={M} exceeds the phase domain end {f.M}")
    if M < start:
        raise ValueError("empty summation range")
    frac = f.frac_range(start, M) if start == 1 else f.frac_at(np.arange(start, M + 1))
    return _from_terms(e(frac), _phase_error(f, np.arange(start, M + 1)))


def differenced_row(f: PhaseFunction, h: int, M: int | None = None) -> np.ndarray:
    """Terms ``e(Delta_h f(m))`` for ``m = h+1 .. M-h`` (possibly empty)."""
    M = f.M if M is None else int(M)
    frac = f.frac_range(1, M)  # frac[k] = f(k + 1) mod 1
    lo, hi = h + 1, M - h
    if hi < lo:
        return np.zeros(0, dtype=complex)
    ms = np.arange(lo, hi + 1)
    return e(frac[ms + h - 1] - frac[ms - h - 1])


def differenced_sums(f: PhaseFunction, hs: Iterable[int], M: int | None = None) -> list[ComplexSum]:
    """One cell per ``h``: ``a_h = sum_{m=h+1}^{M-h} e(Delta_h f(m))``."""
    M = f.M if M is None else int(M)
    err = 0.0 if f.is_exact else _phase_error(f, np.arange(1, M + 1)) / max(M, 1)
    out = []
    for h in hs:
        row = differenced_row(f, int(h), M)
        out.append(_from_terms(row, 2 * err * row.size))
    return out


def sum_differenced(f: PhaseFunction, H1: int, M: int | None = None) -> ComplexSum:
    """``S(H1) = sum_{h=H1}^{2H1-1} sum_{m=h+1}^{M-h} e(Delta_h f(m))``."""
    M = f.M if M is None else int(M)
    if H1 < 1 or 2 * H1 > M / 2:
        raise ValueError(f"need 1 <= H1 and 2*H1 <= M/2 (H1={H1}, M={M})")
    if M > f.M:
        raise ValueError(f"M={M} exceeds the phase domain end {f.M}")
    return combine(differenced_sums(f, range(H1, 2 * H1), M))


# -- bilinear sieve form ---------------------------------------------------------

def _coerce_ranges(ranges) -> tuple[int, int, int, int]:
    if isinstance(ranges, dict):
        vals = (ranges["R"], ranges["Q"], ranges["H"], ranges["N"])
    else:
        vals = tuple(ranges)
    R, Q, H, N = (int(v) for v in vals)
    if min(R, Q, H, N) < 1:
        raise ValueError(f"ranges must be positive integers, got {vals}")
    return R, Q, H, N


def sieve_grid(Q: int, H: int, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flattened ``(q, h, n)`` with ``0 < |q| < Q``, ``H <= h < 2H``, ``1 <= n <= N``."""
    qs = np.concatenate([np.arange(-(Q - 1), 0), np.arange(1, Q)])
    hs = np.arange(H, 2 * H)
    ns = np.arange(1, N + 1)
    qg, hg, ng = np.meshgrid(qs, hs, ns, indexing="ij")
    return qg.ravel(), hg.ravel(), ng.ravel()


def r_values(R: int) -> np.ndarray:
    return np.concatenate([np.arange(-(R - 1), 0), np.arange(1, R)])


def _coefficients(b, r: int, q, h, n) -> np.ndarray:
    if b is None:
        return np.ones(q.size, dtype=complex)
    if callable(b):
        vals = np.asarray(b(np.full(q.shape, r), q, h, n), dtype=complex)
        return np.broadcast_to(vals, q.shape).astype(complex)
    if np.ndim(b) == 0:
        return np.full(q.size, complex(b))
    raise TypeError("b must be None, a scalar, or a callable b(r, q, h, n)")


def _reduced(values: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    """``values * coeff mod 1``; reduces ``values`` first when ``coeff`` is integral."""
    if np.all(coeff == np.round(coeff)):
        return np.mod(values, 1.0)
    return values


def sieve_inner_sums(x, y, b, r: int, ranges, P1: Callable = p1_form, P2: Callable = p2_form,
                     batch_elems: int = 4_000_000) -> np.ndarray:
    """Inner triple sums ``sum_{q,h,n} b_r(q,h,n) e(x_m P1 + y_m P2)`` for every m."""
    R, Q, H, N = _coerce_ranges(ranges)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q, h, n = sieve_grid(Q, H, N)
    if q.size == 0:
        return np.zeros(x.size, dtype=complex)
    rr = np.full(q.shape, r)
    p1 = np.asarray(P1(rr, q, h, n), dtype=float)
    p2 = np.asarray(P2(rr, q, h, n), dtype=float)
    coeff = _coefficients(b, r, q, h, n)
    xs = _reduced(x, p1)
    ys = _reduced(y, p2)
    out = np.empty(x.size, dtype=complex)
    step = max(1, batch_elems // q.size)
    for start in range(0, x.size, step):
        sl = slice(start, start + step)
        phase = np.mod(np.outer(xs[sl], p1) + np.outer(ys[sl], p2), 1.0)
        out[sl] = e(phase) @ coeff
    return out


def sum_sieve_form(x, y, b, ranges, P1: Callable = p1_form, P2: Callable = p2_form) -> float:
    """Sum over ``0<|r|<R`` and ``m`` of the moduli of the inner triple sums."""
    R, Q, H, N = _coerce_ranges(ranges)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if x.size == 0 or R < 2 or Q < 2:
        raise ValueError("empty summation range (need M >= 1, R >= 2, Q >= 2)")
    cells = [math.fsum(np.abs(sieve_inner_sums(x, y, b, int(r), (R, Q, H, N), P1, P2)))
             for r in r_values(R)]
    return math.fsum(cells)
