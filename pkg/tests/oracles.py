"""Brute-force reference implementations used as independent test oracles.

Nothing here imports the counting code under test; the integer-range
convention is re-derived locally from its definition.
"""

from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np


def _signed(lo: int, hi: int) -> list[int]:
    """Integers with lo <= |x| <= hi, both signs."""
    return [s * v for v in range(lo, hi + 1) for s in (-1, 1)]


def _threshold(delta, H, Q):
    if all(isinstance(v, (int, Fraction)) for v in (delta, H, Q)):
        return Fraction(delta) * Fraction(H) * Fraction(Q) ** 2
    return float(delta) * float(H) * float(Q) ** 2


def divisor_sieve(limit: int) -> tuple[list[int], list[int]]:
    """tau and sigma for 0..limit by marking multiples of every d."""
    tau = [0] * (limit + 1)
    sig = [0] * (limit + 1)
    for d in range(1, limit + 1):
        for k in range(d, limit + 1, d):
            tau[k] += 1
            sig[k] += d
    return tau, sig


def naive_count_system(R, Q, H, N, delta) -> int:
    """Plain seven-fold loop over the box."""
    rs = _signed(1, math.ceil(R) - 1)
    qs = _signed(math.ceil(Q), math.ceil(2 * Q) - 1)
    hs = list(range(math.ceil(H), math.ceil(2 * H)))
    ns = list(range(1, math.floor(N) + 1))
    T = _threshold(delta, H, Q)
    count = 0
    for r, q1, q2, h1, h2, n1, n2 in itertools.product(rs, qs, qs, hs, hs, ns, ns):
        if q1 * q2 <= 0:
            continue
        if r * n1 + h1 * q1 != r * n2 + h2 * q2:
            continue
        lhs = (r * n1 * n1 + 2 * h1 * q1 * n1 + h1 * q1 * q1) - (r * n2 * n2 + 2 * h2 * q2 * n2 + h2 * q2 * q2)
        if abs(lhs) <= T:
            count += 1
    return count


def brute_count_system_grid(R, Q, H, N, deltas) -> list[int]:
    """Full broadcast over the 7-dimensional box (numpy), one count per delta."""
    rs = np.array(_signed(1, math.ceil(R) - 1), dtype=np.int64)
    qs = np.array(_signed(math.ceil(Q), math.ceil(2 * Q) - 1), dtype=np.int64)
    hs = np.arange(math.ceil(H), math.ceil(2 * H), dtype=np.int64)
    ns = np.arange(1, math.floor(N) + 1, dtype=np.int64)
    if min(rs.size, qs.size, hs.size, ns.size) == 0:
        return [0 for _ in deltas]
    r, q1, q2, h1, h2, n1, n2 = np.ix_(rs, qs, qs, hs, hs, ns, ns)
    first = (r * n1 + h1 * q1) == (r * n2 + h2 * q2)
    same_sign = (q1 * q2) > 0
    second = np.abs((r * n1 * n1 + 2 * h1 * q1 * n1 + h1 * q1 * q1)
                    - (r * n2 * n2 + 2 * h2 * q2 * n2 + h2 * q2 * q2))
    mask = first & same_sign
    shape = np.broadcast_shapes(mask.shape, second.shape)
    vals = np.broadcast_to(second, shape)[np.broadcast_to(mask, shape)]
    out = []
    for d in deltas:
        T = _threshold(d, H, Q)
        out.append(int(np.count_nonzero(vals <= T)))
    return out


def naive_reduced(R, Q, H, delta, coprime=True, dconst=4) -> int:
    rs = _signed(1, math.ceil(R) - 1)
    qs = _signed(math.ceil(Q), math.ceil(2 * Q) - 1)
    hs = list(range(math.ceil(H), math.ceil(2 * H)))
    dlim = dconst * (1 + Fraction(delta)) * Fraction(Q) if isinstance(delta, (int, Fraction)) \
        else dconst * (1 + delta) * Q
    dmax = math.floor(dlim)
    T = _threshold(delta, H, Q)
    count = 0
    for r, q1, q2, h1, h2 in itertools.product(rs, qs, qs, hs, hs):
        if q1 * q2 <= 0:
            continue
        for d in range(-dmax, dmax + 1):
            if d == 0 or r * d + h1 * q1 - h2 * q2 != 0:
                continue
            if abs(r * d * d + 2 * h1 * q1 * d + h1 * q1 * q1 - h2 * q2 * q2) > T:
                continue
            if coprime and (math.gcd(math.gcd(d, q1), q2) != 1 or math.gcd(math.gcd(r, h1), h2) != 1):
                continue
            count += 1
    return count


def naive_lemma5(a, b, c, V, alpha, beta) -> int:
    """Triple loop over a box containing every admissible (u, v, w)."""
    alpha, beta = Fraction(alpha), Fraction(beta)
    vmax = math.floor(2 * V)
    umax = math.ceil(max(abs(alpha), abs(beta)) * vmax) + 1
    wmax = (abs(a) * umax + abs(b) * vmax) // c + 1
    count = 0
    for u in range(-umax, umax + 1):
        for v in range(1, vmax + 1):
            if v < V or u == 0:
                continue
            if not (alpha <= Fraction(u, v) <= beta):
                continue
            for w in range(-wmax, wmax + 1):
                if w != 0 and a * u + b * v + c * w == 0 and math.gcd(math.gcd(u, v), w) == 1:
                    count += 1
    return count


def naive_spacing_B(x, y, X1, X2) -> int:
    count = 0
    for xa, ya in zip(x, y):
        for xb, yb in zip(x, y):
            d = xa - xb
            if abs(d - round(d)) <= 1 / X1 and abs(ya - yb) <= 1 / X2:
                count += 1
    return count


def naive_spacing_N(R, Q, H, N, mu, P1, P2) -> int:
    rs = _signed(1, math.ceil(R) - 1)
    hs = range(math.ceil(H), math.ceil(2 * H))
    ns = range(1, math.floor(N) + 1)
    best = 0
    q1 = 1
    while q1 < Q:
        qs = _signed(q1, math.ceil(min(2 * q1, Q)) - 1)
        total = 0
        sides = [(q, h, n) for q in qs for h in hs for n in ns]
        for r in rs:
            for (qa, ha, na), (qb, hb, nb) in itertools.product(sides, sides):
                if qa * qb <= 0:
                    continue
                if P1(r, qa, ha, na) != P1(r, qb, hb, nb):
                    continue
                if abs(P2(r, qa, ha, na) - P2(r, qb, hb, nb)) <= 1 / mu:
                    total += 1
        best = max(best, total)
        q1 *= 2
    return best


def naive_sieve_form(x, y, b, R, Q, H, N, P1, P2) -> float:
    """Reversed loop order: m outermost, then r; inner loops n, h, q."""
    total = 0.0
    for m in reversed(range(len(x))):
        for r in reversed([v for v in range(-(R - 1), R) if v]):
            acc = 0j
            for n in range(N, 0, -1):
                for h in range(2 * H - 1, H - 1, -1):
                    for q in reversed([v for v in range(-(Q - 1), Q) if v]):
                        coef = 1 if b is None else b(r, q, h, n)
                        acc += coef * cmath.exp(2j * math.pi * (x[m] * P1(r, q, h, n) + y[m] * P2(r, q, h, n)))
            total += abs(acc)
    return total
