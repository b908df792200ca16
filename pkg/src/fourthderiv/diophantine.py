"""Exact solution counts for the Diophantine systems and spacing problems.

Integer-range convention for real parameters, used by every counter here and
by the brute-force references in the test-suite::

    0 < |r| < R        ->  1 <= |r| <= ceil(R) - 1
    Q <= |q| < 2Q      ->  ceil(Q) <= |q| <= ceil(2Q) - 1
    H <= h < 2H        ->  ceil(H) <= h <= ceil(2H) - 1
    1 <= n <= N        ->  1 <= n <= floor(N)
    0 < |d| <= 4(1+delta)Q

A second-line constraint ``|integer| <= T`` is evaluated as
``|integer| <= floor(T)``, with ``T`` computed exactly when every input is an
``int`` or ``Fraction`` and in floating point otherwise (ties are solutions).
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import arith
from .forms import p1_form, p2_form

DEFAULT_BUDGET = 10**9
D_CONSTANT = 4


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured tuple budget."""


@dataclass(frozen=True)
class SystemParams:
    R: float
    Q: float
    H: float
    N: float
    delta: float = 0

    def __post_init__(self):
        for name in ("R", "Q", "H", "N"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")

    @property
    def satisfies_hypothesis(self) -> bool:
        """``R <= H/2``, the hypothesis under which the counting bound is claimed."""
        return 2 * self.R <= self.H

    def as_dict(self) -> dict:
        return {k: _plain(getattr(self, k)) for k in ("R", "Q", "H", "N", "delta")}


@dataclass
class CountResult:
    count: int
    params: object
    method: str
    elapsed: float
    details: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        p = self.params.as_dict() if isinstance(self.params, SystemParams) else dict(self.params)
        return {**{k: p.get(k) for k in ("R", "Q", "H", "N", "delta")},
                "count": self.count, "method": self.method,
                "elapsed_ms": self.elapsed * 1000.0}


@dataclass(frozen=True)
class SpacingInputs:
    x: Sequence[float]
    y: Sequence[float]
    X1: float
    X2: float
    mu: float

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if self.X1 <= 0 or self.X2 <= 0 or self.mu <= 0:
            raise ValueError("X1, X2 and mu must be positive")


def _plain(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


def _rational(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in vals)


# -- integer ranges ---------------------------------------------------------

def abs_r_max(R) -> int:
    return math.ceil(R) - 1


def signed_r(R) -> np.ndarray:
    k = abs_r_max(R)
    return np.concatenate([np.arange(-k, 0), np.arange(1, k + 1)]).astype(np.int64)


def dyadic_abs(Q) -> np.ndarray:
    """``|q|`` with ``Q <= |q| < 2Q``."""
    return np.arange(math.ceil(Q), math.ceil(2 * Q), dtype=np.int64)


def h_values(H) -> np.ndarray:
    return np.arange(math.ceil(H), math.ceil(2 * H), dtype=np.int64)


def n_values(N) -> np.ndarray:
    return np.arange(1, math.floor(N) + 1, dtype=np.int64)


def d_max(delta, Q) -> int:
    if _rational(delta, Q):
        return math.floor(D_CONSTANT * (1 + Fraction(delta)) * Fraction(Q))
    return math.floor(D_CONSTANT * (1 + delta) * Q)


def second_line_threshold(delta, H, Q) -> int | None:
    """``floor(delta * H * Q**2)``; None when delta is infinite."""
    if _rational(delta, H, Q):
        return math.floor(Fraction(delta) * Fraction(H) * Fraction(Q) ** 2)
    t = float(delta) * float(H) * float(Q) ** 2
    if math.isinf(t):
        return None
    return math.floor(t)


# -- generic pair counting ------------------------------------------------------

def _count_pairs(groups: Sequence[np.ndarray], values: np.ndarray, T: int | None) -> int:
    """Ordered pairs within equal group keys whose integer values differ by <= T."""
    if values.size == 0:
        return 0
    keys = np.stack([np.asarray(g, dtype=np.int64) for g in groups], axis=1) if groups else \
        np.zeros((values.size, 0), dtype=np.int64)
    if T is None or T >= int(values.max()) - int(values.min()):
        _, counts = np.unique(keys, axis=0, return_counts=True) if keys.shape[1] else \
            (None, np.array([values.size]))
        return int(np.sum(counts.astype(object) ** 2))
    # one integer per group, then a composite key with gaps wider than any window
    if keys.shape[1]:
        _, gid = np.unique(keys, axis=0, return_inverse=True)
        gid = gid.ravel().astype(np.int64)
    else:
        gid = np.zeros(values.size, dtype=np.int64)
    vmin = int(values.min())
    width = int(values.max()) - vmin + 2 * T + 1
    arith.check_int64((int(gid.max()) + 1) * width + 2 * T)
    comp = gid * width + (values.astype(np.int64) - vmin)
    comp.sort()
    hi = np.searchsorted(comp, comp + T, side="right")
    lo = np.searchsorted(comp, comp - T, side="left")
    return int(np.sum(hi - lo))


def _count_pairs_float(groups: Sequence[np.ndarray], values: np.ndarray, T: float) -> int:
    """As :func:`_count_pairs` for real values and a real threshold (inclusive)."""
    if values.size == 0:
        return 0
    keys = np.stack([np.asarray(g, dtype=np.int64) for g in groups], axis=1)
    _, gid = np.unique(keys, axis=0, return_inverse=True)
    gid = gid.ravel()
    total = 0
    order = np.argsort(gid, kind="stable")
    gid_sorted = gid[order]
    bounds = np.flatnonzero(np.diff(gid_sorted)) + 1
    for block in np.split(order, bounds):
        v = np.sort(values[block])
        hi = np.searchsorted(v, v + T, side="right")
        lo = np.searchsorted(v, v - T, side="left")
        total += int(np.sum(hi - lo))
    return total


# -- the seven-variable system -----------------------------------------------------

def _side_tuples(params: SystemParams):
    qa = dyadic_abs(params.Q)
    q = np.concatenate([-qa[::-1], qa])
    h = h_values(params.H)
    n = n_values(params.N)
    qg, hg, ng = np.meshgrid(q, h, n, indexing="ij")
    return qg.ravel(), hg.ravel(), ng.ravel()


def _system_count_for_r(params: SystemParams, r: int, T: int | None, same_n: bool = False) -> int:
    q, h, n = _side_tuples(params)
    if q.size == 0:
        return 0
    nmax, hmax, qmax = int(n.max()), int(h.max()), int(np.abs(q).max())
    arith.check_int64(4 * (abs(r) * nmax**2 + 2 * hmax * qmax * nmax + hmax * qmax**2))
    L1 = r * n + h * q
    L2 = r * n * n + 2 * h * q * n + h * q * q
    groups = [np.sign(q), L1]
    if same_n:
        groups.append(n)
    return _count_pairs(groups, L2, T)


def _check_budget(work: int, budget: int) -> None:
    if work > budget:
        raise BudgetExceeded(f"enumeration needs {work} tuples, budget is {budget}")


def count_system_oracle(params: SystemParams, budget: int = DEFAULT_BUDGET,
                        workers: int = 1) -> CountResult:
    """Exact number of 7-tuples in the box satisfying both lines of the system.

    For each ``r`` the side tuples ``(q, h, n)`` are keyed by ``sign(q)`` and
    the first-line value ``r*n + h*q``; ordered pairs with equal keys and
    second-line values within the threshold are counted by binary search.
    """
    start = time.perf_counter()
    rs = signed_r(params.R)
    side = 2 * dyadic_abs(params.Q).size * h_values(params.H).size * n_values(params.N).size
    _check_budget(int(rs.size) * side, budget)
    T = second_line_threshold(params.delta, params.H, params.Q)
    if workers > 1 and rs.size > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_system_count_for_r, [params] * rs.size,
                                  [int(r) for r in rs], [T] * rs.size))
    else:
        parts = [_system_count_for_r(params, int(r), T) for r in rs]
    return CountResult(count=int(sum(parts)), params=params, method="oracle",
                       elapsed=time.perf_counter() - start)


def count_system_same_n(params: SystemParams) -> int:
    """Number of solutions with ``n1 == n2``."""
    T = second_line_threshold(params.delta, params.H, params.Q)
    return sum(_system_count_for_r(params, int(r), T, same_n=True) for r in signed_r(params.R))


def bound_theorem2(params: SystemParams, epsilon: float) -> float:
    """``(R N H Q)^(1+epsilon) * (1 + delta Q)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    R, Q, H, N, d = (float(v) for v in (params.R, params.Q, params.H, params.N, params.delta))
    return (R * N * H * Q) ** (1 + epsilon) * (1 + d * Q)


# -- the reduced six-variable system ------------------------------------------------

def reduced_solutions(R, Q, H, delta, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All ``(r, q1, q2, h1, h2, d)`` in the reduced domain solving both reduced lines.

    No coprimality filter is applied; rows are int64.
    """
    rs = signed_r(R)
    qa = dyadic_abs(Q)
    hs = h_values(H)
    dm = d_max(delta, Q)
    T = second_line_threshold(delta, H, Q)
    _check_budget(int(rs.size) * hs.size**2 * 2 * qa.size**2, budget)
    if rs.size == 0 or qa.size == 0 or hs.size == 0:
        return np.zeros((0, 6), dtype=np.int64)
    arith.check_int64(4 * int(hs.max()) * int(qa.max()) ** 2 + int(rs.size) * dm**2)
    q1g, q2g = np.meshgrid(qa, qa, indexing="ij")
    q1g, q2g = q1g.ravel(), q2g.ravel()
    rows = []
    for sign in (1, -1):
        q1, q2 = sign * q1g, sign * q2g
        for r in rs:
            for h1 in hs:
                for h2 in hs:
                    num = h2 * q2 - h1 * q1
                    ok = num % r == 0
                    d = num // r
                    ok &= (d != 0) & (np.abs(d) <= dm)
                    if not ok.any():
                        continue
                    qq1, qq2, dd = q1[ok], q2[ok], d[ok]
                    second = r * dd * dd + 2 * h1 * qq1 * dd + h1 * qq1 * qq1 - h2 * qq2 * qq2
                    if T is not None:
                        keep = np.abs(second) <= T
                        qq1, qq2, dd = qq1[keep], qq2[keep], dd[keep]
                    if qq1.size:
                        k = qq1.size
                        rows.append(np.stack([np.full(k, r), qq1, qq2, np.full(k, h1),
                                              np.full(k, h2), dd], axis=1))
    if not rows:
        return np.zeros((0, 6), dtype=np.int64)
    return np.concatenate(rows).astype(np.int64)


def _coprime_mask(sol: np.ndarray) -> np.ndarray:
    r, q1, q2, h1, h2, d = sol.T
    return (np.gcd(np.gcd(d, q1), q2) == 1) & (np.gcd(np.gcd(r, h1), h2) == 1)


def count_reduced_J(R, Q, H, delta, budget: int = DEFAULT_BUDGET) -> CountResult:
    """Coprime solutions ``(r, q1, q2, h1, h2, d)`` of the reduced system."""
    start = time.perf_counter()
    sol = reduced_solutions(R, Q, H, delta, budget)
    count = int(np.count_nonzero(_coprime_mask(sol))) if sol.size else 0
    params = {"R": _plain(R), "Q": _plain(Q), "H": _plain(H), "N": None, "delta": _plain(delta)}
    return CountResult(count=count, params=params, method="reduced",
                       elapsed=time.perf_counter() - start)


@dataclass
class Lemma6Report:
    oracle: int
    same_n: int
    nonzero_d: int
    reduced_all: int
    multiplicity_sum: int
    strata: dict
    N: int

    @property
    def strata_sum(self) -> int:
        return sum(self.strata.values())

    @property
    def partition_ok(self) -> bool:
        return self.oracle == self.same_n + self.nonzero_d

    @property
    def mapped_ok(self) -> bool:
        """Every solution with ``n1 != n2`` maps to a reduced solution in range."""
        return self.multiplicity_sum == self.nonzero_d

    @property
    def bound_ok(self) -> bool:
        return self.nonzero_d <= self.N * self.strata_sum

    @property
    def ok(self) -> bool:
        return (self.partition_ok and self.mapped_ok and self.bound_ok
                and self.strata_sum == self.reduced_all)


def verify_lemma6_decomposition(params: SystemParams, budget: int = DEFAULT_BUDGET) -> Lemma6Report:
    """Split solutions by ``d = n1 - n2`` and check the reduction exactly.

    ``multiplicity_sum`` weights each reduced solution by its number of
    preimages ``max(0, N - |d|)``; equality with the count of solutions having
    ``n1 != n2`` shows that the substitution ``n1 = n2 + d`` is a bijection
    onto reduced solutions with ``|d| <= 4(1+delta)Q``.
    """
    oracle = count_system_oracle(params, budget).count
    same = count_system_same_n(params)
    sol = reduced_solutions(params.R, params.Q, params.H, params.delta, budget)
    n_int = math.floor(params.N)
    if sol.size:
        mult = int(np.sum(np.maximum(0, n_int - np.abs(sol[:, 5]))))
        r, q1, q2, h1, h2, d = sol.T
        j = np.gcd(np.gcd(r, h1), h2)
        k = np.gcd(np.gcd(d, q1), q2)
        strata = dict(Counter(zip(j.tolist(), k.tolist())))
    else:
        mult, strata = 0, {}
    return Lemma6Report(oracle=oracle, same_n=same, nonzero_d=oracle - same,
                        reduced_all=int(sol.shape[0]), multiplicity_sum=mult,
                        strata=strata, N=n_int)


# -- three-variable lemma -----------------------------------------------------------

def _validate_lemma5(a, b, c, V, alpha, beta):
    if 0 in (a, b, c):
        raise ValueError("a, b, c must be non-zero")
    if c <= 0:
        raise ValueError("c must be positive")
    if arith.gcd3(a, b, c) != 1:
        raise ValueError("gcd(a, b, c) must be 1")
    if V < 1:
        raise ValueError("V must be >= 1")
    if not alpha < beta:
        raise ValueError("need alpha < beta")


def count_lemma5_triples(a: int, b: int, c: int, V, alpha, beta) -> CountResult:
    """Non-zero coprime ``(u, v, w)`` with ``au + bv + cw = 0``, ``V <= v <= 2V``,
    ``alpha <= u/v <= beta``."""
    _validate_lemma5(a, b, c, V, alpha, beta)
    start = time.perf_counter()
    lo_a, hi_b = Fraction(alpha), Fraction(beta)
    count = 0
    for v in range(math.ceil(V), math.floor(2 * V) + 1):
        for u in range(math.ceil(lo_a * v), math.floor(hi_b * v) + 1):
            if u == 0:
                continue
            s = a * u + b * v
            if s % c:
                continue
            w = -s // c
            if w != 0 and arith.gcd3(u, v, w) == 1:
                count += 1
    params = {"a": a, "b": b, "c": c, "V": _plain(V), "alpha": _plain(alpha), "beta": _plain(beta)}
    return CountResult(count=count, params=params, method="lemma5",
                       elapsed=time.perf_counter() - start)


def bound_lemma5(a: int, b: int, c: int, V, alpha, beta) -> float:
    """``tau(c) + (beta - alpha) V^2 sigma(c) / c^2`` (implied constant 1)."""
    _validate_lemma5(a, b, c, V, alpha, beta)
    return arith.tau(c) + float(beta - alpha) * float(V) ** 2 * arith.sigma(c) / c**2


# -- spacing counts ---------------------------------------------------------------

def _near_int_dist(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.round(x))


def count_spacing_B(inputs: SpacingInputs, budget: int = DEFAULT_BUDGET) -> CountResult:
    """Ordered pairs ``(m1, m2)`` with ``||x1 - x2|| <= 1/X1`` and ``|y1 - y2| <= 1/X2``."""
    start = time.perf_counter()
    x = np.asarray(inputs.x, dtype=float)
    y = np.asarray(inputs.y, dtype=float)
    tx, ty = 1.0 / inputs.X1, 1.0 / inputs.X2
    order = np.argsort(y, kind="stable")
    xs, ys = x[order], y[order]
    reach = np.searchsorted(ys, ys + ty, side="right") - np.arange(ys.size) - 1
    width = int(reach.max()) if reach.size else 0
    _check_budget(int(np.sum(reach)), budget)
    count = int(x.size)  # the diagonal
    for k in range(1, width + 1):
        a, b = xs[:-k], xs[k:]
        within = (ys[k:] - ys[:-k]) <= ty
        count += 2 * int(np.count_nonzero(within & (_near_int_dist(b - a) <= tx)))
    return CountResult(count=count, params={"M": int(x.size), "X1": inputs.X1, "X2": inputs.X2},
                       method="spacingB", elapsed=time.perf_counter() - start,
                       details={"max_offset": width})


def dyadic_blocks(Q) -> list[int]:
    """Powers of two ``Q1`` with ``1 <= Q1 < Q``."""
    out, q1 = [], 1
    while q1 < Q:
        out.append(q1)
        q1 *= 2
    return out


def count_spacing_N(ranges, mu, P1: Callable = p1_form, P2: Callable = p2_form,
                    budget: int = DEFAULT_BUDGET) -> CountResult:
    """Maximum over dyadic ``Q1`` of the number of 7-tuples with equal ``P1`` values
    and ``P2`` values within ``1/mu`` (``q1 q2 > 0``, ``Q1 <= |q_i| < min(2Q1, Q)``)."""
    start = time.perf_counter()
    if isinstance(ranges, dict):
        R, Q, H, N = ranges["R"], ranges["Q"], ranges["H"], ranges["N"]
    else:
        R, Q, H, N = ranges
    if min(R, Q, H, N) <= 0 or mu <= 0:
        raise ValueError("ranges and mu must be positive")
    tval = 0.0 if math.isinf(mu) else 1.0 / mu
    rs = signed_r(R)
    hs = h_values(H)
    ns = n_values(N)
    per_block = {}
    for q1 in dyadic_blocks(Q):
        qa = np.arange(q1, math.ceil(min(2 * q1, Q)), dtype=np.int64)
        _check_budget(int(rs.size) * 2 * qa.size * hs.size * ns.size, budget)
        total = 0
        if qa.size and hs.size and ns.size:
            q = np.concatenate([-qa[::-1], qa])
            qg, hg, ng = (a.ravel() for a in np.meshgrid(q, hs, ns, indexing="ij"))
            for r in rs:
                rr = np.full(qg.shape, r)
                v1 = np.asarray(P1(rr, qg, hg, ng))
                v2 = np.asarray(P2(rr, qg, hg, ng), dtype=float)
                if not np.all(v1 == np.round(v1)):
                    raise ValueError("P1 must be integer-valued on the box")
                v1 = np.round(v1).astype(np.int64)
                groups = [np.sign(qg), v1]
                if np.all(v2 == np.round(v2)) and np.abs(v2).max(initial=0) < 2**52:
                    total += _count_pairs(groups, np.round(v2).astype(np.int64), math.floor(tval))
                else:
                    total += _count_pairs_float(groups, v2, tval)
        per_block[q1] = total
    best_q1 = max(per_block, key=lambda k: (per_block[k], -k)) if per_block else None
    count = per_block[best_q1] if per_block else 0
    params = {"R": _plain(R), "Q": _plain(Q), "H": _plain(H), "N": _plain(N), "mu": mu}
    return CountResult(count=count, params=params, method="spacingN",
                       elapsed=time.perf_counter() - start,
                       details={"best_Q1": best_q1, "per_block": per_block})
