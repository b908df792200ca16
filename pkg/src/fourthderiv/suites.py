"""Seeded randomized suites whose extreme ratios are pinned as baselines.

Each suite returns a :class:`SuiteResult` holding one or more
:class:`Entry` values (the number compared against the baseline file) and a
list of hard failures (violations of forms that must always hold).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import baselines as bl
from . import bounds
from . import diophantine as dio
from . import inequalities as ineq
from .forms import p1_form, p2_form
from .phase import polynomial

DEFAULT_SEED = 20240611
GRID_VALUES = (1, 2, 3, 4, 6)
GRID_DELTAS = (0, Fraction(1, 10), 1, 10)


@dataclass
class Entry:
    check_id: str
    config: dict
    observed: float
    kind: str = "upper"
    tolerance: float = 0.05

    @property
    def phash(self) -> str:
        return bl.params_hash(self.config)


@dataclass
class SuiteResult:
    name: str
    entries: list
    failures: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    def compare(self, store: bl.Baselines) -> list[tuple[Entry, float | None, str]]:
        return [(e, store.get(e.check_id, e.phash),
                 bl.compare(e.observed, store.get(e.check_id, e.phash), e.kind, e.tolerance))
                for e in self.entries]


def system_grid(restrict: bool = False):
    for R, Q, H, N in itertools.product(GRID_VALUES, repeat=4):
        if restrict and 2 * R > H:
            continue
        for d in GRID_DELTAS:
            yield dio.SystemParams(R, Q, H, N, d)


def diagonal_count(p: dio.SystemParams) -> int:
    """Tuples with ``q1=q2, h1=h2, n1=n2`` under the integer-range convention."""
    return (dio.signed_r(p.R).size * 2 * dio.dyadic_abs(p.Q).size
            * dio.h_values(p.H).size * dio.n_values(p.N).size)


def theorem2_suite(epsilon: float = 0.1) -> SuiteResult:
    best, failures, rows = 0.0, [], []
    for p in system_grid(restrict=True):
        c = dio.count_system_oracle(p).count
        ratio = c / dio.bound_theorem2(p, epsilon)
        best = max(best, ratio)
        if c < diagonal_count(p):
            failures.append(f"diagonal bound fails at {p}")
        rows.append((p, c, ratio))
    cfg = {"grid": list(GRID_VALUES), "deltas": [str(d) for d in GRID_DELTAS],
           "epsilon": epsilon, "restrict": "2R<=H"}
    return SuiteResult("theorem2", [Entry("theorem2_ratio", cfg, best)], failures, rows)


def lemma7_suite(epsilon: float = 0.1) -> SuiteResult:
    best, rows = 0.0, []
    seen = set()
    for p in system_grid(restrict=True):
        key = (p.R, p.Q, p.H, p.delta)
        if key in seen:
            continue
        seen.add(key)
        c = dio.count_reduced_J(p.R, p.Q, p.H, p.delta).count
        bound = (p.R * p.Q * p.H) ** (1 + epsilon) * (1 + p.Q * float(p.delta))
        best = max(best, c / bound)
        rows.append((key, c))
    cfg = {"grid": list(GRID_VALUES), "deltas": [str(d) for d in GRID_DELTAS],
           "epsilon": epsilon, "restrict": "2R<=H"}
    return SuiteResult("lemma7", [Entry("lemma7_ratio", cfg, best)], [], rows)


def lemma5_instances(n: int = 50, seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a = int(rng.integers(-20, 21))
        b = int(rng.integers(-20, 21))
        c = int(rng.integers(1, 21))
        if a == 0 or b == 0 or math.gcd(math.gcd(a, b), c) != 1:
            continue
        V = int(rng.integers(1, 31))
        alpha = Fraction(int(rng.integers(-24, 24)), 8)
        beta = alpha + Fraction(int(rng.integers(1, 17)), 8)
        out.append((a, b, c, V, alpha, beta))
    return out


def lemma5_suite(n: int = 50, seed: int = DEFAULT_SEED) -> SuiteResult:
    best, rows = 0.0, []
    for inst in lemma5_instances(n, seed):
        c = dio.count_lemma5_triples(*inst).count
        ratio = c / dio.bound_lemma5(*inst)
        best = max(best, ratio)
        rows.append((inst, c, ratio))
    return SuiteResult("lemma5", [Entry("lemma5_ratio", {"n": n, "seed": seed}, best)], [], rows)


def _random_table(rng, M: int, H: int) -> np.ndarray:
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return np.exp(2j * np.pi * rng.random((M, H)))
    if kind == 1:  # polynomial phase in (m, h)
        c = rng.random(4)
        m, h = np.meshgrid(np.arange(1, M + 1), np.arange(1, H + 1), indexing="ij")
        return np.exp(2j * np.pi * (c[0] * m * h + c[1] * m**2 / M + c[2] * h**3 / H + c[3] * m))
    if kind == 2:  # sparse
        a = np.zeros((M, H), dtype=complex)
        k = int(rng.integers(1, M * H + 1))
        idx = rng.choice(M * H, size=k, replace=False)
        a.flat[idx] = np.exp(2j * np.pi * rng.random(k))
        return a
    return rng.random((M, H)) * np.exp(2j * np.pi * rng.random((M, H)))


def weyl_aa_suite(n: int = 1000, seed: int = DEFAULT_SEED, max_size: int = 32) -> SuiteResult:
    rng = np.random.default_rng(seed)
    best, best_strong, failures = 0.0, 0.0, []
    for i in range(n):
        M = int(rng.integers(1, max_size + 1))
        H = int(rng.integers(1, max_size + 1))
        Q = int(rng.integers(1, M + 1))
        R = int(rng.integers(1, H + 1))
        rep = ineq.check_weyl_aa(_random_table(rng, M, H), Q, R)
        best = max(best, rep.extra["ratio_paper"])
        best_strong = max(best_strong, rep.ratio)
        if not rep.passed:
            failures.append(f"instance {i}: lhs {rep.lhs} > strengthened rhs {rep.rhs}")
    cfg = {"n": n, "seed": seed, "max_size": max_size}
    return SuiteResult("weyl_aa", [Entry("weyl_aa_paper_ratio", cfg, best),
                                   Entry("weyl_aa_strengthened_ratio", cfg, best_strong)],
                       failures)


def double_sieve_instance(rng, max_M: int = 256, max_range: int = 8):
    M = int(rng.integers(1, max_M + 1))
    R = int(rng.integers(2, max_range + 1))
    Q = int(rng.integers(2, max_range + 1))
    H = int(rng.integers(1, max_range + 1))
    N = int(rng.integers(1, max_range + 1))
    x = rng.random(M) * 4 - 2
    y = (rng.random(M) - 0.5) * 10.0 ** rng.uniform(-3, 0)
    spread = float(y.max() - y.min())
    mu = spread if spread > 0 else 1e-3
    X1 = ineq.scan_form_max((R, Q, H, N), p1_form)
    X2 = ineq.scan_form_max((R, Q, H, N), p2_form)
    weighted = bool(rng.integers(0, 2))
    b = (lambda r, q, h, n: 1 - np.abs(q) / Q) if weighted else None
    return dio.SpacingInputs(x, y, X1, X2, mu), (R, Q, H, N), b


def double_sieve_suite(n: int = 100, seed: int = DEFAULT_SEED) -> SuiteResult:
    rng = np.random.default_rng(seed)
    best, reports = 0.0, []
    for _ in range(n):
        inputs, ranges, b = double_sieve_instance(rng)
        rep = ineq.check_double_sieve(inputs, ranges, b)
        best = max(best, rep.ratio)
        reports.append(rep)
    return SuiteResult("double_sieve", [Entry("double_sieve_ratio", {"n": n, "seed": seed}, best)],
                       [], reports)


def third_derivative_suite() -> SuiteResult:
    best, reports = 0.0, []
    for mu, M, twist in itertools.product((1e-2, 1e-3, 1e-4, 1e-5), (64, 256, 1024), (False, True)):
        g = polynomial([0, 0, 0, Fraction(mu) / 6], M)
        u = polynomial([0, Fraction(math.sqrt(mu))], M) if twist else None
        rep = ineq.check_third_derivative(g, u, M, mu)
        best = max(best, rep.ratio)
        reports.append(rep)
    return SuiteResult("third_deriv", [Entry("third_deriv_ratio", {"grid": "mu x M x twist"}, best)],
                       [], reports)


def _product_weight(shape, coeffs) -> Callable:
    def phi(pts):
        base = np.ones(pts.shape[0])
        for j, s in enumerate(shape):
            base = base * np.exp(-pts[:, j] / s)
        return np.stack([c * base for c in coeffs])
    return phi


def partial_sum_suite(n: int = 200, seed: int = DEFAULT_SEED) -> SuiteResult:
    rng = np.random.default_rng(seed)
    best, failures = 0.0, []
    for i in range(n):
        k = int(rng.integers(1, 4))
        shape = tuple(int(s) for s in rng.integers(1, 7, size=k))
        I = int(rng.integers(1, 4))
        a = rng.integers(-1, 2, size=(I,) + shape) * np.exp(2j * np.pi * rng.random((I,) + shape))
        coeffs = np.exp(2j * np.pi * rng.random(I))
        rep = ineq.check_partial_summation(a, _product_weight(shape, coeffs), 1.0)
        best = max(best, rep.ratio)
        if not rep.passed:
            failures.append(f"instance {i}: {rep.lhs} > {rep.rhs}")
    return SuiteResult("partial_sum", [Entry("partial_sum_ratio", {"n": n, "seed": seed}, best)],
                       failures)


LOWER_MS = (100, 200, 400, 800)


def lower_bound_suite() -> SuiteResult:
    reports = [bounds.lower_bound_example(M) for M in LOWER_MS]
    ratios = [r.ratio for r in reports]
    entries = [Entry("lower_bound_M100", {"M": 100}, ratios[0], kind="band", tolerance=1e-9),
               Entry("lower_bound_min", {"M": list(LOWER_MS)}, min(ratios), kind="floor",
                     tolerance=0.5)]
    failures = [f"M={r.M}: ratio {r.ratio} outside factor-2 band of {ratios[0]}"
                for r in reports if not 0.5 * ratios[0] <= r.ratio <= 2 * ratios[0]]
    return SuiteResult("lower_bound", entries, failures, reports)


THM1_MS = tuple(2**k for k in range(8, 15))


def thm1_suite(epsilon: float = bounds.DEFAULT_EPSILON) -> SuiteResult:
    reports = [bounds.check_bound(bounds.thm1_phase(M), M, "thm1", epsilon) for M in THM1_MS]
    cfg = {"M": list(THM1_MS), "epsilon": epsilon, "family": "lambda x^4/24, lambda=M^(-13/8)"}
    return SuiteResult("thm1", [Entry("thm1_ratio", cfg, max(r.ratio for r in reports))], [],
                       reports)


PIPELINE_LAMBDA = 2.0**-26


def pipeline_suite(lam: float = PIPELINE_LAMBDA) -> SuiteResult:
    rep = bounds.run_pipeline(lam)
    cfg = {"lambda": lam, "family": "monomial"}
    entries = [Entry(f"pipeline.{r.check_id}", cfg, r.ratio, kind="band") for r in rep.ratios]
    failures = [f"{x.check_id} residual {x.relative}" for x in rep.exact if not x.passed]
    failures += [f"{r.check_id} ratio {r.ratio} is not finite and positive" for r in rep.ratios
                 if not (math.isfinite(r.ratio) and r.ratio > 0)]
    failures += [f"{r.check_id} strengthened form fails" for r in rep.ratios if r.passed is False]
    return SuiteResult("pipeline", entries, failures, [rep])


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "theorem2": theorem2_suite,
    "lemma7": lemma7_suite,
    "lemma5": lemma5_suite,
    "weyl_aa": weyl_aa_suite,
    "double_sieve": double_sieve_suite,
    "third_deriv": third_derivative_suite,
    "partial_sum": partial_sum_suite,
    "lower_bound": lower_bound_suite,
    "thm1": thm1_suite,
    "pipeline": pipeline_suite,
}
