"""Empirical checks of the headline bounds and the end-to-end proof chain.

``select_parameters`` fixes the power-law sizes of M, H, R, Q and N for a
given ``lambda``; ``run_pipeline`` then evaluates both sides of every
displayed inequality of the argument at that one ``lambda``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import diophantine as dio
from . import inequalities as ineq
from .expsum import differenced_sums, e, sum_differenced, sum_phase
from .forms import p1_form, p2_form, p2_truncated
from .phase import (PhaseFunction, VdcCertificate, certify_vdc, extend_c4,
                    paper_example_phase, quartic_phase)

DEFAULT_EPSILON = 0.05
EXPONENTS = {"M0": Fraction(8, 13), "H": Fraction(2, 13), "R": Fraction(1, 13),
             "Q": Fraction(3, 13), "N": Fraction(3, 13)}
BETA_WINDOW = (Fraction(9, 28), Fraction(3, 7))
CONJECTURE_EXPONENTS = {"conj1": Fraction(3, 38), "conj2": Fraction(1, 12)}


class ParameterError(ValueError):
    """``lambda`` is outside the range where the parameter choices are consistent."""


class DegenerateFitError(ValueError):
    pass


def _snap(value: float) -> float:
    """Round values within 1e-9 (relative) of an integer to that integer."""
    near = round(value)
    if near and abs(value - near) <= 1e-9 * abs(value):
        return float(near)
    return value


def _round(value: float) -> int:
    return max(1, math.floor(_snap(value) + 0.5))


@dataclass(frozen=True)
class ParameterSelection:
    lambda_: float
    M0: int
    H: int
    R: int
    Q: int
    N: int
    constants: dict
    transfer_constant: float  # R H^2 M0 lambda
    threshold: float  # largest lambda-free boundary for R <= H/2

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def _r_le_half_h(t: float, cR: float, cH: float) -> bool:
    return 2 * _round(cR * t) <= _round(cH * t * t)


def r_threshold(cR: float = 1.0, cH: float = 1.0) -> float:
    """Largest ``lambda`` below which ``R <= H/2`` holds for every smaller ``lambda``.

    With ``t = lambda^(-1/13)`` the rounded sizes are step functions of ``t``;
    the condition is constant between their jump points, so it suffices to
    test one point per interval.
    """
    t_hi = 4 * (cR / cH + 1) + 4 / math.sqrt(cH)
    cuts = {1.0, t_hi}
    k = 0
    while (k + 0.5) / cR <= t_hi:
        cuts.add((k + 0.5) / cR)
        k += 1
    k = 0
    while math.sqrt((k + 0.5) / cH) <= t_hi:
        cuts.add(math.sqrt((k + 0.5) / cH))
        k += 1
    pts = sorted(c for c in cuts if c >= 1.0)
    last_bad = 1.0
    for lo, hi in zip(pts, pts[1:]):
        if not _r_le_half_h(0.5 * (lo + hi), cR, cH):
            last_bad = hi
    return last_bad ** -13


def select_parameters(lam: float, constants: dict | None = None,
                      transfer_max: float = 4.0) -> ParameterSelection:
    """Power-law parameter sizes for a given ``lambda``.

    ``M0 = ceil(cM lambda^(-8/13))``, ``H = round(cH lambda^(-2/13))``,
    ``R = round(cR lambda^(-1/13))``, ``Q = round(cQ lambda^(-3/13))``,
    ``N = round(cN lambda^(-3/13))``; all constants default to 1.
    """
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    c = {k: 1.0 for k in EXPONENTS}
    for k, v in (constants or {}).items():
        if k not in c:
            raise ValueError(f"unknown constant {k!r}; expected one of {sorted(c)}")
        if v <= 0:
            raise ValueError(f"constant {k} must be positive")
        c[k] = float(v)
    power = {k: lam ** -float(x) for k, x in EXPONENTS.items()}
    M0 = max(1, math.ceil(_snap(c["M0"] * power["M0"])))
    H = _round(c["H"] * power["H"])
    R = _round(c["R"] * power["R"])
    Q = _round(c["Q"] * power["Q"])
    N = _round(c["N"] * power["N"])
    threshold = r_threshold(c["R"], c["H"])
    if 2 * R > H:
        raise ParameterError(
            f"lambda={lam:.6g} gives R={R} > H/2={H / 2}; need lambda <= {threshold:.6g}")
    transfer = R * H * H * M0 * lam
    if transfer > transfer_max:
        raise ParameterError(f"R H^2 M0 lambda = {transfer:.6g} exceeds {transfer_max}")
    return ParameterSelection(lam, M0, H, R, Q, N, c, transfer, threshold)


# -- single bounds -------------------------------------------------------------

def _with_eps(M, eps):
    return M ** (1 + eps)


BOUNDS: dict[str, tuple[Callable[[float, float, float], float], Fraction | None]] = {
    # id: (value(M, lam, eps), exponent b of the range condition M >= lam^-b)
    "vdc14": (lambda M, lam, eps: M * lam ** (1 / 14), Fraction(4, 7)),
    "thm1": (lambda M, lam, eps: M**eps * (M * lam ** (1 / 13) + lam ** (-7 / 13)), None),
    "short14": (lambda M, lam, eps: M * lam ** (1 / 14), Fraction(3, 7)),
    "conj1": (lambda M, lam, eps: _with_eps(M, eps) * lam ** (3 / 38), Fraction(13, 19)),
    "conj2": (lambda M, lam, eps: _with_eps(M, eps) * lam ** (1 / 12), Fraction(1)),
    "lower": (lambda M, lam, eps: lam ** (-1 / 4), None),
}


@dataclass
class BoundReport:
    M: int
    lambda_: float
    sum_modulus: float
    bound_value: float
    ratio: float
    bound_id: str
    in_range: bool = True
    notes: list = field(default_factory=list)

    def as_row(self) -> dict:
        return {"M": self.M, "lambda": self.lambda_, "sum_modulus": self.sum_modulus,
                "bound_value": self.bound_value, "ratio": self.ratio, "bound_id": self.bound_id}


def bound_value(bound_id: str, M: int, lam: float, epsilon: float = DEFAULT_EPSILON) -> float:
    if bound_id not in BOUNDS:
        raise ValueError(f"unknown bound id {bound_id!r}; choose from {sorted(BOUNDS)}")
    return float(BOUNDS[bound_id][0](float(M), float(lam), float(epsilon)))


def in_bound_range(bound_id: str, M: int, lam: float) -> bool:
    b = BOUNDS[bound_id][1]
    return True if b is None else M >= lam ** -float(b)


def check_bound(f: PhaseFunction, M: int, bound_id: str, epsilon: float = DEFAULT_EPSILON,
                certificate: VdcCertificate | None = None) -> BoundReport:
    """``|S_M|`` against one of the bound shapes, with ``lambda`` from the certificate."""
    cert = certificate or certify_vdc(f)
    lam = cert.lambda_
    value = abs(sum_phase(f, M).value)
    bound = bound_value(bound_id, M, lam, epsilon)
    notes = []
    if lam >= 1:
        notes.append("lambda >= 1: the bound shapes are not informative")
    if cert.ratio > 1 + 1e-12:
        notes.append(f"fourth derivative varies by a factor {cert.ratio:.6g}")
    return BoundReport(M=int(M), lambda_=lam, sum_modulus=value, bound_value=bound,
                       ratio=ineq.safe_ratio(value, bound), bound_id=bound_id,
                       in_range=in_bound_range(bound_id, M, lam), notes=notes)


def lower_bound_example(M: int) -> BoundReport:
    """``|S_M| / lambda^(-1/4)`` for ``f(m) = m^4 / (100 M^4)``, ``lambda = 0.24 M^-4``."""
    if M < 16:
        raise ValueError("M must be at least 16")
    f = paper_example_phase(M)
    return check_bound(f, M, "lower")


def thm1_phase(M: int) -> PhaseFunction:
    """``lambda x^4 / 24`` with ``lambda = M^(-13/8)``, so that ``M = lambda^(-8/13)``."""
    return quartic_phase(Fraction(float(M) ** (-13 / 8)), M)


# -- sweeps ----------------------------------------------------------------

MODE_BOUND = {"beta": "short14", "conj1": "conj1", "conj2": "conj2", "thm1": "thm1"}
DEFAULT_B_GRID = (Fraction(9, 28), Fraction(1, 3), Fraction(3, 8), Fraction(3, 7),
                  Fraction(1, 2), Fraction(8, 13), Fraction(13, 19), Fraction(1))


@dataclass
class SweepConfig:
    family: str = "monomial"
    M_grid: Sequence[int] = tuple(2**k for k in range(8, 15))
    mode: str = "beta"
    epsilon: float = DEFAULT_EPSILON
    b_grid: Sequence = DEFAULT_B_GRID
    constants: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {k: d[k] for k in ("family", "M_grid", "mode", "epsilon", "b_grid", "constants",
                                   "seed") if k in d}
        if "lambda_grid" in d and "M_grid" not in d:
            known["M_grid"] = [max(16, math.ceil(_snap(float(l) ** (-8 / 13))))
                               for l in d["lambda_grid"]]
        unknown = set(d) - set(known) - {"lambda_grid"}
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        cfg = cls(**known)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.mode not in MODE_BOUND:
            raise ValueError(f"mode must be one of {sorted(MODE_BOUND)}")
        if self.family not in ("monomial", "paper_example"):
            raise ValueError("family must be 'monomial' or 'paper_example'")
        if not self.M_grid:
            raise ValueError("M_grid must not be empty")


def _cells(cfg: SweepConfig) -> list[tuple[int, Fraction | None]]:
    Ms = sorted({int(m) for m in cfg.M_grid})
    if cfg.family == "paper_example" or cfg.mode == "thm1":
        return [(M, None) for M in Ms]
    return [(M, Fraction(b)) for M in Ms for b in cfg.b_grid]


def _cell_phase(cfg: SweepConfig, M: int, b) -> PhaseFunction:
    if cfg.family == "paper_example":
        return paper_example_phase(M)
    if b is None:
        return thm1_phase(M)
    return quartic_phase(Fraction(float(M) ** (-1 / float(b))), M)


def _run_cell(cfg: SweepConfig, M: int, b) -> BoundReport:
    return check_bound(_cell_phase(cfg, M, b), M, MODE_BOUND[cfg.mode], cfg.epsilon)


@dataclass
class SweepResult:
    config: SweepConfig
    reports: list
    fit: dict
    beta_min: float | None

    def summary(self) -> dict:
        cfg = asdict(self.config)
        cfg["b_grid"] = [float(b) for b in self.config.b_grid]
        cfg["M_grid"] = [int(m) for m in self.config.M_grid]
        return {"config": cfg, "fit": self.fit, "beta_min": self.beta_min,
                "beta_window": [float(x) for x in BETA_WINDOW],
                "conjectured_exponents": {k: float(v) for k, v in CONJECTURE_EXPONENTS.items()},
                "max_ratio": max(r.ratio for r in self.reports),
                "informational": "fitted exponents describe the grid only; asymptotic "
                                 "claims are not decided at this scale"}


def fit_exponents(reports: Sequence[BoundReport]) -> dict:
    """Least squares ``log|S| = c + a log M + t log lambda``.

    When ``log M`` and ``log lambda`` are collinear on the grid the lambda
    term is dropped and ``t`` is reported as None.
    """
    if len(reports) < 3:
        raise DegenerateFitError("need at least 3 grid points to fit")
    y = np.log([max(r.sum_modulus, 1e-300) for r in reports])
    lm = np.log([r.M for r in reports])
    ll = np.log([r.lambda_ for r in reports])
    X = np.column_stack([np.ones_like(lm), lm, ll])
    rank = np.linalg.matrix_rank(X, tol=1e-9 * np.abs(X).max())
    if rank == 3:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        return {"intercept": float(coef[0]), "exponent_M": float(coef[1]),
                "exponent_lambda": float(coef[2]), "rss": float(resid @ resid), "rank": 3}
    X2 = X[:, :2]
    if np.linalg.matrix_rank(X2) < 2:
        raise DegenerateFitError("all grid points share one M")
    coef, *_ = np.linalg.lstsq(X2, y, rcond=None)
    resid = y - X2 @ coef
    return {"intercept": float(coef[0]), "exponent_M": float(coef[1]), "exponent_lambda": None,
            "rss": float(resid @ resid), "rank": 2}


def smallest_beta(reports: Sequence[BoundReport], epsilon_rel: float = 0.0) -> float | None:
    """Smallest grid ``b = log M / log(1/lambda)`` such that ``|S_M| <= M lambda^(1/14)``
    holds at every cell with ``M >= lambda^(-b)``."""
    cells = sorted((math.log(r.M) / -math.log(r.lambda_), r.ratio) for r in reports)
    best = None
    for i in range(len(cells) - 1, -1, -1):
        if cells[i][1] > 1 + epsilon_rel:
            break
        best = cells[i][0]
    return best


def sweep_beta(config: SweepConfig | dict, workers: int = 1) -> SweepResult:
    """Evaluate a grid of phases and fit the growth of ``|S_M|``."""
    cfg = SweepConfig.from_dict(config) if isinstance(config, dict) else config
    cfg.validate()
    cells = _cells(cfg)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_cell, [cfg] * len(cells), *zip(*cells)))
    else:
        reports = [_run_cell(cfg, M, b) for M, b in cells]
    reports.sort(key=lambda r: (r.bound_id, r.M, r.lambda_))
    fit = fit_exponents(reports)
    beta = smallest_beta(reports) if cfg.mode == "beta" else None
    return SweepResult(cfg, reports, fit, beta)


# -- the pipeline ----------------------------------------------------------

@dataclass
class PipelineBudget:
    max_tuples: int = 10**8
    max_seconds: float = 300.0
    sieve_terms: int = 2 * 10**7


@dataclass
class PipelineReport:
    selection: ParameterSelection
    ratios: list
    exact: list
    info: dict

    def ratio(self, check_id: str) -> ineq.RatioReport:
        for r in self.ratios:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    @property
    def exact_ok(self) -> bool:
        return all(x.passed for x in self.exact)


class _Clock:
    def __init__(self, budget: PipelineBudget):
        self.start = time.perf_counter()
        self.budget = budget

    def check(self, stage: str) -> None:
        spent = time.perf_counter() - self.start
        if spent > self.budget.max_seconds:
            raise dio.BudgetExceeded(f"pipeline exceeded {self.budget.max_seconds}s at {stage}")

    def tuples(self, n: int, stage: str) -> None:
        if n > self.budget.max_tuples:
            raise dio.BudgetExceeded(f"{stage} needs {n} tuples, budget is {self.budget.max_tuples}")


def _diff_rows(frac: np.ndarray, ks: Sequence[int], M: int) -> dict[int, np.ndarray]:
    """``e(Delta_k f(t))`` for ``t = 1..M`` (index ``t-1``), zero where undefined."""
    out = {}
    t = np.arange(1, M + 1)
    for k in ks:
        row = np.zeros(M, dtype=complex)
        ok = (t - abs(k) >= 1) & (t + abs(k) <= M)
        tt = t[ok]
        row[ok] = e(frac[tt + k - 1] - frac[tt - k - 1])
        out[k] = row
    return out


def _shifted(v: np.ndarray, s: int) -> np.ndarray:
    """``w[i] = v[i + s]`` with zeros off the end."""
    w = np.zeros_like(v)
    if s >= 0:
        w[: v.size - s] = v[s:]
    else:
        w[-s:] = v[: v.size + s]
    return w


def shifted_sieve_sum(frac: np.ndarray, M: int, R: int, Q: int, H1: int, N: int) -> float:
    """``sum_{0<|r|<R} sum_{m in J0} |sum_q (1-|q|/Q) sum_h sum_n e(D_h f(m+n+q) - D_{h+r} f(m+n))|``
    with ``J0 = [H1+Q, M-2H1-Q-N]``, ``0<|q|<Q``, ``H1<=h<2H1``, ``1<=n<=N``."""
    lo, hi = H1 + Q, M - 2 * H1 - Q - N
    if hi < lo or Q < H1 + R - 2:
        raise ValueError("shift interval J0 is empty or leaves the domain")
    rs = [r for r in range(-(R - 1), R) if r]
    hs = list(range(H1, 2 * H1))
    rows = _diff_rows(frac, sorted({h + r for h in hs for r in rs} | set(hs)), M)
    qs = [q for q in range(-(Q - 1), Q) if q]
    B = {}
    for h in hs:
        acc = np.zeros(M, dtype=complex)
        for q in qs:
            acc += (1 - abs(q) / Q) * _shifted(rows[h], q)
        B[h] = acc
    ms = np.arange(lo, hi + 1)
    total = []
    for r in rs:
        C = np.zeros(M, dtype=complex)
        for h in hs:
            C += B[h] * np.conj(rows[h + r])
        inner = _window_sums(C, N)[ms - 1]
        total.append(math.fsum(np.abs(inner)))
    return math.fsum(total)


def _window_sums(C: np.ndarray, N: int) -> np.ndarray:
    """``W[t-1] = sum_{n=1}^{N} C[t-1+n]`` (zero beyond the end)."""
    padded = np.concatenate([C[1:], np.zeros(N, dtype=complex)])
    conv = np.convolve(padded, np.ones(N, dtype=complex), mode="full")
    return conv[N - 1: N - 1 + C.size]


def run_pipeline(lam: float, f: PhaseFunction | None = None, *, epsilon: float = DEFAULT_EPSILON,
                 constants: dict | None = None, budget: PipelineBudget | None = None,
                 decomposition_samples: int = 64, seed: int = 0) -> PipelineReport:
    """Evaluate every displayed inequality of the argument at one ``lambda``."""
    budget = budget or PipelineBudget()
    clock = _Clock(budget)
    sel = select_parameters(lam, constants)
    M, H, R, Q, N = sel.M0, sel.H, sel.R, sel.Q, sel.N
    if f is None:
        f = quartic_phase(Fraction(lam), M)
    elif f.M < M:
        f = extend_c4(f, M)
    cert = certify_vdc(f)
    lam_c = cert.lambda_
    info: dict = {"M": M, "certificate": asdict(cert), "epsilon": epsilon}
    ratios: list[ineq.RatioReport] = []
    exact: list[ineq.ExactReport] = []
    base = {"lambda": lam, "M": M, "H": H, "R": R, "Q": Q, "N": N}

    # step 1: differencing
    S = abs(sum_phase(f, M).value)
    hs = range(1, H)
    a_h = [c.value for c in differenced_sums(f, hs, M)]
    weighted = abs(sum((1 - h / H) * a for h, a in zip(hs, a_h)))
    ratios.append(ineq.RatioReport.build("a_process", S**2, M**2 / H + M / H * weighted, base,
                                         S_M=S))
    dyadic = [2**k for k in range(int(math.log2(H // 2)) + 1)] if H >= 2 else []
    if not dyadic:
        raise ParameterError("H must be at least 2")
    s_h1 = {h1: abs(sum_differenced(f, h1, M).value) for h1 in dyadic}
    H1 = max(dyadic, key=lambda k: (s_h1[k], -k))
    info["S_H1"] = {str(k): v for k, v in s_h1.items()}
    info["H1"] = H1
    S1 = s_h1[H1]
    logH = math.log(H)
    ratios.append(ineq.RatioReport.build(
        "dyadic_h1", abs(sum(a_h)), (max(abs(a) for a in a_h) + S1) * logH, {**base, "H1": H1}))
    ratios.append(ineq.RatioReport.build(
        "a_process_dyadic", S**2, M**2 / H * logH + M / H * S1 * logH, {**base, "H1": H1}))
    clock.check("differencing")

    # step 2: two-dimensional differencing on a(m, h) = e(Delta_h f(m))
    frac = f.frac_range(1, M)
    rows = _diff_rows(frac, range(H1, 2 * H1), M)
    table = np.stack([rows[h] for h in range(H1, 2 * H1)], axis=1)
    R_eff = min(R, H1)
    aa = ineq.check_weyl_aa(table, Q, R_eff)
    aa.params.update(base, H1=H1, R_eff=R_eff)
    ratios.append(aa)
    W, qs, rs = ineq.weighted_correlations(table, Q, R_eff)
    pref = M * H1 / (Q * R_eff)
    q0, r0 = Q - 1, R_eff - 1  # indices of q = 0 and r = 0
    t00 = pref * W[q0, r0]
    tq = pref * (W[:, r0].sum() - W[q0, r0])
    tr = pref * (W[q0, :].sum() - W[q0, r0])
    rest = pref * (W.sum() - W[:, r0].sum() - W[q0, :].sum() + W[q0, r0])
    small = M**2 * lam_c ** (1 / 13)
    p2 = {**base, "H1": H1, "R_eff": R_eff}
    ratios.append(ineq.RatioReport.build("remainder_00", abs(t00), M**2, p2))
    ratios.append(ineq.RatioReport.build("remainder_q0", abs(tq), small, p2))
    ratios.append(ineq.RatioReport.build("remainder_r0", abs(tr), small, p2))
    ratios.append(ineq.RatioReport.build("differenced_4_10", S1**2, M**2 + abs(rest), p2))
    clock.check("two-dimensional differencing")

    # step 3: shift
    # one instance of the averaging identity: q = 1, h = H1, r = 1
    r1 = 1 if R > 1 else 0
    ms = np.arange(1 + H1 + r1, M - H1 - r1)
    seq = e(frac[ms + H1] - frac[ms - H1] - (frac[ms + H1 + r1 - 1] - frac[ms - H1 - r1 - 1]))
    exact.append(ineq.check_shift_identity(seq, N))
    clock.tuples(2 * (R - 1) * M * H1, "shifted sum")
    shifted = shifted_sieve_sum(frac, M, R, Q, H1, N)
    ratios.append(ineq.RatioReport.build(
        "shift_4_12", S1**2, M**2 + M * H1 / (Q * R * N) * shifted, {**base, "H1": H1},
        shifted_sum=shifted))
    clock.check("shift")

    # step 4: Taylor decomposition, exact
    rng = np.random.default_rng(seed)
    for _ in range(decomposition_samples):
        r = int(rng.integers(-(R - 1), R))
        q = int(rng.integers(-(Q - 1), Q))
        h = int(rng.integers(H1, 2 * H1))
        n = int(rng.integers(1, N + 1))
        lo = 1 + h + abs(r) + abs(q)
        m = int(rng.integers(lo, M - N - 2 * H1 - abs(q) - abs(r)))
        exact.append(ineq.check_phase_decomposition(f, m, r, q, h, n))
    clock.check("decomposition")

    # step 5: double large sieve on an evenly strided set of m
    ranges = (R, Q, H1, N)
    X1_paper, X2_paper = Q * H, Q * H * N
    p1max = ineq.scan_form_max(ranges, p1_form)
    p2max = ineq.scan_form_max(ranges, p2_form)
    X1, X2 = max(X1_paper, p1max), max(X2_paper, p2max)
    mu = M * lam_c
    per_m = 2 * (R - 1) * 2 * (Q - 1) * H1 * N
    m_count = max(1, min(M, budget.sieve_terms // per_m))
    idx = np.unique(np.linspace(1, M, m_count).round().astype(int))
    xs = 2 * np.asarray(f.deriv(idx.astype(float), 2))
    ys = np.asarray(f.deriv(idx.astype(float), 3))
    xs_full = 2 * np.asarray(f.deriv(np.arange(1.0, M + 1), 2))
    ys_full = np.asarray(f.deriv(np.arange(1.0, M + 1), 3))
    info.update(X1_paper=X1_paper, X2_paper=X2_paper, X1=X1, X2=X2, mu=mu,
                P1_max=p1max, P2_max=p2max, sieve_subset=int(idx.size))
    qabs = lambda r, q, h, n: 1 - np.abs(q) / Q
    sub = dio.SpacingInputs(xs, ys, X1, X2, mu)
    clock.tuples(per_m * idx.size, "sieve form")
    ds = ineq.check_double_sieve(sub, ranges, qabs, p1_form, p2_form, budget=budget.max_tuples)
    ds.params.update(lambda_=lam, subset=int(idx.size))
    ratios.append(ds)
    s_tilde = ds.extra["s_tilde"]
    n_full = ds.extra["spacing_N"]
    b_sub = ds.extra["spacing_B"]
    logq = max(math.log(Q), 1.0)
    ratios.append(ineq.RatioReport.build(
        "sieve_4_21", s_tilde**2, R * X1 * mu * X2 * n_full * b_sub * logq**2,
        {**base, "H1": H1, "subset": int(idx.size)}, spacing_N=n_full, spacing_B=b_sub))
    clock.check("double sieve")

    # step 6: spacing of (x_m, y_m) over the full range
    b_full = dio.count_spacing_B(dio.SpacingInputs(xs_full, ys_full, X1, X2, mu),
                                 budget=budget.max_tuples)
    K = 1.0 / (lam_c * X2)
    info["K"] = K
    ratios.append(ineq.RatioReport.build("spacing_b", b_full.count, M * math.log(M),
                                         {**base, "X1": X1, "X2": X2}, K=K,
                                         max_offset=b_full.details["max_offset"]))
    clock.check("spacing B")

    # step 7: the truncated system
    n_trunc = dio.count_spacing_N(ranges, mu, p1_form, p2_truncated, budget=budget.max_tuples)
    ratios.append(ineq.RatioReport.build(
        "spacing_n", n_trunc.count, M**epsilon * lam_c ** (-9 / 13), {**base, "H1": H1},
        best_Q1=n_trunc.details["best_Q1"], spacing_N_full=n_full))
    clock.check("spacing N")
    info["elapsed"] = time.perf_counter() - clock.start
    return PipelineReport(sel, ratios, exact, info)
