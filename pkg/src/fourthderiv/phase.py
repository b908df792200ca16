"""Phase functions and derivative-level constructions.

A :class:`PhaseFunction` evaluates ``f`` and its first four derivatives on
``[1, M]``.  Polynomial phases keep their coefficients as exact rationals so
that values at integers can be reduced modulo 1 without rounding, which is
what keeps ``e(f(m))`` accurate once ``f(m)`` is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "VdcConditionError",
    "PhaseFunction",
    "PolynomialPhase",
    "PowerPhase",
    "CustomPhase",
    "SumPhase",
    "ExtendedPhase",
    "VdcCertificate",
    "monomial",
    "polynomial",
    "quartic_phase",
    "paper_example_phase",
    "from_config",
    "certify_vdc",
    "delta_h",
    "delta_bar_k",
    "taylor_tail",
    "taylor_tail_deriv",
    "u_phase",
    "extend_c4",
]


class DomainError(ValueError):
    """An evaluation point falls outside the phase function's domain."""


class VdcConditionError(ValueError):
    """The fourth derivative is not strictly positive on the domain."""


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite coefficient {value!r}")
    return Fraction(value)


def _falling(a: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= a - i
    return out


class PhaseFunction:
    """Base class: an immutable real function with derivatives 0..4.

    Subclasses implement :meth:`deriv`.  ``frac_at`` defaults to a float
    reduction and is overridden where exact reduction is possible.
    """

    family: str = "custom"

    def __init__(self, M: int, params: dict | None = None):
        if int(M) != M or M < 1:
            raise ValueError(f"domain end M must be a positive integer, got {M!r}")
        self.M = int(M)
        self.params = dict(params or {})
        self._frac_cache: dict[tuple[int, int], np.ndarray] = {}

    # -- evaluation -----------------------------------------------------
    def deriv(self, x, j: int = 0):
        raise NotImplementedError

    def __call__(self, x):
        return self.deriv(x, 0)

    def exact_deriv(self, x, j: int = 0) -> Fraction:
        """Exact rational value of ``f^(j)(x)``; only for rational phases."""
        raise NotImplementedError(f"{type(self).__name__} has no exact evaluator")

    @property
    def is_exact(self) -> bool:
        return False

    def frac_at(self, m) -> np.ndarray:
        """``f(m) mod 1`` in ``[0, 1)`` for integer ``m`` (array-like)."""
        m = np.asarray(m, dtype=float)
        return np.mod(self.deriv(m, 0), 1.0)

    def frac_range(self, lo: int, hi: int) -> np.ndarray:
        """Cached ``frac_at(arange(lo, hi + 1))``."""
        key = (int(lo), int(hi))
        table = self._frac_cache.get(key)
        if table is None:
            table = np.asarray(self.frac_at(np.arange(lo, hi + 1)), dtype=float)
            table.setflags(write=False)
            self._frac_cache[key] = table
        return table

    # -- structure ------------------------------------------------------
    @property
    def fourth_monotone(self) -> bool:
        """True when f'''' is known to be monotone on [1, M]."""
        return False

    def check_domain(self, *points) -> None:
        for p in points:
            arr = np.asarray(p, dtype=float)
            if arr.size and (arr.min() < 1 or arr.max() > self.M):
                raise DomainError(
                    f"evaluation point(s) outside [1, {self.M}]: "
                    f"min={arr.min()}, max={arr.max()}"
                )

    def add(self, other: "PhaseFunction") -> "PhaseFunction":
        """Pointwise sum ``self + other`` on the common domain."""
        return SumPhase(self, other)

    def twisted(self, alpha) -> "PhaseFunction":
        """``f(x) + alpha * x``."""
        return self.add(PolynomialPhase([0, alpha], self.M))

    def config(self) -> dict:
        return {"family": self.family, "M": self.M, **self.params}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(family={self.family!r}, M={self.M}, params={self.params})"


class PolynomialPhase(PhaseFunction):
    """``sum_k c_k x^k`` with exact rational coefficients (low order first)."""

    family = "polynomial"

    def __init__(self, coefficients: Sequence, M: int, *, family: str = "polynomial",
                 params: dict | None = None):
        coeffs = [_to_fraction(c) for c in coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            coeffs = [Fraction(0)]
        if params is None:
            params = {"coefficients": [float(c) for c in coeffs]}
        super().__init__(M, params)
        self.family = family
        self.coefficients: tuple[Fraction, ...] = tuple(coeffs)
        # exact derivative coefficient lists for j = 0..5
        self._dcoeffs: list[tuple[Fraction, ...]] = []
        cur = list(coeffs)
        for _ in range(6):
            self._dcoeffs.append(tuple(cur))
            cur = [k * cur[k] for k in range(1, len(cur))] or [Fraction(0)]
        self._fcoeffs = [np.array([float(c) for c in dc[::-1]]) for dc in self._dcoeffs]
        denominator = 1
        for c in coeffs:
            denominator = denominator * c.denominator // math.gcd(denominator, c.denominator)
        self._den = denominator
        self._nums = [int(c * denominator) for c in coeffs]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_exact(self) -> bool:
        return True

    def deriv(self, x, j: int = 0):
        if not 0 <= j <= 5:
            raise ValueError(f"derivative order must be in 0..5, got {j}")
        out = np.polyval(self._fcoeffs[j], np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def exact_deriv(self, x, j: int = 0) -> Fraction:
        x = _to_fraction(x)
        acc = Fraction(0)
        for c in reversed(self._dcoeffs[j]):
            acc = acc * x + c
        return acc

    def frac_at(self, m) -> np.ndarray:
        m_arr = np.asarray(m)
        flat = [int(v) for v in m_arr.ravel()]
        if any(v != w for v, w in zip(flat, m_arr.ravel())):
            raise ValueError("frac_at requires integer arguments")
        den = self._den
        nums = self._nums[::-1]
        out = np.empty(len(flat), dtype=float)
        for idx, v in enumerate(flat):
            acc = 0
            for c in nums:
                acc = (acc * v + c) % den
            out[idx] = acc / den
        return out.reshape(m_arr.shape)

    @property
    def fourth_monotone(self) -> bool:
        return self.degree <= 5 or self.family == "monomial"

    def add(self, other: PhaseFunction) -> PhaseFunction:
        if isinstance(other, PolynomialPhase):
            n = max(len(self.coefficients), len(other.coefficients))
            a = list(self.coefficients) + [Fraction(0)] * (n - len(self.coefficients))
            b = list(other.coefficients) + [Fraction(0)] * (n - len(other.coefficients))
            return PolynomialPhase([x + y for x, y in zip(a, b)], min(self.M, other.M))
        return SumPhase(self, other)


class PowerPhase(PhaseFunction):
    """``c * x**a`` for a non-integer real exponent ``a`` (float evaluation)."""

    family = "monomial"

    def __init__(self, coefficient: float, exponent: float, M: int):
        super().__init__(M, {"coefficient": float(coefficient), "exponent": float(exponent)})
        self.c = float(coefficient)
        self.a = float(exponent)

    def deriv(self, x, j: int = 0):
        x = np.asarray(x, dtype=float)
        out = self.c * _falling(self.a, j) * x ** (self.a - j)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def fourth_monotone(self) -> bool:
        return True


class CustomPhase(PhaseFunction):
    """Phase given by five derivative callables ``[f, f', f'', f''', f'''']``."""

    family = "custom"

    def __init__(self, derivatives: Sequence[Callable], M: int, params: dict | None = None,
                 monotone_fourth: bool = False):
        if len(derivatives) != 5:
            raise ValueError("need callables for derivatives 0..4")
        super().__init__(M, params)
        self._derivs = tuple(derivatives)
        self._monotone = monotone_fourth

    def deriv(self, x, j: int = 0):
        out = self._derivs[j](np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    @property
    def fourth_monotone(self) -> bool:
        return self._monotone


class SumPhase(PhaseFunction):
    """Pointwise sum of two phases; fractional parts are added exactly mod 1."""

    family = "custom"

    def __init__(self, left: PhaseFunction, right: PhaseFunction):
        super().__init__(min(left.M, right.M), {"sum": [left.config(), right.config()]})
        self.left, self.right = left, right

    def deriv(self, x, j: int = 0):
        return self.left.deriv(x, j) + self.right.deriv(x, j)

    def frac_at(self, m) -> np.ndarray:
        return np.mod(self.left.frac_at(m) + self.right.frac_at(m), 1.0)

    @property
    def is_exact(self) -> bool:
        return self.left.is_exact and self.right.is_exact

    def exact_deriv(self, x, j: int = 0) -> Fraction:
        return self.left.exact_deriv(x, j) + self.right.exact_deriv(x, j)


class ExtendedPhase(PhaseFunction):
    """``f`` on ``[1, M]`` continued by its degree-4 Taylor polynomial at ``M``."""

    family = "custom"

    def __init__(self, base: PhaseFunction, target_end: int):
        super().__init__(target_end, {"base": base.config(), "extended_from": base.M})
        self.base = base
        self.join = base.M
        if base.is_exact:
            taylor = [base.exact_deriv(base.M, j) / math.factorial(j) for j in range(5)]
        else:
            taylor = [base.deriv(float(base.M), j) / math.factorial(j) for j in range(5)]
        # Taylor polynomial in t = x - M
        self.tail = PolynomialPhase(taylor, max(1, target_end - base.M + 1))

    @property
    def is_exact(self) -> bool:
        return self.base.is_exact

    def deriv(self, x, j: int = 0):
        x_arr = np.asarray(x, dtype=float)
        inside = x_arr <= self.join
        base_vals = self.base.deriv(np.where(inside, x_arr, self.join), j)
        tail_vals = self.tail.deriv(np.where(inside, 0.0, x_arr - self.join), j)
        out = np.where(inside, base_vals, tail_vals)
        return float(out) if np.ndim(out) == 0 else out

    def exact_deriv(self, x, j: int = 0) -> Fraction:
        x = _to_fraction(x)
        if x <= self.join:
            return self.base.exact_deriv(x, j)
        return self.tail.exact_deriv(x - self.join, j)

    def frac_at(self, m) -> np.ndarray:
        m_arr = np.asarray(m)
        inside = m_arr <= self.join
        out = np.empty(m_arr.shape, dtype=float)
        if inside.any():
            out[inside] = self.base.frac_at(m_arr[inside])
        if (~inside).any():
            out[~inside] = self.tail.frac_at(m_arr[~inside] - self.join)
        return out

    @property
    def fourth_monotone(self) -> bool:
        # monotone on [1, M] and constant beyond stays monotone
        return self.base.fourth_monotone


# -- constructors -------------------------------------------------------------

def monomial(coefficient, exponent, M: int) -> PhaseFunction:
    """``coefficient * x**exponent``; exact when the exponent is a non-negative integer."""
    if float(exponent).is_integer() and exponent >= 0:
        k = int(exponent)
        coeffs = [0] * k + [coefficient]
        return PolynomialPhase(
            coeffs, M, family="monomial",
            params={"coefficient": float(coefficient), "exponent": k},
        )
    return PowerPhase(coefficient, exponent, M)


def polynomial(coefficients: Sequence, M: int) -> PolynomialPhase:
    return PolynomialPhase(coefficients, M)


def quartic_phase(lam, M: int) -> PolynomialPhase:
    """``lam * x**4 / 24``: fourth derivative identically ``lam``."""
    return PolynomialPhase(
        [0, 0, 0, 0, _to_fraction(lam) / 24], M, family="monomial",
        params={"coefficient": float(_to_fraction(lam) / 24), "exponent": 4},
    )


def paper_example_phase(M: int) -> PolynomialPhase:
    """``x**4 / (100 M**4)`` on ``[1, M]``, the classical lower-bound example."""
    return PolynomialPhase(
        [0, 0, 0, 0, Fraction(1, 100 * M**4)], M, family="monomial",
        params={"coefficient": 1.0 / (100 * M**4), "exponent": 4},
    )


def from_config(config: dict) -> PhaseFunction:
    """Build a phase from ``{family: monomial|polynomial, ..., M}``."""
    cfg = dict(config)
    family = cfg.pop("family", None)
    if "M" not in cfg:
        raise ValueError("phase configuration needs M")
    M = int(cfg.pop("M"))
    if family == "monomial":
        return monomial(cfg["coefficient"], cfg["exponent"], M)
    if family == "polynomial":
        return PolynomialPhase(cfg["coefficients"], M)
    raise ValueError(f"unsupported phase family {family!r} (monomial | polynomial)")


# -- certificate --------------------------------------------------------------

@dataclass(frozen=True)
class VdcCertificate:
    lambda_: float
    ratio: float
    grid_step: float
    domain: tuple[int, int]
    mode: str  # "exact" (endpoint evaluation) or "grid"

    @property
    def sup(self) -> float:
        return self.lambda_ * self.ratio


def certify_vdc(f: PhaseFunction, grid_step: float = 1.0) -> VdcCertificate:
    """Measure ``lambda = inf f''''`` and ``sup/inf`` on ``[1, M]``.

    Endpoint evaluation is used when f'''' is known to be monotone; otherwise
    f'''' is sampled on ``{1, 1 + step, ..., M}``.
    """
    if not 0 < grid_step <= 1:
        raise ValueError(f"grid_step must lie in (0, 1], got {grid_step}")
    if f.fourth_monotone:
        mode = "exact"
        xs = np.array([1.0, float(f.M)])
    else:
        mode = "grid"
        xs = np.arange(1.0, float(f.M), grid_step)
        xs = np.append(xs, float(f.M))
    vals = np.atleast_1d(f.deriv(xs, 4))
    if not np.all(np.isfinite(vals)):
        raise VdcConditionError("fourth derivative not finite on the domain")
    lo, hi = float(vals.min()), float(vals.max())
    if lo <= 0:
        raise VdcConditionError(
            f"fourth derivative must be positive on [1, {f.M}]; minimum sampled value {lo}"
        )
    return VdcCertificate(lambda_=lo, ratio=hi / lo, grid_step=float(grid_step),
                          domain=(1, f.M), mode=mode)


# -- differences and Taylor tails -------------------------------------------

def _value(f: PhaseFunction, x, j: int, exact: bool):
    return f.exact_deriv(x, j) if exact else f.deriv(x, j)


def delta_h(f: PhaseFunction, m, h, *, exact: bool = False):
    """Symmetric difference ``f(m + h) - f(m - h)``."""
    f.check_domain(m - h, m + h)
    return _value(f, m + h, 0, exact) - _value(f, m - h, 0, exact)


def delta_bar_k(f: PhaseFunction, m, k, order: int = 2, *, exact: bool = False):
    """Forward difference ``f^(order)(m + k) - f^(order)(m)``."""
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    f.check_domain(m, m + k)
    return _value(f, m + k, order, exact) - _value(f, m, order, exact)


def taylor_tail(f: PhaseFunction, m, y, *, exact: bool = False):
    """``v_m(y) = f(m + y) - sum_{j<=3} f^(j)(m) y^j / j!`` (subtraction form)."""
    f.check_domain(m, m + np.asarray(y, dtype=float))
    if exact:
        y = _to_fraction(y)
        derivs = [f.exact_deriv(m, j) for j in range(4)]
        poly = derivs[0] + derivs[1] * y + derivs[2] * y**2 / 2 + derivs[3] * y**3 / 6
        return f.exact_deriv(_to_fraction(m) + y, 0) - poly
    y = np.asarray(y, dtype=float)
    d = [f.deriv(float(m), j) for j in range(4)]
    out = f.deriv(m + y, 0) - (d[0] + y * (d[1] + y * (d[2] / 2 + y * d[3] / 6)))
    return float(out) if np.ndim(out) == 0 else out


def taylor_tail_deriv(f: PhaseFunction, m, y, j: int):
    """``d^j/dy^j v_m(y)`` for ``0 <= j <= 4``."""
    if not 0 <= j <= 4:
        raise ValueError("j must be in 0..4")
    y = np.asarray(y, dtype=float)
    f.check_domain(m, m + y)
    out = f.deriv(m + y, j)
    for i in range(j, 4):
        out = out - f.deriv(float(m), i) * y ** (i - j) / math.factorial(i - j)
    return float(out) if np.ndim(out) == 0 else out


def u_phase(f: PhaseFunction, m, r, q, h, n, *, exact: bool = False):
    """Alternating sum of four Taylor tails at ``n+q+h, n+q-h, n+h+r, n-h-r``."""
    def tail(y):
        return taylor_tail(f, m, y, exact=exact)

    return tail(n + q + h) - tail(n + q - h) - tail(n + h + r) + tail(n - h - r)


def extend_c4(f: PhaseFunction, target_end: int) -> PhaseFunction:
    """C^4 continuation of ``f`` to ``[1, target_end]``.

    Beyond ``M`` the continuation is the degree-4 Taylor polynomial at ``M``,
    so its fourth derivative is the constant ``f''''(M)``.  Polynomials of
    degree at most 4 are returned unchanged apart from the wider domain.
    """
    if int(target_end) != target_end or target_end < f.M:
        raise ValueError(f"target_end must be an integer >= M={f.M}, got {target_end}")
    if isinstance(f, PolynomialPhase) and f.degree <= 4:
        return PolynomialPhase(f.coefficients, int(target_end), family=f.family,
                               params=dict(f.params))
    return ExtendedPhase(f, int(target_end))
