"""Elementary arithmetic functions used by the counting lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Largest magnitude allowed in int64 counting paths (keys, products).
INT64_SAFE = 2**62


class ArithmeticOverflow(OverflowError):
    """Raised when a counting path would exceed the native integer width."""


@dataclass(frozen=True)
class DivisorProfile:
    n: int
    tau: int
    sigma: int


def _check_positive(n: int) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"expected an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValueError(f"expected a positive integer, got {n}")
    return n


def divisors(n: int) -> list[int]:
    """Sorted positive divisors of ``n`` by trial division up to sqrt(n)."""
    n = _check_positive(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def tau(n: int) -> int:
    """Number of positive divisors of ``n``."""
    return len(divisors(n))


def sigma(n: int) -> int:
    """Sum of positive divisors of ``n``."""
    return sum(divisors(n))


def divisor_profile(n: int) -> DivisorProfile:
    ds = divisors(n)
    return DivisorProfile(n=int(n), tau=len(ds), sigma=sum(ds))


def gcd3(u: int, v: int, w: int) -> int:
    """gcd(|u|, |v|, |w|); the triple (0, 0, 0) is rejected."""
    if u == 0 and v == 0 and w == 0:
        raise ValueError("gcd3 is undefined for (0, 0, 0)")
    return math.gcd(abs(int(u)), math.gcd(abs(int(v)), abs(int(w))))


def check_int64(*values: int) -> None:
    """Raise if any value is too wide for an int64 counting path."""
    for value in values:
        if abs(int(value)) >= INT64_SAFE:
            raise ArithmeticOverflow(
                f"value {value} exceeds the int64-safe limit 2**62"
            )
