"""The two quadruple-variable polynomials attached to the Taylor expansion.

All take ``(r, q, h, n)`` and broadcast over numpy arrays.
"""

from __future__ import annotations


def p1_form(r, q, h, n):
    """``q*h - r*n``."""
    return q * h - r * n


def p2_form(r, q, h, n):
    """``h*q**2 + 2*h*q*n - r*n**2 - r*h**2 - r**2*h``."""
    return h * q * q + 2 * h * q * n - r * n * n - r * h * h - r * r * h


def p2_truncated(r, q, h, n):
    """``p2_form`` without the ``r*h**2`` and ``r**2*h`` terms."""
    return h * q * q + 2 * h * q * n - r * n * n


def zero_form(r, q, h, n):
    return 0 * (q + h + n + r)


FORMS = {
    "p1": p1_form,
    "p2": p2_form,
    "p2_truncated": p2_truncated,
    "zero": zero_form,
}
