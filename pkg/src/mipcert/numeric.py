"""Exact arbitrary-precision rational arithmetic, parsing, and formatting.

Every proof-relevant number in this package is a :data:`Rational` — backed by
``gmpy2.mpq`` when available (C-speed canonical rationals) and by
``fractions.Fraction`` otherwise. Both backends keep values in canonical form
(positive denominator, gcd(|numerator|, denominator) = 1) after every
operation, expose ``.numerator``/``.denominator``, and support the native
arithmetic and comparison operators, so all code here is backend-agnostic.

The textual form of a rational is ``p`` or ``p/q`` with an optional leading
minus sign and q > 0 — no whitespace, no floats, no exponents. This grammar is
deliberately stricter than what the backend constructors accept, so tokens are
validated by regex here rather than delegated.
"""

from __future__ import annotations

import re

try:
    from gmpy2 import mpq as Rational

    BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as Rational

    BACKEND = "fractions"

__all__ = [
    "BACKEND",
    "Rational",
    "format_rational",
    "is_integral",
    "parse_rational",
    "rational_ceil",
    "rational_floor",
]

_TOKEN_RE = re.compile(r"\A(-?\d+)(?:/(\d+))?\Z")


def parse_rational(token: str) -> Rational:
    """Parse a rational token of the form ``[-]p`` or ``[-]p/q`` with q > 0.

    Raises ValueError for anything else, including a zero denominator.
    """
    match = _TOKEN_RE.match(token)
    if match is None:
        msg = f"malformed rational token {token!r}"
        raise ValueError(msg)
    numerator = int(match.group(1))
    if match.group(2) is None:
        return Rational(numerator)
    denominator = int(match.group(2))
    if denominator == 0:
        msg = f"zero denominator in rational token {token!r}"
        raise ValueError(msg)
    return Rational(numerator, denominator)


def format_rational(value: Rational) -> str:
    """Render a rational in canonical token form (``p`` or ``p/q``)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def rational_floor(value: Rational) -> Rational:
    """Largest integer <= value, as a denominator-1 rational."""
    return Rational(value.numerator // value.denominator)


def rational_ceil(value: Rational) -> Rational:
    """Smallest integer >= value, as a denominator-1 rational."""
    return Rational(-((-value.numerator) // value.denominator))


def is_integral(value: Rational) -> bool:
    """True iff value is an integer."""
    return value.denominator == 1
