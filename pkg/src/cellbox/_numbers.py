"""Number handling shared by every module.

Two arithmetic routes exist throughout the package: exact (``int`` and
``Fraction``) and floating point.  A value is routed exactly when every
input is an ``int`` or ``Fraction``; any ``float`` sends the computation to
the floating path.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(x) for x in values)


def as_fraction(x) -> Fraction:
    """Exact rational value of ``x`` (floats convert to their binary value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def exact_vector(v: Sequence) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x) for x in v)


def to_float(x) -> float:
    return float(x)


def simplify(x):
    """Return ``int`` for integral fractions, leave everything else alone."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


def parse_number(text: str):
    """Parse ``"3"``, ``"-7/2"`` or ``"0.25"``.

    Integers and ``p/q`` strings parse exactly; anything with a decimal point
    or exponent parses as ``float``.  Raises ``ValueError`` on garbage.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty number")
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        pass
    value = float(s)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def parse_vector(text: str) -> list:
    return [parse_number(part) for part in text.split(",")]


def format_number(x) -> str:
    """Serialize: big ints in decimal, rationals as ``p/q``, floats with 17
    significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def decode_number(text: str):
    """Inverse of :func:`format_number` for numeric strings."""
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def norm2(v: Sequence) -> float:
    return math.sqrt(math.fsum(float(x) * float(x) for x in v))


def norm1(v: Sequence):
    if all_exact(v):
        return sum((abs(as_fraction(x)) for x in v), Fraction(0))
    return math.fsum(abs(float(x)) for x in v)
