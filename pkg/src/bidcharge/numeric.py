"""Helpers for the two arithmetic modes: exact rationals and floats."""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]


def as_fraction(value) -> Fraction:
    """Parse ``"p/q"`` strings, decimal strings, ints, floats or Fractions exactly.

    Floats are read through their shortest repr so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def convert(value, exact: bool) -> Number:
    return as_fraction(value) if exact else float(value)


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def bit_size(value: Number) -> int:
    if isinstance(value, Fraction):
        return max(value.numerator.bit_length(), value.denominator.bit_length())
    return 0


def _decimal_digits(den: int) -> int | None:
    """Digits after the point needed to write ``1/den`` exactly, or None."""
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    return max(twos, fives) if den == 1 else None


def format_number(value) -> str:
    """Exact text for rationals (decimal when it terminates, else ``p/q``)."""
    if isinstance(value, float):
        return repr(value)
    value = as_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    digits = _decimal_digits(value.denominator)
    if digits is None:
        return f"{value.numerator}/{value.denominator}"
    scaled = abs(value.numerator) * 10**digits // value.denominator
    whole, frac = divmod(scaled, 10**digits)
    sign = "-" if value < 0 else ""
    return f"{sign}{whole}.{frac:0{digits}d}".rstrip("0")


def to_json_number(value):
    """JSON-friendly representation: strings for exact values, floats otherwise."""
    if isinstance(value, float):
        return value
    return format_number(value)
