"""Number parsing and the comparison policy shared by every checker.

Values that arrive as integers, ``Fraction`` objects, decimal strings or
``"p/q"`` strings are held as exact ``Fraction`` values and compared
exactly.  Python floats (orbits on analytic spaces) fall back to an
absolute tolerance of ``FLOAT_TOL``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[Fraction, float]

FLOAT_TOL = 1e-12


def exact(value) -> Fraction:
    """Convert ``value`` to a ``Fraction``.

    Floats are read through their shortest decimal ``repr`` so that ``0.1``
    becomes ``1/10`` rather than the binary approximation.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a decimal or p/q rational: {value!r}") from exc
    raise TypeError(f"unsupported number type {type(value).__name__}")


def is_exact(*values) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def leq(a: Number, b: Number) -> bool:
    """``a <= b`` exactly for rationals, with ``FLOAT_TOL`` slack for floats."""
    if is_exact(a, b):
        return a <= b
    return float(a) <= float(b) + FLOAT_TOL


def is_zero(a: Number) -> bool:
    if is_exact(a):
        return a == 0
    return abs(float(a)) <= FLOAT_TOL


def fmt(value) -> object:
    """JSON-friendly rendering: rationals as strings, floats as numbers."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value
