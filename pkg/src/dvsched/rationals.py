"""Exact rational arithmetic used throughout the scheduler.

Instants, execution amounts and processor speeds stay rational end to
end; floating point only appears when power draw is folded into report
output.  gmpy2's mpq is used when available (much faster than
fractions.Fraction on the simulation hot path), with a stdlib fallback.
"""

from __future__ import annotations

import math
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Union

try:
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Rat = Fraction

RatLike = Union[int, str, Fraction, Decimal]

ZERO = Rat(0)
ONE = Rat(1)


def to_rat(value) -> "Rat":
    """Convert a number to an exact rational.

    Accepts ints, rationals, "p/q" strings, decimal strings and Decimal.
    Floats are interpreted through their shortest decimal representation,
    so 0.1 means one tenth rather than the underlying binary value.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational quantity")
    if isinstance(value, int):
        return Rat(value)
    if isinstance(value, float):
        value = Decimal(repr(value))
    if isinstance(value, Decimal):
        return Rat(Fraction(value))
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            return Rat(int(num), int(den))
        return Rat(Fraction(Decimal(text)))
    return Rat(value)


def rat_str(value) -> str:
    """Render a rational as an explicit "p/q" string."""
    q = Rat(value)
    return f"{q.numerator}/{q.denominator}"


def rat_lcm(values: Iterable) -> "Rat":
    """Least common multiple of positive rationals.

    lcm(a1/b1, ..., an/bn) = lcm(a1..an) / gcd(b1..bn), the smallest
    positive rational that is an integer multiple of every input.
    """
    nums = []
    dens = []
    for v in values:
        q = Rat(v)
        if q <= 0:
            raise ValueError(f"lcm requires positive values, got {q}")
        nums.append(int(q.numerator))
        dens.append(int(q.denominator))
    if not nums:
        raise ValueError("lcm of an empty collection")
    return Rat(math.lcm(*nums), math.gcd(*dens))
