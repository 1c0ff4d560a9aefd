"""Numeric plumbing for the dual exact/float arithmetic backend.

Quantities flow through the package either as exact rationals
(int or fractions.Fraction) or as IEEE doubles.  Identity and residual
checks demand the exact backend (residuals must be literally zero);
parameter scans use floats.  The serialization contract is: rationals as
"p/q" text, floats as their shortest round-trip decimal (Python repr).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Num = Union[int, Fraction, float]


def is_exact(x: Num) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values) -> bool:
    return all(is_exact(v) for v in values)


def div(a: Num, b: Num) -> Num:
    """Divide, staying exact when both operands are exact."""
    if is_exact(a) and is_exact(b):
        return Fraction(a) / Fraction(b)
    return a / b


def to_float(x: Num) -> float:
    return float(x)


def log_of(x: Num) -> float:
    return math.log(float(x))


def format_num(x: Num) -> str:
    """Serialize per the numeric output contract."""
    if is_exact(x):
        f = Fraction(x)
        return f"{f.numerator}/{f.denominator}"
    return repr(float(x))


def parse_num(raw, exact: bool) -> Num:
    """Parse a model-file number.

    Accepts ints, floats, "p/q" strings, and decimal strings.  In exact
    mode decimal inputs become the rational they print as (0.3 -> 3/10).
    """
    if isinstance(raw, bool):
        raise ValueError(f"expected a number, got {raw!r}")
    if isinstance(raw, int):
        return raw if exact else float(raw)
    if isinstance(raw, float):
        return Fraction(str(raw)) if exact else raw
    if isinstance(raw, str):
        text = raw.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            frac = Fraction(int(num), int(den))
        else:
            frac = Fraction(text)
        return frac if exact else float(frac)
    raise ValueError(f"expected a number, got {raw!r}")
