"""Thin helpers around python-flint's arb/acb ball types.

Every certified real or complex quantity in the package is an ``arb`` or
``acb``.  Precision is always passed explicitly and applied with
:func:`workprec`; flint keeps the working precision in a process-wide
context, so parallel scans use processes rather than threads.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

from flint import acb, arb, ctx, fmpq, fmpz

__all__ = [
    "acb",
    "arb",
    "workprec",
    "to_arb",
    "to_acb",
    "arb_to_fraction",
    "upper_float",
    "lower_float",
    "has_zero",
    "ball_parts",
    "format_arb",
]

MIN_PREC = 16


def workprec(prec: int):
    """Context manager setting the flint working precision to ``prec`` bits."""
    if prec < MIN_PREC:
        raise ValueError(f"precision {prec} below minimum {MIN_PREC}")
    return ctx.workprec(int(prec))


def to_arb(x) -> arb:
    """Convert ints, Fractions, floats, decimal strings and arbs to an arb.

    Rational input is rounded at the current working precision (exact when
    the value is dyadic and fits).
    """
    if isinstance(x, arb):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, (int, fmpz)):
        return arb(x)
    if isinstance(x, fmpq):
        return arb(x)
    if isinstance(x, Rational):
        return arb(fmpq(int(x.numerator), int(x.denominator)))
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, str):
        return arb(x)
    raise TypeError(f"cannot convert {type(x).__name__} to arb")


def to_acb(z) -> acb:
    """Convert a complex-like value (or a ``(re, im)`` pair) to an acb."""
    if isinstance(z, acb):
        return z
    if isinstance(z, tuple):
        re, im = z
        return acb(to_arb(re), to_arb(im))
    if isinstance(z, complex):
        return acb(z.real, z.imag)
    return acb(to_arb(z))


def arb_to_fraction(x: arb) -> Fraction:
    """Exact value of an exact (zero-radius) arb, e.g. a midpoint or endpoint."""
    man, exp = x.man_exp()
    man, exp = int(man), int(exp)
    if exp >= 0:
        return Fraction(man << exp)
    return Fraction(man, 1 << -exp)


def upper_float(x: arb) -> float:
    """A float guaranteed to be >= every point of ``x``."""
    if not x.is_finite():
        return math.inf
    hi = arb_to_fraction(x.upper())
    f = float(hi)
    if Fraction(f) < hi:
        f = math.nextafter(f, math.inf)
    return f


def lower_float(x: arb) -> float:
    """A float guaranteed to be <= every point of ``x``."""
    if not x.is_finite():
        return -math.inf
    lo = arb_to_fraction(x.lower())
    f = float(lo)
    if Fraction(f) > lo:
        f = math.nextafter(f, -math.inf)
    return f


def has_zero(z) -> bool:
    """True when the ball (real or complex) cannot exclude zero."""
    return bool(z.contains(0))


def ball_parts(z) -> dict:
    """Midpoint and radius of a ball as plain floats (radius rounded up)."""
    if isinstance(z, arb):
        return {
            "center_re": float(z.mid()),
            "center_im": 0.0,
            "radius": upper_float(z.rad()),
        }
    re, im = z.real, z.imag
    rad = upper_float(re.rad()) + upper_float(im.rad())
    return {
        "center_re": float(re.mid()),
        "center_im": float(im.mid()),
        "radius": math.nextafter(rad, math.inf) if rad else 0.0,
    }


def format_arb(x: arb, digits: int = 20) -> str:
    """Midpoint rendered to ``digits`` significant digits, no radius."""
    return x.mid().str(digits, radius=False)
