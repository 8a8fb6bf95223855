"""Upper half-plane geometry: reduction to the standard fundamental domain,
certified membership and the normalized hyperbolic measure.

The fundamental domain is

    F = {-1/2 <= Re t < 1/2, |t| > 1}  u  {Re t <= 0, |t| = 1},

and the measure is (3/pi) dx dy / y^2, so that mu(F) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .balls import acb, arb, to_acb, workprec
from .errors import OutOfDomain, PrecisionExhausted

Matrix = tuple[tuple[int, int], tuple[int, int]]

IDENTITY: Matrix = ((1, 0), (0, 1))


class Membership(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"


def mat_mul(g: Matrix, h: Matrix) -> Matrix:
    (a, b), (c, d) = g
    (e, f), (p, q) = h
    return ((a * e + b * p, a * f + b * q), (c * e + d * p, c * f + d * q))


def mat_det(g: Matrix) -> int:
    (a, b), (c, d) = g
    return a * d - b * c


def mobius(g: Matrix, tau: acb) -> acb:
    """Ball enclosure of (a tau + b) / (c tau + d)."""
    (a, b), (c, d) = g
    if c == 0:
        return (a * tau + b) / d
    return (a * tau + b) / (c * tau + d)


def half_plane_point(tau, prec: int = 128) -> acb:
    """Coerce ``tau`` to an acb and check its imaginary part is certified > 0."""
    with workprec(prec):
        z = to_acb(tau)
        z = +z
    if not z.imag > 0:
        raise OutOfDomain(f"Im(tau) > 0 not certified for {z}")
    return z


def _reduction_steps(re: float | Fraction, im: float | Fraction, limit: int = 10_000):
    """Yield the T^n / S moves that carry a point approximately into F.

    Works on a plain approximation; the caller applies the resulting exact
    matrix to the ball.
    """
    g = IDENTITY
    x, y = re, im
    for _ in range(limit):
        n = math.floor(x + 0.5)
        if n:
            g = mat_mul(((1, -n), (0, 1)), g)
            x -= n
        r2 = x * x + y * y
        if r2 < 1:
            g = mat_mul(((0, -1), (1, 0)), g)
            x, y = -x / r2, y / r2
            continue
        return g
    raise PrecisionExhausted("reduction did not converge")


def approx_reduce(tau: acb) -> tuple[acb, Matrix]:
    """Reduce ``tau`` using its midpoint; no boundary certification.

    The returned point is within rounding of F, which is all that q-series
    evaluation needs.
    """
    mid = tau.mid()
    x, y = float(mid.real), float(mid.imag)
    if y <= 0:
        raise OutOfDomain("Im(tau) must be positive")
    if y < 1e-12 or abs(x) > 1e12:
        # float midpoints lose the point; fall back to exact rationals
        from .balls import arb_to_fraction

        x = arb_to_fraction(mid.real.mid())
        y = arb_to_fraction(mid.imag.mid())
    g = _reduction_steps(x, y)
    return mobius(g, tau), g


def in_F(tau: acb) -> Membership:
    """Certified three-valued membership of the ball ``tau`` in F."""
    x, y = tau.real, tau.imag
    if not y > 0:
        if y <= 0:
            return Membership.OUTSIDE
        return Membership.UNDECIDED
    half = arb(1) / 2
    # -1/2 <= Re < 1/2 is required in either piece of F
    if x < -half or x >= half:
        return Membership.OUTSIDE
    if not (x >= -half and x < half):
        return Membership.UNDECIDED
    r2 = x * x + y * y
    if r2 > 1:
        return Membership.INSIDE
    if r2 < 1:
        return Membership.OUTSIDE
    # the ball meets the unit circle: only the arc with Re <= 0 belongs to F
    if r2 >= 1 and x <= 0:
        return Membership.INSIDE
    if x > 0 and r2 <= 1:
        return Membership.OUTSIDE
    return Membership.UNDECIDED


def in_closure_F(tau: acb, slack: float = 0.0) -> Membership:
    """Membership in the closure of F, optionally enlarged by ``slack``."""
    x, y = tau.real, tau.imag
    half = arb(1) / 2 + slack
    if not y > 0:
        return Membership.OUTSIDE if y <= 0 else Membership.UNDECIDED
    if x < -half or x > half:
        return Membership.OUTSIDE
    r2 = x * x + y * y
    if r2 < 1 - slack:
        return Membership.OUTSIDE
    if x >= -half and x <= half and r2 >= 1 - slack:
        return Membership.INSIDE
    return Membership.UNDECIDED


def reduce_to_F(tau, prec: int = 128, max_prec: int = 4096) -> tuple[acb, Matrix]:
    """Move ``tau`` into F by an element of SL2(Z).

    Returns ``(tau_reduced, gamma)`` with ``tau_reduced = gamma . tau``.  The
    exact integer matrix is found from the midpoint and applied to the ball;
    when the result straddles the boundary of F the working precision is
    doubled up to ``max_prec`` before giving up with PrecisionExhausted.
    """
    p = prec
    while True:
        with workprec(p):
            z = half_plane_point(tau, p)
            red, g = approx_reduce(z)
            status = in_F(red)
            if status is Membership.INSIDE:
                return red, g
            # a midpoint sitting on the right boundary maps to the left one
            for fix in (((1, -1), (0, 1)), ((0, -1), (1, 0))):
                g2 = mat_mul(fix, g)
                red2 = mobius(g2, z)
                if in_F(red2) is Membership.INSIDE:
                    return red2, g2
        if p >= max_prec:
            raise PrecisionExhausted(f"cannot certify reduction of {tau} into F")
        p *= 2


class RegionKind(str, Enum):
    FULL_F = "FullF"
    OMEGA_R = "OmegaR"


@dataclass(frozen=True)
class Region:
    kind: RegionKind
    R: Fraction | None = None

    def __post_init__(self):
        if self.kind is RegionKind.OMEGA_R:
            if self.R is None or not self.R > 1:
                raise ValueError("Omega_R needs R > 1")

    @classmethod
    def full(cls) -> "Region":
        return cls(RegionKind.FULL_F)

    @classmethod
    def omega(cls, R) -> "Region":
        return cls(RegionKind.OMEGA_R, Fraction(R))

    def contains_im(self, im: arb):
        """Certified test of the height window for a point already in F."""
        if self.kind is RegionKind.FULL_F:
            return True
        lo = arb(3).sqrt() / 2
        return bool(im > lo and im < arb(self.R.numerator) / self.R.denominator)


@dataclass(frozen=True)
class PiLinear:
    """An exact real number ``rational + over_pi / pi``."""

    rational: Fraction
    over_pi: Fraction = Fraction(0)

    def __float__(self) -> float:
        return float(self.rational) + float(self.over_pi) / math.pi

    def ball(self, prec: int = 128) -> arb:
        with workprec(prec):
            r = self.rational
            o = self.over_pi
            return (arb(r.numerator) / r.denominator
                    + arb(o.numerator) / (o.denominator * arb.pi()))

    def __str__(self) -> str:
        if not self.over_pi:
            return str(self.rational)
        sign = "-" if self.over_pi < 0 else "+"
        return f"{self.rational} {sign} {abs(self.over_pi)}/pi"


def measure(region: Region) -> PiLinear:
    """Normalized hyperbolic measure of a region.

    mu(F) = 1, and for R >= 1 the part of F above height R is a full-width
    strip of measure 3/(pi R), so mu(Omega_R) = 1 - 3/(pi R).
    """
    if region.kind is RegionKind.FULL_F:
        return PiLinear(Fraction(1))
    return PiLinear(Fraction(1), -Fraction(3) / region.R)
