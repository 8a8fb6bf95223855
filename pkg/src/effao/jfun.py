"""Certified evaluation of Klein's j-function, its derivatives, the cusp
estimate, and the third-order differential operator whose kernel is
{j(g tau)}.

j is computed as 1728 E4^3 / (E4^3 - E6^2) from truncated Eisenstein
q-series.  The point is first moved into F, so |q| <= exp(-pi sqrt 3) and
a single geometric tail bound covers every truncation.  Derivatives come
from differentiating the q-series term by term and are transported back
through the reducing matrix with the chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .balls import acb, arb, has_zero, upper_float, workprec
from .errors import OutOfDomain, PrecisionExhausted, SingularLocus
from .halfplane import Matrix, Membership, approx_reduce, half_plane_point, in_closure_F

__all__ = [
    "Jet3",
    "j",
    "j_jet",
    "j_derivatives",
    "cusp_gap",
    "chi_residual",
    "A",
    "R_factor",
    "CUSP_GAP_BOUND",
]

CUSP_GAP_BOUND = 2079
MAX_PREC = 1 << 15


@lru_cache(maxsize=None)
def _sigma_table(k: int, n_max: int) -> tuple[int, ...]:
    table = [0] * (n_max + 1)
    for d in range(1, n_max + 1):
        dk = d**k
        for m in range(d, n_max + 1, d):
            table[m] += dk
    return tuple(table)


def _sigma(k: int, n: int) -> tuple[int, ...]:
    size = 64
    while size <= n:
        size *= 2
    return _sigma_table(k, size)


def _terms_needed(x: float, power: int, bits: int) -> int:
    """Smallest N with 2 N^power x^N below 2^-bits (x = |q| upper bound)."""
    target = -bits * math.log(2)
    logx = math.log(x)
    n = 1
    while math.log(2) + power * math.log(n) + n * logx > target:
        n += 1
    return n


def _tail_bound(x: arb, power: int, N: int) -> arb:
    """Upper bound for sum_{n>N} 2 n^power x^n, valid when the ratio is < 1."""
    r = arb(N + 2) ** power / arb(N + 1) ** power * x
    if not r < 1:
        raise PrecisionExhausted("q too large for the geometric tail bound")
    first = 2 * arb(N + 1) ** power * x ** (N + 1)
    return (first / (1 - r)).upper()


def _eisenstein_taylor(tau: acb, order: int) -> tuple[list[acb], list[acb]]:
    """Taylor coefficients (c_m = E^(m)(tau)/m!) of E4 and E6 at ``tau``.

    Uses sigma_k(n) <= zeta(k) n^k < 2 n^k for the tail.
    """
    q = (2 * tau).exp_pi_i()
    x = q.abs_upper()
    xf = upper_float(x)
    prec = _current_prec()
    N = _terms_needed(xf, 5 + order, prec + 8)
    s3 = _sigma(3, N)
    s5 = _sigma(5, N)
    sums4 = [acb(0)] * (order + 1)
    sums6 = [acb(0)] * (order + 1)
    qn = acb(1)
    for n in range(1, N + 1):
        qn = qn * q
        t4 = qn * s3[n]
        t6 = qn * s5[n]
        npow = 1
        for m in range(order + 1):
            sums4[m] += t4 * npow
            sums6[m] += t6 * npow
            npow *= n
    two_pi_i = acb(0, 2) * arb.pi()
    c4, c6 = [], []
    fact = 1
    scale = acb(1)
    for m in range(order + 1):
        if m:
            fact *= m
            scale = scale * two_pi_i
        tb4 = _tail_bound(x, 3 + m, N)
        tb6 = _tail_bound(x, 5 + m, N)
        s4 = sums4[m] + acb(arb(0, tb4), arb(0, tb4))
        s6 = sums6[m] + acb(arb(0, tb6), arb(0, tb6))
        e4 = 240 * s4 * scale / fact
        e6 = -504 * s6 * scale / fact
        if m == 0:
            e4 += 1
            e6 += 1
        c4.append(e4)
        c6.append(e6)
    return c4, c6


def _current_prec() -> int:
    from flint import ctx

    return ctx.prec


def _series_mul(a: list, b: list) -> list:
    n = len(a)
    return [sum((a[i] * b[k - i] for i in range(k + 1)), acb(0)) for k in range(n)]


def _series_div(a: list, b: list) -> list:
    n = len(a)
    out = []
    for k in range(n):
        s = a[k] - sum((out[i] * b[k - i] for i in range(k)), acb(0))
        out.append(s / b[0])
    return out


def _j_taylor_reduced(tau: acb, order: int) -> list[acb]:
    c4, c6 = _eisenstein_taylor(tau, order)
    e4_3 = _series_mul(_series_mul(c4, c4), c4)
    e6_2 = _series_mul(c6, c6)
    disc = [u - v for u, v in zip(e4_3, e6_2)]
    if has_zero(disc[0]):
        raise PrecisionExhausted("E4^3 - E6^2 not separated from 0")
    return [1728 * c for c in _series_div(e4_3, disc)]


def _chain(derivs: list[acb], g: Matrix, tau: acb) -> list[acb]:
    """Derivatives of f(g tau) in tau, from derivatives of f at g tau."""
    (_, _), (c, d) = g
    if c == 0:
        # pure translation (d = +-1): derivatives unchanged up to sign of d^2
        return derivs
    w = 1 / (c * tau + d)
    m1 = w * w
    m2 = -2 * c * m1 * w
    m3 = 6 * c * c * m1 * m1
    out = [derivs[0]]
    if len(derivs) > 1:
        out.append(derivs[1] * m1)
    if len(derivs) > 2:
        out.append(derivs[2] * m1 * m1 + derivs[1] * m2)
    if len(derivs) > 3:
        out.append(derivs[3] * m1 * m1 * m1 + 3 * derivs[2] * m1 * m2 + derivs[1] * m3)
    return out


def j_derivatives(tau, prec: int = 128, order: int = 3) -> list[acb]:
    """Balls for [j, j', ..., j^(order)] at ``tau`` (order <= 3).

    The returned balls are rounded to ``prec`` bits.  Internal precision is
    raised to absorb the cancellation in E4^3 - E6^2 ~ 1728 q, and doubled
    whenever the relative radius of j misses the target.
    """
    if not 0 <= order <= 3:
        raise ValueError("order must be between 0 and 3")
    with workprec(prec):
        z = half_plane_point(tau, prec)
    wp = prec + 32
    last_rad = None
    while True:
        with workprec(wp):
            z_red, g = approx_reduce(z)
            im = float(z_red.imag.mid())
            extra = int(math.ceil(2 * math.pi * max(im, 0.0) / math.log(2)))
            with workprec(wp + extra):
                try:
                    taylor = _j_taylor_reduced(z_red, order)
                    fact = [1, 1, 2, 6]
                    derivs = [taylor[m] * fact[m] for m in range(order + 1)]
                    derivs = _chain(derivs, g, z)
                except PrecisionExhausted:
                    derivs = None
        if derivs is not None:
            rad = derivs[0].rad()
            # stop once the radius is small, or no longer shrinks because
            # the input ball itself limits the accuracy
            if _accurate(derivs[0], prec) or (last_rad is not None and rad * 2 > last_rad):
                with workprec(prec):
                    return [+dv for dv in derivs]
            last_rad = rad
        if wp > MAX_PREC:
            raise PrecisionExhausted(f"j({tau}) not resolved at {wp} bits")
        wp *= 2


def _accurate(value: acb, prec: int) -> bool:
    if value.rel_accuracy_bits() >= prec - 8:
        return True
    return bool(value.rad() < arb(2) ** (-prec))


def j(tau, prec: int = 128) -> acb:
    """Ball containing j(tau)."""
    return j_derivatives(tau, prec, order=0)[0]


@dataclass(frozen=True)
class Jet3:
    """A point (tau, y, y', y'') of the jet space, all balls."""

    tau: acb
    y: acb
    y_dot: acb
    y_ddot: acb

    def as_tuple(self) -> tuple[acb, acb, acb, acb]:
        return (self.tau, self.y, self.y_dot, self.y_ddot)


def j_jet(tau, prec: int = 128) -> Jet3:
    """Jet (j, j', j'') at ``tau``."""
    with workprec(prec):
        z = half_plane_point(tau, prec)
    y, y1, y2 = j_derivatives(z, prec, order=2)
    return Jet3(z, y, y1, y2)


def cusp_gap(tau, prec: int | None = None) -> float:
    """Certified upper bound for | |j(tau)| - exp(2 pi Im tau) | on closure(F).

    Raises OutOfDomain when tau is certified to lie outside closure(F).
    """
    z = half_plane_point(tau, 128)
    if in_closure_F(z, slack=1e-12) is Membership.OUTSIDE:
        raise OutOfDomain(f"{tau} is outside the closure of F")
    if prec is None:
        im = float(z.imag.mid())
        prec = 64 + int(2 * math.pi * im / math.log(2))
    with workprec(prec):
        # evaluate without reduction: the ball may straddle the boundary
        w = half_plane_point(tau, prec)
        val = j(w, prec)
        gap = abs(val.abs_upper() - (2 * arb.pi() * w.imag).exp())
        gap = max(gap, abs(val.abs_lower() - (2 * arb.pi() * w.imag).exp()))
        return upper_float(gap)


def R_factor(y: acb) -> acb:
    """R(y) = (y^2 - 1968 y + 2654208) / (2 y^2 (y - 1728)^2)."""
    return (y * y - 1968 * y + 2654208) / (2 * y * y * (y - 1728) ** 2)


def _check_regular(y: acb, y_dot: acb) -> None:
    if has_zero(y):
        raise SingularLocus("y ball contains 0")
    if has_zero(y - 1728):
        raise SingularLocus("y - 1728 ball contains 0")
    if has_zero(y_dot):
        raise SingularLocus("y' ball contains 0")


def chi_residual(jet: Jet3, y_dddot, prec: int | None = None) -> acb:
    """chi(f) = f'''/f' - (3/2)(f''/f')^2 + R(f) f'^2 on the extended jet."""
    y, y1, y2 = jet.y, jet.y_dot, jet.y_ddot
    _check_regular(y, y1)
    ctxprec = prec or max(_bits(y), 64)
    with workprec(ctxprec):
        ratio = y2 / y1
        return acb(y_dddot) / y1 - ratio * ratio * 3 / 2 + R_factor(y) * y1 * y1


def A(y, y_dot, y_ddot, prec: int | None = None) -> acb:
    """The third derivative forced by chi = 0:

    f''' = (3/2) f''^2 / f' - R(f) f'^3.
    """
    y, y_dot, y_ddot = acb(y), acb(y_dot), acb(y_ddot)
    _check_regular(y, y_dot)
    with workprec(prec or max(_bits(y), 64)):
        return y_ddot * y_ddot * 3 / (2 * y_dot) - R_factor(y) * y_dot**3


def _bits(z: acb) -> int:
    """Rough precision of a ball, used to pick a working precision."""
    b = z.rel_accuracy_bits()
    return int(min(max(b + 16, 64), MAX_PREC))
