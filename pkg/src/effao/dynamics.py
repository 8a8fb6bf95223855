"""Polynomial vector fields: Lie derivatives, iterated chains, exact
trajectory-membership tests and ball-arithmetic integration of the
third-order j-field."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from flint import acb, arb, fmpq, fmpq_mat

from .balls import has_zero, to_acb, workprec
from .errors import (
    DimensionMismatch,
    PrecisionExhausted,
    SingularityApproached,
    SingularLocus,
    SizeCapExceeded,
    ZeroPolynomial,
)
from .varieties import MultiPoly

DEFAULT_TERM_CAP = 200_000


@dataclass(frozen=True)
class VectorField:
    """xi = (1/cleared_factor) * sum_i components[i] d/dx_i."""

    m: int
    components: tuple[MultiPoly, ...]
    cleared_factor: MultiPoly
    names: tuple[str, ...] = ()

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.m or any(c.n_vars != self.m for c in comps):
            raise DimensionMismatch("components must be m polynomials in m variables")
        if self.cleared_factor.n_vars != self.m:
            raise DimensionMismatch("cleared factor lives in the wrong ring")
        if self.cleared_factor.is_zero():
            raise ZeroPolynomial("cleared factor must be nonzero")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(self.m)))

    @classmethod
    def polynomial(cls, components: Sequence[MultiPoly]) -> "VectorField":
        m = len(components)
        return cls(m, tuple(components), MultiPoly.const(m, 1))

    def index(self, name: str) -> int:
        return self.names.index(name)

    def rational_at(self, point: Sequence[acb]) -> list[acb]:
        """Uncleared components at a ball point."""
        f = self.cleared_factor.evaluate(point)
        if has_zero(f):
            raise SingularityApproached("cleared factor ball contains zero")
        return [c.evaluate(point) / f if c else acb(0) for c in self.components]


def lie_derivative(xi: VectorField, F: MultiPoly) -> MultiPoly:
    """sum_i xi_i dF/dx_i, using the cleared components."""
    if F.n_vars != xi.m:
        raise DimensionMismatch(f"F has {F.n_vars} variables, field has {xi.m}")
    out = MultiPoly(xi.m)
    for i, c in enumerate(xi.components):
        if c and F.depends_on(i):
            out = out + c * F.derivative(i)
    return out


def derivative_chain(xi: VectorField, F_list: Sequence[MultiPoly], K: int,
                     term_cap: int = DEFAULT_TERM_CAP) -> list[MultiPoly]:
    """[xi F, xi^2 F, ..., xi^K F] for each F in turn, concatenated."""
    if K < 1:
        raise ValueError("K must be at least 1")
    out = []
    for F in F_list:
        G = F
        for _ in range(K):
            G = lie_derivative(xi, G)
            if G.num_terms > term_cap:
                raise SizeCapExceeded(f"chain element has {G.num_terms} terms")
            out.append(G)
    return out


def _rank(polys: Sequence[MultiPoly]) -> int:
    monos = sorted({e for P in polys for e in P.terms})
    if not monos or not polys:
        return 0
    col = {e: k for k, e in enumerate(monos)}
    M = fmpq_mat(len(polys), len(monos))
    for r, P in enumerate(polys):
        for e, c in P.terms.items():
            M[r, col[e]] = fmpq(c.numerator, c.denominator)
    return M.rank()


@dataclass(frozen=True)
class ChainReport:
    chain: tuple[MultiPoly, ...]
    K: int
    stabilized: bool
    rank: int


def chain_stabilized(xi: VectorField, F_list: Sequence[MultiPoly], K: int,
                     degree_cap: int | None = None,
                     term_cap: int = DEFAULT_TERM_CAP) -> ChainReport:
    """Check whether xi^(K+1) F lies in the Q-span of all lower chain members.

    When it does, every higher derivative does too, so vanishing of the
    first K derivatives forces vanishing of all of them.
    """
    chain = derivative_chain(xi, F_list, K + 1, term_cap)
    lower: list[MultiPoly] = list(F_list)
    top: list[MultiPoly] = []
    for a in range(len(F_list)):
        block = chain[a * (K + 1):(a + 1) * (K + 1)]
        lower.extend(block[:-1])
        top.append(block[-1])
    if degree_cap is not None:
        for P in lower + top:
            if P and P.total_degree() > degree_cap:
                raise SizeCapExceeded(f"degree {P.total_degree()} exceeds cap {degree_cap}")
    r = _rank(lower)
    stable = _rank(lower + top) == r
    kept = tuple(P for a in range(len(F_list))
                 for P in chain[a * (K + 1):a * (K + 1) + K])
    return ChainReport(kept, K, stable, r)


class Membership3(str, Enum):
    IN = "in"
    OUT = "out"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class MembershipResult:
    status: Membership3
    order: int | None = None      # first k with xi^k F(p) certified nonzero
    poly_index: int | None = None

    def __str__(self):
        return self.status.value


def _series_mul(a: list, b: list, K: int, zero) -> list:
    out = [zero] * (K + 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for k in range(min(K - i, len(b) - 1) + 1):
            out[i + k] = out[i + k] + x * b[k]
    return out


def _poly_on_series(P: MultiPoly, xs: list[list], K: int, zero, one, conv) -> list:
    total = [zero] * (K + 1)
    cache: dict[tuple[int, int], list] = {}
    for e, c in P.terms.items():
        term = [conv(c)] + [zero] * K
        for i, p in enumerate(e):
            if p:
                key = (i, p)
                if key not in cache:
                    acc = [one] + [zero] * K
                    for _ in range(p):
                        acc = _series_mul(acc, xs[i], K, zero)
                    cache[key] = acc
                term = _series_mul(term, cache[key], K, zero)
        total = [u + v for u, v in zip(total, term)]
    return total


def taylor_trajectory(xi: VectorField, p: Sequence, K: int, exact: bool = True) -> list[list]:
    """Power series x(t) = sum x_k t^k of the cleared flow through p to order K."""
    if exact:
        zero, one, conv = Fraction(0), Fraction(1), Fraction
    else:
        zero, one, conv = acb(0), acb(1), lambda c: acb(fmpq(c.numerator, c.denominator))
    xs = [[conv(v) if exact else v] + [zero] * K for v in p]
    for k in range(K):
        for i, comp in enumerate(xi.components):
            if comp:
                s = _poly_on_series(comp, xs, k, zero, one, conv)
                xs[i][k + 1] = s[k] / (k + 1)
    return xs


def trajectory_member(xi: VectorField, F_list: Sequence[MultiPoly], p: Sequence, K: int,
                      prec: int = 128) -> MembershipResult:
    """Does the trajectory through p stay on {F = 0 for all F} to order K?

    Rational p (ints / Fractions) is decided exactly.  Ball p yields ``out``
    when a derivative excludes zero and ``undecided`` otherwise.
    """
    if len(p) != xi.m:
        raise DimensionMismatch(f"point has {len(p)} coordinates, field has {xi.m}")
    exact = all(isinstance(v, (int, Fraction)) for v in p)
    if exact:
        p = [Fraction(v) for v in p]
        if xi.cleared_factor.evaluate(p) == 0:
            raise SingularLocus("point lies on the cleared singular locus")
        xs = taylor_trajectory(xi, p, K, exact=True)
        for a, F in enumerate(F_list):
            s = _poly_on_series(F, xs, K, Fraction(0), Fraction(1), Fraction)
            for k, v in enumerate(s):
                if v:
                    return MembershipResult(Membership3.OUT, k, a)
        return MembershipResult(Membership3.IN)
    with workprec(prec):
        p = [to_acb(v) for v in p]
        if has_zero(xi.cleared_factor.evaluate(p)):
            raise SingularLocus("cleared factor ball contains zero at the point")
        xs = taylor_trajectory(xi, p, K, exact=False)
        conv = lambda c: acb(fmpq(c.numerator, c.denominator))
        for a, F in enumerate(F_list):
            s = _poly_on_series(F, xs, K, acb(0), acb(1), conv)
            for k, v in enumerate(s):
                if not has_zero(v):
                    return MembershipResult(Membership3.OUT, k, a)
    return MembershipResult(Membership3.UNDECIDED)


# the j-field

_R_NUM = (1, -1968, 2654208)   # y^2 - 1968 y + 2654208


def j_field(n: int, S) -> VectorField:
    """tau-translation lifted to 3-jets of j on the blocks in S.

    Coordinates: tau, then per block i = 1..n either (y_i, y_i', y_i'') for
    i in S or a single frozen y_i.
    """
    S = set(S)
    if not S or not S <= set(range(1, n + 1)):
        raise ValueError("S must be a nonempty subset of 1..n")
    names = ["tau"]
    blocks: dict[int, tuple[int, ...]] = {}
    for i in range(1, n + 1):
        if i in S:
            blocks[i] = (len(names), len(names) + 1, len(names) + 2)
            names += [f"y{i}", f"dy{i}", f"ddy{i}"]
        else:
            blocks[i] = (len(names),)
            names.append(f"y{i}")
    m = len(names)
    X = MultiPoly.gens(m)
    one = MultiPoly.const(m, 1)

    def D(i):
        y, dy, _ = (X[k] for k in blocks[i])
        return 2 * y ** 2 * (y - 1728) ** 2 * dy

    Ds = {i: D(i) for i in S}
    f = one
    for i in sorted(S):
        f = f * Ds[i]
    comps = [MultiPoly(m)] * m
    comps[0] = f
    for i in sorted(S):
        y, dy, ddy = (X[k] for k in blocks[i])
        others = one
        for k in sorted(S - {i}):
            others = others * Ds[k]
        a, b, c = _R_NUM
        num = 3 * ddy ** 2 * y ** 2 * (y - 1728) ** 2 - (a * y ** 2 + b * y + c) * dy ** 4
        k0, k1, k2 = blocks[i]
        comps[k0] = f * dy
        comps[k1] = f * ddy
        comps[k2] = num * others
    fld = VectorField(m, tuple(comps), f, tuple(names))
    return fld


def j_field_blocks(n: int, S) -> dict[int, tuple[int, ...]]:
    """Coordinate indices of each block of ``j_field(n, S)``."""
    S = set(S)
    pos = 1
    out = {}
    for i in range(1, n + 1):
        w = 3 if i in S else 1
        out[i] = tuple(range(pos, pos + w))
        pos += w
    return out


def jet_point(tau, n: int, S, prec: int = 128, frozen=None) -> list[acb]:
    """Point of the j-field space with the true 3-jet of j at tau on each block
    in S.  Frozen blocks get ``frozen[i]`` or j(tau)."""
    from .jfun import j_jet

    S = set(S)
    jet = j_jet(tau, prec)
    pt = [jet.tau]
    for i in range(1, n + 1):
        if i in S:
            pt += [jet.y, jet.y_dot, jet.y_ddot]
        else:
            v = (frozen or {}).get(i)
            pt.append(jet.y if v is None else to_acb(v))
    return pt


@dataclass
class TrajectorySample:
    """Samples of a trajectory parametrised as p(s * direction), s real."""

    times: list[float]
    points: list[list[acb]]
    step: float
    direction: complex = 1.0
    rejected: int = 0

    def complex_time(self, k: int) -> complex:
        return self.times[k] * self.direction

    @property
    def endpoint(self) -> list[acb]:
        return self.points[-1]


def _rk4(xi: VectorField, x: list[acb], h: acb) -> list[acb]:
    def f(z):
        return [h * v for v in xi.rational_at(z)]

    k1 = f(x)
    k2 = f([a + b / 2 for a, b in zip(x, k1)])
    k3 = f([a + b / 2 for a, b in zip(x, k2)])
    k4 = f([a + b for a, b in zip(x, k3)])
    return [a + (b1 + 2 * b2 + 2 * b3 + b4) / 6 for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]


def _mid(z: acb) -> complex:
    return complex(float(z.real.mid()), float(z.imag.mid()))


def integrate(xi: VectorField, p0: Sequence, T, step: float = 0.01, prec: int = 128,
              tol: float = 1e-13, min_step: float = 1e-10, max_steps: int = 100_000,
              max_radius: float = 1e-6) -> TrajectorySample:
    """Adaptive RK4 (step doubling) for the uncleared field along s in [0, |T|].

    Complex time t = s * T / |T|.  Raises SingularityApproached when the
    step collapses or the cleared factor is no longer certified nonzero,
    PrecisionExhausted when ball radii outgrow ``max_radius``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    T = complex(T)
    length = abs(T)
    if length == 0:
        raise ValueError("T must be nonzero")
    u = T / length
    with workprec(prec):
        x = [to_acb(v) for v in p0]
        if len(x) != xi.m:
            raise DimensionMismatch(f"point has {len(x)} coordinates, field has {xi.m}")
        xi.rational_at(x)
        du = acb(u.real, u.imag)
        s, h = 0.0, min(step, length)
        times, points = [0.0], [x]
        rejected = 0
        for _ in range(max_steps):
            if s >= length * (1 - 1e-15):
                break
            h = min(h, length - s)
            try:
                full = _rk4(xi, x, du * h)
                half = _rk4(xi, x, du * (h / 2))
                two = _rk4(xi, half, du * (h / 2))
            except SingularityApproached:
                full = None
            if full is None:
                err = float("inf")
            else:
                err = max(abs(_mid(a) - _mid(b)) / max(abs(_mid(b)), 1.0)
                          for a, b in zip(full, two))
            if err <= tol:
                # Richardson: the two-half-step result is the more accurate one
                x = two
                s += h
                times.append(s)
                points.append(x)
                for z in x:
                    if z.rad() > max_radius * max(abs(_mid(z)), 1.0):
                        raise PrecisionExhausted("ball radii outgrew the tolerance")
                h = h * min(2.0, 0.9 * (tol / err) ** 0.2) if err > 0 else 2 * h
            else:
                rejected += 1
                h = h * max(0.1, 0.9 * (tol / err) ** 0.2) if err != float("inf") else h / 4
            if h < min_step * length:
                raise SingularityApproached(f"step collapsed near s = {s:.6g}")
        else:
            raise SingularityApproached("step budget exhausted")
    return TrajectorySample(times, points, h, u, rejected)


def qsp_degree_bound(n: int, degX: int, c_user: int = 1) -> int:
    """c * degX^(16 n^2)."""
    if n < 0 or degX < 0:
        raise ValueError("n and degX must be non-negative")
    return c_user * degX ** (16 * n * n)


def redegree_bound(m: int, degW: int, c_xi: int = 1) -> int:
    """c * degW^(m^2)."""
    if m < 0 or degW < 0:
        raise ValueError("m and degW must be non-negative")
    return c_xi * degW ** (m * m)
