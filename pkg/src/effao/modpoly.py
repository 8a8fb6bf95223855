"""Classical modular polynomials Phi_N(x, y) and certified isogeny tests.

Phi_N(X, j(tau)) = prod (X - j((a tau + b)/d)) over the psi(N) coset
representatives ad = N, 0 <= b < d, gcd(a, b, d) = 1.  Each factor is a
Laurent series in t = q^(1/N) with ball coefficients (the roots of unity
exp(2 pi i b n / d) are the only inexact ingredient).  The coefficients of
the product are integer q-series; they are rounded with a certified margin
and rewritten as polynomials in j by peeling off powers of the exact
integer expansion of j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

from flint import acb_poly, fmpq

from .balls import acb, arb, has_zero, workprec
from .errors import PrecisionExhausted, SizeCapExceeded
from .halfplane import Matrix
from .quad import QuadForm, _prime_factors

__all__ = [
    "ModularPolynomial",
    "Isogeny",
    "psi",
    "coset_representatives",
    "j_qseries",
    "phi",
    "phi_eval",
    "is_isogenous",
    "DEFAULT_SIZE_CAP",
]

DEFAULT_SIZE_CAP = 20
MAX_PREC = 1 << 16


def psi(N: int) -> int:
    """Dedekind psi: N prod_{p | N} (1 + 1/p), the number of cyclic N-isogenies."""
    out = N
    for p in _prime_factors(N):
        out = out // p * (p + 1)
    return out


def coset_representatives(N: int) -> list[tuple[int, int, int]]:
    """Triples (a, b, d) for the matrices [[a, b], [0, d]] of determinant N."""
    reps = []
    for a in range(1, N + 1):
        if N % a:
            continue
        d = N // a
        for b in range(d):
            if math.gcd(math.gcd(a, b), d) == 1:
                reps.append((a, b, d))
    return reps


@lru_cache(maxsize=None)
def _e4_cubed_over_eta(M: int) -> tuple[int, ...]:
    """Integer coefficients of q j(q) = E4^3 / prod (1 - q^n)^24 up to q^M."""
    L = M + 1
    sigma3 = [0] * (L + 1)
    for dd in range(1, L + 1):
        for m in range(dd, L + 1, dd):
            sigma3[m] += dd**3
    e4 = [1] + [240 * sigma3[n] for n in range(1, L)]
    e4_3 = _mul(_mul(e4, e4, L), e4, L)
    eta24 = [1] + [0] * (L - 1)
    for n in range(1, L):
        # multiply by (1 - q^n)^24 via 24 successive factors
        for _ in range(24):
            for k in range(L - 1, n - 1, -1):
                eta24[k] -= eta24[k - n]
    out = [0] * L
    for k in range(L):
        out[k] = e4_3[k] - sum(out[i] * eta24[k - i] for i in range(k))
    return tuple(out)


def _mul(a: list[int], b: list[int], L: int) -> list[int]:
    out = [0] * L
    for i, x in enumerate(a[:L]):
        if x:
            for k, y in enumerate(b[: L - i]):
                out[i + k] += x * y
    return out


def j_qseries(M: int) -> list[int]:
    """[c(-1), c(0), ..., c(M)] with j = sum c(n) q^n: 1/q + 744 + 196884 q + ..."""
    return list(_e4_cubed_over_eta(M + 1))


@dataclass(frozen=True)
class ModularPolynomial:
    """Phi_N as a dict {(i, j): coefficient of x^i y^j}."""

    N: int
    coeffs: dict

    @property
    def deg_x(self) -> int:
        return max(i for i, _ in self.coeffs)

    @property
    def deg_y(self) -> int:
        return max(j for _, j in self.coeffs)

    @property
    def total_degree(self) -> int:
        return max(i + j for i, j in self.coeffs)

    def is_symmetric(self) -> bool:
        return all(self.coeffs.get((j, i)) == c for (i, j), c in self.coeffs.items())

    def coefficient(self, i: int, j: int) -> int:
        return self.coeffs.get((i, j), 0)

    def to_lines(self) -> list[str]:
        """Text cache format: one ``i j coefficient`` line per monomial."""
        return [f"{i} {j} {c}" for (i, j), c in sorted(self.coeffs.items(), reverse=True)]

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n")

    @classmethod
    def from_lines(cls, N: int, lines) -> "ModularPolynomial":
        coeffs = {}
        for line in lines:
            line = line.strip()
            if not line:
                continue
            i, j, c = line.split()
            coeffs[(int(i), int(j))] = int(c)
        return cls(N, coeffs)

    @classmethod
    def load(cls, N: int, path) -> "ModularPolynomial":
        return cls.from_lines(N, Path(path).read_text().splitlines())


class _Series:
    """Laurent series t^val * poly(t), known modulo t^known (absolute)."""

    __slots__ = ("val", "poly", "known")

    def __init__(self, val: int, poly: acb_poly, known: int):
        self.val, self.poly, self.known = val, poly, known

    def coeff(self, e: int) -> acb:
        k = e - self.val
        if k < 0:
            return acb(0)
        cs = self.poly.coeffs()
        return cs[k] if k < len(cs) else acb(0)

    def mul(self, other: "_Series") -> "_Series":
        known = min(self.val + other.known, other.val + self.known)
        val = self.val + other.val
        poly = (self.poly * other.poly).truncate(max(known - val, 0))
        return _Series(val, poly, known)

    def add(self, other: "_Series", sign: int = 1) -> "_Series":
        val = min(self.val, other.val)
        known = min(self.known, other.known)
        a = self.poly if self.val == val else _shift(self.poly, self.val - val)
        b = other.poly if other.val == val else _shift(other.poly, other.val - val)
        poly = (a + b if sign > 0 else a - b).truncate(max(known - val, 0))
        return _Series(val, poly, known)


def _shift(p: acb_poly, k: int) -> acb_poly:
    return acb_poly([acb(0)] * k + p.coeffs())


def _factor_series(a: int, b: int, d: int, N: int, known: int, cj: list[int]) -> _Series:
    """j((a tau + b)/d) in t = q^(1/N): sum c(n) zeta_d^(b n) t^(a^2 n)."""
    step = a * a
    nmax = (known - 1) // step  # exponents a^2 n < known
    coeffs = [acb(0)] * (step * (nmax + 1) + 1)
    for n in range(-1, nmax + 1):
        e = step * n + step  # offset so that n = -1 sits at index 0
        r = (b * n) % d
        if r == 0:
            zeta = acb(1)
        else:
            zeta = acb(arb(fmpq(2 * r, d))).exp_pi_i()
        coeffs[e] = zeta * cj[n + 1]
    return _Series(-step, acb_poly(coeffs).truncate(known + step), known)


def _round_integer(z: acb) -> int | None:
    """Integer within 1/4 of a ball of radius < 1/4 on the real line, else None."""
    quarter = arb(1) / 4
    if not (z.imag.rad() < quarter and z.real.rad() < quarter):
        return None
    if not abs(z.imag).upper() < quarter:
        return None
    n = int((z.real.mid() + arb(1) / 2).floor().unique_fmpz())
    if abs(z.real - n) < quarter:
        return n
    return None


def _peel(series: dict[int, int], cj_pow) -> dict[int, int] | None:
    """Express an integer q-series (exponent -> coeff) as a polynomial in j."""
    s = dict(series)
    lo = min(s) if s else 0
    m = max(-lo, 0)
    poly = {}
    for k in range(m, -1, -1):
        c = s.get(-k, 0)
        if c:
            poly[k] = c
            for e, v in cj_pow(k).items():
                s[e] = s.get(e, 0) - c * v
    # everything left must vanish: this certifies the truncation
    if any(v for v in s.values()):
        return None
    return poly


def _compute_phi(N: int, prec: int) -> ModularPolynomial | None:
    reps = coset_representatives(N)
    V = sum(a * a for a, _, _ in reps)
    extra_q = 2  # verify the peeled result on q^1, q^2
    E = N * extra_q
    known = E + V + 1
    M = (known + V) // 1 + 2
    cj = j_qseries(M)
    with workprec(prec):
        poly: list[_Series] = [_Series(0, acb_poly([1]), 10**9)]
        for a, b, d in reps:
            J = _factor_series(a, b, d, N, known + V, cj)
            new = [None] * (len(poly) + 1)
            for k, coeff in enumerate(poly):
                # (X - J) * coeff X^k
                term = coeff.mul(J)
                new[k + 1] = coeff if new[k + 1] is None else new[k + 1].add(coeff)
                new[k] = _neg(term) if new[k] is None else new[k].add(term, -1)
            poly = new
        qseries: list[dict[int, int]] = []
        for coeff in poly:
            lo_e = coeff.val
            hi_e = min(coeff.known, E + 1)
            entries = {}
            for e in range(lo_e, hi_e):
                z = coeff.coeff(e)
                if e % N:
                    if not has_zero(z):
                        raise AssertionError(f"fractional exponent t^{e} survived in Phi_{N}")
                    if not (z.real.rad() < arb(1) / 4 and z.imag.rad() < arb(1) / 4):
                        return None
                    continue
                n = _round_integer(z)
                if n is None:
                    return None
                if n:
                    entries[e // N] = n
            # exponents available: up to (hi_e - 1) // N
            qseries.append(entries)
        top_q = (E) // N

    @lru_cache(maxsize=None)
    def cj_pow(k: int) -> dict[int, int]:
        # q^e in j^k involves terms of j up to q^(e + k - 1)
        base = {n - 1: c for n, c in enumerate(cj) if n - 1 <= top_q + k}
        out = {0: 1}
        for i in range(1, k + 1):
            prod = {}
            limit = top_q + (k - i)
            for e1, v1 in out.items():
                for e2, v2 in base.items():
                    if e1 + e2 <= limit:
                        prod[e1 + e2] = prod.get(e1 + e2, 0) + v1 * v2
            out = prod
        return out

    coeffs = {}
    for i, series in enumerate(qseries):
        series = {e: v for e, v in series.items() if e <= top_q}
        peeled = _peel(series, cj_pow)
        if peeled is None:
            return None
        for jdeg, c in peeled.items():
            coeffs[(i, jdeg)] = c
    return ModularPolynomial(N, coeffs)


def _neg(s: _Series) -> _Series:
    return _Series(s.val, -s.poly, s.known)


def _default_prec(N: int) -> int:
    # crude estimate of coefficient size, refined by doubling
    n = psi(N)
    return 64 + int(12 * n * (1 + math.log2(N + 1)))


@lru_cache(maxsize=64)
def _phi_cached(N: int, prec: int) -> ModularPolynomial:
    p = prec
    while p <= MAX_PREC:
        result = _compute_phi(N, p)
        if result is not None:
            return result
        p *= 2
    raise PrecisionExhausted(f"Phi_{N} coefficients not recognized up to {MAX_PREC} bits")


def phi(N: int, prec_hint: int | None = None, size_cap: int = DEFAULT_SIZE_CAP,
        cache_dir=None) -> ModularPolynomial:
    """The modular polynomial Phi_N with exact integer coefficients.

    ``prec_hint`` is the starting working precision; it doubles until every
    coefficient rounds with a certified margin.  With ``cache_dir`` the
    result is read from / written to ``phi_<N>.txt``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if N > size_cap:
        raise SizeCapExceeded(f"N = {N} exceeds the size cap {size_cap}")
    path = Path(cache_dir) / f"phi_{N}.txt" if cache_dir is not None else None
    if path is not None and path.exists():
        return ModularPolynomial.load(N, path)
    result = _phi_cached(N, prec_hint or _default_prec(N))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        result.save(tmp)
        tmp.replace(path)
    return result


def phi_eval(N: int, x, y, prec: int = 128, size_cap: int = DEFAULT_SIZE_CAP) -> acb:
    """Ball for Phi_N(x, y) by nested Horner evaluation."""
    P = phi(N, size_cap=size_cap)
    with workprec(prec):
        x, y = acb(x), acb(y)
        return _horner2(P, x, y)


def _horner2(P: ModularPolynomial, x: acb, y: acb) -> acb:
    rows: dict[int, dict[int, int]] = {}
    for (i, j), c in P.coeffs.items():
        rows.setdefault(i, {})[j] = c
    acc = acb(0)
    for i in range(P.deg_x, -1, -1):
        row = rows.get(i, {})
        inner = acb(0)
        for jj in range(max(row, default=0), -1, -1):
            inner = inner * y + row.get(jj, 0)
        acc = acc * x + inner
    return acc


class Isogeny(str, Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


def _as_form(tau) -> QuadForm | None:
    from .quad import CMPoint

    if isinstance(tau, QuadForm):
        return tau
    if isinstance(tau, CMPoint):
        return tau.form
    return None


def isogeny_witness(f1: QuadForm, f2: QuadForm, N: int) -> Matrix | None:
    """[[a, b], [0, d]] of determinant N with g . tau1 SL2(Z)-equivalent to tau2."""
    target = f2.primitive().reduce()[0]
    for a, b, d in coset_representatives(N):
        g = ((a, b), (0, d))
        image = f1.act(g).primitive().reduce()[0]
        if image == target:
            return g
    return None


def is_isogenous(tau1, tau2, N: int, prec: int = 128, max_prec: int = 4096,
                 size_cap: int = DEFAULT_SIZE_CAP) -> tuple[Isogeny, Matrix | None]:
    """Decide whether j(tau1), j(tau2) are cyclically N-isogenous.

    ``yes`` is returned only with an exact matrix witness, which needs both
    points given exactly as forms (QuadForm or CMPoint).  ``no`` needs a ball
    for Phi_N(j(tau1), j(tau2)) excluding 0.
    """
    from .jfun import j as jval

    f1, f2 = _as_form(tau1), _as_form(tau2)
    if f1 is not None and f2 is not None:
        w = isogeny_witness(f1, f2, N)
        if w is not None:
            return Isogeny.YES, w
    p = prec
    while p <= max_prec:
        z1 = f1.tau(p) if f1 is not None else tau1
        z2 = f2.tau(p) if f2 is not None else tau2
        try:
            val = phi_eval(N, jval(z1, p), jval(z2, p), p, size_cap)
        except PrecisionExhausted:
            val = None
        if val is not None and not has_zero(val):
            return Isogeny.NO, None
        if f1 is None or f2 is None:
            # inexact input: more precision cannot shrink the input ball
            if val is not None:
                break
        p *= 2
    return Isogeny.UNDECIDED, None
