"""Imaginary quadratic discriminants, reduced binary quadratic forms and the
numeric class-number scans built on them.

Forms (a, b, c) stand for a x^2 + b x y + c y^2 with a > 0 and negative
discriminant b^2 - 4ac; the matching CM point is the root
tau = (-b + i sqrt|d|) / (2a) in the upper half-plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .balls import acb, arb, workprec
from .errors import NotADiscriminant
from .halfplane import IDENTITY, Matrix, mat_mul

__all__ = [
    "Discriminant",
    "QuadForm",
    "CMPoint",
    "TatuzawaConfig",
    "ScanRecord",
    "ScanReport",
    "check_discriminant",
    "is_discriminant",
    "is_fundamental",
    "decompose",
    "discriminants",
    "fundamental_discriminants",
    "reduced_forms",
    "class_number",
    "lambda_points",
    "tau_principal",
    "omega",
    "two_torsion_count",
    "roots_of_unity",
    "kronecker_chi",
    "character_period",
    "L_one",
    "class_number_from_L",
    "tatuzawa_scan",
]


def is_discriminant(d: int) -> bool:
    return d < 0 and d % 4 in (0, 1)


def check_discriminant(d: int) -> int:
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise NotADiscriminant(f"{d!r} is not an integer")
    d = int(d)
    if not is_discriminant(d):
        raise NotADiscriminant(f"{d} is not a negative discriminant (0 or 1 mod 4)")
    return d


def _squarefree(n: int) -> bool:
    if n % 4 == 0:
        return False
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1 if p == 2 else 2
    return True


def is_fundamental(d: int) -> bool:
    """Fundamental discriminant test for negative d."""
    if d >= 0:
        return False
    if d % 4 == 1:
        return _squarefree(-d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(-m)
    return False


@dataclass(frozen=True)
class Discriminant:
    d: int
    d_K: int
    f: int

    def __post_init__(self):
        if self.d != self.f * self.f * self.d_K or not is_fundamental(self.d_K):
            raise NotADiscriminant(f"inconsistent decomposition {self}")


@lru_cache(maxsize=4096)
def decompose(d: int) -> Discriminant:
    """Write d = f^2 d_K with d_K fundamental."""
    d = check_discriminant(d)
    n = -d
    f = 1
    p = 2
    # strip square factors while the cofactor stays a discriminant
    while p * p <= n:
        while n % (p * p) == 0 and is_discriminant(-(n // (p * p))):
            n //= p * p
            f *= p
        p += 1 if p == 2 else 2
    return Discriminant(d, -n, f)


def discriminants(lo: int, hi: int) -> list[int]:
    """Negative discriminants d with lo <= |d| <= hi, ordered by |d|."""
    return [-n for n in range(max(lo, 3), hi + 1) if n % 4 in (0, 3)]


def fundamental_discriminants(lo: int, hi: int) -> list[int]:
    return [d for d in discriminants(lo, hi) if is_fundamental(d)]


@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0 or self.discriminant >= 0:
            raise ValueError(f"{self} is not positive definite")

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def primitive(self) -> "QuadForm":
        g = math.gcd(math.gcd(self.a, self.b), self.c)
        return QuadForm(self.a // g, self.b // g, self.c // g)

    def is_ambiguous(self) -> bool:
        """Reduced forms of order <= 2 in the class group."""
        return self.b == 0 or self.a == self.b or self.a == self.c

    def act(self, g: Matrix) -> "QuadForm":
        """Form whose upper root is g . tau for tau the root of ``self``.

        Non-primitive results are kept as they are; det g > 0 is required.
        """
        (p, q), (r, s) = g
        if p * s - q * r <= 0:
            raise ValueError("matrix must have positive determinant")
        a, b, c = self.a, self.b, self.c
        # tau = (s t - q) / (-r t + p) for t = g . tau
        A = a * s * s - b * s * r + c * r * r
        B = -2 * a * s * q + b * (s * p + q * r) - 2 * c * r * p
        C = a * q * q - b * q * p + c * p * p
        return QuadForm(A, B, C)

    def reduce(self) -> tuple["QuadForm", Matrix]:
        """Reduced form equivalent under SL2(Z), and gamma with tau' = gamma tau."""
        a, b, c = self.a, self.b, self.c
        g = IDENTITY
        while True:
            # translate so that -a < b <= a
            n = (a - b) // (2 * a)
            if n:
                g = mat_mul(((1, -n), (0, 1)), g)
                b, c = b + 2 * a * n, a * n * n + b * n + c
            if a > c or (a == c and b < 0):
                g = mat_mul(((0, -1), (1, 0)), g)
                a, b, c = c, -b, a
                continue
            return QuadForm(a, b, c), g

    def tau(self, prec: int = 128) -> acb:
        """Ball for the upper half-plane root."""
        with workprec(prec):
            return acb(arb(-self.b), arb(-self.discriminant).sqrt()) / (2 * self.a)

    def imag_sq(self) -> Fraction:
        """(Im tau)^2 = |d| / (4 a^2), exactly."""
        return Fraction(-self.discriminant, 4 * self.a * self.a)


# Grids of (a, b) pairs with 0 <= b <= a, sorted by a; one per parity of b.
_GRID: dict[int, tuple[int, np.ndarray, np.ndarray, np.ndarray]] = {}


def _grid(parity: int, amax: int):
    cached = _GRID.get(parity)
    if cached is None or cached[0] < amax:
        size = max(amax, 2 * (cached[0] if cached else 64))
        a_list, b_list = [], []
        for a in range(1, size + 1):
            bs = np.arange(parity, a + 1, 2, dtype=np.int64)
            a_list.append(np.full(bs.shape, a, dtype=np.int64))
            b_list.append(bs)
        a_arr = np.concatenate(a_list)
        b_arr = np.concatenate(b_list)
        # offsets[a] = index of the first pair with that a
        offsets = np.searchsorted(a_arr, np.arange(0, size + 2))
        cached = (size, a_arr, b_arr, offsets)
        _GRID[parity] = cached
    return cached


def _reduced_triples(d: int, primitive: bool = True) -> list[tuple[int, int, int]]:
    n = -d
    amax = math.isqrt(n // 3)
    if amax == 0:
        return []
    _, a_arr, b_arr, offsets = _grid(n % 2, amax)
    stop = offsets[amax + 1]
    a = a_arr[:stop]
    b = b_arr[:stop]
    num = b * b + n
    four_a = 4 * a
    mask = num % four_a == 0
    a, b = a[mask], b[mask]
    c = num[mask] // four_a[mask]
    keep = c >= a
    a, b, c = a[keep], b[keep], c[keep]
    if primitive:
        g = np.gcd(np.gcd(a, b), c)
        ok = g == 1
        a, b, c = a[ok], b[ok], c[ok]
    out = []
    for ai, bi, ci in zip(a.tolist(), b.tolist(), c.tolist()):
        out.append((ai, bi, ci))
        if 0 < bi < ai < ci:
            out.append((ai, -bi, ci))
    out.sort()
    return out


def reduced_forms(d: int) -> list[QuadForm]:
    """One reduced primitive form per class, sorted by (a, b)."""
    d = check_discriminant(d)
    return [QuadForm(a, b, c) for a, b, c in _reduced_triples(d)]


def class_number(d: int) -> int:
    d = check_discriminant(d)
    return len(_reduced_triples(d))


@dataclass(frozen=True)
class CMPoint:
    """A CM point of discriminant d in F with its index in the canonical order."""

    d: int
    index: int
    form: QuadForm
    tau: acb = field(compare=False, repr=False)

    @property
    def imag_sq(self) -> Fraction:
        return self.form.imag_sq()


def lambda_points(d: int, prec: int = 128) -> list[CMPoint]:
    """Lambda_d: the CM points of discriminant d in F, one per reduced form.

    Membership in F is certified exactly by the reduced-form conditions.
    """
    forms = reduced_forms(d)
    return [CMPoint(d, k, f, f.tau(prec)) for k, f in enumerate(forms)]


def tau_principal(d: int, prec: int = 128) -> CMPoint:
    """The highest CM point (-b + i sqrt|d|)/2 with b in {0, 1}, b = d mod 2."""
    d = check_discriminant(d)
    b = d % 2
    form = QuadForm(1, b, (b * b - d) // 4)
    index = reduced_forms(d).index(form)
    return CMPoint(d, index, form, form.tau(prec))


def _prime_factors(n: int) -> list[int]:
    n = abs(n)
    ps = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            ps.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        ps.append(n)
    return ps


def omega(d: int) -> int:
    """Number of distinct primes dividing d."""
    d = check_discriminant(d)
    return len(_prime_factors(d))


def two_torsion_count(d: int) -> int:
    """#Pic(O)[2], counted as the ambiguous reduced forms."""
    return sum(1 for f in reduced_forms(d) if f.is_ambiguous())


def roots_of_unity(d: int) -> int:
    return {-3: 6, -4: 4}.get(d, 2)


def kronecker_chi(D: int, n: int) -> int:
    """Kronecker symbol (D/n)."""
    if n == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if D < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if D % 2 == 0:
            return 0
        if v % 2 and D % 8 in (3, 5):
            result = -result
    # Jacobi symbol (D/n), n odd positive
    a = D % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


@lru_cache(maxsize=64)
def _legendre_table(p: int) -> np.ndarray:
    tab = -np.ones(p, dtype=np.int8)
    squares = (np.arange(1, p, dtype=np.int64) ** 2) % p
    tab[squares] = 1
    tab[0] = 0
    return tab


def character_period(d_K: int) -> np.ndarray:
    """chi(n) = (d_K/n) for n = 0 .. |d_K| - 1, as an int8 array.

    Built from the factorization of d_K into prime discriminants (-4, +-8
    and p* = +-p), so no Kronecker symbol is evaluated.
    """
    if not is_fundamental(d_K):
        raise NotADiscriminant(f"{d_K} is not fundamental")
    k = -d_K
    n = np.arange(k, dtype=np.int64)
    chi = np.ones(k, dtype=np.int8)
    odd = k
    while odd % 2 == 0:
        odd //= 2
    for p in _prime_factors(odd):
        chi *= _legendre_table(p)[n % p]
    two_part = k // odd
    if two_part > 1:
        chi[n % 2 == 0] = 0
        # odd part of d_K carries the sign (-1)^((p-1)/2) of each p*
        odd_disc = 1
        for p in _prime_factors(odd):
            odd_disc *= p if p % 4 == 1 else -p
        two_disc = d_K // odd_disc
        r8 = n % 8
        minus4 = np.where(r8 % 4 == 1, 1, -1).astype(np.int8)
        eight = np.where((r8 == 1) | (r8 == 7), 1, -1).astype(np.int8)
        if two_disc == -4:
            chi *= minus4
        elif two_disc == 8:
            chi *= eight
        elif two_disc == -8:
            chi *= minus4 * eight
        else:  # pragma: no cover - excluded by is_fundamental
            raise NotADiscriminant(d_K)
    return chi


_UNIT_ROUNDOFF = 2.0**-53


def L_one(d_K: int, target_err: float = 1e-6, prec: int = 64) -> arb:
    """Ball for L(1, chi_{d_K}) from a truncated character sum.

    The tail beyond N is bounded by Abel summation, |sum_{n>N}| <=
    2 max_x |S(x)| / (N + 1) with S the character partial sums; the
    floating-point summation error is bounded and added to the radius.
    """
    if target_err <= 0:
        raise ValueError("target_err must be positive")
    chi = character_period(d_K)
    k = len(chi)
    partial = np.cumsum(chi.astype(np.int64))
    M = int(np.max(np.abs(partial)))
    periods = max(1, math.ceil((4 * M / target_err) / k))
    N = periods * k
    tail = 2 * M / (N + 1)
    n = np.arange(1, N + 1, dtype=np.float64)
    signs = np.tile(np.roll(chi, -1), periods).astype(np.float64)
    total = float(np.sum(signs / n))
    round_err = 1.01 * (N + 2) * _UNIT_ROUNDOFF * (1.0 + math.log(N))
    with workprec(prec):
        return arb(total, tail + round_err)


def class_number_from_L(d_K: int) -> arb:
    """w sqrt|d_K| L(1, chi) / (2 pi), with L accurate enough to round."""
    w = roots_of_unity(d_K)
    root = math.sqrt(-d_K)
    err = math.pi / (2 * w * root)
    with workprec(64):
        L = L_one(d_K, err)
        return w * arb(-d_K).sqrt() * L / (2 * arb.pi())


@dataclass(frozen=True)
class TatuzawaConfig:
    epsilon_star: Fraction = Fraction(1, 100)
    exceptional_d: int | None = None

    def __post_init__(self):
        eps = Fraction(self.epsilon_star)
        if not 0 < eps < Fraction(1, 16):
            raise ValueError("epsilon_star must lie in (0, 1/16)")
        object.__setattr__(self, "epsilon_star", eps)
        if self.exceptional_d is not None and not is_fundamental(self.exceptional_d):
            raise NotADiscriminant(f"{self.exceptional_d} is not fundamental")


@dataclass(frozen=True)
class ScanRecord:
    d: int
    h: int
    omega: int
    two_torsion: int
    ratio: float


@dataclass
class ScanReport:
    records: list[ScanRecord]
    eps: float

    @property
    def min_ratio(self) -> float:
        return min(r.ratio for r in self.records)

    @property
    def argmin(self) -> int:
        return min(self.records, key=lambda r: (r.ratio, -r.d)).d

    def summary(self) -> dict:
        ratios = np.array([r.ratio for r in self.records])
        return {
            "count": len(self.records),
            "min_ratio": float(ratios.min()),
            "argmin": self.argmin,
            "max_ratio": float(ratios.max()),
            "mean_ratio": float(ratios.mean()),
            "median_ratio": float(np.median(ratios)),
        }

    @classmethod
    def merge(cls, parts: Iterable["ScanReport"]) -> "ScanReport":
        parts = list(parts)
        recs = sorted((r for p in parts for r in p.records), key=lambda r: -r.d)
        return cls(recs, parts[0].eps)


def scan_record(d: int, eps: float) -> ScanRecord:
    forms = reduced_forms(d)
    h = len(forms)
    tt = sum(1 for f in forms if f.is_ambiguous())
    return ScanRecord(d, h, omega(d), tt, h / (-d) ** (0.5 - eps))


def iter_scan(lo: int, hi: int, eps: float) -> Iterator[ScanRecord]:
    for d in discriminants(lo, hi):
        yield scan_record(d, eps)


def tatuzawa_scan(d_range: tuple[int, int], eps: float = 0.01) -> ScanReport:
    """h(d) / |d|^(1/2 - eps) over all discriminants with |d| in ``d_range``.

    Records are independent per d, so disjoint ranges can be scanned
    separately and combined with :meth:`ScanReport.merge`.
    """
    lo, hi = d_range
    if not 0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    records = list(iter_scan(lo, hi, eps))
    if not records:
        raise ValueError(f"no discriminants with |d| in [{lo}, {hi}]")
    return ScanReport(records, eps)
