"""Special points of Y(1)^n: Hilbert class polynomials, enumeration and
certified membership, cusp-dominance certificates, linear special
subvarieties of hdnd hypersurfaces, and two numerical experiments
(equidistribution of CM points, counting quadratic points)."""

from __future__ import annotations

import fcntl
import itertools
import math
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Sequence

from flint import acb, acb_poly, arb, fmpq, fmpq_poly, fmpz_poly

from .balls import has_zero, workprec
from .errors import (
    DominanceFailure,
    NotDnd,
    NotHdnd,
    PrecisionExhausted,
    SizeCapExceeded,
    ZeroLeadingCoefficient,
    ZeroPolynomial,
)
from .jfun import CUSP_GAP_BOUND, j
from .quad import (
    QuadForm,
    check_discriminant,
    class_number,
    decompose,
    discriminants,
    is_fundamental,
    reduced_forms,
)
from .varieties import (
    MultiPoly,
    SpecialVarietyDescriptor,
    divides_by,
    is_dnd,
    is_hdnd,
    restrict_diagonal,
)

MAX_PREC = 1 << 16


# Hilbert class polynomials

def _hcp_bits(d: int) -> int:
    """Rough bit size of the largest coefficient of H_d, plus slack."""
    s = math.sqrt(-d)
    bits = sum(math.pi * s / f.a for f in reduced_forms(d)) / math.log(2)
    return int(bits) + 12 * len(reduced_forms(d)) + 64


def _compute_hcp(d: int, prec: int) -> fmpz_poly | None:
    forms = reduced_forms(d)
    with workprec(prec):
        roots = [j(f.tau(prec), prec) for f in forms]
        P = acb_poly.from_roots(roots)
        coeffs = []
        for c in P.coeffs():
            if not c.imag.contains(0) or c.real.rad() > 0.25:
                return None
            n = int((c.real.mid() + arb(1) / 2).floor().unique_fmpz())
            if not (c.real - n).contains(0):
                return None
            coeffs.append(n)
    return fmpz_poly(coeffs)


@lru_cache(maxsize=2048)
def _hcp_memory(d: int, prec: int) -> fmpz_poly:
    p = prec
    while p <= MAX_PREC:
        P = _compute_hcp(d, p)
        # the roots of H_d are singular moduli of discriminant d only
        if P is not None and P.degree() == class_number(d):
            Q = _compute_hcp(d, 2 * p) if p * 2 <= MAX_PREC else P
            if Q == P:
                return P
        p *= 2
    raise PrecisionExhausted(f"H_{d} not recognised by {MAX_PREC} bits")


def _cache_path(cache_dir, d: int) -> Path:
    return Path(cache_dir) / f"hcp_{-d}.txt"


def _read_cache(path: Path, d: int) -> fmpz_poly | None:
    try:
        lines = path.read_text().split()
    except FileNotFoundError:
        return None
    try:
        coeffs = [int(x) for x in lines]
    except ValueError:
        return None
    if not coeffs or coeffs[0] != 1 or len(coeffs) != class_number(d) + 1:
        return None
    return fmpz_poly(coeffs[::-1])


def _write_cache(path: Path, P: fmpz_poly) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lock = path.with_suffix(".lock")
    with open(lock, "w") as lk:
        fcntl.flock(lk, fcntl.LOCK_EX)
        try:
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                for c in reversed(P.coeffs()):
                    fh.write(f"{int(c)}\n")
            os.replace(tmp, path)
        finally:
            fcntl.flock(lk, fcntl.LOCK_UN)


def hilbert_class_poly(d: int, prec_hint: int | None = None, cache_dir=None) -> fmpz_poly:
    """H_d(x), the product of x - j(tau) over Lambda_d, with integer coefficients.

    Recognised at two precisions before being accepted.  With ``cache_dir``
    results are read from / written to ``hcp_<|d|>.txt`` (one coefficient
    per line, highest degree first).
    """
    d = check_discriminant(d)
    if cache_dir is not None:
        cached = _read_cache(_cache_path(cache_dir, d), d)
        if cached is not None:
            return cached
    prec = max(prec_hint or 0, _hcp_bits(d))
    prec = 1 << (prec - 1).bit_length()
    P = _hcp_memory(d, prec)
    if cache_dir is not None:
        _write_cache(_cache_path(cache_dir, d), P)
    return P


@lru_cache(maxsize=1)
def rational_singular_moduli() -> dict[int, int]:
    """d -> j for the discriminants of class number one."""
    out = {}
    for d in discriminants(3, 200):
        if class_number(d) == 1:
            P = hilbert_class_poly(d)
            out[d] = -int(P.coeffs()[0])
    return out


# special points

@lru_cache(maxsize=None)
def _cm_index(d: int) -> tuple[QuadForm, ...]:
    return tuple(reduced_forms(d))


@lru_cache(maxsize=65536)
def singular_modulus(d: int, index: int, prec: int = 128) -> acb:
    """Ball for j of the index-th point of Lambda_d."""
    form = _cm_index(d)[index]
    return j(form.tau(prec), prec)


@dataclass(frozen=True, order=True)
class SpecialPoint:
    """Tuple of CM points, each given as (discriminant, index into Lambda_d)."""

    coords: tuple[tuple[int, int], ...]

    def __post_init__(self):
        coords = tuple((int(d), int(k)) for d, k in self.coords)
        object.__setattr__(self, "coords", coords)
        for d, k in coords:
            if not 0 <= k < class_number(d):
                raise IndexError(f"index {k} out of range for d = {d}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def D(self) -> int:
        return max(-d for d, _ in self.coords)

    def D_star(self, exceptional_d: int | None) -> int:
        """max |d_i| over coordinates not attached to the exceptional field."""
        vals = [-d for d, _ in self.coords if decompose(d).d_K != exceptional_d]
        return max(vals, default=0)

    def forms(self) -> list[QuadForm]:
        return [_cm_index(d)[k] for d, k in self.coords]

    def balls(self, prec: int = 128) -> list[acb]:
        return [singular_modulus(d, k, prec) for d, k in self.coords]

    def is_distinct(self) -> bool:
        return len(set(self.coords)) == len(self.coords)

    def __str__(self) -> str:
        return ";".join(f"{d}:{k}" for d, k in self.coords)


def cm_points(B: int) -> list[tuple[int, int]]:
    """(d, index) for every CM point with |d| <= B, ascending |d| then index."""
    return [(d, k) for d in discriminants(3, B) for k in range(class_number(d))]


def enumerate_special_points(n: int, B: int) -> Iterator[SpecialPoint]:
    """All n-tuples of CM points with |d_i| <= B, lexicographic in cm_points order."""
    if B < 3:
        raise ValueError("B must be at least 3")
    base = cm_points(B)
    for tup in itertools.product(base, repeat=n):
        yield SpecialPoint(tup)


class Decision(str, Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


def _fmpq_poly(coeffs: dict[int, Fraction]) -> fmpq_poly:
    top = max(coeffs, default=-1)
    return fmpq_poly([fmpq(coeffs.get(k, Fraction(0)).numerator,
                           coeffs.get(k, Fraction(0)).denominator) for k in range(top + 1)])


def on_hypersurface(F: MultiPoly, P: SpecialPoint, prec: int = 128,
                    max_prec: int = 1024) -> Decision:
    """Is F(P) = 0?

    ``yes`` is only ever returned from exact arithmetic: class-number-one
    coordinates are substituted as integers, and when the remaining
    coordinates are all the same CM point the question reduces to H_d
    dividing a univariate polynomial.  ``no`` comes from a ball that
    excludes zero.
    """
    if F.n_vars != P.n:
        raise ValueError(f"F has {F.n_vars} variables, point has {P.n} coordinates")
    rat = rational_singular_moduli()
    fixed = {i: rat[d] for i, (d, _) in enumerate(P.coords) if d in rat}
    G = F.substitute(fixed)
    rest = [i for i in range(P.n) if i not in fixed]
    if G.is_zero():
        return Decision.YES
    live = [i for i in rest if G.depends_on(i)]
    if not live:
        return Decision.NO          # nonzero constant
    if len({P.coords[i] for i in live}) == 1:
        d, _ = P.coords[live[0]]
        uni: dict[int, Fraction] = {}
        for e, c in G.terms.items():
            k = sum(e[i] for i in live)
            uni[k] = uni.get(k, 0) + c
        U = _fmpq_poly(uni)
        if U == 0:
            return Decision.YES
        H = fmpq_poly(hilbert_class_poly(d))
        return Decision.YES if U % H == 0 else Decision.NO
    p = prec
    while p <= max_prec:
        with workprec(p):
            v = G.evaluate([singular_modulus(d, k, p) if i in live else acb(0)
                            for i, (d, k) in enumerate(P.coords)])
            if not has_zero(v):
                return Decision.NO
        p *= 2
    return Decision.UNDECIDED


@dataclass
class SearchResult:
    points: list[SpecialPoint]
    undecided: list[SpecialPoint]
    bound: int
    examined: int

    @property
    def complete(self) -> bool:
        return not self.undecided


def special_points_on(F: MultiPoly, B: int, prec: int = 128) -> SearchResult:
    """Exhaustive search over special points with every |d_i| <= B."""
    found, open_ = [], []
    count = 0
    for P in enumerate_special_points(F.n_vars, B):
        count += 1
        r = on_hypersurface(F, P, prec)
        if r is Decision.YES:
            found.append(P)
        elif r is Decision.UNDECIDED:
            open_.append(P)
    return SearchResult(found, open_, B, count)


# dominance certificates

@dataclass(frozen=True)
class InequalityCheck:
    f: int
    lhs: arb
    rhs: arb
    holds: bool


@dataclass(frozen=True)
class DominanceCertificate:
    poly: MultiPoly
    d_fund: int
    lead: int
    c0: Fraction
    c1: Fraction
    d: int
    num_other: int
    bound_f: int
    transcript: tuple[InequalityCheck, ...]


def _dominance_sides(terms, c0: Fraction, d: int, s: arb, f: int) -> tuple[arb, arb]:
    """c0 L^d versus sum |c_m| L^{a_m} U^{k_m} at conductor f."""
    pi = arb.pi()
    L = (pi * f * s).exp() - CUSP_GAP_BOUND
    top = (pi * (f - 1) * s).exp() if f > 1 else arb(0)
    halved = (pi * f * s / 2).exp()
    U = (top if f > 1 and top > halved else halved) + CUSP_GAP_BOUND
    if f > 1 and not (top > halved or halved > top):
        U = arb(max(top.upper(), halved.upper()))
        U = U + CUSP_GAP_BOUND
    lhs = arb(c0.numerator) / c0.denominator * L ** d
    rhs = arb(0)
    for c, a, k in terms:
        rhs += arb(abs(c.numerator)) / c.denominator * L ** a * U ** k
    return lhs, rhs


def _check(terms, c0, d, s, f) -> InequalityCheck:
    lhs, rhs = _dominance_sides(terms, c0, d, s, f)
    L = lhs  # lhs > 0 requires L > 0 for odd d; test it directly
    pi = arb.pi()
    positive = (pi * f * s).exp() > CUSP_GAP_BOUND
    return InequalityCheck(f, lhs, rhs, bool(positive and lhs > rhs))


def dominance_bound(F: MultiPoly, d_fund: int, lead: int = 0, prec: int = 256,
                    f_cap: int = 64) -> DominanceCertificate:
    """Conductor bound beyond which the x_lead^d term dominates at *-points.

    All coordinates are taken to be CM points attached to ``d_fund``,
    pairwise distinct, with the x_lead coordinate of largest conductor f
    moved to tau_Delta by a Galois conjugation.  Then
    |P_lead| >= e^(pi f s) - 2079 and every other coordinate is at most
    max(e^(pi (f-1) s), e^(pi f s / 2)) + 2079 with s = sqrt|d_fund|.
    For f >= 2 each competing term, divided by L^d, decreases in f, so the
    first f >= 2 that satisfies the inequality certifies all larger ones.
    """
    if F.is_zero():
        raise ZeroPolynomial("dominance of the zero polynomial")
    if not is_dnd(F):
        raise NotDnd(f"x{is_dnd(F).witness + 1} violates the degree dichotomy")
    if not is_fundamental(d_fund):
        raise ValueError(f"{d_fund} is not a fundamental discriminant")
    d = F.total_degree()
    if d == 0:
        raise ZeroLeadingCoefficient("constant polynomial has no leading variable")
    exp = tuple(d if i == lead else 0 for i in range(F.n_vars))
    c0 = abs(F.coefficient(exp))
    if not c0:
        raise ZeroLeadingCoefficient(f"x{lead + 1}^{d} has coefficient 0")
    terms = [(c, e[lead], sum(e) - e[lead]) for e, c in F.terms.items() if e != exp]
    c1 = max((abs(c) for c, _, _ in terms), default=Fraction(0))
    with workprec(prec):
        s = arb(-d_fund).sqrt()
        transcript = []
        first = None
        for f in range(1, f_cap + 1):
            chk = _check(terms, c0, d, s, f)
            transcript.append(chk)
            if f >= 2 and chk.holds:
                first = f
                break
        if first is None:
            raise DominanceFailure(f"no conductor bound up to f = {f_cap}")
        bound = 0 if (first == 2 and transcript[0].holds) else first - 1
    return DominanceCertificate(F, d_fund, lead, c0, c1, d, len(terms), bound, tuple(transcript))


def verify_certificate(cert: DominanceCertificate, prec: int = 512) -> bool:
    """Recompute every transcript inequality at a different precision."""
    F, lead, d = cert.poly, cert.lead, cert.d
    exp = tuple(d if i == lead else 0 for i in range(F.n_vars))
    terms = [(c, e[lead], sum(e) - e[lead]) for e, c in F.terms.items() if e != exp]
    with workprec(prec):
        s = arb(-cert.d_fund).sqrt()
        for chk in cert.transcript:
            again = _check(terms, cert.c0, d, s, chk.f)
            if again.holds != chk.holds:
                return False
            if chk.holds and not (again.lhs - again.rhs > 0):
                return False
    last = cert.transcript[-1]
    return last.holds and last.f == max(cert.bound_f + 1, 2) or (
        cert.bound_f == 0 and cert.transcript[0].holds)


def certify_dominance(F: MultiPoly, d_fund: int, prec: int = 256) -> DominanceCertificate:
    """Worst case over every variable that can carry the largest conductor."""
    certs = [dominance_bound(F, d_fund, i, prec) for i in range(F.n_vars) if F.depends_on(i)]
    if not certs:
        raise ZeroLeadingCoefficient("F is constant")
    return max(certs, key=lambda c: (c.bound_f, -c.lead))


def star_discriminants(d_fund: int, f_max: int) -> list[int]:
    return [f * f * d_fund for f in range(1, f_max + 1)]


def star_points(n: int, d_fund: int, f_max: int, distinct: bool = True) -> Iterator[SpecialPoint]:
    """Tuples whose coordinates all have fundamental discriminant d_fund and
    conductor <= f_max."""
    base = [(d, k) for d in star_discriminants(d_fund, f_max) for k in range(class_number(d))]
    for tup in itertools.product(base, repeat=n):
        if distinct and len(set(tup)) < n:
            continue
        yield SpecialPoint(tup)


@dataclass
class StarSearch:
    certificate: DominanceCertificate
    points: list[SpecialPoint]
    undecided: list[SpecialPoint]
    examined: int

    @property
    def empty_certified(self) -> bool:
        return not self.points and not self.undecided


def dominance_search(F: MultiPoly, d_fund: int, prec: int = 256) -> StarSearch:
    """Certificate above f0 plus exhaustive search at conductors <= f0."""
    cert = certify_dominance(F, d_fund, prec)
    pts, und, count = [], [], 0
    if cert.bound_f >= 1:
        for P in star_points(F.n_vars, d_fund, cert.bound_f):
            count += 1
            r = on_hypersurface(F, P, 128)
            if r is Decision.YES:
                pts.append(P)
            elif r is Decision.UNDECIDED:
                und.append(P)
    return StarSearch(cert, pts, und, count)


# linear special subvarieties

@dataclass
class LinearReport:
    varieties: list[SpecialVarietyDescriptor]
    bound: int
    leaves: list[tuple[tuple[tuple[int, ...], ...], int]]
    undecided: list[SpecialPoint] = field(default_factory=list)


def _descriptor(n: int, blocks: Sequence[tuple[int, ...]], fixed: dict[int, tuple[int, int]]):
    s0 = frozenset(fixed)
    return SpecialVarietyDescriptor(
        n,
        (s0,) + tuple(frozenset(b) for b in blocks),
        dict(fixed),
        {j: 1 for b in blocks for j in b if j != min(b)},
    )


def _hcp_multipoly(d: int, k: int, i: int) -> MultiPoly:
    P = hilbert_class_poly(d)
    terms = {}
    for p, c in enumerate(P.coeffs()):
        if c:
            e = [0] * k
            e[i] = p
            terms[tuple(e)] = int(c)
    return MultiPoly(k, terms)


def linear_special_on_hdnd(F: MultiPoly, B: int = 20, prec: int = 128) -> LinearReport:
    """Linear special subvarieties of {F = 0} found by the diagonal recursion.

    At each node (a polynomial G on merged coordinate blocks plus fixed
    class-number-one coordinates) the search emits
      * the whole node when G vanishes identically,
      * diagonals x_a = x_b when x_a - x_b divides G,
      * fibres x_a = j(tau) when H_d(x_a) divides G, for |d| <= B,
    then recurses on every diagonal restriction and every integer section.
    Special points with all |d_i| <= B are added from an exhaustive search.
    Only maximal descriptors are kept.
    """
    if F.is_zero():
        raise ZeroPolynomial("F must be nonzero")
    # vanishing diagonal restrictions are exactly what the search reports
    r = is_hdnd(F, zero_fails=False)
    if not r:
        raise NotHdnd(f"fails at path {r.path}: {r.reason}")
    n = F.n_vars
    rat = rational_singular_moduli()
    found: dict = {}
    leaves = []
    seen = set()

    def emit(blocks, fixed):
        D = _descriptor(n, blocks, fixed)
        found.setdefault(D.key(), D)

    def visit(G: MultiPoly, blocks: tuple[tuple[int, ...], ...], fixed: dict):
        key = (G, blocks, tuple(sorted(fixed.items())))
        if key in seen:
            return
        seen.add(key)
        k = len(blocks)
        if G.is_zero():
            emit(blocks, fixed)
            return
        if k == 0:
            return
        x = MultiPoly.gens(k)
        for a, b in itertools.combinations(range(k), 2):
            if divides_by(G, x[a] - x[b], a):
                merged = [blk for t, blk in enumerate(blocks) if t not in (a, b)]
                merged.append(tuple(sorted(blocks[a] + blocks[b])))
                emit(sorted(merged), fixed)
        for a in range(k):
            if not G.depends_on(a):
                continue
            for dd in discriminants(3, B):
                if G.var_degree(a) < class_number(dd):
                    continue
                if divides_by(G, _hcp_multipoly(dd, k, a), a):
                    for idx in range(class_number(dd)):
                        fx = dict(fixed)
                        fx.update({c: (dd, idx) for c in blocks[a]})
                        emit([blk for t, blk in enumerate(blocks) if t != a], fx)
        if k == 1:
            leaves.append((blocks, B))
        for a, b in itertools.combinations(range(k), 2):
            H = restrict_diagonal(G, a, b)
            merged = list(blocks)
            merged[a] = tuple(sorted(blocks[a] + blocks[b]))
            del merged[b]
            visit(H, tuple(merged), fixed)
        for a in range(k):
            if not G.depends_on(a):
                continue
            for dd, val in rat.items():
                if -dd > B:
                    continue
                H = G.substitute({a: val}).drop_vars([a])
                fx = dict(fixed)
                fx.update({c: (dd, 0) for c in blocks[a]})
                visit(H, tuple(blk for t, blk in enumerate(blocks) if t != a), fx)

    visit(F, tuple((i,) for i in range(n)), {})
    search = special_points_on(F, B, prec)
    for P in search.points:
        emit([], {i: c for i, c in enumerate(P.coords)})
    cands = list(found.values())
    maximal = [V for V in cands
               if not any(W is not V and W.contains(V) and not V.contains(W) for W in cands)]
    maximal.sort(key=lambda V: (-V.dimension, V.key()))
    return LinearReport(maximal, B, leaves, search.undecided)


# experiments

@dataclass(frozen=True)
class EquidistRow:
    d: int
    h: int
    inside: int
    proportion: Fraction
    threshold: float
    ok: bool


@dataclass
class EquidistTable:
    R: Fraction
    rows: list[EquidistRow]

    @property
    def violations(self) -> list[EquidistRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def pass_rate(self) -> float:
        return 1 - len(self.violations) / len(self.rows) if self.rows else 1.0


def _inside_omega(form: QuadForm, d: int, R: Fraction) -> bool:
    """sqrt3/2 < Im tau < R, exactly: 3 a^2 < |d| < 4 a^2 R^2."""
    a2 = form.a * form.a
    return 3 * a2 < -d and -d < 4 * a2 * R * R


def equidist_row(d: int, R) -> EquidistRow:
    R = Fraction(R)
    forms = reduced_forms(d)
    inside = sum(_inside_omega(f, d, R) for f in forms)
    prop = Fraction(inside, len(forms))
    thr = 1 - 6 / (math.pi * float(R))
    # compare against 1 - 6/(pi R) with a certified ball
    with workprec(64):
        t = 1 - arb(6) * R.denominator / (arb.pi() * R.numerator)
        ok = bool(arb(prop.numerator) / prop.denominator >= t) or prop == 1
    return EquidistRow(d, len(forms), inside, prop, thr, ok)


def equidist_experiment(d_range: tuple[int, int], R, prec: int | None = None,
                        fundamental_only: bool = False) -> EquidistTable:
    """Share of Lambda_d inside Omega_R for each d in range, against 1 - 2A
    with A = 3/(pi R)."""
    R = Fraction(R)
    if not R > 1:
        raise ValueError("R must exceed 1")
    lo, hi = d_range
    ds = discriminants(lo, hi)
    if fundamental_only:
        ds = [d for d in ds if is_fundamental(d)]
    return EquidistTable(R, [equidist_row(d, R) for d in ds])


def quadratic_points(R, H: int) -> list[tuple[int, int]]:
    """CM points in Omega_R of height <= H, as (d, index).

    A reduced primitive form (a, b, c) has height sqrt(max(a, c)) = sqrt(c).
    """
    R = Fraction(R)
    H2 = H * H
    out = []
    for c in range(1, H2 + 1):
        for a in range(1, c + 1):
            for b in range(-a + 1, a + 1):
                if b < 0 and a == c:
                    continue
                if math.gcd(math.gcd(a, abs(b)), c) != 1:
                    continue
                d = b * b - 4 * a * c
                form = QuadForm(a, b, c)
                if _inside_omega(form, d, R):
                    out.append((d, _cm_index(d).index(form)))
    return sorted(out, key=lambda p: (-p[0], p[1]))


@dataclass
class CountResult:
    count: int
    undecided: int
    examined: int
    points: list[SpecialPoint]


def count_quadratic_points(F: MultiPoly, R, H: int, prec: int = 128,
                           size_cap: int = 1_000_000) -> CountResult:
    """Tuples of quadratic points of Omega_R with height <= H on {F = 0}."""
    base = quadratic_points(R, H)
    total = len(base) ** F.n_vars
    if total > size_cap:
        raise SizeCapExceeded(f"{total} tuples exceed the cap {size_cap}")
    pts, und = [], 0
    for tup in itertools.product(base, repeat=F.n_vars):
        P = SpecialPoint(tup)
        r = on_hypersurface(F, P, prec)
        if r is Decision.YES:
            pts.append(P)
        elif r is Decision.UNDECIDED:
            und += 1
    return CountResult(len(pts), und, total, pts)
