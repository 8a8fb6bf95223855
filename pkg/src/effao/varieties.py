"""Exact sparse multivariate polynomials over Q and the hypersurface notions
built on them: degrees, heights, dnd / hdnd genericity, special sections,
modular divisibility and special-variety descriptors.

Variables are positional.  In Python they are indexed from 0; the text
grammar spells them ``x1 .. xn``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import (
    DimensionMismatch,
    NonIntegerSectionPoint,
    ParseError,
    SizeCapExceeded,
    ZeroPolynomial,
)

Exponent = tuple[int, ...]

__all__ = [
    "MultiPoly",
    "parse_poly",
    "total_degree",
    "var_degree",
    "height",
    "DndResult",
    "HdndResult",
    "is_dnd",
    "restrict_diagonal",
    "is_hdnd",
    "special_section",
    "SpecialVarietyDescriptor",
    "is_linear_descriptor",
    "divides_by",
    "divides_modular",
    "modular_multipoly",
]


class MultiPoly:
    """Sparse polynomial in ``n_vars`` variables with Fraction coefficients."""

    __slots__ = ("n_vars", "terms", "_hash")

    def __init__(self, n_vars: int, terms: Mapping[Exponent, object] | None = None):
        if n_vars < 0:
            raise ValueError("n_vars must be non-negative")
        self.n_vars = n_vars
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n_vars or any(e < 0 for e in exp):
                raise DimensionMismatch(f"exponent {exp} does not fit {n_vars} variables")
            c = Fraction(c)
            if c:
                clean[exp] = clean.get(exp, 0) + c
                if not clean[exp]:
                    del clean[exp]
        self.terms = dict(sorted(clean.items(), reverse=True))
        self._hash = None

    # construction helpers

    @classmethod
    def const(cls, n_vars: int, c) -> "MultiPoly":
        return cls(n_vars, {(0,) * n_vars: c})

    @classmethod
    def var(cls, n_vars: int, i: int) -> "MultiPoly":
        if not 0 <= i < n_vars:
            raise DimensionMismatch(f"variable index {i} out of range")
        exp = [0] * n_vars
        exp[i] = 1
        return cls(n_vars, {tuple(exp): 1})

    @classmethod
    def gens(cls, n_vars: int) -> list["MultiPoly"]:
        return [cls.var(n_vars, i) for i in range(n_vars)]

    @classmethod
    def parse(cls, text: str, n_vars: int | None = None) -> "MultiPoly":
        return parse_poly(text, n_vars)

    # basic protocol

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.n_vars == other.n_vars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.const(self.n_vars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n_vars, tuple(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"MultiPoly({self.n_vars}, {self.render()!r})"

    def __str__(self) -> str:
        return self.render()

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.n_vars != self.n_vars:
                raise DimensionMismatch(f"{self.n_vars} vs {other.n_vars} variables")
            return other
        return MultiPoly.const(self.n_vars, other)

    def __add__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return MultiPoly(self.n_vars, terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        terms: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return MultiPoly(self.n_vars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.const(self.n_vars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c) -> "MultiPoly":
        c = Fraction(c)
        return MultiPoly(self.n_vars, {e: c * v for e, v in self.terms.items()})

    # structure

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def coefficients(self) -> list[Fraction]:
        return list(self.terms.values())

    def coefficient(self, exp: Exponent) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def total_degree(self) -> int:
        if not self.terms:
            raise ZeroPolynomial("degree of the zero polynomial")
        return max(sum(e) for e in self.terms)

    def var_degree(self, i: int) -> int:
        if not self.terms:
            raise ZeroPolynomial("degree of the zero polynomial")
        return max(e[i] for e in self.terms)

    def depends_on(self, i: int) -> bool:
        return any(e[i] for e in self.terms)

    def derivative(self, i: int) -> "MultiPoly":
        terms = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                terms[tuple(e2)] = c * e[i]
        return MultiPoly(self.n_vars, terms)

    def permute(self, perm: Sequence[int]) -> "MultiPoly":
        """Rename variable i to perm[i]."""
        terms = {}
        for e, c in self.terms.items():
            e2 = [0] * self.n_vars
            for i, k in enumerate(e):
                e2[perm[i]] = k
            terms[tuple(e2)] = c
        return MultiPoly(self.n_vars, terms)

    def evaluate(self, point: Sequence):
        """Evaluate at a point; entries may be Fractions, ints or balls."""
        if len(point) != self.n_vars:
            raise DimensionMismatch(f"point has {len(point)} coordinates, need {self.n_vars}")
        exact = all(isinstance(p, (int, Fraction)) for p in point)
        total = Fraction(0) if exact else 0
        powers: list[dict[int, object]] = [{} for _ in point]
        for e, c in self.terms.items():
            term = c if exact else _to_ball(c)
            for i, k in enumerate(e):
                if k:
                    cache = powers[i]
                    if k not in cache:
                        cache[k] = point[i] ** k
                    term = term * cache[k]
            total = total + term
        return total

    def substitute(self, values: Mapping[int, object]) -> "MultiPoly":
        """Substitute exact values for some variables, keeping n_vars."""
        terms: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            e2 = list(e)
            for i, v in values.items():
                if e2[i]:
                    c = c * Fraction(v) ** e2[i]
                    e2[i] = 0
            key = tuple(e2)
            terms[key] = terms.get(key, 0) + c
        return MultiPoly(self.n_vars, terms)

    def drop_vars(self, indices: Iterable[int]) -> "MultiPoly":
        """Remove variables that do not occur, renumbering the rest densely."""
        drop = set(indices)
        keep = [i for i in range(self.n_vars) if i not in drop]
        terms = {}
        for e, c in self.terms.items():
            if any(e[i] for i in drop):
                raise ValueError("cannot drop a variable that occurs")
            terms[tuple(e[i] for i in keep)] = c
        return MultiPoly(len(keep), terms)

    def embed(self, n_vars: int, positions: Sequence[int]) -> "MultiPoly":
        """Place variable i at position positions[i] of a larger ring."""
        terms = {}
        for e, c in self.terms.items():
            e2 = [0] * n_vars
            for i, k in enumerate(e):
                e2[positions[i]] += k
            terms[tuple(e2)] = terms.get(tuple(e2), 0) + c
        return MultiPoly(n_vars, terms)

    def render(self) -> str:
        """Text form in the polynomial grammar, e.g. ``x1^2*x2 - 3/2*x3 + 7``."""
        if not self.terms:
            return "0"
        out = []
        for k, (e, c) in enumerate(self.terms.items()):
            mono = "*".join(
                f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p
            )
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if mono:
                body = mono if a == 1 else f"{a}*{mono}"
            else:
                body = str(a)
            if k == 0:
                out.append(body if sign == "+" else f"-{body}")
            else:
                out.append(f" {sign} {body}")
        return "".join(out)


def _to_ball(c: Fraction):
    from .balls import to_arb

    return to_arb(c)


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>x(?P<idx>\d+))|(?P<op>[-+*^])|(?P<bad>\S))")


def parse_poly(text: str, n_vars: int | None = None) -> MultiPoly:
    """Parse the polynomial grammar.

    Terms are separated by ``+``/``-``; factors inside a term by ``*``; a
    factor is a rational ``p`` or ``p/q`` or a variable ``x<k>`` with an
    optional ``^e``.  ``n_vars`` defaults to the largest index used.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError("unexpected input", pos)
        if m.group("bad") is not None:
            raise ParseError(f"unknown token {m.group('bad')!r}", m.start("bad"))
        kind = next(k for k in ("num", "var", "op") if m.group(k) is not None)
        start = m.start(kind)
        if kind == "var":
            idx = int(m.group("idx"))
            if idx < 1:
                raise ParseError("variables are numbered from x1", start)
            # a variable immediately followed by a letter is an unknown token
            tokens.append(("var", idx, start))
        elif kind == "num":
            tokens.append(("num", Fraction(m.group("num")), start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    if not tokens:
        raise ParseError("empty polynomial", 0)

    terms: list[tuple[Fraction, dict[int, int]]] = []
    i = 0
    n = len(tokens)

    def expect_factor(k):
        if k >= n:
            raise ParseError("expected a factor", len(text))
        kind, val, at = tokens[k]
        if kind == "num":
            return ("num", val), k + 1
        if kind == "var":
            power = 1
            if k + 1 < n and tokens[k + 1][:2] == ("op", "^"):
                if k + 2 >= n or tokens[k + 2][0] != "num" or tokens[k + 2][1].denominator != 1:
                    at2 = tokens[k + 2][2] if k + 2 < n else len(text)
                    raise ParseError("exponent must be a non-negative integer", at2)
                power = int(tokens[k + 2][1])
                return ("var", (val, power)), k + 3
            return ("var", (val, power)), k + 1
        raise ParseError(f"unexpected {val!r}", at)

    sign = 1
    if tokens[0][:2] in (("op", "-"), ("op", "+")):
        sign = -1 if tokens[0][1] == "-" else 1
        i = 1
    while True:
        coeff = Fraction(sign)
        mono: dict[int, int] = {}
        while True:
            (kind, val), i = expect_factor(i)
            if kind == "num":
                coeff *= val
            else:
                idx, power = val
                mono[idx] = mono.get(idx, 0) + power
            if i < n and tokens[i][:2] == ("op", "*"):
                i += 1
                continue
            break
        terms.append((coeff, mono))
        if i >= n:
            break
        kind, val, at = tokens[i]
        if kind != "op" or val not in "+-":
            raise ParseError(f"expected '+' or '-', got {val!r}", at)
        sign = 1 if val == "+" else -1
        i += 1
    used = max((k for _, mono in terms for k in mono), default=0)
    if n_vars is None:
        n_vars = max(used, 1)
    elif used > n_vars:
        raise ParseError(f"x{used} exceeds {n_vars} variables", 0)
    out: dict[Exponent, Fraction] = {}
    for coeff, mono in terms:
        exp = tuple(mono.get(k + 1, 0) for k in range(n_vars))
        out[exp] = out.get(exp, 0) + coeff
    return MultiPoly(n_vars, out)


def total_degree(F: MultiPoly) -> int:
    return F.total_degree()


def var_degree(F: MultiPoly, i: int) -> int:
    return F.var_degree(i)


def height(F: MultiPoly) -> float:
    """max over coefficients p/q (lowest terms) of log max(|p|, q)."""
    if F.is_zero():
        raise ZeroPolynomial("height of the zero polynomial")
    return max(math.log(max(abs(c.numerator), c.denominator)) for c in F.coefficients())


@dataclass(frozen=True)
class DndResult:
    ok: bool
    witness: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_dnd(F: MultiPoly) -> DndResult:
    """Every variable has partial degree 0 or equal to the total degree.

    The witness is the first violating variable (0-based).
    """
    d = F.total_degree()
    for i in range(F.n_vars):
        di = F.var_degree(i)
        if di not in (0, d):
            return DndResult(False, i)
    return DndResult(True)


def restrict_diagonal(F: MultiPoly, i: int, j: int) -> MultiPoly:
    """F with x_j replaced by x_i, as a polynomial in the other n - 1 variables."""
    if F.n_vars < 2:
        raise DimensionMismatch("diagonal restriction needs at least 2 variables")
    if i == j or not (0 <= i < F.n_vars and 0 <= j < F.n_vars):
        raise DimensionMismatch(f"invalid pair ({i}, {j})")
    terms: dict[Exponent, Fraction] = {}
    for e, c in F.terms.items():
        e2 = list(e)
        e2[i] += e2[j]
        del e2[j]
        key = tuple(e2)
        terms[key] = terms.get(key, 0) + c
    return MultiPoly(F.n_vars - 1, terms)


@dataclass(frozen=True)
class HdndResult:
    """Outcome of the hereditary check.

    ``path`` lists the diagonal substitutions (i, j) leading to the failing
    node, indices relative to each successive ring.  ``reason`` is
    ``"not_dnd"`` or ``"identically_zero"``.
    """

    ok: bool
    path: tuple[tuple[int, int], ...] = ()
    reason: str | None = None
    witness: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_hdnd(F: MultiPoly, zero_fails: bool = True) -> HdndResult:
    """dnd at every node of the recursion over diagonal restrictions.

    An identically vanishing restriction counts as a failure and is
    reported with reason ``identically_zero``.  With ``zero_fails=False``
    such branches are pruned instead (F then contains that diagonal).
    """
    if F.is_zero():
        raise ZeroPolynomial("hdnd of the zero polynomial")
    memo: dict[MultiPoly, HdndResult] = {}

    def walk(G: MultiPoly) -> HdndResult:
        if G in memo:
            return memo[G]
        r = is_dnd(G)
        if not r:
            out = HdndResult(False, (), "not_dnd", r.witness)
        else:
            out = HdndResult(True)
            for i, j in combinations(range(G.n_vars), 2):
                H = restrict_diagonal(G, i, j)
                if H.is_zero():
                    if not zero_fails:
                        continue
                    out = HdndResult(False, ((i, j),), "identically_zero")
                    break
                sub = walk(H)
                if not sub:
                    out = HdndResult(False, ((i, j),) + sub.path, sub.reason, sub.witness)
                    break
        memo[G] = out
        return out

    return walk(F)


def _rational_singular_moduli() -> dict[int, int]:
    from .oort import rational_singular_moduli

    return rational_singular_moduli()


def special_section(F: MultiPoly, sigma: Iterable[int], values) -> MultiPoly:
    """Restrict to x_i = P_i for i in sigma and project away those variables.

    Values must be singular moduli that are rational integers (the j-values
    of the thirteen class-number-one discriminants).  ``values`` is a
    sequence aligned with ``sigma`` or a mapping index -> value.
    """
    sigma = list(sigma)
    if isinstance(values, Mapping):
        vals = {i: values[i] for i in sigma}
    else:
        values = list(values)
        if len(values) != len(sigma):
            raise DimensionMismatch("one value per sectioned index")
        vals = dict(zip(sigma, values))
    allowed = set(_rational_singular_moduli().values())
    for i, v in vals.items():
        if isinstance(v, Fraction) and v.denominator == 1:
            v = int(v)
        if not isinstance(v, int) or isinstance(v, bool) or v not in allowed:
            raise NonIntegerSectionPoint(f"x{i + 1} = {v!r} is not a rational singular modulus")
        vals[i] = v
    return F.substitute(vals).drop_vars(vals)


@dataclass(frozen=True)
class SpecialVarietyDescriptor:
    """Partition S_0, S_1, ..., S_w of {0..n-1} with fixed special coordinates
    on S_0 and isogeny degrees linking each block to its minimal element.

    ``fixed_points`` maps i in S_0 to ``(d, conjugate_index)``;
    ``isogeny_degrees`` maps each non-minimal j of a block to N_{s_i j}.
    """

    n: int
    blocks: tuple[frozenset, ...]
    fixed_points: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    isogeny_degrees: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("need at least the S_0 block")
        seen: set[int] = set()
        for b in blocks:
            if seen & b:
                raise ValueError("blocks must be disjoint")
            seen |= b
        if seen != set(range(self.n)):
            raise ValueError("blocks must cover all coordinates")
        if any(not b for b in blocks[1:]):
            raise ValueError("only S_0 may be empty")
        if set(self.fixed_points) != set(blocks[0]):
            raise ValueError("fixed points must be given exactly on S_0")
        expected = {j for b in blocks[1:] for j in b if j != min(b)}
        if set(self.isogeny_degrees) != expected:
            raise ValueError("isogeny degrees required for non-minimal block members")
        if any(N < 1 for N in self.isogeny_degrees.values()):
            raise ValueError("isogeny degrees must be positive")

    @property
    def dimension(self) -> int:
        return len(self.blocks) - 1

    @property
    def is_basic(self) -> bool:
        return not self.blocks[0]

    def key(self):
        return (
            self.n,
            tuple(sorted(tuple(sorted(b)) for b in self.blocks[1:])),
            tuple(sorted(self.fixed_points.items())),
            tuple(sorted(self.isogeny_degrees.items())),
        )

    def contains_point(self, coords: Sequence[tuple[int, int]]) -> bool:
        """Point membership for linear descriptors (all N = 1)."""
        if not is_linear_descriptor(self):
            raise ValueError("point membership is implemented for linear descriptors")
        for i, p in self.fixed_points.items():
            if tuple(coords[i]) != tuple(p):
                return False
        for b in self.blocks[1:]:
            vals = {tuple(coords[i]) for i in b}
            if len(vals) > 1:
                return False
        return True

    def contains(self, other: "SpecialVarietyDescriptor") -> bool:
        """other subset of self, for linear descriptors."""
        if not (is_linear_descriptor(self) and is_linear_descriptor(other)):
            raise ValueError("containment is implemented for linear descriptors")
        for i, p in self.fixed_points.items():
            if other.fixed_points.get(i) != p:
                return False
        block_of = {i: k for k, b in enumerate(other.blocks[1:]) for i in b}
        for b in self.blocks[1:]:
            owners = {block_of.get(i) for i in b}
            fixed = {other.fixed_points.get(i) for i in b}
            if None not in owners and len(owners) == 1:
                continue
            if owners == {None} and len(fixed) == 1:
                continue
            return False
        return True


def is_linear_descriptor(V: SpecialVarietyDescriptor) -> bool:
    """All modular relations are x_i = x_j (N = 1)."""
    return all(N == 1 for N in V.isogeny_degrees.values())


def divides_by(F: MultiPoly, G: MultiPoly, i: int, max_steps: int = 100_000) -> bool:
    """Exact test G | F for G monic in x_i, by division with respect to x_i."""
    if G.n_vars != F.n_vars:
        raise DimensionMismatch("variable counts differ")
    m = G.var_degree(i)
    lead = [(e, c) for e, c in G.terms.items() if e[i] == m]
    if len(lead) != 1 or lead[0][1] != 1 or sum(lead[0][0]) != m:
        raise ValueError(f"divisor must be monic in x{i + 1}")
    rest = G - MultiPoly(G.n_vars, dict(lead))
    R = dict(F.terms)
    steps = 0
    while True:
        top = [e for e in R if e[i] >= m]
        if not top:
            return not R
        steps += 1
        if steps > max_steps or len(R) > max_steps:
            raise SizeCapExceeded("division did not finish within the step cap")
        e = max(top, key=lambda x: (x[i], x))
        c = R[e]
        shift = list(e)
        shift[i] -= m
        for e2, c2 in rest.terms.items():
            key = tuple(a + b for a, b in zip(shift, e2))
            v = R.get(key, 0) - c * c2
            if v:
                R[key] = v
            else:
                R.pop(key, None)
        del R[e]


def modular_multipoly(N: int, n_vars: int, i: int, j: int, size_cap: int | None = None) -> MultiPoly:
    """Phi_N(x_i, x_j) as a polynomial in ``n_vars`` variables."""
    from .modpoly import DEFAULT_SIZE_CAP, phi

    P = phi(N, size_cap=size_cap or DEFAULT_SIZE_CAP)
    terms = {}
    for (a, b), c in P.coeffs.items():
        e = [0] * n_vars
        e[i] += a
        e[j] += b
        terms[tuple(e)] = c
    return MultiPoly(n_vars, terms)


def divides_modular(F: MultiPoly, i: int, j: int, N: int, size_cap: int | None = None) -> bool:
    """Exact test whether Phi_N(x_i, x_j) divides F.

    Phi_N is monic in its first argument, so plain division by x_i works.
    """
    if i == j:
        raise DimensionMismatch("need two distinct variables")
    G = modular_multipoly(N, F.n_vars, i, j, size_cap)
    return divides_by(F, G, i)
