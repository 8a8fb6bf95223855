import math
from fractions import Fraction

import pytest
from flint import acb, arb
from hypothesis import given
from hypothesis import strategies as st

from effao.errors import NotADiscriminant
from effao.halfplane import Membership, in_F
from effao.quad import (
    QuadForm,
    ScanReport,
    TatuzawaConfig,
    L_one,
    character_period,
    class_number,
    class_number_from_L,
    decompose,
    discriminants,
    fundamental_discriminants,
    is_fundamental,
    kronecker_chi,
    lambda_points,
    omega,
    reduced_forms,
    roots_of_unity,
    tatuzawa_scan,
    tau_principal,
    two_torsion_count,
)

from oracles import brute_forms, class_numbers_upto, kronecker

discs = st.integers(3, 3000).filter(lambda n: n % 4 in (0, 3)).map(lambda n: -n)


def test_decompose_examples():
    assert (decompose(-12).d_K, decompose(-12).f) == (-3, 2)
    assert (decompose(-4).d_K, decompose(-4).f) == (-4, 1)
    assert (decompose(-48).d_K, decompose(-48).f) == (-3, 4)
    for bad in (-1, -2, -5, 0, 4):
        with pytest.raises(NotADiscriminant):
            decompose(bad)


@given(discs)
def test_decompose_trial_division(d):
    D = decompose(d)
    assert D.f ** 2 * D.d_K == d and is_fundamental(D.d_K)
    best = max(f for f in range(1, math.isqrt(-d) + 1)
               if d % (f * f) == 0 and (d // (f * f)) % 4 in (0, 1))
    assert D.f == best


def test_reduced_form_examples():
    assert reduced_forms(-3) == [QuadForm(1, 1, 1)]
    assert reduced_forms(-4) == [QuadForm(1, 0, 1)]
    forms = reduced_forms(-23)
    assert len(forms) == 3 and sorted(f.a for f in forms) == [1, 2, 2]


def test_class_numbers_small_range():
    h = class_numbers_upto(3000)
    for d in discriminants(3, 3000):
        assert class_number(d) == h[d]


@given(discs)
def test_forms_reduced_and_canonical(d):
    forms = reduced_forms(d)
    assert [(f.a, f.b, f.c) for f in forms] == brute_forms(d)
    assert all(f.is_reduced() and f.is_primitive() and f.discriminant == d for f in forms)
    assert forms == sorted(forms, key=lambda f: (f.a, f.b))


@given(discs, st.integers(-30, 30), st.integers(-30, 30), st.integers(-30, 30))
def test_form_reduction_matches_action(d, p, q, r):
    f = reduced_forms(d)[0]
    if p == 0 and r == 0:
        p = 1
    # any SL2(Z) image reduces back to the same class
    s_den = p
    g = None
    for s in range(-5, 6):
        if p * s - q * r == 1:
            g = ((p, q), (r, s))
            break
    if g is None:
        return
    moved = f.act(g)
    red, gamma = moved.reduce()
    assert red == f
    from effao.halfplane import mobius
    assert mobius(gamma, moved.tau(128)).overlaps(f.tau(128))


def test_lambda_points():
    assert lambda_points(-4)[0].tau.overlaps(acb(0, 1))
    assert lambda_points(-3)[0].tau.overlaps(acb(-arb(1) / 2, arb(3).sqrt() / 2))
    pts = lambda_points(-23)
    assert len(pts) == 3
    assert all(in_F(p.tau) is Membership.INSIDE for p in pts)


def test_tau_principal():
    assert tau_principal(-4).form == QuadForm(1, 0, 1)
    assert tau_principal(-3).form == QuadForm(1, 1, 1)
    assert tau_principal(-7).tau.overlaps(acb(-arb(1) / 2, arb(7).sqrt() / 2))


@given(discs)
def test_halving(d):
    top = tau_principal(d)
    rest = [p for p in lambda_points(d) if p.index != top.index]
    assert all(p.imag_sq * 4 <= top.imag_sq for p in rest)


def test_torsion_examples():
    assert omega(-4) == 1 and two_torsion_count(-4) == 1
    assert class_number(-20) == 2 and two_torsion_count(-20) == 2
    assert two_torsion_count(-3) == 1


@given(discs)
def test_torsion_bounds(d):
    t = two_torsion_count(d)
    assert 1 <= t <= class_number(d)
    assert t <= 2 ** (1 + 2 * omega(d))
    # genus theory: #Pic[2] is a power of two
    assert t & (t - 1) == 0


@given(st.integers(-500, -1), st.integers(0, 400))
def test_kronecker_oracle(D, n):
    assert kronecker_chi(D, n) == kronecker(D, n)


@given(st.sampled_from(fundamental_discriminants(3, 2000)))
def test_character_period(dK):
    chi = character_period(dK)
    assert [int(c) for c in chi[:200]] == [kronecker_chi(dK, n) for n in range(min(200, len(chi)))]


def test_L_one_leibniz():
    assert L_one(-4, 1e-6).overlaps(arb.pi() / 4)
    assert L_one(-4, 1e-6).rad() < 2e-6
    assert class_number_from_L(-4).overlaps(arb(1))
    assert abs(float(class_number_from_L(-3).mid()) - 1) < 0.5


def test_class_number_formula_sample():
    for dK in fundamental_discriminants(3, 400):
        v = class_number_from_L(dK)
        assert abs(float(v.mid()) - class_number(dK)) + float(v.rad()) < 0.5


def test_tatuzawa_examples():
    assert tatuzawa_scan((3, 1000), 1 / 12).min_ratio > 0
    rep = tatuzawa_scan((3, 4), 0.01)
    assert rep.min_ratio == pytest.approx(min(3 ** -0.49, 4 ** -0.49))
    rep = tatuzawa_scan((3, 500), 0.5)
    assert rep.min_ratio == 1


def test_scan_partition_invariance():
    whole = tatuzawa_scan((3, 800), 0.05)
    parts = ScanReport.merge([tatuzawa_scan((3, 300), 0.05), tatuzawa_scan((301, 800), 0.05)])
    assert whole.records == parts.records
    assert whole.summary() == parts.summary()


def test_tatuzawa_config():
    assert TatuzawaConfig().epsilon_star == Fraction(1, 100)
    assert TatuzawaConfig().exceptional_d is None
    for bad in (0, Fraction(1, 16), 1):
        with pytest.raises(ValueError):
            TatuzawaConfig(epsilon_star=bad)
    with pytest.raises(NotADiscriminant):
        TatuzawaConfig(exceptional_d=-12)


def test_roots_of_unity():
    assert [roots_of_unity(d) for d in (-3, -4, -7, -12)] == [6, 4, 2, 2]
