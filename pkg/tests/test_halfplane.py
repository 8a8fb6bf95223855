import math
from fractions import Fraction

import numpy as np
import pytest
from flint import acb, arb
from hypothesis import given
from hypothesis import strategies as st

from effao.balls import workprec
from effao.errors import OutOfDomain, PrecisionExhausted
from effao.halfplane import (
    IDENTITY,
    Membership,
    PiLinear,
    Region,
    in_F,
    mat_det,
    measure,
    mobius,
    reduce_to_F,
)


def hand_reduce(x: float, y: float) -> complex:
    """Translate then invert until the point lands in F (float oracle)."""
    z = complex(x, y)
    for _ in range(1000):
        z = complex(z.real - math.floor(z.real + 0.5), z.imag)
        if abs(z) < 1:
            z = -1 / z
        else:
            return z
    raise RuntimeError


def test_translation_and_identity():
    red, g = reduce_to_F(acb(7, 1))
    assert g == ((1, -7), (0, 1))
    assert red.contains(acb(0, 1))
    red, g = reduce_to_F(acb(0, 1))
    assert g == IDENTITY


def test_small_imaginary_part():
    red, g = reduce_to_F(acb(0.25, 0.05))
    assert in_F(red) is Membership.INSIDE
    assert float(abs(red)) > 1
    expect = hand_reduce(0.25, 0.05)
    assert abs(complex(float(red.real.mid()), float(red.imag.mid())) - expect) < 1e-12


@given(st.floats(-20, 20), st.floats(1e-3, 5))
def test_reduction_properties(x, y):
    tau = acb(x, y)
    red, g = reduce_to_F(tau)
    assert mat_det(g) == 1
    assert mobius(g, tau).overlaps(red)
    assert in_F(red) is Membership.INSIDE
    assert red.imag > arb(3).sqrt() / 2 - arb(2) ** -100
    again, h = reduce_to_F(red)
    assert h == IDENTITY and again.overlaps(red)


def test_membership_examples():
    assert in_F(acb(0, 2)) is Membership.INSIDE
    assert in_F(acb(0.7, 2)) is Membership.OUTSIDE
    with workprec(128):
        rho_right = acb(arb(1) / 2, arb(3).sqrt() / 2)
        rho_left = acb(-arb(1) / 2, arb(3).sqrt() / 2)
        on_arc_left = acb(0, 1)
    assert in_F(rho_right) is Membership.OUTSIDE
    # sqrt(3) is never exact, so a ball around rho meets the unit disc
    assert in_F(rho_left) is Membership.UNDECIDED
    assert in_F(on_arc_left) is Membership.INSIDE
    assert in_F(acb(0.5, 2)) is Membership.OUTSIDE
    assert in_F(acb(-0.5, 2)) is Membership.INSIDE


def test_straddling_ball():
    wide = acb(arb(0.5, 1e-3), arb(2))
    assert in_F(wide) is Membership.UNDECIDED
    with pytest.raises(PrecisionExhausted):
        reduce_to_F(wide, max_prec=256)


def test_lower_half_plane_rejected():
    with pytest.raises(OutOfDomain):
        reduce_to_F(acb(0, -1))


def test_measure_exact():
    assert measure(Region.full()) == PiLinear(Fraction(1))
    m8 = measure(Region.omega(8))
    assert m8 == PiLinear(Fraction(1), Fraction(-3, 8))
    assert m8.ball().overlaps(1 - arb(3) / (8 * arb.pi()))
    assert abs(float(measure(Region.omega(10**9))) - 1) < 1e-8
    with pytest.raises(ValueError):
        Region.omega(1)


@pytest.mark.parametrize("R", [2, 8])
def test_measure_monte_carlo(R):
    # u = 1/y turns dx dy / y^2 into dx du
    rng = np.random.default_rng(7)
    n = 400_000
    x = rng.uniform(-0.5, 0.5, n)
    u = rng.uniform(1 / R, 2 / math.sqrt(3), n)
    inside = x * x + 1 / (u * u) > 1
    est = 3 / math.pi * inside.mean() * (2 / math.sqrt(3) - 1 / R)
    assert abs(est - float(measure(Region.omega(R)))) < 5e-3


@given(st.fractions(min_value=1, max_value=1000).filter(lambda r: r > 1))
def test_measure_formula(R):
    m = measure(Region.omega(R))
    assert m.rational == 1 and m.over_pi == -3 / Fraction(R)


def test_region_contains_im():
    om = Region.omega(2)
    assert om.contains_im(arb(1.5))
    assert not om.contains_im(arb(2))
    assert not om.contains_im(arb(3).sqrt() / 2)
