from fractions import Fraction

import pytest
from flint import acb
from hypothesis import given
from hypothesis import strategies as st

from effao.balls import has_zero
from effao.errors import DimensionMismatch, SingularityApproached, SingularLocus
from effao.jfun import A, Jet3, chi_residual, j_jet
from effao.dynamics import (
    Membership3,
    VectorField,
    chain_stabilized,
    derivative_chain,
    integrate,
    j_field,
    j_field_blocks,
    jet_point,
    lie_derivative,
    qsp_degree_bound,
    redegree_bound,
    trajectory_member,
)
from effao.varieties import MultiPoly, parse_poly

from test_varieties import polys

X, Y = MultiPoly.gens(2)
ZERO2 = MultiPoly(2)
DX = VectorField.polynomial([MultiPoly.const(2, 1), ZERO2])
ROT = VectorField.polynomial([Y, -X])


def test_lie_derivative_examples():
    assert lie_derivative(DX, X ** 2) == 2 * X
    assert lie_derivative(DX, MultiPoly.const(2, 5)).is_zero()
    assert lie_derivative(ROT, X ** 2 + Y ** 2).is_zero()
    with pytest.raises(DimensionMismatch):
        lie_derivative(DX, parse_poly("x1", 3))


def test_chain_examples():
    assert derivative_chain(DX, [X ** 3], 4) == [3 * X ** 2, 6 * X, MultiPoly.const(2, 6), ZERO2]
    assert all(P.is_zero() for P in derivative_chain(ROT, [X ** 2 + Y ** 2], 5))
    jf = j_field(1, {1})
    chain = derivative_chain(jf, [parse_poly("x2 - 1728", 4)], 2)
    assert chain[0] == jf.cleared_factor * MultiPoly.var(4, 2)
    assert all(not P.is_zero() for P in chain)


@given(polys(max_vars=2, max_terms=3, max_deg=3), polys(max_vars=2, max_terms=3, max_deg=3),
       st.fractions(-5, 5))
def test_leibniz_and_linearity(F, G, c):
    if F.n_vars != 2 or G.n_vars != 2:
        return
    for xi in (ROT, DX, VectorField.polynomial([X * Y, X - 3])):
        assert lie_derivative(xi, F * G) == F * lie_derivative(xi, G) + G * lie_derivative(xi, F)
        assert lie_derivative(xi, F.scale(c) + G) == lie_derivative(xi, F).scale(c) + lie_derivative(xi, G)


def test_trajectory_member_examples():
    assert trajectory_member(DX, [Y], (1, 0), 8).status is Membership3.IN
    r = trajectory_member(DX, [X], (0, 0), 8)
    assert r.status is Membership3.OUT and r.order == 1
    assert trajectory_member(ROT, [X ** 2 + Y ** 2 - 25], (3, 4), 10).status is Membership3.IN


def test_matched_jets_stay_diagonal():
    jf = j_field(2, {1, 2})
    G = MultiPoly.gens(jf.m)
    b = j_field_blocks(2, {1, 2})
    F = G[b[1][0]] - G[b[2][0]]
    p = (0, 5, 2, -3, 5, 2, -3)
    assert trajectory_member(jf, [F], p, 10).status is Membership3.IN
    q = (0, 5, 2, -3, 5, 2, -4)
    assert trajectory_member(jf, [F], q, 10).status is Membership3.OUT


def test_symbolic_chain_agrees_at_point():
    jf = j_field(2, {1, 2})
    G = MultiPoly.gens(jf.m)
    F = G[1] - G[4]
    p = [Fraction(v) for v in (0, 5, 2, -3, 5, 2, -4)]
    chain = derivative_chain(jf, [F], 2)
    first_nonzero = next(k + 1 for k, P in enumerate(chain) if P.evaluate(p) != 0)
    assert trajectory_member(jf, [F], p, 4).order == first_nonzero


def test_singular_point_rejected():
    jf = j_field(1, {1})
    with pytest.raises(SingularLocus):
        trajectory_member(jf, [parse_poly("x2", 4)], (0, 1728, 1, 1), 3)
    with pytest.raises(SingularLocus):
        trajectory_member(jf, [parse_poly("x2", 4)], (0, 3, 0, 1), 3)


def test_ball_membership():
    r = trajectory_member(DX, [X], (acb(0.5), acb(0)), 3)
    assert r.status is Membership3.OUT and r.order == 0
    assert trajectory_member(DX, [Y], (acb(0.5), acb(0)), 3).status is Membership3.UNDECIDED


def test_stabilization():
    assert chain_stabilized(ROT, [X ** 2 + Y ** 2], 1).stabilized
    # d/dx on x^3: x^3, 3x^2, 6x, 6 span everything once K reaches 3
    assert not chain_stabilized(DX, [X ** 3], 1).stabilized
    rep = chain_stabilized(DX, [X ** 3], 3)
    assert rep.stabilized and rep.rank == 4
    assert chain_stabilized(ROT, [X], 1).stabilized


def test_j_field_shape():
    jf = j_field(2, {1})
    assert jf.m == 5 and jf.names == ("tau", "y1", "dy1", "ddy1", "y2")
    assert jf.components[4].is_zero()
    y, dy = MultiPoly.var(5, 1), MultiPoly.var(5, 2)
    assert jf.cleared_factor == 2 * y ** 2 * (y - 1728) ** 2 * dy
    with pytest.raises(ValueError):
        j_field(2, set())


def test_flow_tracks_j():
    jf = j_field(1, {1})
    tr = integrate(jf, jet_point(acb(0, 2), 1, {1}), 0.3j, 0.01, 128)
    ref = j_jet(acb(0, 2.3), 128)
    for got, want in zip(tr.endpoint, ref.as_tuple()):
        assert float(abs(got - want) / abs(want)) < 1e-8
    assert all(b > a for a, b in zip(tr.times, tr.times[1:]))
    for pt in tr.points[:: max(1, len(tr.points) // 10)]:
        jet = Jet3(*pt)
        assert chi_residual(jet, A(jet.y, jet.y_dot, jet.y_ddot)).contains(0)


def test_frozen_coordinate_constant():
    jf = j_field(2, {1})
    p0 = jet_point(acb(0.1, 1.7), 2, {1}, frozen={2: acb(12345.5)})
    tr = integrate(jf, p0, 0.1 + 0.1j, 0.01)
    assert all(pt[4] == p0[4] for pt in tr.points)
    assert float(abs(tr.endpoint[0] - p0[0] - acb(0.1, 0.1))) < 1e-12


def test_zero_field_constant():
    zero = VectorField.polynomial([ZERO2, ZERO2])
    tr = integrate(zero, (acb(1), acb(2)), 1.0, 0.1)
    assert all(pt[0] == 1 and pt[1] == 2 for pt in tr.points)


def test_blowup_near_1728():
    jf = j_field(1, {1})
    with pytest.raises(SingularityApproached):
        integrate(jf, (acb(0), acb(1728 + 1e-7), acb(1), acb(1)), 1.0, 0.01)


def test_degree_bounds():
    assert qsp_degree_bound(1, 2, 1) == 2 ** 16
    assert redegree_bound(5, 1, 7) == 7
    assert redegree_bound(2, 3, 1) == 81
    assert qsp_degree_bound(3, 5, 1) == 5 ** 144
