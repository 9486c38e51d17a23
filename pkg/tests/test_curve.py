from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bsdverify.curve import (
    CurvePoint,
    Transform,
    WeierstrassModel,
    count_points_mod,
    minimal_model,
    mod_p_irreducible,
    naive_point_search,
    point,
    quadratic_twist,
    torsion_subgroup,
    transform_model,
)
from bsdverify.errors import ArgumentError

from conftest import BY_LABEL

E37 = BY_LABEL["37a1"]
P37 = point(0, 0)
E389 = BY_LABEL["389a1"]
P389, Q389 = point(-1, 1), point(0, 0)


def test_invariants_37a1():
    assert E37.discriminant == 37
    assert (E37.c4, E37.c6) == (48, -216)
    assert E37.is_minimal


def test_parse_and_errors():
    assert WeierstrassModel.parse("[0, 0, 1, -1, 0]") == E37
    assert WeierstrassModel.parse("-1,0").ainvs == (0, 0, 0, -1, 0)
    with pytest.raises(ArgumentError):
        WeierstrassModel.parse("0,0,x,1,0")
    with pytest.raises(ArgumentError):
        WeierstrassModel.from_ainvs([1, 2, 3])


def test_multiples_of_generator_37a1():
    xs = [E37.scalar_mul(n, P37).x for n in range(1, 6)]
    assert xs == [0, 1, -1, 2, Fraction(1, 4)]


small = st.integers(-6, 6)


@given(small, small, small)
def test_group_law_associative_commutative(a, b, c):
    A, B, C = (E389.add(E389.scalar_mul(a, P389), E389.scalar_mul(k, Q389)) for k in (b, c, a + b))
    assert E389.add(A, B) == E389.add(B, A)
    assert E389.add(E389.add(A, B), C) == E389.add(A, E389.add(B, C))
    assert E389.contains(E389.add(A, B))


@given(st.integers(-8, 8), st.integers(-8, 8))
def test_scalar_mul_is_homomorphism(m, n):
    assert E37.scalar_mul(m + n, P37) == E37.add(E37.scalar_mul(m, P37), E37.scalar_mul(n, P37))
    assert E37.scalar_mul(-n, P37) == E37.neg(E37.scalar_mul(n, P37))


def test_inverse_and_identity():
    O = CurvePoint()
    assert E37.add(P37, E37.neg(P37)).is_infinity
    assert E37.add(P37, O) == P37


def _brute_count(m, p):
    a1, a2, a3, a4, a6 = m.ainvs
    return 1 + sum(
        (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % p == 0
        for x in range(p) for y in range(p)
    )


@pytest.mark.parametrize("label", ["37a1", "11a1", "43a1", "389a1", "102a1"])
@pytest.mark.parametrize("p", [3, 5, 7, 13, 29])
def test_point_count_against_enumeration(label, p):
    m = BY_LABEL[label]
    if m.discriminant % p == 0:
        return
    assert count_points_mod(m, p) == _brute_count(m, p)


def test_minimal_model_of_scaled_curve():
    big = transform_model(E37, Transform(Fraction(1, 6), Fraction(2), Fraction(1), Fraction(-3)))
    assert big.discriminant == 6**12 * 37
    mm, tr = minimal_model(big)
    assert mm.discriminant == 37
    assert mm.c4 == E37.c4 and mm.c6 == E37.c6
    P = Transform(Fraction(1, 6), Fraction(2), Fraction(1), Fraction(-3)).apply_point(P37)
    assert big.contains(P)
    assert mm.contains(tr.apply_point(P))


def test_transform_compose_inverse():
    t1 = Transform(Fraction(2), Fraction(1), Fraction(-1), Fraction(3))
    t2 = Transform(Fraction(3), Fraction(-2), Fraction(0), Fraction(1))
    P = point(2, 2)
    assert t1.compose(t2).apply_point(P) == t2.apply_point(t1.apply_point(P))
    assert t1.inverse().apply_point(t1.apply_point(P)) == P


@pytest.mark.parametrize("label,order", [("11a1", 5), ("14a1", 6), ("15a1", 8), ("37a1", 1), ("65a1", 2), ("37b1", 3)])
def test_torsion_orders(label, order):
    T = torsion_subgroup(BY_LABEL[label])
    assert T.order == order == len(T.points)
    for P in T.points:
        assert BY_LABEL[label].scalar_mul(order, P).is_infinity


@pytest.mark.parametrize("D", [-3, -4, -7, -8, 5, 12])
def test_twist_is_an_involution(D):
    tw = quadratic_twist(quadratic_twist(E37, D), D)
    assert tw.j_invariant == E37.j_invariant
    assert (tw.c4, tw.c6) == (E37.c4, E37.c6)


def test_twist_37a1_by_minus_7():
    assert quadratic_twist(E37, -7).ainvs == (0, 0, 1, -49, -86)


def test_irreducibility():
    assert mod_p_irreducible(BY_LABEL["11a1"], 5) is False
    assert mod_p_irreducible(E37, 5) is True
    assert mod_p_irreducible(BY_LABEL["91b1"], 3) is False


def test_naive_search_finds_known_points():
    pts = naive_point_search(E37, 10)
    assert point(0, 0) in pts and point(1, 0) in pts and point(2, -3) in pts
    assert all(E37.contains(P) for P in pts)


def test_lift_x():
    ys = sorted(P.y for P in E37.lift_x(Fraction(2)))
    assert ys == [-3, 2]
    assert E37.lift_x(Fraction(1, 2)) == []
