from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st
from mpmath import mp, mpf
from sympy import jacobi_symbol

from bsdverify.foundation import (
    PadicValue,
    agm,
    class_number,
    exp_integral_E1,
    factor,
    is_fundamental_discriminant,
    kronecker,
    recognize_rational,
    reduce_form,
    reduced_forms,
    valp,
)

nonzero = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**4).filter(lambda q: q != 0)
primes = st.sampled_from([2, 3, 5, 7, 11, 13])


@given(nonzero, nonzero, primes)
def test_valp_is_additive(a, b, p):
    assert valp(a * b, p) == valp(a, p) + valp(b, p)


def test_valp_examples():
    assert valp(Fraction(50, 3), 5) == 2
    assert valp(Fraction(50, 3), 3) == -1
    assert valp(0, 7) == float("inf")


def test_factor():
    assert factor(2**3 * 3 * 37) == {2: 3, 3: 1, 37: 1}


@given(st.floats(0.1, 100), st.floats(0.1, 100))
def test_agm_matches_mpmath(a, b):
    with mp.workdps(40):
        assert abs(agm(a, b, 30) - mpmath.agm(a, b)) < mpf(10) ** -28 * max(a, b)


@pytest.mark.parametrize("x", ["0.01", "0.5", "1", "3.7", "25"])
def test_e1_against_quadrature(x):
    with mp.workdps(40):
        oracle = mpmath.quad(lambda t: mpmath.exp(-t) / t, [mpf(x), mpf(x) + 5, mpmath.inf])
        assert abs(exp_integral_E1(mpf(x), 30) - oracle) < mpf(10) ** -28


@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=1000))
def test_recognize_rational_round_trip(q):
    with mp.workdps(40):
        x = mpf(q.numerator) / q.denominator
        assert recognize_rational(x, 1000) == q


def test_recognize_irrational_respects_tolerance():
    with mp.workdps(40):
        # 355/113 is within 1/(2*1000^2) of pi, so it is a legitimate answer there
        assert recognize_rational(mp.pi, 1000) == Fraction(355, 113)
        assert recognize_rational(mp.pi, 100) is None


@given(st.integers(-500, 500), st.integers(1, 400).map(lambda n: 2 * n + 1))
def test_kronecker_matches_jacobi_for_odd_n(D, n):
    assert kronecker(D, n) == jacobi_symbol(D % n, n)


@given(st.integers(-500, -1), st.integers(1, 60), st.integers(1, 60))
def test_kronecker_multiplicative(D, m, n):
    assert kronecker(D, m * n) == kronecker(D, m) * kronecker(D, n)


def test_kronecker_at_two():
    assert kronecker(-7, 2) == 1
    assert kronecker(-3, 2) == -1
    assert kronecker(-4, 2) == 0


def test_fundamental_discriminants():
    assert [D for D in range(-30, 0) if is_fundamental_discriminant(D)] == [
        -24, -23, -20, -19, -15, -11, -8, -7, -4, -3]


def _brute_class_number(D):
    count = 0
    bound = int((abs(D) / 3) ** 0.5) + 1
    for a in range(1, bound + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            from math import gcd
            if gcd(gcd(a, b), c) == 1:
                count += 1
    return count


@pytest.mark.parametrize("D,h", [(-3, 1), (-4, 1), (-23, 3), (-47, 5), (-71, 7), (-163, 1), (-56, 4), (-84, 4)])
def test_class_numbers(D, h):
    assert class_number(D) == h == _brute_class_number(D)


@given(st.integers(3, 2000).map(lambda n: -n).filter(is_fundamental_discriminant))
def test_class_number_brute_oracle(D):
    assert class_number(D) == _brute_class_number(D)


@given(st.integers(1, 50), st.integers(-60, 60), st.integers(1, 50))
def test_reduce_form_invariants(a, b, c):
    D = b * b - 4 * a * c
    if D >= 0:
        return
    A, B, C = reduce_form(a, b, c)
    assert B * B - 4 * A * C == D
    assert abs(B) <= A <= C
    assert reduce_form(A, B, C) == (A, B, C)


def test_reduced_forms_list():
    assert reduced_forms(-23) == sorted(reduced_forms(-23))
    assert len(reduced_forms(-23)) == 3


# --- p-adic numbers -----------------------------------------------------------------


@given(nonzero, nonzero, primes)
def test_padic_ring_operations(a, b, p):
    prec = 12
    A, B = PadicValue.from_rational(a, p, prec), PadicValue.from_rational(b, p, prec)
    assert (A * B).equals(PadicValue.from_rational(a * b, p, prec))
    assert (A / B).equals(PadicValue.from_rational(a / b, p, prec))
    s = a + b
    if s:
        assert (A + B).equals(PadicValue.from_rational(s, p, prec))
    assert (A - A).is_zero


@given(nonzero, primes)
def test_padic_to_fraction_congruence(a, p):
    A = PadicValue.from_rational(a, p, 10)
    assert A.valuation == valp(a, p)
    assert valp(A.to_fraction() - a, p) >= A.absolute_precision


def test_padic_precision_tracking():
    x = PadicValue.from_rational(1, 5, 10)
    y = PadicValue.from_rational(1 + 5**4, 5, 10)
    d = y - x
    assert d.valuation == 4 and d.absolute_precision == 10
    assert x.with_precision(3).precision == 3
    assert PadicValue.from_rational(Fraction(3, 25), 5, 6).valuation == -2
