import math

import pytest
from hypothesis import given, strategies as st

from bsdverify.curve import WeierstrassModel, quadratic_twist
from bsdverify.errors import ArgumentError
from bsdverify.local import (
    an_coeffs,
    ap,
    ap_any,
    ap_character_sum,
    bad_primes,
    conductor,
    is_semistable,
    local_data,
    root_number_semistable,
    tamagawa_product,
    tate,
    theta_defect,
    theta_terms,
)

from conftest import BY_LABEL, CORPUS

E37, E11 = BY_LABEL["37a1"], BY_LABEL["11a1"]


def _brute_ap(m, p):
    a1, a2, a3, a4, a6 = m.ainvs
    affine = sum(
        (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % p == 0
        for x in range(p) for y in range(p)
    )
    return p - affine


def test_ap_37a1():
    assert [ap(E37, p) for p in (2, 3, 5, 7)] == [-2, -3, -2, -1]


@pytest.mark.parametrize("label", ["43a1", "53a1", "389a1", "5077a1"])
def test_ap_against_enumeration(label):
    m = BY_LABEL[label]
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 31):
        if m.discriminant % p:
            assert ap(m, p) == _brute_ap(m, p)
            if p > 2:
                assert ap_character_sum(m, p) == ap(m, p)


def test_ap_bad_prime_raises():
    with pytest.raises(ArgumentError):
        ap(E37, 37)
    assert ap_any(E37, 37) == -1
    assert ap_any(E11, 11) == 1


def test_tate_11a1():
    ld = tate(E11, 11)
    assert (ld.kodaira, ld.c_ell, ld.reduction, ld.conductor_exponent) == ("I5", 5, "split-multiplicative", 1)


def test_tate_37a1_is_nonsplit():
    # a_37 = -1 by direct enumeration of the nodal cubic mod 37
    ld = tate(E37, 37)
    assert (ld.kodaira, ld.c_ell) == ("I1", 1)
    assert ld.reduction == "nonsplit-multiplicative"
    assert 37 - _brute_ap(E37, 37) == 38


def test_tate_additive_types():
    m = WeierstrassModel(0, 0, 0, -1, 0)
    assert tate(m, 2).kodaira == "III"
    assert conductor(m) == 32
    tw = quadratic_twist(E37, -7)
    assert tate(tw, 7).kodaira == "I0*"
    assert conductor(tw) == 37 * 49
    assert not is_semistable(tw)


def test_tate_rejects_nonminimal():
    with pytest.raises(ArgumentError):
        tate(WeierstrassModel(0, 0, 0, -16 * 64, 0), 2)


@pytest.mark.parametrize("rec", CORPUS, ids=[r["label"] for r in CORPUS])
def test_corpus_conductors_and_semistability(rec):
    m = WeierstrassModel(*rec["ainvs"])
    assert conductor(m) == rec["conductor"]
    assert is_semistable(m)
    assert bad_primes(m) == tuple(sorted(ld.prime for ld in local_data(m)))


def test_tamagawa_products():
    assert tamagawa_product(E11) == 5
    assert tamagawa_product(E37) == 1
    assert tamagawa_product(BY_LABEL["14a1"]) == 6


A37 = an_coeffs(E37, 600)


@given(st.integers(1, 24), st.integers(1, 24))
def test_an_multiplicative(m, n):
    if math.gcd(m, n) == 1:
        assert A37[m * n] == A37[m] * A37[n]


@given(st.sampled_from([2, 3, 5, 7]), st.integers(2, 3))
def test_an_prime_power_recursion(p, k):
    assert A37[p**k] == A37[p] * A37[p ** (k - 1)] - p * A37[p ** (k - 2)]


def test_an_hecke_bound():
    for n in range(1, 600):
        d = sum(1 for k in range(1, n + 1) if n % k == 0)
        assert abs(A37[n]) <= d * math.sqrt(n) + 1e-9


@pytest.mark.parametrize("label,w", [("37a1", -1), ("11a1", 1), ("43a1", -1), ("389a1", 1), ("5077a1", -1), ("91b1", -1)])
def test_root_numbers(label, w):
    assert root_number_semistable(BY_LABEL[label], check=True, prec=20) == w


def test_theta_defect_separates_signs():
    N = 37
    an = an_coeffs(E37, theta_terms(N, 20))
    assert theta_defect(N, an, -1, prec=20) < 1e-15
    assert theta_defect(N, an, 1, prec=20) > 1e-3
