from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st
from mpmath import mp, mpf

from bsdverify.errors import ParityError, PrecisionExhausted
from bsdverify.lattice import PeriodLattice
from bsdverify.lseries import (
    analytic_rank_01,
    analytic_report,
    analytic_sha_Q,
    l_derivative,
    l_series_at,
    l_value,
    real_period,
    recognize,
    root_number,
    tail_bound,
    truncation,
    twist_data,
)

from conftest import BY_LABEL, CORPUS

E37, E11 = BY_LABEL["37a1"], BY_LABEL["11a1"]


def _quad_period(m):
    """2 * integral from the largest real root of dx / sqrt(4x^3 + b2 x^2 + 2 b4 x + b6)."""
    with mp.workdps(30):
        roots = mpmath.polyroots([4, m.b2, 2 * m.b4, m.b6], extraprec=50)
        e1 = max(mpf(r.real) for r in roots if abs(mpmath.im(r)) < 1e-20)
        # x = e1 + t^2: f(e1 + t^2) = t^2 (4 t^4 + (12 e1 + b2) t^2 + f'(e1)), no endpoint singularity
        c2, c0 = 12 * e1 + m.b2, 12 * e1**2 + 2 * m.b2 * e1 + 2 * m.b4
        w1 = 2 * mpmath.quad(lambda t: 2 / mpmath.sqrt(4 * t**4 + c2 * t**2 + c0), [0, 1, 10, mpmath.inf])
        return w1 * (2 if m.discriminant > 0 else 1)


@pytest.mark.parametrize("label", ["37a1", "11a1", "43a1", "389a1", "102a1", "14a1"])
def test_real_period_against_quadrature(label):
    m = BY_LABEL[label]
    with mp.workdps(40):
        assert abs(real_period(m, 30) - _quad_period(m)) < mpf(10) ** -20


def test_period_values():
    assert abs(real_period(E37) - mpf("5.98691729246392")) < 1e-13
    assert abs(real_period(E11) - mpf("1.26920930427955")) < 1e-13


@pytest.mark.parametrize("label", ["37a1", "11a1", "5077a1"])
def test_lattice_invariants(label):
    m = BY_LABEL[label]
    L = PeriodLattice(m, 30)
    g2, g3 = L.invariants()
    with mp.workdps(40):
        assert abs(g2 - mpf(m.c4) / 12) < mpf(10) ** -20 * max(1, abs(g2))
        assert abs(g3 - mpf(m.c6) / 216) < mpf(10) ** -20 * max(1, abs(g3))


L37 = PeriodLattice(E37, 30)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_wp_lands_on_curve_and_log_inverts(s, t):
    z = s * L37.v1 + t * L37.v2
    with mp.workdps(40):
        x, y = L37.point(z)
        assert abs(y * y + y - x**3 + x) < mpf(10) ** -20 * max(1, abs(x) ** 3)
        z2 = L37.elliptic_log(x, y)
        assert abs(L37.reduce(z2 - z)) < mpf(10) ** -15


def test_elliptic_log_of_generator_is_real():
    z = L37.elliptic_log(0, 0)
    assert abs(mpmath.im(z)) < 1e-20 or abs(abs(mpmath.im(z)) - abs(L37.w2.imag) / 2) < 1e-20


def test_l_values():
    assert abs(l_derivative(E37).value - mpf("0.305999773834052")) < 1e-14
    assert abs(l_value(E11).value - mpf("0.253841860855911")) < 1e-14
    assert abs(l_derivative(BY_LABEL["43a1"]).value - mpf("0.343523974618478")) < 1e-14


def test_two_truncations_agree():
    N, prec = 37, 40
    M = truncation(N, prec)
    a = l_series_at(E37, prec, M, True).value
    b = l_series_at(E37, prec, M + 50, True).value
    assert abs(a - b) < tail_bound(N, M, prec)


def test_parity_errors():
    with pytest.raises(ParityError):
        l_value(E37)
    with pytest.raises(ParityError):
        l_derivative(E11)


@pytest.mark.parametrize("label,rank", [("11a1", 0), ("37a1", 1), ("389a1", None), ("5077a1", None)])
def test_rank_gate(label, rank):
    assert analytic_rank_01(BY_LABEL[label]) == rank


@pytest.mark.parametrize("rec", [r for r in CORPUS if r["rank"] == 0], ids=lambda r: r["label"])
def test_rank_zero_analytic_sha(rec):
    from bsdverify.curve import WeierstrassModel

    assert analytic_sha_Q(WeierstrassModel(*rec["ainvs"]), 0) == rec["sha"]


def test_analytic_report():
    rep = analytic_report(E11)
    assert rep.analytic_rank == 0 and rep.analytic_sha == 1 and rep.l_derivative is None
    rep = analytic_report(E37, regulator=mpf("0.0511114082399688402358861"))
    assert rep.analytic_rank == 1 and rep.analytic_sha == 1


def test_recognize():
    with mp.workdps(40):
        assert recognize(mpf(3) / 7) == Fraction(3, 7)
        with pytest.raises(PrecisionExhausted):
            recognize(mp.pi, den_bound=100)


def test_twist_data_37a1_minus_7():
    tw = twist_data(E37, -7)
    assert tw.conductor == 37 * 49 and tw.root_number == 1
    assert abs(tw.l_value - mpf("1.85307619181")) < 1e-10
    assert tw.analytic_sha == 1


def test_root_number_non_semistable_numeric():
    from bsdverify.curve import quadratic_twist

    assert root_number(quadratic_twist(E37, -7), 20) == 1


def test_cached_values_keep_full_precision():
    """Values cached on first use must not be rounded to the caller's working precision."""
    with mp.workdps(15):
        real_period(E37, 50)
        l_derivative(E37, 50)
    with mp.workdps(60):
        assert abs(real_period(E37, 50) - mpf("5.98691729246391925966401995890501635559516758274")) < mpf(10) ** -45
        assert abs(l_derivative(E37, 50).value - mpf("0.305999773834052301820483683321676474452637774590")) < mpf(10) ** -45


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_machine_float_wp_agrees(s, t):
    z = s * L37.v1 + t * L37.v2
    with mp.workdps(30):
        (w, dw), (wf, dwf) = L37.wp(z), L37.wp(z, 15)
        assert abs(wf - w) < 1e-9 * max(1, abs(w))
        assert abs(dwf - dw) < 1e-9 * max(1, abs(dw))
