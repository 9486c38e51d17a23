"""Real period, central L-values, analytic rank in {0, 1} and analytic Sha."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpf

from .curve import WeierstrassModel, quadratic_twist, torsion_subgroup
from .errors import ArgumentError, ParityError, PrecisionExhausted
from .foundation import DEFAULT_PREC, GUARD_DIGITS, exp_integral_E1, recognize_rational
from .lattice import PeriodLattice
from .local import (
    an_coeffs,
    conductor,
    is_semistable,
    numeric_root_number,
    root_number_semistable,
    tamagawa_product,
    theta_terms,
)

DEN_BOUND = 10**6
RECOGNITION_TOL = mpf("1e-10")


@dataclass(frozen=True)
class LSeriesValue:
    value: mpf
    error_bound: mpf
    terms: int


@dataclass(frozen=True)
class AnalyticReport:
    period: mpf
    analytic_rank: int | None
    l_value: mpf | None
    l_derivative: mpf | None
    analytic_sha: Fraction | None
    error_bound: mpf

    def leading(self):
        return self.l_value if self.analytic_rank == 0 else self.l_derivative


@lru_cache(maxsize=256)
def lattice(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> PeriodLattice:
    return PeriodLattice(m, prec)


def real_period(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> mpf:
    return lattice(m, prec).real_period


def truncation(N: int, prec: int) -> int:
    return math.ceil((prec * math.log(10) + 10) * math.sqrt(N) / (2 * math.pi))


def tail_bound(N: int, M: int, prec: int) -> mpf:
    """Bound for sum over n > M of 2 |a_n|/n e^{-2 pi n/sqrt N} using |a_n| <= d(n) sqrt n <= 2n."""
    with mp.workdps(prec + GUARD_DIGITS):
        c = 2 * mp.pi / mpmath.sqrt(N)
        return 4 * mpmath.exp(-c * (M + 1)) / (1 - mpmath.exp(-c))


@lru_cache(maxsize=256)
def root_number(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> int:
    """Algebraic root number when semistable (numerically cross-checked), otherwise fitted."""
    if is_semistable(m):
        return root_number_semistable(m, check=True, prec=prec)
    N = conductor(m)
    check_prec = min(prec, 30)
    return numeric_root_number(N, an_coeffs(m, theta_terms(N, check_prec)), prec=check_prec)


def _series(an, N, M, prec, derivative):
    with mp.workdps(prec + GUARD_DIGITS):
        c = 2 * mp.pi / mpmath.sqrt(N)
        total = mpf(0)
        if derivative:
            for n in range(1, M + 1):
                if an[n]:
                    total += mpf(an[n]) / n * exp_integral_E1(c * n, prec)
        else:
            q = mpmath.exp(-c)
            qn = mpf(1)
            for n in range(1, M + 1):
                qn *= q
                if an[n]:
                    total += mpf(an[n]) / n * qn
        return 2 * total


def _evaluate(m, prec, derivative, terms=None):
    N = conductor(m)
    M = terms or truncation(N, prec)
    an = an_coeffs(m, M)
    value = _series(an, N, M, prec, derivative)
    return LSeriesValue(value, tail_bound(N, M, prec), M)


@lru_cache(maxsize=256)
def l_value(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> LSeriesValue:
    """L(E, 1); requires root number +1."""
    if root_number(m, prec) != 1:
        raise ParityError("L(E,1) vanishes by parity: root number is -1")
    return _evaluate(m, prec, derivative=False)


@lru_cache(maxsize=256)
def l_derivative(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> LSeriesValue:
    """L'(E, 1); requires root number -1."""
    if root_number(m, prec) != -1:
        raise ParityError("L'(E,1) formula needs root number -1")
    return _evaluate(m, prec, derivative=True)


def l_series_at(m: WeierstrassModel, prec: int, terms: int, derivative: bool) -> LSeriesValue:
    """Evaluation with an explicit truncation, for two-truncation checks."""
    return _evaluate(m, prec, derivative, terms=terms)


def analytic_rank_01(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> int | None:
    """0 or 1 when the leading value is provably nonzero, None when indeterminate."""
    w = root_number(m, prec)
    val = l_value(m, prec) if w == 1 else l_derivative(m, prec)
    if abs(val.value) > 1000 * val.error_bound:
        return 0 if w == 1 else 1
    return None


def analytic_sha_real(m: WeierstrassModel, rank: int, regulator, prec: int = DEFAULT_PREC) -> mpf:
    if rank not in (0, 1):
        raise ArgumentError("analytic Sha is only computed for rank 0 or 1")
    lead = l_value(m, prec) if rank == 0 else l_derivative(m, prec)
    tors = torsion_subgroup(m).order
    with mp.workdps(prec + GUARD_DIGITS):
        reg = mpf(1) if rank == 0 else mpf(regulator)
        return lead.value * tors * tors / (real_period(m, prec) * reg * tamagawa_product(m))


def recognize(x, den_bound: int = DEN_BOUND, tol=RECOGNITION_TOL) -> Fraction:
    r = recognize_rational(x, den_bound)
    if r is None or abs(mpf(x) - mpf(r.numerator) / r.denominator) >= tol:
        raise PrecisionExhausted(f"could not recognise {mpmath.nstr(x, 15)} as a rational")
    return r


def analytic_sha_Q(m: WeierstrassModel, rank: int, regulator=1, prec: int = DEFAULT_PREC,
                   den_bound: int = DEN_BOUND) -> Fraction:
    """Sha_an = L^(r)(E,1) #tors^2 / (r! Omega Reg prod c_l), recognised as a rational."""
    sha = recognize(analytic_sha_real(m, rank, regulator, prec), den_bound)
    if sha <= 0:
        raise PrecisionExhausted("analytic Sha recognised as a non-positive rational")
    return sha


def analytic_report(m: WeierstrassModel, regulator=None, prec: int = DEFAULT_PREC) -> AnalyticReport:
    rank = analytic_rank_01(m, prec)
    w = root_number(m, prec)
    lv = l_value(m, prec) if w == 1 else None
    ld = l_derivative(m, prec) if w == -1 else None
    err = (lv or ld).error_bound
    sha = None
    if rank == 0 or (rank == 1 and regulator is not None):
        sha = analytic_sha_Q(m, rank, regulator if rank == 1 else 1, prec)
    return AnalyticReport(
        period=real_period(m, prec),
        analytic_rank=rank,
        l_value=lv.value if lv else None,
        l_derivative=ld.value if ld else None,
        analytic_sha=sha,
        error_bound=err,
    )


@dataclass(frozen=True)
class TwistData:
    D: int
    model: WeierstrassModel
    conductor: int
    root_number: int
    l_value: mpf
    period: mpf
    tamagawa: int
    torsion: int
    analytic_sha: Fraction


@lru_cache(maxsize=256)
def twist_data(m: WeierstrassModel, D: int, prec: int = DEFAULT_PREC) -> TwistData:
    """Rank-zero data of the quadratic twist E^D, as used on the K-side of the argument."""
    tw = quadratic_twist(m, D)
    w = root_number(tw, prec)
    if w != 1:
        raise ParityError(f"twist by {D} has root number -1")
    lv = l_value(tw, prec)
    if abs(lv.value) <= 1000 * lv.error_bound:
        raise ParityError(f"L(E^{D},1) is numerically zero")
    sha = analytic_sha_Q(tw, 0, 1, prec)
    return TwistData(
        D=D,
        model=tw,
        conductor=conductor(tw),
        root_number=w,
        l_value=lv.value,
        period=real_period(tw, prec),
        tamagawa=tamagawa_product(tw),
        torsion=torsion_subgroup(tw).order,
        analytic_sha=sha,
    )
