"""Neron-Tate canonical heights, saturation, rank-one generators and the regulator.

Heights are normalised so that h(a/b) = log max(|a|, |b|) for the naive height
of the x-coordinate, i.e. hhat(P) = lim h(x(2^k P)) / 4^k.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import gmpy2
import mpmath
from mpmath import mp, mpf
from sympy import Poly, resultant, symbols

from .curve import (
    INFINITY,
    CurvePoint,
    WeierstrassModel,
    minimal_model,
    naive_point_search,
    torsion_subgroup,
)
from .errors import ArgumentError, SearchExhausted, UnsupportedError
from .foundation import DEFAULT_PREC, GUARD_DIGITS, factor, recognize_rational, valp
from .lseries import analytic_rank_01, l_derivative, lattice, real_period
from .local import tamagawa_product

SATURATION_PRIMES = (2, 3, 5, 7, 11, 13)
DEFAULT_SEARCH_CEILING = 10**6


def _check_on_curve(m: WeierstrassModel, P: CurvePoint):
    if not m.contains(P):
        raise ArgumentError(f"{P} is not on {m}")


def _v(q, ell):
    return math.inf if q == 0 else valp(q, ell)


def _archimedean(m: WeierstrassModel, x, dps: int) -> mpf:
    """Tate's series for the archimedean local height, after shifting x to be positive on E(R)."""
    with mp.workdps(dps):
        roots = mpmath.polyroots([4, m.b2, 2 * m.b4, m.b6], maxsteps=200, extraprec=dps)
        emin = min(mpf(r.real) for r in roots if abs(mpmath.im(r)) < mpf(10) ** (-dps // 2))
        r = mpmath.floor(emin) - 1
        b2 = m.b2 + 12 * r
        b4 = m.b4 + r * m.b2 + 6 * r * r
        b6 = m.b6 + 2 * r * m.b4 + r * r * m.b2 + 4 * r**3
        b8 = m.b8 + 3 * r * m.b6 + 3 * r * r * m.b4 + r**3 * m.b2 + 3 * r**4
        xs = mpf(x.numerator) / x.denominator - r
        t = 1 / xs
        total = mpf(0)
        weight = mpf(1)
        eps = mpf(10) ** (-dps)
        for _ in range(4 * dps):
            t2 = t * t
            w = 4 * t + b2 * t2 + 2 * b4 * t * t2 + b6 * t2 * t2
            z = 1 - b4 * t2 - 2 * b6 * t * t2 - b8 * t2 * t2
            total += weight * mpmath.log(abs(z))
            t = w / z
            weight /= 4
            if weight < eps:
                break
        return mpmath.log(abs(xs)) / 2 + total / 8


def _nonarchimedean(m: WeierstrassModel, P: CurvePoint, dps: int) -> mpf:
    """Sum of local heights at finite places on a globally minimal model."""
    x, y = P.x, P.y
    with mp.workdps(dps):
        d = math.isqrt(x.denominator)
        total = mpmath.log(d)
        disc = m.discriminant
        for ell in factor(disc):
            vx = _v(x, ell)
            total -= max(0, -vx / 2) * mpmath.log(ell)
            total += _local_bad(m, x, y, ell) * mpmath.log(ell)
        return total


def _local_bad(m, x, y, ell) -> Fraction:
    a1, a2, a3, a4, a6 = m.ainvs
    N = valp(m.discriminant, ell)
    A = _v(3 * x * x + 2 * a2 * x + a4 - a1 * y, ell)
    B = _v(2 * y + a1 * x + a3, ell)
    C = _v(3 * x**4 + m.b2 * x**3 + 3 * m.b4 * x * x + 3 * m.b6 * x + m.b8, ell)
    if A <= 0 or B <= 0:
        return Fraction(max(0, -_v(x, ell)), 2)
    if m.c4 % ell:
        M = min(Fraction(B), Fraction(N, 2))
        return M * (M - N) / (2 * N)
    if C >= 3 * B:
        return Fraction(-2 * B, 3)
    return Fraction(-C, 8)


def canonical_height(m: WeierstrassModel, P: CurvePoint, prec: int = DEFAULT_PREC) -> mpf:
    """hhat(P) by the decomposition into local heights (archimedean by Tate's series)."""
    _check_on_curve(m, P)
    if P.is_infinity:
        return mpf(0)
    mm, tr = minimal_model(m)
    Q = tr.apply_point(P)
    dps = prec + GUARD_DIGITS
    with mp.workdps(dps):
        h = 2 * (_archimedean(mm, Q.x, dps) + _nonarchimedean(mm, Q, dps))
        # the decomposition is exact; tiny negatives are rounding on torsion points
        if h < 0 and abs(h) < mpf(10) ** (-prec // 2):
            h = mpf(0)
        return +h


# --- doubling-limit oracle -------------------------------------------------------------

_X, _Y = symbols("X Y")


@lru_cache(maxsize=128)
def _doubling_resultant(m: WeierstrassModel) -> int:
    f = Poly(_X**4 - m.b4 * _X**2 - 2 * m.b6 * _X - m.b8, _X)
    g = Poly(4 * _X**3 + m.b2 * _X**2 + 2 * m.b4 * _X + m.b6, _X)
    return abs(int(resultant(f, g)))


def doubling_height(m: WeierstrassModel, P: CurvePoint, steps: int = 30, dps: int = 200) -> mpf:
    """Independent oracle: log max(|a_k|, |b_k|) / 4^k for x(2^k P) = a_k / b_k.

    The numerator and denominator are never formed: x(2^k P) is tracked as a
    high-precision real, log b_k through its recursion, and the exact common
    factor removed at each step is read off from residues of a_k, b_k modulo a
    power of the doubling resultant (every such factor divides the resultant).
    """
    _check_on_curve(m, P)
    if P.is_infinity:
        return mpf(0)
    b2, b4, b6, b8 = m.b2, m.b4, m.b6, m.b8
    R = _doubling_resultant(m)
    modulus = gmpy2.mpz(R) ** (steps + 2)
    a = gmpy2.mpz(P.x.numerator) % modulus
    b = gmpy2.mpz(P.x.denominator) % modulus
    with mp.workdps(dps):
        x = mpf(P.x.numerator) / P.x.denominator
        logb = mpmath.log(P.x.denominator)
        for k in range(steps):
            den_real = 4 * x**3 + b2 * x * x + 2 * b4 * x + b6
            if abs(den_real) < mpf(10) ** (-dps // 2):
                return mpf(0)  # hit 2-torsion
            num_real = x**4 - b4 * x * x - 2 * b6 * x - b8
            F = (a**4 - b4 * a * a * b * b - 2 * b6 * a * b**3 - b8 * b**4) % modulus
            G = (b * (4 * a**3 + b2 * a * a * b + 2 * b4 * a * b * b + b6 * b**3)) % modulus
            g = gmpy2.gcd(gmpy2.gcd(F, G), R)
            modulus //= g
            a, b = (F // g) % modulus, (G // g) % modulus
            if den_real < 0:
                a, b = (-a) % modulus, (-b) % modulus
            logb = 4 * logb + mpmath.log(abs(den_real)) - mpmath.log(int(g))
            x = num_real / den_real
        h = logb + max(mpf(0), mpmath.log(abs(x)))
        return h / mpf(4) ** steps


# --- saturation and generators ----------------------------------------------------------


def _recognize_point(m: WeierstrassModel, xz, yz, prec: int) -> CurvePoint | None:
    with mp.workdps(prec + GUARD_DIGITS):
        if abs(mpmath.im(xz)) > mpf(10) ** (-prec // 2) * max(1, abs(xz)):
            return None
        xr = mpmath.re(xz)
        bound = int(mpf(10) ** (prec // 3))
        x = recognize_rational(xr, bound)
        if x is None:
            return None
        d2 = x.denominator
        if math.isqrt(d2) ** 2 != d2:
            return None
        for Q in m.lift_x(x):
            if abs(mpf(Q.y.numerator) / Q.y.denominator - mpmath.re(yz)) < mpf(10) ** (-prec // 3):
                return Q
        return None


def is_torsion(m: WeierstrassModel, P: CurvePoint) -> bool:
    return m.order_of(P) is not None


@lru_cache(maxsize=512)
def _elliptic_log(m: WeierstrassModel, P: CurvePoint, prec: int):
    # shared by every q tried during saturation
    L = lattice(m, prec)
    with mp.workdps(prec + GUARD_DIGITS):
        return L.elliptic_log(mpf(P.x.numerator) / P.x.denominator, mpf(P.y.numerator) / P.y.denominator)


def saturate(m: WeierstrassModel, P: CurvePoint, q: int, prec: int = DEFAULT_PREC) -> CurvePoint | None:
    """A rational Q with q*Q = P + T for some torsion T, or None."""
    if q > 13:
        raise UnsupportedError("saturation is supported for q <= 13")
    _check_on_curve(m, P)
    L = lattice(m, prec)
    tors = torsion_subgroup(m).points
    found = []
    with mp.workdps(prec + GUARD_DIGITS):
        for T in tors:
            base = m.add(P, T)
            if base.is_infinity:
                continue
            z = _elliptic_log(m, base, prec)
            for i in range(q):
                for j in range(q):
                    zq = (z + i * L.w1 + j * L.w2) / q
                    if abs(L.reduce(zq)) < mpf(10) ** (-prec // 2):
                        continue
                    xlow, _ = L.point(zq, 15)
                    if abs(mpmath.im(xlow)) > mpf(10) ** -8 * max(1, abs(xlow)):
                        continue
                    xz, yz = L.point(zq)
                    Q = _recognize_point(m, xz, yz, prec)
                    if Q is not None and is_torsion(m, m.sub(m.scalar_mul(q, Q), P)):
                        found.append(Q)
    if not found:
        return None
    return min(found, key=_height_key)


def _height_key(P: CurvePoint):
    return (abs(P.x.numerator) + P.x.denominator, P.x.numerator, P.x.denominator, P.y)


def saturate_fully(m: WeierstrassModel, P: CurvePoint, prec: int = DEFAULT_PREC) -> CurvePoint:
    changed = True
    while changed:
        changed = False
        for q in SATURATION_PRIMES:
            Q = saturate(m, P, q, prec)
            if Q is not None:
                P, changed = Q, True
    return P


def predicted_generator_height(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> mpf:
    """hhat of a generator if Sha were trivial: L'(E,1) #tors^2 / (Omega prod c)."""
    tors = torsion_subgroup(m).order
    with mp.workdps(prec + GUARD_DIGITS):
        return l_derivative(m, prec).value * tors * tors / (real_period(m, prec) * tamagawa_product(m))


def _reduce_mod_torsion(m: WeierstrassModel, P: CurvePoint) -> CurvePoint:
    """Representative of P + E(Q)_tors with the smallest naive height (and positive sign choice)."""
    cands = []
    for T in torsion_subgroup(m).points:
        Q = m.add(P, T)
        if not Q.is_infinity:
            cands.append(Q)
            cands.append(m.neg(Q))
    # among +-Q prefer the larger y, matching the usual tabulated generators
    return min(cands, key=lambda Q: _height_key(Q)[:3] + (-Q.y,))


@lru_cache(maxsize=128)
def generator_rank1(m: WeierstrassModel, prec: int = DEFAULT_PREC,
                    ceiling: int = DEFAULT_SEARCH_CEILING) -> CurvePoint:
    """Generator of E(Q)/tors for a curve of analytic rank one."""
    if analytic_rank_01(m, prec) != 1:
        raise ArgumentError("generator search needs analytic rank one")
    H = min(10, ceiling)
    while True:
        pts = [P for P in naive_point_search(m, H) if not is_torsion(m, P)]
        if pts:
            best = min(pts, key=lambda P: (canonical_height(m, P, 20), P.x.numerator, P.x.denominator))
            G = saturate_fully(m, best, prec)
            return _reduce_mod_torsion(m, G)
        if H >= ceiling:
            break
        H = min(H * 10, ceiling)
    pred = predicted_generator_height(m, prec)
    raise SearchExhausted(
        f"no point of infinite order with naive height <= {ceiling}; "
        f"predicted generator height {mpmath.nstr(pred, 10)} (assuming trivial Sha)"
    )


def regulator(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> mpf:
    return canonical_height(m, generator_rank1(m, prec), prec)
