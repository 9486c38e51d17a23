"""Local invariants at a prime: Tate's algorithm, traces of Frobenius, a_n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from mpmath import mp, mpf
from sympy import Poly, factor_list, symbols

from .curve import Transform, WeierstrassModel, transform_model
from .errors import ArgumentError, InconsistencyError, UnsupportedError
from .foundation import DEFAULT_PREC, GUARD_DIGITS, factor, primes_up_to, valp

_T = symbols("T")


@dataclass(frozen=True)
class LocalData:
    prime: int
    kodaira: str
    c_ell: int
    reduction: str  # good | split-multiplicative | nonsplit-multiplicative | additive
    conductor_exponent: int
    disc_valuation: int
    components: int

    @property
    def is_multiplicative(self) -> bool:
        return self.reduction.endswith("multiplicative")

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "kodaira": self.kodaira,
            "c_ell": self.c_ell,
            "reduction": self.reduction,
            "conductor_exponent": self.conductor_exponent,
        }


def _roots_mod(coeffs, p: int) -> list[int]:
    """Roots in F_p of a polynomial given by coefficients, highest degree first."""
    coeffs = [c % p for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) <= 1:
        return [] if coeffs else list(range(p))
    if p <= 5000:
        roots = []
        for x in range(p):
            acc = 0
            for c in coeffs:
                acc = (acc * x + c) % p
            if acc == 0:
                roots.append(x)
        return roots
    poly = Poly(coeffs, _T, modulus=p)
    _, facs = factor_list(poly.as_expr(), _T, modulus=p)
    roots = []
    for fac, _mult in facs:
        fp = Poly(fac, _T, modulus=p)
        if fp.degree() == 1:
            a, b = (int(c) for c in fp.all_coeffs())
            roots.append((-b * pow(a, -1, p)) % p)
    return sorted(set(roots))


def _nroots(coeffs, p):
    return len(_roots_mod(coeffs, p))


def _val(n: int, p: int) -> int:
    return 99_999 if n == 0 else valp(n, p)


def _singular_point(m: WeierstrassModel, p: int) -> tuple[int, int]:
    if p > 3:
        c4, c6 = m.c4, m.c6
        if c4 % p == 0:
            x0 = (-m.b2 * pow(12, -1, p)) % p
        else:
            x0 = (-(c6 + m.b2 * c4) * pow(12 * c4, -1, p)) % p
        y0 = (-(m.a1 * x0 + m.a3) * pow(2, -1, p)) % p
        return x0, y0
    a1, a2, a3, a4, a6 = m.ainvs
    for x in range(p):
        for y in range(p):
            F = y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6
            Fx = a1 * y - 3 * x * x - 2 * a2 * x - a4
            Fy = 2 * y + a1 * x + a3
            if F % p == 0 and Fx % p == 0 and Fy % p == 0:
                return x, y
    raise InconsistencyError("no singular point found for a bad prime")


def _shift(m, tr):
    return transform_model(m, tr), tr


def _tate_full(m: WeierstrassModel, p: int):
    """Tate's algorithm; returns (LocalData, minimal model at p, transform)."""
    total = Transform()
    while True:
        disc = m.discriminant
        vd = _val(disc, p)
        if vd == 0:
            return LocalData(p, "I0", 1, "good", 0, 0, 1), m, total

        x0, y0 = _singular_point(m, p)
        m, tr = _shift(m, Transform(Fraction(1), Fraction(x0), Fraction(0), Fraction(y0)))
        total = total.compose(tr)
        a1, a2, a3, a4, a6 = m.ainvs
        assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0

        if m.b2 % p:
            split = _nroots([1, a1, -a2], p) > 0
            if p > 2 and split != (pow(-m.c6 % p, (p - 1) // 2, p) == 1):
                raise InconsistencyError(f"split test disagrees with -c6 square test at {p}")
            if split:
                c = vd
            else:
                c = 2 if vd % 2 == 0 else 1
            red = "split-multiplicative" if split else "nonsplit-multiplicative"
            return LocalData(p, f"I{vd}", c, red, 1, vd, vd), m, total

        def done(symbol, c, comps):
            return LocalData(p, symbol, c, "additive", vd - comps + 1, vd, comps), m, total

        if _val(a6, p) < 2:
            return done("II", 1, 1)
        if _val(m.b8, p) < 3:
            return done("III", 2, 2)
        if _val(m.b6, p) < 3:
            c = 3 if _nroots([1, a3 // p, -(a6 // p**2)], p) > 0 else 1
            return done("IV", c, 3)

        # arrange p | a1, a2; p^2 | a3, a4; p^3 | a6
        tr = None
        if p > 3:
            s = (-a1 * pow(2, -1, p)) % p
            t = (-a3 * pow(2, -1, p * p)) % (p * p)
            tr = Transform(Fraction(1), Fraction(0), Fraction(s), Fraction(t))
        else:
            for s in range(p):
                for t in range(p * p):
                    cand = Transform(Fraction(1), Fraction(0), Fraction(s), Fraction(t))
                    b1, b2_, b3, b4, b6 = (int(a) for a in cand.apply_ainvs(m.ainvs))
                    if b1 % p == 0 and b2_ % p == 0 and b3 % p**2 == 0 and b4 % p**2 == 0 and b6 % p**3 == 0:
                        tr = cand
                        break
                if tr:
                    break
        if tr is None:
            raise InconsistencyError("Tate's algorithm: step 6 normalisation failed")
        m, tr = _shift(m, tr)
        total = total.compose(tr)
        a1, a2, a3, a4, a6 = m.ainvs
        assert a1 % p == 0 and a2 % p == 0 and a3 % p**2 == 0 and a4 % p**2 == 0 and a6 % p**3 == 0

        cubic = [1, a2 // p, a4 // p**2, a6 // p**3]
        roots = _roots_mod(cubic, p)
        deriv = [3, 2 * (a2 // p), a4 // p**2]
        multiple = [r for r in roots if sum(c * r ** (2 - i) for i, c in enumerate(deriv)) % p == 0]
        cubic_disc = _cubic_disc(*cubic)
        if cubic_disc % p:
            return done("I0*", 1 + len(roots), 5)

        if not multiple:
            raise InconsistencyError("repeated root of cubic not found")
        r0 = multiple[0]
        cube = [1, -3 * r0, 3 * r0 * r0, -(r0**3)]
        triple = all((u - v) % p == 0 for u, v in zip(cubic, cube))

        if not triple:
            # I_n^*: move the double root to 0 and refine
            m, tr = _shift(m, Transform(Fraction(1), Fraction(r0 * p), Fraction(0), Fraction(0)))
            total = total.compose(tr)
            n = 1
            while True:
                a1, a2, a3, a4, a6 = m.ainvs
                if n % 2:
                    e = (n + 3) // 2
                    qa, qb, qc = 1, a3 // p**e, -(a6 // p ** (n + 3))
                else:
                    e = n // 2 + 1
                    qa, qb, qc = a2 // p, a4 // p ** (e + 1), a6 // p ** (n + 3)
                if _quadratic_distinct(qa, qb, qc, p):
                    c = 4 if _nroots([qa, qb, qc], p) > 0 else 2
                    return done(f"I{n}*", c, 5 + n)
                root = _roots_mod([qa, qb, qc], p)[0]
                if n % 2:
                    tr = Transform(Fraction(1), Fraction(0), Fraction(0), Fraction(root * p**e))
                else:
                    tr = Transform(Fraction(1), Fraction(root * p**e), Fraction(0), Fraction(0))
                m, tr = _shift(m, tr)
                total = total.compose(tr)
                n += 1
                if n > 200:
                    raise InconsistencyError("Tate's algorithm failed to terminate")

        # triple root: move it to 0
        m, tr = _shift(m, Transform(Fraction(1), Fraction(r0 * p), Fraction(0), Fraction(0)))
        total = total.compose(tr)
        a1, a2, a3, a4, a6 = m.ainvs
        qb, qc = a3 // p**2, -(a6 // p**4)
        if _quadratic_distinct(1, qb, qc, p):
            c = 3 if _nroots([1, qb, qc], p) > 0 else 1
            return done("IV*", c, 7)
        root = _roots_mod([1, qb, qc], p)[0]
        m, tr = _shift(m, Transform(Fraction(1), Fraction(0), Fraction(0), Fraction(root * p**2)))
        total = total.compose(tr)
        a1, a2, a3, a4, a6 = m.ainvs
        if _val(a4, p) < 4:
            return done("III*", 2, 8)
        if _val(a6, p) < 6:
            return done("II*", 1, 9)
        raise _NonMinimal(m, total)


class _NonMinimal(Exception):
    def __init__(self, m, total):
        super().__init__("model is not minimal")
        self.model = m
        self.transform = total


def _cubic_disc(a, b, c, d):
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


def _quadratic_distinct(a, b, c, p) -> bool:
    if p == 2:
        return b % 2 == 1
    return (b * b - 4 * a * c) % p != 0


@lru_cache(maxsize=4096)
def tate(m: WeierstrassModel, ell: int) -> LocalData:
    """Local reduction data of a model that is minimal at ell."""
    try:
        data, _, _ = _tate_full(m, ell)
    except _NonMinimal as exc:
        raise ArgumentError(f"{m} is not minimal at {ell}") from exc
    return data


@lru_cache(maxsize=1024)
def bad_primes(m: WeierstrassModel) -> tuple[int, ...]:
    return tuple(sorted(factor(m.discriminant)))


@lru_cache(maxsize=1024)
def local_data(m: WeierstrassModel) -> tuple[LocalData, ...]:
    return tuple(tate(m, ell) for ell in bad_primes(m))


def conductor(m: WeierstrassModel) -> int:
    N = 1
    for ld in local_data(m):
        N *= ld.prime**ld.conductor_exponent
    return N


def is_semistable(m: WeierstrassModel) -> bool:
    return all(ld.conductor_exponent <= 1 for ld in local_data(m))


def tamagawa_product(m: WeierstrassModel) -> int:
    return math.prod(ld.c_ell for ld in local_data(m))


# --- traces of Frobenius -------------------------------------------------------------


def _count_points(m: WeierstrassModel, ell: int) -> int:
    if ell == 2:
        a1, a2, a3, a4, a6 = m.ainvs
        n = 1
        for x in range(2):
            for y in range(2):
                if (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                    n += 1
        return n
    a1, a2, a3, a4, a6 = (a % ell for a in m.ainvs)
    ys = np.arange(ell, dtype=np.int64)
    nsq = np.bincount((ys * ys) % ell, minlength=ell)
    x = np.arange(ell, dtype=np.int64)
    x2 = (x * x) % ell
    x3 = (x2 * x) % ell
    lin = (a1 * x + a3) % ell
    cub = (x3 + a2 * x2 + a4 * x + a6) % ell
    d = (lin * lin + 4 * cub) % ell
    return 1 + int(nsq[d].sum())


def ap(m: WeierstrassModel, ell: int) -> int:
    """a_ell = ell + 1 - #E(F_ell) at a prime of good reduction."""
    if m.discriminant % ell == 0:
        raise ArgumentError(f"{ell} is a bad prime for {m}")
    a = ell + 1 - _count_points(m, ell)
    if a * a > 4 * ell:
        raise InconsistencyError(f"Hasse bound violated at {ell}")
    return a


def ap_character_sum(m: WeierstrassModel, ell: int) -> int:
    """a_ell as minus a sum of Legendre symbols; odd ell only."""
    if ell == 2:
        raise ArgumentError("character sum route needs odd ell")
    a1, a2, a3, a4, a6 = m.ainvs
    total = 0
    for x in range(ell):
        d = ((a1 * x + a3) ** 2 + 4 * (x**3 + a2 * x * x + a4 * x + a6)) % ell
        if d:
            total += 1 if pow(d, (ell - 1) // 2, ell) == 1 else -1
    return -total


def ap_any(m: WeierstrassModel, ell: int) -> int:
    """Euler factor coefficient at any prime (bad primes: +1, -1 or 0)."""
    if m.discriminant % ell:
        return ap(m, ell)
    ld = tate(m, ell)
    if ld.reduction == "split-multiplicative":
        return 1
    if ld.reduction == "nonsplit-multiplicative":
        return -1
    if ld.reduction == "good":
        return ap(m, ell)
    return 0


@lru_cache(maxsize=64)
def _an_cached(m: WeierstrassModel, nmax: int) -> tuple[int, ...]:
    return tuple(an_from_ap(lambda ell: ap_any(m, ell), m.discriminant, nmax))


def an_from_ap(ap_func, disc: int, nmax: int) -> list[int]:
    """Dirichlet coefficients a_0..a_nmax (a_0 = 0) from a prime-indexed trace."""
    a = [0] * (nmax + 1)
    if nmax >= 1:
        a[1] = 1
    for p in primes_up_to(nmax):
        apv = ap_func(p)
        good = disc % p != 0
        # prime powers
        pk, prev, cur = p, 1, apv
        while pk <= nmax:
            a[pk] = cur
            nxt = apv * cur - (p * prev if good else 0)
            prev, cur = cur, nxt
            pk *= p
    # multiplicativity: spf decomposition
    spf = list(range(nmax + 1))
    for p in primes_up_to(math.isqrt(nmax) + 1):
        for k in range(p * p, nmax + 1, p):
            if spf[k] == k:
                spf[k] = p
    for n in range(2, nmax + 1):
        p = spf[n]
        pk = p
        r = n // p
        while r % p == 0:
            r //= p
            pk *= p
        if r > 1:
            a[n] = a[pk] * a[r]
    return a


def an_coeffs(m: WeierstrassModel, nmax: int) -> list[int]:
    """a_1..a_nmax as a list indexed from 0 (entry 0 is unused and zero)."""
    return list(_an_cached(m, nmax))


# --- root numbers --------------------------------------------------------------------


def theta_defect(N: int, an: list[int], w: int, t=mpf("1.2"), prec: int = DEFAULT_PREC):
    """|theta(1/t) - w t^2 theta(t)| for theta(t) = sum a_n exp(-2 pi n t / sqrt N)."""
    with mp.workdps(prec + GUARD_DIGITS):
        t = mpf(t)
        sq = mpmath.sqrt(N)
        c = 2 * mp.pi / sq

        def theta(s):
            q = mpmath.exp(-c * s)
            total = mpf(0)
            qn = mpf(1)
            for n in range(1, len(an)):
                qn *= q
                if an[n]:
                    total += an[n] * qn
            return total

        return +abs(theta(1 / t) - w * t * t * theta(t))


def theta_terms(N: int, prec: int, tmin=mpf("0.8")) -> int:
    return int(math.ceil((prec * math.log(10) + 10) * math.sqrt(N) / (2 * math.pi * float(tmin)))) + 1


def numeric_root_number(N: int, an: list[int], prec: int = DEFAULT_PREC) -> int:
    """Sign of the functional equation fitted numerically (used for twists)."""
    defects = {w: theta_defect(N, an, w, prec=prec) for w in (1, -1)}
    tol = mpf(10) ** (-(prec // 2))
    good = [w for w, d in defects.items() if d < tol]
    if len(good) != 1:
        raise InconsistencyError(f"functional equation check failed for N={N}: {defects}")
    return good[0]


def root_number_semistable(m: WeierstrassModel, check: bool = True, prec: int = DEFAULT_PREC) -> int:
    if not is_semistable(m):
        raise UnsupportedError("algebraic root number formula needs a semistable curve")
    w = -1
    for ld in local_data(m):
        w *= -ap_any(m, ld.prime)
    if check:
        N = conductor(m)
        check_prec = min(prec, 30)
        an = an_coeffs(m, theta_terms(N, check_prec))
        numeric = numeric_root_number(N, an, prec=check_prec)
        if numeric != w:
            raise InconsistencyError(f"root number mismatch: algebraic {w}, numeric {numeric}")
    return w
