"""Integral Weierstrass models over Q and their rational points."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import mpmath
import numpy as np
from sympy import Poly, factor_list, symbols

from .errors import ArgumentError, UnsupportedError
from .foundation import (
    factor,
    is_fundamental_discriminant,
    primes_up_to,
    rational_sqrt,
    valp,
)

X = symbols("x")


@dataclass(frozen=True)
class CurvePoint:
    """A point of E(Q); ``x is None`` encodes the point at infinity."""

    x: Fraction | None = None
    y: Fraction | None = None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __repr__(self):
        if self.is_infinity:
            return "O"
        return f"({self.x}, {self.y})"

    def to_json(self):
        if self.is_infinity:
            return None
        return [str(self.x), str(self.y)]


INFINITY = CurvePoint()


def point(x, y) -> CurvePoint:
    return CurvePoint(Fraction(x), Fraction(y))


@dataclass(frozen=True)
class WeierstrassModel:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ArgumentError("Weierstrass coefficients must be integers")
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.discriminant == 0:
            raise ArgumentError(f"singular model {self.ainvs}")

    @classmethod
    def from_ainvs(cls, ainvs) -> "WeierstrassModel":
        ainvs = list(ainvs)
        if len(ainvs) == 2:
            ainvs = [0, 0, 0] + ainvs
        if len(ainvs) != 5:
            raise ArgumentError("expected five a-invariants")
        return cls(*ainvs)

    @classmethod
    def parse(cls, text: str) -> "WeierstrassModel":
        """Parse ``"a1,a2,a3,a4,a6"`` (brackets and spaces tolerated)."""
        cleaned = text.strip().strip("[]")
        try:
            ainvs = [int(tok) for tok in cleaned.replace(" ", "").split(",")]
        except ValueError as exc:
            raise ArgumentError(f"cannot parse curve {text!r}") from exc
        return cls.from_ainvs(ainvs)

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self) -> int:
        return self.a1 * self.a1 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3 * self.a3 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.ainvs
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @property
    def c4(self) -> int:
        return self.b2 * self.b2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2**3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def j_invariant(self) -> Fraction:
        return Fraction(self.c4**3, self.discriminant)

    @cached_property
    def is_minimal(self) -> bool:
        return _scale_exponents(self.c4, self.c6, self.discriminant) == {}

    def __str__(self):
        return "[" + ",".join(str(a) for a in self.ainvs) + "]"

    # --- points -----------------------------------------------------------

    def contains(self, P: CurvePoint) -> bool:
        if P.is_infinity:
            return True
        x, y = P.x, P.y
        a1, a2, a3, a4, a6 = self.ainvs
        return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6

    def _require(self, P: CurvePoint):
        if not self.contains(P):
            raise ArgumentError(f"{P} is not on {self}")

    def neg(self, P: CurvePoint) -> CurvePoint:
        if P.is_infinity:
            return P
        return CurvePoint(P.x, -P.y - self.a1 * P.x - self.a3)

    def add(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        self._require(P)
        self._require(Q)
        return self._add(P, Q)

    def _add(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        if P.is_infinity:
            return Q
        if Q.is_infinity:
            return P
        a1, a2, a3, a4, a6 = self.ainvs
        if P.x == Q.x:
            if P.y + Q.y + a1 * Q.x + a3 == 0:
                return INFINITY
            lam = (3 * P.x * P.x + 2 * a2 * P.x + a4 - a1 * P.y) / (2 * P.y + a1 * P.x + a3)
        else:
            lam = (Q.y - P.y) / (Q.x - P.x)
        nu = P.y - lam * P.x
        x3 = lam * lam + a1 * lam - a2 - P.x - Q.x
        y3 = -(lam + a1) * x3 - nu - a3
        return CurvePoint(x3, y3)

    def sub(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        return self.add(P, self.neg(Q))

    def scalar_mul(self, n: int, P: CurvePoint) -> CurvePoint:
        self._require(P)
        if n < 0:
            return self.scalar_mul(-n, self.neg(P))
        result = INFINITY
        addend = P
        while n:
            if n & 1:
                result = self._add(result, addend)
            addend = self._add(addend, addend)
            n >>= 1
        return result

    def order_of(self, P: CurvePoint, bound: int = 12) -> int | None:
        """Order of a torsion point (Mazur: at most 12), else None."""
        Q = P
        for n in range(1, bound + 1):
            if Q.is_infinity:
                return n
            Q = self._add(Q, P)
        return None

    def two_torsion_cubic(self, x):
        """4x^3 + b2 x^2 + 2 b4 x + b6, the square of 2y + a1 x + a3."""
        return 4 * x**3 + self.b2 * x * x + 2 * self.b4 * x + self.b6

    def lift_x(self, x: Fraction) -> list[CurvePoint]:
        """Rational points with the given x-coordinate."""
        x = Fraction(x)
        d = rational_sqrt(self.two_torsion_cubic(x))
        if d is None:
            return []
        base = -(self.a1 * x + self.a3)
        pts = {CurvePoint(x, (base + d) / 2), CurvePoint(x, (base - d) / 2)}
        return sorted(pts, key=lambda P: P.y)


# --- coordinate changes and minimal models -----------------------------------


@dataclass(frozen=True)
class Transform:
    """x = u^2 x' + r, y = u^3 y' + s u^2 x' + t."""

    u: Fraction = Fraction(1)
    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)
    t: Fraction = Fraction(0)

    def compose(self, other: "Transform") -> "Transform":
        """Apply ``self`` first, then ``other``."""
        u, r, s, t = self.u, self.r, self.s, self.t
        u2, r2, s2, t2 = other.u, other.r, other.s, other.t
        return Transform(u * u2, r + u * u * r2, s + u * s2, t + u * u * s * r2 + u**3 * t2)

    def inverse(self) -> "Transform":
        u, r, s, t = self.u, self.r, self.s, self.t
        return Transform(1 / u, -r / (u * u), -s / u, (r * s - t) / u**3)

    def apply_ainvs(self, ainvs) -> tuple:
        a1, a2, a3, a4, a6 = (Fraction(a) for a in ainvs)
        u, r, s, t = self.u, self.r, self.s, self.t
        n1 = (a1 + 2 * s) / u
        n2 = (a2 - s * a1 + 3 * r - s * s) / u**2
        n3 = (a3 + r * a1 + 2 * t) / u**3
        n4 = (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t) / u**4
        n6 = (a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1) / u**6
        return (n1, n2, n3, n4, n6)

    def apply_point(self, P: CurvePoint) -> CurvePoint:
        """Map a point on the old model to the new one."""
        if P.is_infinity:
            return P
        u, r, s, t = self.u, self.r, self.s, self.t
        x = (P.x - r) / (u * u)
        y = (P.y - s * (P.x - r) - t) / u**3
        return CurvePoint(x, y)

    def pull_point(self, P: CurvePoint) -> CurvePoint:
        """Map a point on the new model back to the old one."""
        return self.inverse().apply_point(P)


def transform_model(m: WeierstrassModel, tr: Transform) -> WeierstrassModel:
    new = tr.apply_ainvs(m.ainvs)
    if any(a.denominator != 1 for a in new):
        raise ArgumentError("transformation does not give an integral model")
    return WeierstrassModel(*(int(a) for a in new))


def _kraus_ok(c4: int, c6: int, prime: int) -> bool:
    if prime == 3:
        return valp(c6, 3) != 2
    if prime == 2:
        if c6 % 4 == 3:
            return True
        return valp(c4, 2) >= 4 and c6 % 32 in (0, 8)
    return True


def _scale_exponents(c4: int, c6: int, disc: int) -> dict[int, int]:
    exps = {}
    for ell, e in factor(disc).items():
        k = e // 12
        if c4:
            k = min(k, valp(c4, ell) // 4)
        if c6:
            k = min(k, valp(c6, ell) // 6)
        if ell in (2, 3):
            while k > 0 and not _kraus_ok(c4 // ell ** (4 * k), c6 // ell ** (6 * k), ell):
                k -= 1
        if k > 0:
            exps[ell] = k
    return exps


def model_from_c4c6(c4: int, c6: int) -> WeierstrassModel:
    """Reduced integral model (a1, a3 in {0,1}, a2 in {-1,0,1}) with given invariants."""
    b2 = (-c6) % 12
    if b2 > 6:
        b2 -= 12
    b4, rem4 = divmod(b2 * b2 - c4, 24)
    b6, rem6 = divmod(-(b2**3) + 36 * b2 * b4 - c6, 216)
    if rem4 or rem6:
        raise ArgumentError("c-invariants do not come from an integral model")
    a1 = b2 % 2
    a2 = (b2 - a1) // 4
    a3 = b6 % 2
    a4 = (b4 - a1 * a3) // 2
    a6 = (b6 - a3) // 4
    return WeierstrassModel(a1, a2, a3, a4, a6)


def minimal_model(m) -> tuple[WeierstrassModel, Transform]:
    """Global minimal reduced model and the change of coordinates reaching it."""
    if not isinstance(m, WeierstrassModel):
        m = WeierstrassModel.from_ainvs(m)
    exps = _scale_exponents(m.c4, m.c6, m.discriminant)
    u = 1
    for ell, k in exps.items():
        u *= ell**k
    c4, c6 = m.c4 // u**4, m.c6 // u**6
    new = model_from_c4c6(c4, c6)
    a1, a2, a3 = m.a1, m.a2, m.a3
    s = Fraction(u * new.a1 - a1, 2)
    r = (Fraction(u * u * new.a2) - a2 + s * a1 + s * s) / 3
    t = (Fraction(u**3 * new.a3) - a3 - r * a1) / 2
    tr = Transform(Fraction(u), r, s, t)
    assert transform_model(m, tr) == new
    return new, tr


# --- torsion -------------------------------------------------------------------


@dataclass(frozen=True)
class TorsionGroup:
    order: int
    invariants: tuple[int, ...]
    generators: tuple[CurvePoint, ...]
    points: tuple[CurvePoint, ...] = field(repr=False)


def count_points_mod(m: WeierstrassModel, ell: int) -> int:
    """#E(F_ell) by brute force over all (x, y) pairs; small ell only."""
    a1, a2, a3, a4, a6 = (a % ell for a in m.ainvs)
    ys = np.arange(ell, dtype=np.int64)
    lhs = (ys * ys) % ell
    count = 1
    for x in range(ell):
        rhs = (x * x * x + a2 * x * x + a4 * x + a6) % ell
        vals = (lhs + (a1 * x + a3) * ys) % ell
        count += int(np.count_nonzero(vals == rhs))
    return count


def torsion_bound(m: WeierstrassModel, nprimes: int = 5) -> int:
    disc = m.discriminant
    g = 0
    used = 0
    for ell in primes_up_to(1000)[1:]:
        if disc % ell == 0:
            continue
        g = math.gcd(g, count_points_mod(m, ell))
        used += 1
        if used >= nprimes or g == 1:
            break
    return g


def _integer_roots_cubic(A: int, B: int) -> list[int]:
    """Integer roots of X^3 + A X + B."""
    size = max(abs(A), abs(B), 1)
    digits = len(str(size)) + 30
    with mpmath.workdps(digits):
        roots = mpmath.polyroots([1, 0, A, B], maxsteps=200, extraprec=4 * digits)
    out = set()
    for r in roots:
        if abs(mpmath.im(r)) > 0.5:
            continue
        for cand in (int(mpmath.floor(mpmath.re(r))), int(mpmath.ceil(mpmath.re(r)))):
            if cand**3 + A * cand + B == 0:
                out.add(cand)
    return sorted(out)


def torsion_subgroup(m: WeierstrassModel) -> TorsionGroup:
    bound = torsion_bound(m)
    if bound == 1:
        return TorsionGroup(1, (), (), (INFINITY,))
    A, B = -27 * m.c4, -54 * m.c6
    # short model Y^2 = X^3 + A X + B with X = 36x + 3b2, Y = 108(2y + a1 x + a3)
    D = 4 * A**3 + 27 * B * B
    candidates_y = [0]
    fac = factor(D)
    for exps in itertools.product(*[range(e // 2 + 1) for e in fac.values()]):
        y = 1
        for ell, k in zip(fac, exps):
            y *= ell**k
        candidates_y.append(y)
    found = {INFINITY}
    for Y in candidates_y:
        for Xc in _integer_roots_cubic(A, B - Y * Y):
            x = Fraction(Xc - 3 * m.b2, 36)
            for sign in (1, -1):
                y = (Fraction(sign * Y, 108) - m.a1 * x - m.a3) / 2
                P = CurvePoint(x, y)
                if m.contains(P):
                    n = m.order_of(P)
                    if n is not None and bound % n == 0:
                        found.add(P)
    pts = sorted(found, key=_point_key)
    order = len(pts)
    two_tors = [P for P in pts if not P.is_infinity and m.order_of(P) == 2]
    orders = {P: m.order_of(P) for P in pts}
    if len(two_tors) == 3:
        n = order // 2
        g1 = next(P for P in pts if orders[P] == n)
        multiples = {m.scalar_mul(k, g1) for k in range(n)}
        g2 = next(P for P in two_tors if P not in multiples)
        return TorsionGroup(order, (2, n), (g2, g1), tuple(pts))
    if order == 1:
        return TorsionGroup(1, (), (), tuple(pts))
    gen = next(P for P in pts if orders[P] == order)
    return TorsionGroup(order, (order,), (gen,), tuple(pts))


def _point_key(P: CurvePoint):
    if P.is_infinity:
        return (0, 0, 0, 0, 0)
    return (1, P.x.denominator, P.x.numerator, P.y.denominator, P.y.numerator)


# --- twists ------------------------------------------------------------------------


def quadratic_twist(m: WeierstrassModel, D: int) -> WeierstrassModel:
    """Minimal model of the twist by the quadratic character of discriminant D."""
    if D != 1 and not is_fundamental_discriminant(D):
        raise ArgumentError(f"{D} is not a fundamental discriminant")
    A, B = -27 * m.c4, -54 * m.c6
    return minimal_model(WeierstrassModel(0, 0, 0, A * D * D, B * D**3))[0]


# --- division polynomials and isogenies ----------------------------------------


def division_polynomials(m: WeierstrassModel, n: int) -> list[Poly]:
    """f_0..f_n with f_k = psi_k (k odd) or psi_k / psi_2 (k even), in Z[x]."""
    b2, b4, b6, b8 = m.b2, m.b4, m.b6, m.b8
    F = Poly(4 * X**3 + b2 * X**2 + 2 * b4 * X + b6, X, domain="ZZ")
    f = [Poly(0, X, domain="ZZ"), Poly(1, X, domain="ZZ"), Poly(1, X, domain="ZZ")]
    f.append(Poly(3 * X**4 + b2 * X**3 + 3 * b4 * X**2 + 3 * b6 * X + b8, X, domain="ZZ"))
    f.append(
        Poly(
            2 * X**6 + b2 * X**5 + 5 * b4 * X**4 + 10 * b6 * X**3 + 10 * b8 * X**2
            + (b2 * b8 - b4 * b6) * X + (b4 * b8 - b6 * b6),
            X,
            domain="ZZ",
        )
    )
    F2 = F * F
    for k in range(5, n + 1):
        mm = k // 2
        if k % 2:
            if mm % 2 == 0:
                val = F2 * f[mm + 2] * f[mm] ** 3 - f[mm - 1] * f[mm + 1] ** 3
            else:
                val = f[mm + 2] * f[mm] ** 3 - F2 * f[mm - 1] * f[mm + 1] ** 3
        else:
            val = f[mm] * (f[mm + 2] * f[mm - 1] ** 2 - f[mm - 2] * f[mm + 1] ** 2)
        f.append(val)
    return f[: n + 1]


COEFF_CAP = 10**12
SUPPORTED_ISOGENY_PRIMES = (3, 5, 7, 11, 13)


def _is_kernel_polynomial(m: WeierstrassModel, g: Poly) -> bool:
    # the roots of a cyclic kernel polynomial are closed under x -> x(2P);
    # 2 generates (Z/p)^*/{+-1} for every supported p
    num = Poly(X**4 - m.b4 * X**2 - 2 * m.b6 * X - m.b8, X, domain="QQ")
    den = Poly(4 * X**3 + m.b2 * X**2 + 2 * m.b4 * X + m.b6, X, domain="QQ")
    g = g.set_domain("QQ")
    d = g.degree()
    coeffs = list(reversed(g.all_coeffs()))
    h = Poly(0, X, domain="QQ")
    for i, c in enumerate(coeffs):
        h += c * num**i * den ** (d - i)
    return h.rem(g).is_zero


def rational_isogeny_kernel(m: WeierstrassModel, p: int):
    """Kernel polynomial of a rational p-isogeny, False if none, None if undecided."""
    psi = division_polynomials(m, p)[p]
    _, factors = factor_list(psi.as_expr(), X)
    polys = []
    for fac, mult in factors:
        P = Poly(fac, X, domain="QQ")
        P = P.monic()
        if P.degree() <= (p - 1) // 2:
            polys.extend([P] * mult)
    d = (p - 1) // 2
    undecided = False
    seen = set()
    for r in range(1, len(polys) + 1):
        for combo in itertools.combinations(range(len(polys)), r):
            if sum(polys[i].degree() for i in combo) != d:
                continue
            g = Poly(1, X, domain="QQ")
            for i in combo:
                g *= polys[i]
            key = tuple(g.all_coeffs())
            if key in seen:
                continue
            seen.add(key)
            if any(abs(Fraction(str(c))) > COEFF_CAP for c in g.all_coeffs()):
                undecided = True
                continue
            if _is_kernel_polynomial(m, g):
                return g
    return None if undecided else False


def frobenius_irreducibility_witness(m: WeierstrassModel, p: int, limit: int = 500) -> int | None:
    """A good prime ell with a_ell != 1 + ell mod p, certifying E[p] irreducible.

    Valid for semistable curves: a reducible E[p] then has semisimplification
    1 + (cyclotomic), forcing a_ell = 1 + ell mod p at every good ell != p.
    """
    from .local import ap

    disc = m.discriminant
    for ell in primes_up_to(limit):
        if ell == p or disc % ell == 0:
            continue
        if (ap(m, ell) - 1 - ell) % p:
            return ell
    return None


def mod_p_irreducible(m: WeierstrassModel, p: int) -> bool | None:
    """True iff E has no rational p-isogeny; None when undecided."""
    if p not in SUPPORTED_ISOGENY_PRIMES:
        raise UnsupportedError(f"irreducibility test supports p in {SUPPORTED_ISOGENY_PRIMES}")
    from .local import is_semistable

    if is_semistable(m) and frobenius_irreducibility_witness(m, p) is not None:
        return True
    kernel = rational_isogeny_kernel(m, p)
    if kernel is None:
        return None
    return kernel is False


# --- point search ----------------------------------------------------------------

_SIEVE_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def naive_point_search(m: WeierstrassModel, H: int) -> list[CurvePoint]:
    """Affine points with x = a/b^2, |a| <= H, b^2 <= H."""
    if H < 1:
        return []
    a1, a2, a3, a4, a6 = m.ainvs
    avals = np.arange(-H, H + 1, dtype=np.int64)
    squares = {q: np.zeros(q, dtype=bool) for q in _SIEVE_PRIMES}
    for q, tab in squares.items():
        tab[(np.arange(q) ** 2) % q] = True
    found = set()
    for b in range(1, math.isqrt(H) + 1):
        mask = np.gcd(avals, b) == 1
        for q in _SIEVE_PRIMES:
            aq = avals % q
            bq = b % q
            lin = (a1 * aq * bq + a3 * bq**3) % q
            cub = (aq**3 + a2 * aq**2 * bq**2 + a4 * aq * bq**4 + a6 * bq**6) % q
            disc = (lin * lin + 4 * cub) % q
            mask &= squares[q][disc]
        for a in avals[mask].tolist():
            lin = a1 * a * b + a3 * b**3
            disc = lin * lin + 4 * (a**3 + a2 * a * a * b * b + a4 * a * b**4 + a6 * b**6)
            if disc < 0:
                continue
            s = math.isqrt(disc)
            if s * s != disc:
                continue
            x = Fraction(a, b * b)
            for Y in {Fraction(-lin + s, 2), Fraction(-lin - s, 2)}:
                P = CurvePoint(x, Y / b**3)
                if m.contains(P):
                    found.add(P)
    return sorted(found, key=_point_key)
