"""Exact rationals, working-precision reals and p-adic numbers.

Real quantities are :class:`mpmath.mpf` values computed inside a
``workdps`` block; every routine takes the working precision in decimal
digits and never returns something computed at less than that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpf
from sympy import factorint, isprime

from .errors import ArgumentError

DEFAULT_PREC = 64
DEFAULT_PADIC_PREC = 20
GUARD_DIGITS = 10

INF = math.inf

RealAP = mpf


def is_prime(n: int) -> bool:
    return n >= 2 and bool(isprime(n))


@lru_cache(maxsize=4096)
def _factor_cached(n: int) -> tuple:
    return tuple(sorted(factorint(n).items()))


def factor(n: int) -> dict[int, int]:
    """Prime factorisation of ``|n|`` (empty for 0 and ±1)."""
    n = abs(int(n))
    if n <= 1:
        return {}
    return dict(_factor_cached(n))


def prime_divisors(n: int) -> list[int]:
    return sorted(factor(n))


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i, flag in enumerate(sieve) if flag]


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None."""
    if q < 0:
        return None
    a, b = q.numerator, q.denominator
    ra, rb = math.isqrt(a), math.isqrt(b)
    if ra * ra == a and rb * rb == b:
        return Fraction(ra, rb)
    return None


def valp(q, p: int):
    """p-adic valuation of an integer or rational; ``INF`` for zero."""
    if not is_prime(p):
        raise ArgumentError(f"{p} is not prime")
    q = Fraction(q)
    if q == 0:
        return INF
    return _vint(q.numerator, p) - _vint(q.denominator, p)


def _vint(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def agm(a, b, prec: int = DEFAULT_PREC) -> mpf:
    """Arithmetic-geometric mean of two positive reals."""
    with mp.workdps(prec + GUARD_DIGITS):
        a, b = mpf(a), mpf(b)
        if a <= 0 or b <= 0:
            raise ArgumentError("agm needs positive arguments")
        eps = mpf(10) ** (-(prec + GUARD_DIGITS // 2))
        while abs(a - b) >= eps * abs(a):
            a, b = (a + b) / 2, mpmath.sqrt(a * b)
        return +((a + b) / 2)


def complex_agm(a, b, prec: int = DEFAULT_PREC):
    """AGM of two complex numbers using the optimal square-root branch."""
    with mp.workdps(prec + GUARD_DIGITS):
        a, b = mpmath.mpc(a), mpmath.mpc(b)
        eps = mpf(10) ** (-(prec + GUARD_DIGITS // 2))
        for _ in range(10_000):
            if abs(a - b) < eps * abs(a):
                break
            s = mpmath.sqrt(a * b)
            m = (a + b) / 2
            if abs(m - s) > abs(m + s):
                s = -s
            a, b = m, s
        return +((a + b) / 2)


def exp_integral_E1(x, prec: int = DEFAULT_PREC) -> mpf:
    """E1(x) = integral of exp(-t)/t over [x, inf) for x > 0.

    Power series below x = 2, modified Lentz continued fraction above.
    """
    with mp.workdps(prec + GUARD_DIGITS):
        x = mpf(x)
        if x <= 0:
            raise ArgumentError("E1 needs a positive argument")
        eps = mpf(10) ** (-(prec + GUARD_DIGITS // 2))
        if x <= 2:
            total = mpf(0)
            term = mpf(1)
            k = 0
            while True:
                k += 1
                term *= -x / k
                contrib = term / k
                total += contrib
                if abs(contrib) < eps:
                    break
            result = -mp.euler - mpmath.log(x) - total
        else:
            tiny = mpf(10) ** (-(prec + 50))
            b = x + 1
            c = 1 / tiny
            d = 1 / b
            h = d
            i = 0
            while True:
                i += 1
                an = -mpf(i) * i
                b += 2
                d = 1 / (an * d + b)
                c = b + an / c
                delta = c * d
                h *= delta
                if abs(delta - 1) < eps:
                    break
            result = h * mpmath.exp(-x)
        return +result


def recognize_rational(x, den_bound: int) -> Fraction | None:
    """The rational p/q with q <= den_bound and |x - p/q| < 1/(2 den_bound^2)."""
    if den_bound < 1:
        raise ArgumentError("den_bound must be positive")
    x = mpf(x)
    tol = mpf(1) / (2 * mpf(den_bound) ** 2)
    # continued-fraction convergents; the best approximation with bounded
    # denominator is always a convergent or a semiconvergent, and any p/q
    # within 1/(2q^2) is a convergent
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    y = x
    best = None
    for _ in range(400):
        a = int(mpmath.floor(y))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > den_bound:
            break
        cand = Fraction(h1, k1)
        if abs(x - mpf(h1) / k1) < tol:
            best = cand
            break
        frac = y - a
        if frac == 0:
            break
        y = 1 / frac
    return best


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D|n) for n >= 1."""
    if n <= 0:
        raise ArgumentError("kronecker needs n >= 1")
    result = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result = -result
    # Jacobi symbol (D|n) for odd n
    a = D % n if n > 1 else 0
    if n == 1:
        return result
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_fundamental_discriminant(D: int) -> bool:
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return all(e == 1 for e in factor(D).values())
    if D % 4 == 0:
        m = D // 4
        if m % 4 in (2, 3):
            return all(e == 1 for e in factor(m).values())
    return False


def class_number(D: int) -> int:
    """Class number of the imaginary quadratic order of discriminant D < 0."""
    return len(reduced_forms(D))


def reduced_forms(D: int) -> list[tuple[int, int, int]]:
    """Reduced positive definite forms (a, b, c) with b^2 - 4ac = D."""
    if D >= 0 or D % 4 not in (0, 1):
        raise ArgumentError(f"{D} is not a negative discriminant")
    forms = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if c == a and b < 0:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            forms.append((a, b, c))
        a += 1
    return forms


def reduce_form(a: int, b: int, c: int) -> tuple[int, int, int]:
    """Gauss reduction of a positive definite binary quadratic form."""
    while True:
        if a > c or (a == c and b < 0):
            a, b, c = c, -b, a
            continue
        if not (-a < b <= a):
            k = (a - b) // (2 * a)
            b2 = b + 2 * k * a
            c = (b2 * b2 - (b * b - 4 * a * c)) // (4 * a)
            b = b2
            continue
        if a == c and b < 0:
            b = -b
            continue
        return a, b, c


@dataclass(frozen=True)
class PadicValue:
    """An element of Q_p known to finite relative precision.

    The value is ``p**valuation * unit`` with ``unit`` known modulo
    ``p**precision``.  Zero is the ``INF`` valuation sentinel; a zero
    obtained by cancellation keeps its absolute precision in
    ``precision`` (the value is then only known to be ``0 mod p**precision``).
    """

    prime: int
    valuation: float | int
    unit: int
    precision: int | float

    @classmethod
    def from_rational(cls, q, p: int, precision: int = DEFAULT_PADIC_PREC) -> "PadicValue":
        q = Fraction(q)
        if q == 0:
            return cls(p, INF, 0, INF)
        v = valp(q, p)
        num = q.numerator // p ** max(v, 0)
        den = q.denominator // p ** max(-v, 0)
        mod = p**precision
        unit = num * pow(den, -1, mod) % mod
        return cls(p, v, unit, precision)

    @classmethod
    def zero(cls, p: int, abs_precision=INF) -> "PadicValue":
        return cls(p, INF, 0, abs_precision)

    @property
    def is_zero(self) -> bool:
        return self.valuation == INF

    @property
    def absolute_precision(self):
        if self.is_zero:
            return self.precision
        return self.valuation + self.precision

    def _check(self, other):
        if not isinstance(other, PadicValue):
            other = PadicValue.from_rational(other, self.prime, _exact_prec(self))
        if other.prime != self.prime:
            raise ArgumentError("mixed primes in p-adic arithmetic")
        return other

    def __neg__(self):
        if self.is_zero:
            return self
        mod = self.prime**self.precision
        return PadicValue(self.prime, self.valuation, -self.unit % mod, self.precision)

    def __add__(self, other):
        other = self._check(other)
        p = self.prime
        if self.is_zero and other.is_zero:
            return PadicValue.zero(p, min(self.precision, other.precision))
        if self.is_zero:
            return other._truncate_abs(self.precision)
        if other.is_zero:
            return self._truncate_abs(other.precision)
        absp = min(self.absolute_precision, other.absolute_precision)
        v = min(self.valuation, other.valuation)
        if absp == INF:
            total = Fraction(self.unit) * Fraction(p) ** self.valuation + Fraction(other.unit) * Fraction(p) ** other.valuation
            return PadicValue.from_rational(total, p, _exact_prec(self, other))
        absp = int(absp)
        mod = p ** (absp - v)
        s = (self.unit * p ** (self.valuation - v) + other.unit * p ** (other.valuation - v)) % mod
        if s == 0:
            return PadicValue.zero(p, absp)
        w = _vint(s, p)
        rel = absp - v - w
        return PadicValue(p, v + w, (s // p**w) % p**rel, rel)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        p = self.prime
        if self.is_zero or other.is_zero:
            if self.is_zero and other.is_zero:
                return PadicValue.zero(p, self.precision + other.precision if INF not in (self.precision, other.precision) else INF)
            z, nz = (self, other) if self.is_zero else (other, self)
            return PadicValue.zero(p, z.precision + nz.valuation if z.precision != INF else INF)
        rel = min(self.precision, other.precision)
        if rel == INF:
            return PadicValue.from_rational(self.to_fraction() * other.to_fraction(), p, _exact_prec(self, other))
        return PadicValue(p, self.valuation + other.valuation, self.unit * other.unit % p**rel, rel)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._check(other)
        p = self.prime
        if other.is_zero:
            raise ZeroDivisionError("p-adic division by zero")
        if self.is_zero:
            return PadicValue.zero(p, self.precision - other.valuation if self.precision != INF else INF)
        rel = min(self.precision, other.precision)
        if rel == INF:
            return PadicValue.from_rational(self.to_fraction() / other.to_fraction(), p, _exact_prec(self, other))
        mod = p**rel
        return PadicValue(p, self.valuation - other.valuation, self.unit * pow(other.unit, -1, mod) % mod, rel)

    def __rtruediv__(self, other):
        return self._check(other) / self

    def __pow__(self, n: int):
        result = PadicValue.from_rational(1, self.prime, _exact_prec(self))
        base = self
        if n < 0:
            base = 1 / base
            n = -n
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _truncate_abs(self, absp):
        if absp == INF or self.is_zero:
            return self
        if self.absolute_precision <= absp:
            return self
        rel = int(absp - self.valuation)
        if rel <= 0:
            return PadicValue.zero(self.prime, absp)
        return PadicValue(self.prime, self.valuation, self.unit % self.prime**rel, rel)

    def with_precision(self, precision: int) -> "PadicValue":
        """Lower the relative precision (never raises it)."""
        if self.is_zero:
            return self
        rel = min(self.precision, precision)
        return PadicValue(self.prime, self.valuation, self.unit % self.prime**rel, rel)

    def to_fraction(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.prime) ** self.valuation

    def equals(self, other, upto: int | None = None) -> bool:
        """Agreement to the joint absolute precision (optionally capped)."""
        other = self._check(other)
        diff = self - other
        if not diff.is_zero:
            return False if upto is None else diff.valuation >= upto
        return True

    def __repr__(self):
        if self.is_zero:
            return f"O({self.prime}^{self.precision})" if self.precision != INF else "0"
        return f"{self.prime}^{self.valuation}*{self.unit} + O({self.prime}^{self.absolute_precision})"


def _exact_prec(*vals) -> int:
    finite = [v.precision for v in vals if v.precision != INF]
    return min(finite) if finite else DEFAULT_PADIC_PREC
