"""Formal-group logarithm at a good prime, local p-torsion, delta_v, the control
constant C(W) and the anticyclotomic Selmer order prediction."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .curve import CurvePoint, WeierstrassModel, count_points_mod
from .errors import (
    ArgumentError,
    DegenerateError,
    HeegnerHypothesisError,
    InconsistencyError,
    PrecisionExhausted,
)
from .foundation import DEFAULT_PADIC_PREC, INF, PadicValue, kronecker, valp
from .local import ap, conductor, local_data

# --- power series helpers (lists of Fractions, truncated at a fixed order) ------------


def _mul(a, b, order):
    out = [Fraction(0)] * order
    for i, ai in enumerate(a[:order]):
        if ai:
            for j, bj in enumerate(b[: order - i]):
                if bj:
                    out[i + j] += ai * bj
    return out


def _inv(a, order):
    """Inverse of a power series with invertible constant term."""
    if a[0] == 0:
        raise ArgumentError("power series not invertible")
    out = [Fraction(0)] * order
    out[0] = 1 / Fraction(a[0])
    for n in range(1, order):
        s = sum((a[k] * out[n - k] for k in range(1, min(n, len(a) - 1) + 1)), Fraction(0))
        out[n] = -s * out[0]
    return out


@lru_cache(maxsize=256)
def formal_w(m: WeierstrassModel, order: int) -> tuple[int, ...]:
    """w(z) = z^3 + a1 z w + a2 z^2 w + a3 w^2 + a4 z w^2 + a6 w^3, coefficients of z^0..z^(order-1)."""
    a1, a2, a3, a4, a6 = m.ainvs
    w = [Fraction(0)] * order
    for _ in range(order):
        w2 = _mul(w, w, order)
        w3 = _mul(w2, w, order)
        new = [Fraction(0)] * order
        if order > 3:
            new[3] += 1
        for i in range(order):
            if i + 1 < order:
                new[i + 1] += a1 * w[i] + a4 * w2[i]
            if i + 2 < order:
                new[i + 2] += a2 * w[i]
            new[i] += a3 * w2[i] + a6 * w3[i]
        if new == w:
            break
        w = new
    assert all(c.denominator == 1 for c in w)
    return tuple(int(c) for c in w)


@lru_cache(maxsize=256)
def invariant_differential(m: WeierstrassModel, order: int) -> tuple[Fraction, ...]:
    """Coefficients of omega(z)/dz where omega = dx/(2y + a1 x + a3), z = -x/y."""
    W = [Fraction(c) for c in formal_w(m, order + 3)[3:]]  # w = z^3 W
    V = _inv(W, order)  # x = z^-2 V, y = -z^-3 V
    zVp = [Fraction(n) * V[n] for n in range(order)]
    num = [-2 * V[n] + zVp[n] for n in range(order)]
    den = [-2 * V[n] for n in range(order)]
    for n in range(order - 1):
        den[n + 1] += m.a1 * V[n]
    if order > 3:
        den[3] += m.a3
    return tuple(_mul(num, _inv(den, order), order))


def invariant_differential_alt(m: WeierstrassModel, order: int) -> tuple[Fraction, ...]:
    """Same expansion via omega = dy/(3x^2 + 2 a2 x + a4 - a1 y); an independent route."""
    a1, a2, a3, a4, a6 = m.ainvs
    W = [Fraction(c) for c in formal_w(m, order + 3)[3:]]
    V = _inv(W, order + 2)
    # y = -z^-3 V, dy/dz = z^-4 (3V - z V')
    dy = [3 * V[n] - n * V[n] for n in range(order + 2)]
    # 3x^2 + 2a2 x + a4 - a1 y = z^-4 (3 V^2 + 2 a2 z^2 V + a4 z^4 + a1 z V)
    V2 = _mul(V, V, order + 2)
    den = [3 * c for c in V2]
    for n in range(order):
        den[n + 2] += 2 * a2 * V[n]
        den[n + 1] += a1 * V[n]
    den[4] += a4
    return tuple(_mul(dy, _inv(den, order + 2), order + 2)[:order])


@dataclass(frozen=True)
class FormalLogSeries:
    prime: int
    coefficients: tuple[Fraction, ...]  # c_1 .. c_M

    @property
    def truncation(self) -> int:
        return len(self.coefficients)


@lru_cache(maxsize=256)
def formal_log_series(m: WeierstrassModel, p: int, terms: int) -> FormalLogSeries:
    omega = invariant_differential(m, terms)
    coeffs = tuple(omega[n - 1] / n for n in range(1, terms + 1))
    return FormalLogSeries(p, coeffs)


# --- logarithm of a global point ------------------------------------------------------


def _require_good(m: WeierstrassModel, p: int):
    if m.discriminant % p == 0:
        raise ArgumentError(f"{p} is a bad prime for {m}")


def formal_entry_multiplier(m: WeierstrassModel, P: CurvePoint, p: int) -> int:
    """n = (prime-to-p part of #E(F_p)) * p^k with k minimal so that nP reduces to O."""
    Np = count_points_mod(m, p)
    k = 0
    while Np % p == 0:
        Np //= p
        k += 1
    Q = m.scalar_mul(Np, P)
    j = 0
    while not (Q.is_infinity or valp(Q.x, p) < 0):
        Q = m.scalar_mul(p, Q)
        j += 1
        if j > k:
            raise InconsistencyError("point did not enter the formal group")
    return Np * p**j


def formal_log(m: WeierstrassModel, P: CurvePoint, p: int, prec: int = DEFAULT_PADIC_PREC) -> PadicValue:
    """log_omega(P) = lambda(z(nP)) / n as a p-adic number with ``prec`` digits of absolute precision."""
    _require_good(m, p)
    if not m.contains(P):
        raise ArgumentError(f"{P} is not on the curve")
    if P.is_infinity:
        return PadicValue.zero(p, INF)
    if m.order_of(P) is not None:
        raise DegenerateError("formal log of a torsion point is zero; it carries no information")
    n = formal_entry_multiplier(m, P, p)
    Q = m.scalar_mul(n, P)
    z = -Q.x / Q.y
    vz = valp(z, p)
    if vz < 1:
        raise InconsistencyError("z(nP) is not in the maximal ideal")
    vn = valp(n, p)
    # terms with n*vz - v_p(n) >= prec + vn are negligible; M = prec + 10 is the design budget
    target = prec + vn + 2
    M = prec + 10
    while M * vz - _log_p(M, p) < target:
        M += 5
    work = target + _log_p(M, p) + 2
    series = formal_log_series(m, p, M)
    zp = PadicValue.from_rational(z, p, work)
    total = PadicValue.zero(p, work + vz)
    power = zp
    for c in series.coefficients:
        total = total + PadicValue.from_rational(c, p, work) * power if c else total
        power = power * zp
    result = total / PadicValue.from_rational(n, p, work)
    if result.is_zero:
        raise PrecisionExhausted("formal logarithm vanished to working precision")
    return result._truncate_abs(prec)


def _log_p(M: int, p: int) -> int:
    k, q = 0, 1
    while q * p <= M:
        q *= p
        k += 1
    return k


# --- local invariants ----------------------------------------------------------------


def reduction_p_torsion(m: WeierstrassModel, p: int) -> int:
    """ord_p #E(F_p) = ord_p(1 - a_p + p)."""
    _require_good(m, p)
    return valp(p + 1 - ap(m, p), p)


def _add_mod(m: WeierstrassModel, P, Q, p: int):
    """Group law on E(F_p); points are (x, y) tuples or None for the identity."""
    a1, a2, a3, a4, a6 = m.ainvs
    if P is None:
        return Q
    if Q is None:
        return P
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2:
        if (y1 + y2 + a1 * x2 + a3) % p == 0:
            return None
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) * pow(2 * y1 + a1 * x1 + a3, -1, p)
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p)
    lam %= p
    x3 = (lam * lam + a1 * lam - a2 - x1 - x2) % p
    y3 = (-(lam + a1) * x3 - (y1 - lam * x1) - a3) % p
    return (x3, y3)


def _mul_mod(m, n, P, p):
    R = None
    while n:
        if n & 1:
            R = _add_mod(m, R, P, p)
        P = _add_mod(m, P, P, p)
        n >>= 1
    return R


def _order_p_point(m: WeierstrassModel, p: int):
    cofactor = count_points_mod(m, p) // p
    a1, a2, a3, a4, a6 = m.ainvs
    for x in range(p):
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % p == 0:
                R = _mul_mod(m, cofactor, (x, y), p)
                if R is not None:
                    return R
    raise InconsistencyError("no point of order p in E(F_p)")


def local_p_torsion(m: WeierstrassModel, p: int) -> int:
    """e with #H^0(Q_p, E[p^infinity]) = #E(Q_p)[p^infinity] = p^e, for good odd p.

    E(Q_p)[p^infinity] injects into E(F_p)[p^infinity] but need not be all of it:
    the p-part of E(Q_p) is an extension of E(F_p)[p] by the torsion-free formal
    group, and it splits exactly when p*R lies in E_2 for a lift R of a point of
    order p.  That is decided on an integral model congruent to E modulo p^4
    through which the lift passes exactly.
    """
    eF = reduction_p_torsion(m, p)
    if p == 2:
        raise ArgumentError("local p-torsion is defined here for odd p")
    if eF == 0:
        return 0
    x0, y0 = _order_p_point(m, p)
    a1, a2, a3, a4, a6 = m.ainvs
    K = 4
    mod = p**K
    y = y0
    for _ in range(K):
        F = y * y + (a1 * x0 + a3) * y - (x0**3 + a2 * x0 * x0 + a4 * x0 + a6)
        y = (y - F * pow(2 * y + a1 * x0 + a3, -1, mod)) % mod
    F = y * y + (a1 * x0 + a3) * y - (x0**3 + a2 * x0 * x0 + a4 * x0 + a6)
    assert F % mod == 0
    shifted = WeierstrassModel(a1, a2, a3, a4, a6 + F)
    R = shifted.scalar_mul(p, CurvePoint(Fraction(x0), Fraction(y)))
    if R.is_infinity:
        return eF
    z = -R.x / R.y
    return eF if valp(z, p) >= 2 else 0


def anomalous(m: WeierstrassModel, p: int) -> bool:
    return local_p_torsion(m, p) > 0


def delta_v(m: WeierstrassModel, P: CurvePoint, p: int, index_p: int,
            prec: int = DEFAULT_PADIC_PREC) -> int:
    """ord_p #delta_v = v_p(log P) + ord_p(#E(F_p)) - 1 - index_p - e."""
    log = formal_log(m, P, p, prec)
    eF = reduction_p_torsion(m, p)
    value = int(log.valuation) + eF - 1 - index_p - local_p_torsion(m, p)
    if value < 0:
        raise InconsistencyError(
            f"delta_v would be negative ({value}): wrong index or unsaturated generator"
        )
    return value


def control_constant(m: WeierstrassModel, p: int, D: int) -> int:
    """ord_p C(W) = 2e + sum over split l | N of 2 ord_p c_l(E/Q)."""
    if kronecker(D, p) != 1:
        raise HeegnerHypothesisError(f"{p} does not split in Q(sqrt({D}))")
    total = 2 * local_p_torsion(m, p)
    for ld in local_data(m):
        if ld.conductor_exponent and kronecker(D, ld.prime) == 1:
            total += 2 * valp(ld.c_ell, p)
    return total


@dataclass(frozen=True)
class SelmerPrediction:
    p: int
    D: int
    sha_K_valuation: int
    log_valuation: int
    euler_factor_valuation: int
    index_p: int
    local_torsion: int
    prediction: int
    lp_valuation: int  # ord_p of ((1+p-a_p)/p log z)^2, the L_p(f,1) cross-reference

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "D": self.D,
            "sha_K_valuation": self.sha_K_valuation,
            "log_valuation": self.log_valuation,
            "euler_factor_valuation": self.euler_factor_valuation,
            "index_p": self.index_p,
            "local_torsion": self.local_torsion,
            "prediction": self.prediction,
            "lp_valuation": self.lp_valuation,
        }


def selmer_prediction(m: WeierstrassModel, D: int, p: int, P: CurvePoint, index_p: int,
                      sha_K: Fraction, prec: int = DEFAULT_PADIC_PREC) -> SelmerPrediction:
    """ord_p #Sel = ord_p Sha(E/K) + 2 [v_p(((1 - a_p + p)/p) log P) - index_p - e]."""
    log = formal_log(m, P, p, prec)
    lv = int(log.valuation)
    euler = reduction_p_torsion(m, p) - 1
    e = local_p_torsion(m, p)
    sha_v = valp(sha_K, p)
    bracket = lv + euler - index_p - e
    pred = sha_v + 2 * bracket
    if pred < 0:
        raise InconsistencyError(f"negative Selmer prediction {pred}")
    return SelmerPrediction(p, D, sha_v, lv, euler, index_p, e, pred, 2 * (lv + euler))
