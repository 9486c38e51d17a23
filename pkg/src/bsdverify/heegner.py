"""Auxiliary imaginary quadratic fields, Heegner points on X_0(N), the index m_K and the
Gross-Zagier valuation identity (classical case: every prime of N split, N^- = 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpc, mpf

from .curve import CurvePoint, WeierstrassModel
from .errors import (
    ArgumentError,
    BSDError,
    DegenerateError,
    HeegnerHypothesisError,
    InconsistencyError,
    ParityError,
    PrecisionExhausted,
    SearchExhausted,
)
from .foundation import (
    DEFAULT_PREC,
    GUARD_DIGITS,
    class_number,
    is_fundamental_discriminant,
    kronecker,
    prime_divisors,
    recognize_rational,
    reduce_form,
    valp,
)
from .heights import canonical_height, generator_rank1, is_torsion, regulator
from .local import an_coeffs, conductor, is_semistable, local_data
from .lseries import l_derivative, lattice, real_period, recognize, twist_data

ROLES = ("kpp", "kp")  # K'' (upper-bound field) and K' (lower-bound field)
DEFAULT_DMAX = 5000


@dataclass(frozen=True)
class HeegnerSetup:
    D: int
    role: str
    conductor: int
    n_plus: int
    n_minus: int
    forms: tuple[tuple[int, int, int], ...] = ()
    tau_points: tuple = ()
    heegner_point: CurvePoint | None = None
    index: int | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def class_number(self) -> int:
        return len(self.forms)


def _ramified_prime(m: WeierstrassModel, p: int) -> int:
    """A prime q | N at which E[p] is ramified, i.e. p does not divide ord_q(Delta)."""
    for ld in local_data(m):
        if ld.conductor_exponent == 1 and ld.disc_valuation % p:
            return ld.prime
    raise InconsistencyError("no prime of N is ramified for E[p]; level lowering forbids this")


def role_pattern(m: WeierstrassModel, p: int, role: str) -> tuple[int, int, dict[int, tuple[int, ...]]]:
    """(N^+, N^-, allowed Kronecker values per prime of N) for the given role."""
    N = conductor(m)
    primes = prime_divisors(N)
    if role == "kpp":
        # classical Heegner hypothesis: every prime of N splits
        return N, 1, {ell: (1,) for ell in primes}
    if role == "kp":
        q = _ramified_prime(m, p)
        pattern = {ell: (1,) for ell in primes}
        pattern[q] = (-1, 0)
        return N, 1, pattern
    raise ArgumentError(f"unknown role {role!r}")


def admissible_discriminant(m: WeierstrassModel, p: int, D: int, role: str = "kpp") -> bool:
    """Arithmetic conditions (a)-(c) on D; the L-value condition (d) is checked separately."""
    if D >= 0 or not is_fundamental_discriminant(D):
        return False
    if kronecker(D, p) != 1:
        return False
    _, _, pattern = role_pattern(m, p, role)
    if any(kronecker(D, ell) not in allowed for ell, allowed in pattern.items()):
        return False
    if role == "kpp" and math.gcd(D, 2 * conductor(m) * p) != 1:
        return False
    return True


def choose_field(m: WeierstrassModel, p: int, role: str = "kpp", dmax: int = DEFAULT_DMAX,
                 prec: int = DEFAULT_PREC) -> HeegnerSetup:
    """Smallest |D| satisfying the role's conditions, with L(E^D, 1) != 0 verified."""
    if not is_semistable(m):
        raise ArgumentError("choose_field needs a semistable curve")
    N = conductor(m)
    if N % p == 0:
        raise ArgumentError(f"{p} is a bad prime")
    n_plus, n_minus, _ = role_pattern(m, p, role)
    for absd in range(3, dmax + 1):
        D = -absd
        if not admissible_discriminant(m, p, D, role):
            continue
        try:
            twist_data(m, D, prec)
        except (ParityError, PrecisionExhausted):
            continue
        return HeegnerSetup(D=D, role=role, conductor=N, n_plus=n_plus, n_minus=n_minus)
    raise SearchExhausted(f"no admissible discriminant with |D| <= {dmax} for p={p}, role {role}")


def _sqrt_mod_4N(D: int, N: int) -> int:
    for b in range(2 * N):
        if (b * b - D) % (4 * N) == 0:
            return b
    raise HeegnerHypothesisError(f"{D} is not a square modulo {4 * N}")


def heegner_forms(N: int, D: int) -> list[tuple[int, int, int]]:
    """One form (A, B, C) per ideal class with N | A and B fixed modulo 2N."""
    if not is_fundamental_discriminant(D) or D >= 0:
        raise ArgumentError(f"{D} is not a negative fundamental discriminant")
    for ell in prime_divisors(N):
        if kronecker(D, ell) == -1:
            raise HeegnerHypothesisError(f"{ell} is inert in Q(sqrt({D}))")
    beta = _sqrt_mod_4N(D, N)
    h = class_number(D)
    chosen: dict[tuple[int, int, int], tuple[int, int, int]] = {}
    a = 1
    while len(chosen) < h:
        A = N * a
        for B in range(beta, beta + 2 * A, 2 * N):
            if (B * B - D) % (4 * A):
                continue
            C = (B * B - D) // (4 * A)
            if math.gcd(math.gcd(A, B), C) != 1:
                continue
            cls = reduce_form(a, B, N * C)
            chosen.setdefault(cls, (A, B, C))
        a += 1
        if a > 10_000:
            raise InconsistencyError("failed to enumerate Heegner forms")
    return [chosen[c] for c in sorted(chosen)]


def _tau(form, dps):
    A, B, _ = form
    with mp.workdps(dps):
        return mpc(-B, mpmath.sqrt(-(B * B - 4 * A * form[2]))) / (2 * A)


def modular_parametrization(an, tau, terms: int, dps: int):
    """phi(tau) = sum a_n q^n / n."""
    with mp.workdps(dps):
        q = mpmath.exp(2j * mp.pi * tau)
        total = mpc(0)
        qn = mpc(1)
        for n in range(1, terms + 1):
            qn *= q
            if an[n]:
                total += an[n] * qn / n
        return total


def _terms_needed(forms, dps) -> int:
    A_max = max(f[0] for f in forms)
    D = forms[0][1] ** 2 - 4 * forms[0][0] * forms[0][2]
    imag = math.sqrt(-D) / (2 * A_max)
    return int(math.ceil(dps * math.log(10) / (2 * math.pi * imag))) + 20


def heegner_point(m: WeierstrassModel, setup: HeegnerSetup, prec: int = DEFAULT_PREC,
                  terms: int | None = None) -> HeegnerSetup:
    """Compute the trace point y_K and fold it into E(Q); returns an enriched setup."""
    N = conductor(m)
    forms = setup.forms or tuple(heegner_forms(N, setup.D))
    dps = prec + GUARD_DIGITS
    M = terms or _terms_needed(forms, dps)
    an = an_coeffs(m, M)
    L = lattice(m, prec)
    with mp.workdps(dps):
        taus = tuple(_tau(f, dps) for f in forms)
        z = mpc(0)
        for t in taus:
            z += modular_parametrization(an, t, M, dps)
        z = L.reduce(z)
        if abs(z) < mpf(10) ** (-prec // 2):
            raise DegenerateError("Heegner trace is the identity")
        folded = False
        P, residual = _point_from_z(m, L, z, prec)
        if P is None:
            folded = True
            zf = L.reduce(z + mpmath.conj(z))
            if abs(zf) < mpf(10) ** (-prec // 2):
                raise DegenerateError("folded Heegner trace is the identity")
            P, residual = _point_from_z(m, L, zf, prec)
        if P is None:
            raise PrecisionExhausted("could not recognise the Heegner point over Q")
    if is_torsion(m, P):
        raise DegenerateError(f"Heegner point {P} is torsion")
    diag = {
        "terms": M,
        "folded": folded,
        "residual": float(residual),
        "z": (float(z.real), float(z.imag)),
    }
    return replace(setup, forms=tuple(forms), tau_points=taus, heegner_point=P, diagnostics=diag)


def _point_from_z(m, L, z, prec):
    xz, yz = L.point(z)
    tol = mpf(10) ** (-prec // 3)
    if abs(mpmath.im(xz)) > tol * max(1, abs(xz)) or abs(mpmath.im(yz)) > tol * max(1, abs(yz)):
        return None, None
    bound = int(mpf(10) ** (prec // 3))
    x = recognize_rational(mpmath.re(xz), bound)
    if x is None:
        return None, None
    for P in m.lift_x(x):
        res = abs(mpf(P.y.numerator) / P.y.denominator - mpmath.re(yz)) + abs(
            mpf(x.numerator) / x.denominator - mpmath.re(xz))
        if res < tol:
            return P, res
    return None, None


def heegner_index(m: WeierstrassModel, setup: HeegnerSetup, prec: int = DEFAULT_PREC,
                  generator: CurvePoint | None = None) -> int:
    """m_K with hhat(y_K) = m_K^2 hhat(generator)."""
    P = setup.heegner_point
    if P is None:
        raise ArgumentError("heegner_point must be computed first")
    if is_torsion(m, P):
        raise DegenerateError("Heegner point is torsion")
    gen = generator or generator_rank1(m, prec)
    ratio = canonical_height(m, P, prec) / canonical_height(m, gen, prec)
    if setup.diagnostics.get("folded"):
        ratio /= 4
    return index_from_ratio(ratio)


def index_from_ratio(ratio) -> int:
    root = mpmath.sqrt(ratio)
    k = int(mpmath.nint(root))
    if k < 1 or abs(ratio - k * k) > mpf("1e-6"):
        raise InconsistencyError(
            f"height ratio {mpmath.nstr(ratio, 12)} is not a perfect square: generator not saturated"
        )
    return k


def compute_setup(m: WeierstrassModel, D: int, role: str = "kpp", prec: int = DEFAULT_PREC,
                  p: int | None = None) -> HeegnerSetup:
    """Full Heegner data for an explicitly given discriminant."""
    N = conductor(m)
    setup = HeegnerSetup(D=D, role=role, conductor=N, n_plus=N, n_minus=1,
                         forms=tuple(heegner_forms(N, D)))
    setup = heegner_point(m, setup, prec)
    return replace(setup, index=heegner_index(m, setup, prec))


@dataclass(frozen=True)
class GZReport:
    D: int
    p: int
    lhs_rational: Fraction
    lhs_valuation: int
    rhs_valuation: int
    index: int
    passed: bool

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "p": self.p,
            "lhs_rational": str(self.lhs_rational),
            "lhs_valuation": self.lhs_valuation,
            "rhs_valuation": self.rhs_valuation,
            "index": self.index,
            "passed": self.passed,
        }


def gz_lhs(m: WeierstrassModel, D: int, prec: int = DEFAULT_PREC) -> Fraction:
    """L'(E,1)/(Omega Reg) * L(E^D,1)/Omega_{E^D} as a recognised rational."""
    tw = twist_data(m, D, prec)
    with mp.workdps(prec + GUARD_DIGITS):
        val = (l_derivative(m, prec).value / (real_period(m, prec) * regulator(m, prec))) * (
            tw.l_value / tw.period)
    return recognize(val)


def gz_valuation_check(m: WeierstrassModel, setup: HeegnerSetup, p: int,
                       prec: int = DEFAULT_PREC, index_override: int | None = None) -> GZReport:
    """ord_p of both sides of the Gross-Zagier identity; the N^- Tamagawa product is empty."""
    if setup.index is None and index_override is None:
        raise ArgumentError("Heegner index must be computed first")
    lhs = gz_lhs(m, setup.D, prec)
    idx = index_override if index_override is not None else setup.index
    lv = valp(lhs, p)
    rv = 2 * valp(idx, p)
    return GZReport(setup.D, p, lhs, lv, rv, idx, lv == rv)


def gz_predicted_height(m: WeierstrassModel, D: int, prec: int = DEFAULT_PREC) -> mpf:
    """hhat(y_K) predicted by Gross-Zagier from L'(E,1) L(E^D,1).

    hhat(y_K) = u_K^2 sqrt|D| L'(E,1) L(E^D,1) / (4 * area(Lambda_E)), with
    u_K = 1 for D < -4 and the over-Q height normalisation used throughout.
    """
    u = {-3: 3, -4: 2}.get(D, 1)
    tw = twist_data(m, D, prec)
    with mp.workdps(prec + GUARD_DIGITS):
        area = lattice(m, prec).area
        return u * u * mpmath.sqrt(-D) * l_derivative(m, prec).value * tw.l_value / (4 * area)
