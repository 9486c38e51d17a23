"""Period lattice of a Weierstrass model: periods, the Weierstrass p-function, elliptic log.

The lattice is that of the Neron differential dx/(2y + a1 x + a3).  In the
coordinates X = x + b2/12, Y = 2y + a1 x + a3 the curve reads
Y^2 = 4X^3 - g2 X - g3 with g2 = c4/12 and g3 = c6/216, and (X, Y) = (p(z), p'(z)).
"""

from __future__ import annotations

import cmath
import math

import mpmath
from mpmath import mp, mpc, mpf

from .curve import WeierstrassModel
from .errors import InconsistencyError
from .foundation import DEFAULT_PREC, GUARD_DIGITS, agm


def _cubic_roots(m: WeierstrassModel):
    roots = mpmath.polyroots([4, m.b2, 2 * m.b4, m.b6], maxsteps=200, extraprec=2 * mp.dps)
    return [mpc(r) for r in roots]


class PeriodLattice:
    """Lattice Z*w1 + Z*w2 with w1 the least positive real period.

    For a positive discriminant w2 is purely imaginary; for a negative one
    Re(w2) = w1/2.  All values are computed at ``prec`` digits plus guard digits.
    """

    def __init__(self, m: WeierstrassModel, prec: int = DEFAULT_PREC):
        self.model = m
        self.prec = prec
        self.dps = prec + GUARD_DIGITS
        with mp.workdps(self.dps):
            self._compute_periods()
            self._reduce_basis()

    def _compute_periods(self):
        m = self.model
        roots = _cubic_roots(m)
        if m.discriminant > 0:
            e1, e2, e3 = sorted((r.real for r in roots), reverse=True)
            self.components = 2
            self.w1 = mp.pi / agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2), self.dps)
            self.w2 = mpc(0, 1) * mp.pi / agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e2 - e3), self.dps)
        else:
            e1 = min(roots, key=lambda r: abs(r.imag)).real
            a = 3 * e1 + mpf(m.b2) / 4
            b = mpmath.sqrt(3 * e1 * e1 + mpf(m.b2) * e1 / 2 + mpf(m.b4) / 2)
            self.components = 1
            self.w1 = 2 * mp.pi / agm(2 * mpmath.sqrt(b), mpmath.sqrt(2 * b + a), self.dps)
            imag = mp.pi / agm(2 * mpmath.sqrt(b), mpmath.sqrt(2 * b - a), self.dps)
            self.w2 = mpc(self.w1 / 2, imag)
        self.e_roots = roots

    def _reduce_basis(self):
        v1, v2 = mpc(self.w1), mpc(self.w2)
        if (v2 / v1).imag < 0:
            v2 = -v2
        for _ in range(1000):
            tau = v2 / v1
            k = mpmath.nint(tau.real)
            v2 = v2 - k * v1
            tau = v2 / v1
            if abs(tau) < 1 - mpf(10) ** (-self.dps // 2):
                v1, v2 = v2, -v1
            else:
                break
        self.v1, self.v2 = v1, v2
        self.tau = v2 / v1
        self.q = mpmath.exp(2j * mp.pi * self.tau)

    @property
    def real_period(self):
        """Omega_E: integral of |omega| over E(R)."""
        with mp.workdps(self.dps):
            return self.components * self.w1

    @property
    def area(self):
        with mp.workdps(self.dps):
            return abs((mpmath.conj(self.w1) * self.w2).imag)

    def reduce(self, z):
        """Representative of z modulo the lattice in the reduced parallelogram."""
        with mp.workdps(self.dps):
            z = mpc(z)
            t = z / self.v1
            b = mpmath.nint(t.imag / self.tau.imag)
            z = z - b * self.v2
            a = mpmath.nint((z / self.v1).real)
            return z - a * self.v1

    def _terms(self, dps=None):
        lq = -mpmath.log(abs(self.q))
        return int((dps or self.dps) * 2.303 / lq) + 5

    def wp(self, z, dps: int | None = None):
        """(p(z), p'(z)) by the q-expansion in the reduced basis.

        ``dps`` lowers the working precision for cheap coarse evaluations;
        at 15 digits or fewer the sum runs in machine floats.
        """
        if dps is not None and dps <= 15:
            return self._wp_double(z)
        with mp.workdps(dps or self.dps):
            z = self.reduce(z)
            if abs(z) < mpf(10) ** (-self.dps):
                raise InconsistencyError("p-function evaluated at a lattice point")
            c = 2j * mp.pi / self.v1
            u = mpmath.exp(c * z)
            ui = 1 / u
            q = self.q
            s2 = u / (1 - u) ** 2
            s3 = u * (1 + u) / (1 - u) ** 3
            qn = mpc(1)
            const = mpc(0)
            for _ in range(self._terms(dps)):
                qn *= q
                a, b = qn * u, qn * ui
                s2 += a / (1 - a) ** 2 + b / (1 - b) ** 2
                s3 += a * (1 + a) / (1 - a) ** 3 - b * (1 + b) / (1 - b) ** 3
                const += qn / (1 - qn) ** 2
            wp = c**2 * (mpf(1) / 12 + s2 - 2 * const)
            dwp = c**3 * s3
            return wp, dwp

    def _wp_double(self, z):
        z = complex(self.reduce(z))
        v1, q = complex(self.v1), complex(self.q)
        if abs(z) < 1e-13 * abs(v1):
            raise InconsistencyError("p-function evaluated at a lattice point")
        c = 2j * math.pi / v1
        u = cmath.exp(c * z)
        ui = 1 / u
        s2 = u / (1 - u) ** 2
        s3 = u * (1 + u) / (1 - u) ** 3
        qn, const = 1 + 0j, 0j
        for _ in range(self._terms(15)):
            qn *= q
            a, b = qn * u, qn * ui
            s2 += a / (1 - a) ** 2 + b / (1 - b) ** 2
            s3 += a * (1 + a) / (1 - a) ** 3 - b * (1 + b) / (1 - b) ** 3
            const += qn / (1 - qn) ** 2
        return mpc(c**2 * (1 / 12 + s2 - 2 * const)), mpc(c**3 * s3)

    def invariants(self):
        """(g2, g3) of the lattice from Eisenstein q-series; used as a self-check."""
        with mp.workdps(self.dps):
            q = self.q
            e4 = mpc(1)
            e6 = mpc(1)
            qn = mpc(1)
            for n in range(1, self._terms() + 1):
                qn *= q
                e4 += 240 * mpmath.mpf(sum(d**3 for d in range(1, n + 1) if n % d == 0)) * qn
                e6 -= 504 * mpmath.mpf(sum(d**5 for d in range(1, n + 1) if n % d == 0)) * qn
            c = 2 * mp.pi / self.v1
            return c**4 * e4 / 12, c**6 * e6 / 216

    def point(self, z, dps: int | None = None):
        """Complex (x, y) on the model for parameter z."""
        m = self.model
        with mp.workdps(dps or self.dps):
            X, Y = self.wp(z, dps)
            x = X - mpf(m.b2) / 12
            y = (Y - m.a1 * x - m.a3) / 2
            return x, y

    def elliptic_log(self, x, y):
        """z in the reduced parallelogram with point(z) = (x, y)."""
        m = self.model
        with mp.workdps(self.dps):
            x = mpc(x)
            y = mpc(y)
            X = x + mpf(m.b2) / 12
            Y = 2 * y + m.a1 * x + m.a3
            tol = mpf(10) ** (-(self.dps - 4))
            scale = max(abs(X), 1)
            if abs(Y) < mpf(10) ** (-self.dps // 3) * max(1, abs(X)) ** 1.5:
                for h in (self.v1 / 2, self.v2 / 2, (self.v1 + self.v2) / 2):
                    if abs(self.wp(h)[0] - X) < mpf(10) ** (-self.dps // 3) * scale:
                        return self.reduce(h)
            # coarse start: grid search plus the small-z asymptotic 1/sqrt(X)
            cands = []
            if abs(X) > 0:
                cands.append(1 / mpmath.sqrt(X))
            with mp.workdps(15):
                n = 12
                for i in range(n):
                    for j in range(n):
                        if i == 0 and j == 0:
                            continue
                        cands.append((i * self.v1 + j * self.v2) / n)
                best = min(
                    cands,
                    key=lambda z: abs(self.wp(z, 15)[0] - X) / scale if abs(self.reduce(z)) > 1e-12 else mpf("inf"),
                )
            z = mpc(best)
            for _ in range(400):
                w, dw = self.wp(z)
                if dw == 0:
                    break
                step = (w - X) / dw
                z = z - step
                if abs(step) < tol * max(1, abs(z)):
                    break
            w, dw = self.wp(z)
            if abs(w - X) > mpf(10) ** (-self.dps // 2) * scale:
                raise InconsistencyError("elliptic logarithm failed to converge")
            if abs(dw - Y) > abs(dw + Y):
                z = -z
            return self.reduce(z)


def real_period_lattice(m: WeierstrassModel, prec: int = DEFAULT_PREC) -> PeriodLattice:
    return PeriodLattice(m, prec)
