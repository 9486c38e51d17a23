"""Hypothesis gate, the two-sided valuation argument and certificate emission.

A certificate is only ever ``verified`` when every stage ran and every check
passed; any exception is caught, classified and recorded with the stage that
raised it.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
import sympy
from mpmath import mp

from . import __version__
from .curve import WeierstrassModel, mod_p_irreducible
from .errors import (
    ArgumentError,
    BSDError,
    DegenerateError,
    InconsistencyError,
)
from .foundation import DEFAULT_PADIC_PREC, DEFAULT_PREC, GUARD_DIGITS, is_prime, valp
from .heegner import (
    DEFAULT_DMAX,
    _ramified_prime,
    choose_field,
    compute_setup,
    gz_valuation_check,
)
from .heights import generator_rank1, regulator
from .local import ap, conductor, is_semistable, tamagawa_product
from .lseries import analytic_rank_01, analytic_sha_Q, l_derivative, real_period, recognize, twist_data
from .padic import control_constant, delta_v, formal_log, selmer_prediction

DEPTHS = ("valuation", "heegner")
VERDICTS = ("verified", "failed", "inconclusive")
BATCH_PRIMES = (3, 5, 7, 11, 13)
REAL_DIGITS = 25

# exceptions that mean "the data contradicts itself" rather than "could not decide"
_FAILURES = (InconsistencyError, DegenerateError, ArgumentError)

PROVENANCE = {
    "valuation": [
        {"claim": "lhs_valuation", "licensed_by": "numerical BSD leading-term ratio, recognised as a rational"},
        {"claim": "sha_p_valuation", "licensed_by": "p-part of the BSD formula for semistable rank-one curves"},
    ],
    "heegner": [
        {"claim": "twist_rank_zero", "licensed_by": "rank-zero p-part of BSD for the twist, consumed as known; "
                                                   "L(E^D,1) != 0 checked numerically"},
        {"claim": "kolyvagin_bound", "licensed_by": "Kolyvagin's bound on Sha over K from the Heegner index"},
        {"claim": "gross_zagier", "licensed_by": "Gross-Zagier formula in over-Q quantities"},
        {"claim": "padic", "licensed_by": "formal-group logarithm and the anticyclotomic control constant"},
    ],
}


def versions() -> dict:
    return {"bsdverify": __version__, "mpmath": mpmath.__version__, "sympy": sympy.__version__}


def _real(x) -> str:
    with mp.workdps(REAL_DIGITS + GUARD_DIGITS):
        return mpmath.nstr(x, REAL_DIGITS)


# --- hypothesis gate ------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    semistable: bool
    good_at_p: bool
    p_admissible: bool
    irreducible_mod_p: bool | None
    analytic_rank_one: bool | None
    ramified_prime: int | None = None

    GATE_ORDER = ("semistable", "good_at_p", "p_admissible", "irreducible_mod_p", "analytic_rank_one")

    def first_failure(self) -> str | None:
        """Name of the first flag that is not affirmatively true."""
        for name in self.GATE_ORDER:
            if getattr(self, name) is not True:
                return name
        return None

    @property
    def passed(self) -> bool:
        return self.first_failure() is None

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in self.GATE_ORDER + ("ramified_prime",)}


def _p_admissible(m: WeierstrassModel, p: int, good: bool) -> bool:
    if p >= 5:
        return True
    if p != 3 or not good:
        return False
    a3 = ap(m, 3)
    return a3 % 3 != 0 or a3 == 0


def check_hypotheses(m: WeierstrassModel, p: int, prec: int = DEFAULT_PREC) -> HypothesisReport:
    """Every flag is computed; undecidable ones are None."""
    if not is_prime(p):
        raise ArgumentError(f"{p} is not prime")
    semistable = is_semistable(m)
    good = conductor(m) % p != 0
    admissible = _p_admissible(m, p, good)
    try:
        irreducible = mod_p_irreducible(m, p)
    except BSDError:
        irreducible = None
    rank = analytic_rank_01(m, prec)
    rank_one = None if rank is None else rank == 1
    q = None
    if semistable and good and irreducible:
        try:
            q = _ramified_prime(m, p)
        except InconsistencyError:
            q = None
    return HypothesisReport(semistable, good, admissible, irreducible, rank_one, q)


# --- certificates ----------------------------------------------------------------------


@dataclass
class Certificate:
    label: str | None
    ainvs: list[int]
    p: int
    depth: str
    conductor: int | None = None
    hypotheses: dict | None = None
    generator: list[str] | None = None
    l_derivative: str | None = None
    period: str | None = None
    regulator: str | None = None
    lhs_rational: str | None = None
    lhs_valuation: int | None = None
    tamagawa_valuation: int | None = None
    sha_p_valuation: int | None = None
    analytic_sha: str | None = None
    analytic_sha_valuation: int | None = None
    heegner: dict | None = None
    kolyvagin_bound: dict | None = None
    padic: dict | None = None
    verdict: str = "inconclusive"
    failing_stage: str | None = None
    error: dict | None = None
    provenance: list = field(default_factory=list)
    precision: dict = field(default_factory=dict)
    versions: dict = field(default_factory=versions)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return dumps(self.to_json())


def dumps(obj: dict) -> str:
    """Canonical one-line rendering: field order fixed by the dataclass, ASCII only."""
    return json.dumps(obj, ensure_ascii=True, separators=(", ", ": "))


def validate_certificate(obj: dict) -> list[str]:
    """Re-check a parsed certificate's internal arithmetic; returns the list of problems."""
    problems = []
    missing = [k for k in Certificate.__dataclass_fields__ if k not in obj]
    if missing:
        problems.append(f"missing fields {missing}")
        return problems
    if obj["verdict"] not in VERDICTS:
        problems.append(f"unknown verdict {obj['verdict']!r}")
    if obj["verdict"] == "verified":
        lhs, tam, sha = obj["lhs_valuation"], obj["tamagawa_valuation"], obj["sha_p_valuation"]
        if lhs - tam != sha:
            problems.append("lhs_valuation - tamagawa_valuation != sha_p_valuation")
        if sha < 0 or sha % 2:
            problems.append("sha_p_valuation is negative or odd")
        if sha != obj["analytic_sha_valuation"]:
            problems.append("two routes to ord_p Sha disagree")
        if valp(Fraction(obj["lhs_rational"]), obj["p"]) != lhs:
            problems.append("lhs_valuation does not match lhs_rational")
        kb = obj["kolyvagin_bound"]
        if obj["depth"] == "heegner" and not (kb and kb["lhs"] <= kb["rhs"]):
            problems.append("Kolyvagin bound missing or violated")
    return problems


class _Stop(Exception):
    def __init__(self, stage: str, verdict: str, message: str):
        super().__init__(message)
        self.stage, self.verdict = stage, verdict


def verify_bsd_p_part(m: WeierstrassModel, p: int, depth: str = "valuation", prec: int = DEFAULT_PREC,
                      padic_prec: int = DEFAULT_PADIC_PREC, label: str | None = None,
                      dmax: int = DEFAULT_DMAX) -> Certificate:
    """Run the gate, the valuation equality and (at heegner depth) the K'' side checks."""
    if depth not in DEPTHS:
        raise ArgumentError(f"depth must be one of {DEPTHS}")
    cert = Certificate(label=label, ainvs=list(m.ainvs), p=p, depth=depth,
                       precision={"prec": prec, "padic_prec": padic_prec, "dmax": dmax})
    try:
        cert.conductor = conductor(m)
        hyp = check_hypotheses(m, p, prec)
        cert.hypotheses = hyp.to_json()
        bad = hyp.first_failure()
        if bad is not None:
            raise _Stop(f"hypotheses.{bad}", "inconclusive",
                        f"{bad} is {getattr(hyp, bad)}")
        _valuation_stage(m, p, prec, cert)
        cert.provenance = list(PROVENANCE["valuation"])
        if depth == "heegner":
            cert.provenance += PROVENANCE["heegner"]
            _heegner_stage(m, p, prec, padic_prec, dmax, cert)
        cert.verdict = "verified"
    except _Stop as stop:
        cert.verdict, cert.failing_stage = stop.verdict, stop.stage
        cert.error = {"type": "check", "message": str(stop)}
    except BSDError as exc:
        cert.verdict = "failed" if isinstance(exc, _FAILURES) else "inconclusive"
        cert.failing_stage = getattr(exc, "stage", None) or "hypotheses"
        cert.error = {"type": type(exc).__name__, "message": str(exc)}
    return cert


def _staged(stage):
    """Tag any BSDError raised inside with the stage name."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, et, exc, tb):
            if isinstance(exc, BSDError) and not hasattr(exc, "stage"):
                exc.stage = stage
            return False

    return _Ctx()


def _valuation_stage(m, p, prec, cert):
    with _staged("generator"):
        gen = generator_rank1(m, prec)
        cert.generator = gen.to_json()
    with _staged("regulator"):
        reg = regulator(m, prec)
    with _staged("lhs_valuation"):
        lead = l_derivative(m, prec).value
        omega = real_period(m, prec)
        with mp.workdps(prec + GUARD_DIGITS):
            ratio = recognize(lead / (omega * reg))
        cert.l_derivative, cert.period, cert.regulator = _real(lead), _real(omega), _real(reg)
        cert.lhs_rational = str(ratio)
        cert.lhs_valuation = valp(ratio, p)
        cert.tamagawa_valuation = valp(tamagawa_product(m), p)
        cert.sha_p_valuation = cert.lhs_valuation - cert.tamagawa_valuation
    with _staged("analytic_sha"):
        sha = analytic_sha_Q(m, 1, reg, prec)
        cert.analytic_sha = str(sha)
        cert.analytic_sha_valuation = valp(sha, p)
    s = cert.sha_p_valuation
    if s < 0:
        raise _Stop("valuation_checks", "failed", f"sha_p_valuation {s} is negative")
    if s % 2:
        raise _Stop("valuation_checks", "failed", f"sha_p_valuation {s} is odd")
    if s != cert.analytic_sha_valuation:
        raise _Stop("valuation_checks", "failed",
                    f"two routes disagree: {s} vs ord_p(Sha_an) = {cert.analytic_sha_valuation}")


def _heegner_stage(m, p, prec, padic_prec, dmax, cert):
    with _staged("field_selection"):
        chosen = choose_field(m, p, "kpp", dmax, prec)
        D = chosen.D
    with _staged("heegner_point"):
        setup = compute_setup(m, D, "kpp", prec, p)
    idx_p = valp(setup.index, p)
    block = {
        "D": D,
        "class_number": setup.class_number,
        "forms": [list(f) for f in setup.forms],
        "point": setup.heegner_point.to_json(),
        "folded": bool(setup.diagnostics.get("folded")),
        "m_K": setup.index,
    }
    cert.heegner = {"kpp": block, "kp": _lower_field_block(m, p, dmax, prec)}
    with _staged("kolyvagin"):
        tw = twist_data(m, D, prec)
        sha_E = Fraction(cert.analytic_sha)
        lhs = valp(sha_E, p) + valp(tw.analytic_sha, p)
        rhs = 2 * idx_p
        cert.kolyvagin_bound = {
            "D": D,
            "twist_analytic_sha": str(tw.analytic_sha),
            "lhs": lhs,
            "rhs": rhs,
            "passed": lhs <= rhs,
        }
    with _staged("gross_zagier"):
        gz = gz_valuation_check(m, setup, p, prec)
        block["gz_check"] = gz.to_json()
    with _staged("padic"):
        gen = generator_rank1(m, prec)
        P = setup.heegner_point
        sel = selmer_prediction(m, D, p, P, idx_p, sha_E * tw.analytic_sha, padic_prec)
        cert.padic = {
            "D": D,
            "generator_log_valuation": int(formal_log(m, gen, p, padic_prec).valuation),
            "heegner_log_valuation": sel.log_valuation,
            "delta_v": delta_v(m, P, p, idx_p, padic_prec),
            "control_constant": control_constant(m, p, D),
            "selmer_prediction": sel.to_json(),
        }
    if not cert.kolyvagin_bound["passed"]:
        raise _Stop("kolyvagin", "failed", f"Kolyvagin bound violated: {lhs} > {rhs}")
    if not gz.passed:
        raise _Stop("gross_zagier", "failed",
                    f"Gross-Zagier valuations differ: {gz.lhs_valuation} vs {gz.rhs_valuation}")


def _lower_field_block(m, p, dmax, prec) -> dict:
    """K' is selected and logged; its Heegner point lives on a Shimura curve and is not computed."""
    try:
        kp = choose_field(m, p, "kp", dmax, prec)
        return {"D": kp.D, "status": "not_computed"}
    except BSDError as exc:
        return {"D": None, "status": f"unavailable: {exc}"}


# --- batch ------------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRecord:
    label: str
    ainvs: tuple[int, ...]
    conductor: int | None = None
    rank: int | None = None
    sha: int | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "CurveRecord":
        if not isinstance(obj, dict) or "ainvs" not in obj:
            raise ArgumentError("record needs an 'ainvs' field")
        ainvs = obj["ainvs"]
        if not (isinstance(ainvs, list) and len(ainvs) == 5 and all(isinstance(a, int) for a in ainvs)):
            raise ArgumentError("ainvs must be a list of five integers")
        label = obj.get("label") or ",".join(map(str, ainvs))
        return cls(str(label), tuple(ainvs), obj.get("conductor"), obj.get("rank"), obj.get("sha"))

    def model(self) -> WeierstrassModel:
        return WeierstrassModel.from_ainvs(list(self.ainvs))


def batch_primes(m: WeierstrassModel, candidates=BATCH_PRIMES) -> list[int]:
    """Good primes in the range whose prime-dependent gate flags do not fail outright."""
    N = conductor(m)
    out = []
    for p in candidates:
        if N % p == 0 or not _p_admissible(m, p, True):
            continue
        try:
            if mod_p_irreducible(m, p) is False:
                continue
        except BSDError:
            pass
        out.append(p)
    return out


def _verify_record(args) -> list[dict]:
    record, depth, prec, padic_prec, dmax = args
    try:
        m = record.model()
        primes = batch_primes(m)
        return [
            verify_bsd_p_part(m, p, depth, prec, padic_prec, record.label, dmax).to_json()
            for p in primes
        ]
    except Exception as exc:  # isolate the curve; the batch goes on
        cert = Certificate(label=record.label, ainvs=list(record.ainvs), p=0, depth=depth,
                           conductor=record.conductor, verdict="failed", failing_stage="input",
                           error={"type": type(exc).__name__, "message": str(exc)},
                           precision={"prec": prec, "padic_prec": padic_prec, "dmax": dmax})
        return [cert.to_json()]


def _sort_key(cert: dict):
    return (cert["conductor"] or 0, cert["label"] or "", cert["p"])


def batch_verify(records, depth: str = "valuation", prec: int = DEFAULT_PREC,
                 padic_prec: int = DEFAULT_PADIC_PREC, jobs: int = 1,
                 dmax: int = DEFAULT_DMAX) -> tuple[list[dict], dict]:
    """Certificates ordered by (conductor, label, p) and a verdict summary."""
    tasks = [(r, depth, prec, padic_prec, dmax) for r in records]
    if jobs > 1 and len(tasks) > 1:
        with multiprocessing.get_context("fork").Pool(min(jobs, len(tasks))) as pool:
            chunks = pool.map(_verify_record, tasks, chunksize=1)
    else:
        chunks = [_verify_record(t) for t in tasks]
    certs = sorted((c for chunk in chunks for c in chunk), key=_sort_key)
    summary = {"curves": len(records), "certificates": len(certs)}
    for v in VERDICTS:
        summary[v] = sum(c["verdict"] == v for c in certs)
    return certs, summary
