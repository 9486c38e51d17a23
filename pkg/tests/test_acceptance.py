"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal so they show up even when output is captured.
"""

import subprocess
import sys
import time
from pathlib import Path

import mpmath
import pytest
from mpmath import mp, mpf

from bsdverify.certify import verify_bsd_p_part
from bsdverify.curve import point
from bsdverify.foundation import valp
from bsdverify.heegner import compute_setup, gz_valuation_check
from bsdverify.heights import canonical_height, doubling_height, generator_rank1
from bsdverify.local import ap, conductor, tate
from bsdverify.lseries import analytic_sha_Q, l_derivative, real_period, twist_data
from bsdverify.padic import delta_v, formal_log

from conftest import BY_LABEL, CORPUS_PATH, RANK_ONE

E37 = BY_LABEL["37a1"]
P37 = point(0, 0)


@pytest.fixture
def report(capsys):
    """Yield a recorder; on exit print ``criterion N: PASS|FAIL (t s) detail``."""
    state = {}

    def record(number, detail=""):
        state["number"], state["detail"] = number, detail
        state["start"] = time.perf_counter()

    yield record, state
    elapsed = time.perf_counter() - state["start"]
    ok = state.get("ok", False)
    with capsys.disabled():
        print(f"\ncriterion {state['number']}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {state['detail']}")


def _brute_ap(m, ell):
    """ell + 1 - #E(F_ell) by looping over every (x, y) pair."""
    a1, a2, a3, a4, a6 = (a % ell for a in m.ainvs)
    affine = sum(
        1
        for x in range(ell)
        for y in range(ell)
        if (y * y + a1 * x * y + a3 * y - (x ** 3 + a2 * x * x + a4 * x + a6)) % ell == 0
    )
    return ell + 1 - (affine + 1)


def test_criterion_01_ap_oracle(report):
    record, state = report
    record(1, "a_l of 37a1 against brute enumeration")
    expected = {2: -2, 3: -3, 5: -2, 7: -1}
    for ell, a in expected.items():
        assert ap(E37, ell) == a
        assert _brute_ap(E37, ell) == a
    elapsed = time.perf_counter() - state["start"]
    assert elapsed < 1
    state["ok"] = True


def test_criterion_02_tate(report):
    """Checks the stated claims literally. 37a1 at 37 is nonsplit (a_37 = -1), so this fails."""
    record, state = report
    record(2, "Tate: 11a1@11 (I5,5,split), 37a1@37 (I1,1,split)")
    d11 = tate(BY_LABEL["11a1"], 11)
    d37 = tate(E37, 37)
    state["detail"] += f"; got 11a1 ({d11.kodaira},{d11.c_ell},{d11.reduction}) 37a1 ({d37.kodaira},{d37.c_ell},{d37.reduction})"
    kind = lambda d: d.reduction.split("-")[0]  # "split-multiplicative" -> "split"
    assert (d11.kodaira, d11.c_ell, kind(d11)) == ("I5", 5, "split")
    assert (d37.kodaira, d37.c_ell) == ("I1", 1)
    assert kind(d37) == "split"
    assert time.perf_counter() - state["start"] < 1
    state["ok"] = True


def test_criterion_03_bsd_37a1(report):
    record, state = report
    record(3, "37a1: L'(E,1) / (Omega * h(0,0)) = 1")
    prec = 64
    with mp.workdps(prec + 10):
        Lp = l_derivative(E37, prec).value
        omega = real_period(E37, prec)
        h = canonical_height(E37, P37, prec)
        ratio = Lp / (omega * h)
        state["detail"] += f"; |ratio - 1| = {mpmath.nstr(abs(ratio - 1), 3)}"
        assert abs(ratio - 1) < mpf(10) ** -6
        assert abs(h - doubling_height(E37, P37)) < mpf(10) ** -12
    assert time.perf_counter() - state["start"] < 10
    state["ok"] = True


def test_criterion_04_valuation_equality(report):
    record, state = report
    record(4, "verified with sha_p_valuation 0 on the five rank-one curves")
    runs = 0
    for label in ("37a1", "43a1", "53a1", "57a1", "61a1"):
        m = BY_LABEL[label]
        for p in (3, 5, 7):
            if conductor(m) % p == 0:
                continue
            cert = verify_bsd_p_part(m, p, label=label)
            if cert.failing_stage and cert.failing_stage.startswith("hypotheses."):
                continue
            runs += 1
            assert cert.verdict == "verified", (label, p, cert.failing_stage, cert.error)
            assert cert.sha_p_valuation == 0
    state["detail"] += f"; {runs} gated runs"
    assert runs > 0
    assert time.perf_counter() - state["start"] < 120
    state["ok"] = True


def test_criterion_05_kolyvagin(report):
    record, state = report
    record(5, "Kolyvagin bound; 37a1 D=-7 p=5 both sides 0")
    setup = compute_setup(E37, -7)
    sha_E = analytic_sha_Q(E37, 1, canonical_height(E37, P37))
    lhs = valp(sha_E, 5) + valp(twist_data(E37, -7).analytic_sha, 5)
    rhs = 2 * valp(setup.index, 5)
    assert (lhs, rhs) == (0, 0)
    runs = 0
    for label, p in (("37a1", 7), ("43a1", 7), ("37a1", 5)):
        cert = verify_bsd_p_part(BY_LABEL[label], p, depth="heegner", label=label)
        if cert.verdict != "verified":
            continue
        runs += 1
        kb = cert.kolyvagin_bound
        assert kb["lhs"] <= kb["rhs"]
    state["detail"] += f"; {runs} heegner-depth verified runs checked"
    assert runs > 0
    assert time.perf_counter() - state["start"] < 60
    state["ok"] = True


def test_criterion_06_gross_zagier(report):
    record, state = report
    record(6, "GZ valuations for 37a1 D=-7 at p = 3, 5, 7")
    setup = compute_setup(E37, -7)
    for p in (3, 5, 7):
        gz = gz_valuation_check(E37, setup, p)
        assert gz.passed and gz.lhs_valuation == gz.rhs_valuation
    assert time.perf_counter() - state["start"] < 60
    state["ok"] = True


def test_criterion_07_formal_log(report):
    record, state = report
    record(7, "log(nP) = n log P, delta_v >= 0, precision 20 -> 40 stable")
    for p in (3, 5, 7, 11):
        base = formal_log(E37, P37, p, 20)
        for n in range(1, 6):
            assert formal_log(E37, E37.scalar_mul(n, P37), p, 20).equals(base * n)
    checked = 0
    for label in RANK_ONE:
        m = BY_LABEL[label]
        P = generator_rank1(m)
        for p in (3, 5, 7, 11, 13):
            if conductor(m) % p == 0:
                continue
            lo, hi = formal_log(m, P, p, 20), formal_log(m, P, p, 40)
            assert lo.valuation == hi.valuation and hi.equals(lo)
            d20, d40 = delta_v(m, P, p, 0, 20), delta_v(m, P, p, 0, 40)
            assert d20 == d40 >= 0
            checked += 1
    state["detail"] += f"; {checked} (curve, p) pairs"
    assert time.perf_counter() - state["start"] < 30
    state["ok"] = True


def test_criterion_08_heights(report):
    record, state = report
    record(8, "height vs doubling oracle on 20 points; parallelogram law at 64 digits")
    pts = []
    for label in RANK_ONE:
        m = BY_LABEL[label]
        P = generator_rank1(m)
        for n in (1, 2):
            pts.append((m, m.scalar_mul(n, P)))
    pts = pts[:20]
    assert len(pts) == 20
    worst = mpf(0)
    with mp.workdps(40):
        for m, P in pts:
            worst = max(worst, abs(canonical_height(m, P, 30) - doubling_height(m, P)))
    state["detail"] += f"; worst oracle gap {mpmath.nstr(worst, 3)}"
    assert worst < mpf(10) ** -8
    E389 = BY_LABEL["389a1"]
    P, Q = point(-1, 1), point(0, 0)
    h = lambda R: canonical_height(E389, R, 64)
    with mp.workdps(74):
        for a, b in ((1, 1), (2, 1), (1, -3)):
            A, B = E389.scalar_mul(a, P), E389.scalar_mul(b, Q)
            gap = h(E389.add(A, B)) + h(E389.sub(A, B)) - 2 * h(A) - 2 * h(B)
            assert abs(gap) < mpf(10) ** -20
    assert time.perf_counter() - state["start"] < 30
    state["ok"] = True


def test_criterion_09_gate(report):
    record, state = report
    record(9, "hypothesis gate rejections")
    c = verify_bsd_p_part(BY_LABEL["11a1"], 5, label="11a1")
    assert (c.verdict, c.failing_stage) == ("inconclusive", "hypotheses.irreducible_mod_p")
    for p in (3, 5, 7):
        c = verify_bsd_p_part(BY_LABEL["389a1"], p, label="389a1")
        assert (c.verdict, c.failing_stage) == ("inconclusive", "hypotheses.analytic_rank_one")
    c = verify_bsd_p_part(E37, 37, label="37a1")
    assert (c.verdict, c.failing_stage) == ("inconclusive", "hypotheses.good_at_p")
    assert time.perf_counter() - state["start"] < 10
    state["ok"] = True


def test_criterion_10_determinism(report, tmp_path):
    record, state = report
    record(10, "batch --jobs 1 and --jobs 8 byte-identical")
    outs = []
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}.jsonl"
        proc = subprocess.run(
            [sys.executable, "-m", "bsdverify.cli", "batch", str(CORPUS_PATH), "--jobs", str(jobs), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode in (0, 1), proc.stderr
        outs.append(Path(out).read_bytes())
    assert outs[0] and outs[0] == outs[1]
    state["detail"] += f"; {len(outs[0].splitlines())} certificates"
    assert time.perf_counter() - state["start"] < 300
    state["ok"] = True
