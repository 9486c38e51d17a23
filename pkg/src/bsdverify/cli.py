"""Command-line front end: ``bsdverify curve info | lfun | heegner | verify | batch``."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import mpmath

from .certify import (
    DEPTHS,
    CurveRecord,
    batch_verify,
    dumps,
    verify_bsd_p_part,
)
from .curve import WeierstrassModel, minimal_model, torsion_subgroup
from .errors import ArgumentError, BSDError, LookupMiss, ParityError, SearchExhausted
from .foundation import DEFAULT_PADIC_PREC, DEFAULT_PREC
from .heegner import DEFAULT_DMAX, ROLES, choose_field, compute_setup, gz_valuation_check
from .heights import regulator
from .local import conductor, is_semistable, local_data
from .lseries import analytic_rank_01, analytic_sha_Q, l_derivative, l_value, real_period, root_number

EXIT_VERIFIED = 0
EXIT_NOT_VERIFIED = 1


def load_corpus(path=None) -> list[CurveRecord]:
    """Parse a JSON-lines curve file; errors carry the 1-based line number."""
    if path is None:
        text = resources.files("bsdverify").joinpath("data/corpus.jsonl").read_text()
        name = "corpus.jsonl"
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ArgumentError(f"cannot read {path}: {exc.strerror}") from exc
        name = str(path)
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rec = CurveRecord.from_json(obj)
            if rec.model().discriminant == 0:
                raise ArgumentError("singular curve")
        except (json.JSONDecodeError, ArgumentError) as exc:
            raise ArgumentError(f"{name}:{lineno}: {exc}") from exc
        records.append(rec)
    return records


def resolve_curve(text: str) -> tuple[str, WeierstrassModel]:
    """A label from the bundled corpus, or comma-separated a-invariants."""
    if "," in text:
        m = WeierstrassModel.parse(text)
        label = ",".join(map(str, m.ainvs))
    else:
        hits = [r for r in load_corpus() if r.label == text.strip()]
        if not hits:
            raise LookupMiss(f"no curve labelled {text!r} in the bundled corpus")
        label, m = hits[0].label, hits[0].model()
    if m.discriminant == 0:
        raise ArgumentError(f"{list(m.ainvs)} defines a singular curve (discriminant 0)")
    return label, m


def _out(line=""):
    print(line)


def _fmt(x, digits=20):
    with mpmath.mp.workdps(digits + 5):
        return mpmath.nstr(x, digits)


# --- commands -------------------------------------------------------------------------


def cmd_curve_info(args) -> int:
    label, m = resolve_curve(args.curve)
    mm, _ = minimal_model(m)
    tors = torsion_subgroup(mm)
    _out(f"curve: {label}")
    _out(f"minimal_model: {list(mm.ainvs)}")
    _out(f"discriminant: {mm.discriminant}")
    _out(f"conductor: {conductor(mm)}")
    for ld in local_data(mm):
        _out(f"local {ld.prime}: {ld.kodaira} c={ld.c_ell} {ld.reduction} f={ld.conductor_exponent}")
    _out(f"torsion: order {tors.order} structure {list(tors.invariants)}")
    _out(f"semistable: {str(is_semistable(mm)).lower()}")
    _out(f"root_number: {root_number(mm, args.prec)}")
    return 0


def cmd_lfun(args) -> int:
    label, m = resolve_curve(args.curve)
    prec = args.prec
    rank = analytic_rank_01(m, prec)
    _out(f"curve: {label}")
    _out(f"period: {_fmt(real_period(m, prec))}")
    if rank is None:
        _out("analytic_rank: indeterminate")
        raise ParityError("leading L-value is numerically zero; analytic rank is at least 2")
    _out(f"analytic_rank: {rank}")
    if rank == 0:
        v = l_value(m, prec)
        _out(f"l_value: {_fmt(v.value)}")
        _out(f"error_bound: {_fmt(v.error_bound, 3)}")
        _out(f"sha_an: {analytic_sha_Q(m, 0, 1, prec)}")
    else:
        v = l_derivative(m, prec)
        _out(f"l_derivative: {_fmt(v.value)}")
        _out(f"error_bound: {_fmt(v.error_bound, 3)}")
        reg = regulator(m, prec)
        _out(f"regulator: {_fmt(reg)}")
        _out(f"sha_an: {analytic_sha_Q(m, 1, reg, prec)}")
    return 0


def cmd_heegner(args) -> int:
    label, m = resolve_curve(args.curve)
    if analytic_rank_01(m, args.prec) != 1:
        raise ParityError("Heegner points need analytic rank one")
    setup = choose_field(m, args.p, args.role, args.dmax, args.prec)
    _out(f"curve: {label}")
    _out(f"p: {args.p}")
    _out(f"role: {args.role}")
    _out(f"D: {setup.D}")
    if args.role == "kp":
        _out("heegner_point: not computed (lives on a Shimura curve)")
        return 0
    setup = compute_setup(m, setup.D, args.role, args.prec, args.p)
    gz = gz_valuation_check(m, setup, args.p, args.prec)
    _out(f"class_number: {setup.class_number}")
    for f in setup.forms:
        _out(f"form: {list(f)}")
    _out(f"point: {setup.heegner_point}")
    _out(f"folded: {str(bool(setup.diagnostics.get('folded'))).lower()}")
    _out(f"index: {setup.index}")
    _out(f"gz_check: lhs {gz.lhs_rational} ord_p {gz.lhs_valuation}, "
         f"rhs ord_p {gz.rhs_valuation}, {'pass' if gz.passed else 'FAIL'}")
    return 0


def _certificate_exit(cert: dict) -> int:
    if cert["verdict"] == "verified":
        return EXIT_VERIFIED
    if cert["failing_stage"] == "hypotheses.analytic_rank_one":
        return ParityError.exit_code
    if (cert["error"] or {}).get("type") == SearchExhausted.__name__:
        return SearchExhausted.exit_code
    return EXIT_NOT_VERIFIED


def cmd_verify(args) -> int:
    label, m = resolve_curve(args.curve)
    cert = verify_bsd_p_part(m, args.p, args.depth, args.prec, args.padic_prec, label, args.dmax).to_json()
    line = dumps(cert)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
    _out(line)
    return _certificate_exit(cert)


def cmd_batch(args) -> int:
    if args.jobs < 1:
        raise ArgumentError("--jobs must be at least 1")
    records = load_corpus(args.file)
    certs, summary = batch_verify(records, args.depth, args.prec, args.padic_prec, args.jobs, args.dmax)
    text = "".join(dumps(c) + "\n" for c in certs)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(json.dumps(summary), file=sys.stderr)
    return EXIT_VERIFIED if summary["verified"] == summary["certificates"] else EXIT_NOT_VERIFIED


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, default=DEFAULT_PREC, help="decimal digits (default %(default)s)")
    common.add_argument("--padic-prec", type=int, default=DEFAULT_PADIC_PREC,
                        help="p-adic digits (default %(default)s)")

    parser = argparse.ArgumentParser(prog="bsdverify", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="curve data")
    curve_sub = curve.add_subparsers(dest="curve_command", required=True)
    info = curve_sub.add_parser("info", parents=[common], help="minimal model, conductor, local data")
    info.add_argument("curve", help="label from the bundled corpus or a1,a2,a3,a4,a6")
    info.set_defaults(func=cmd_curve_info)

    lfun = sub.add_parser("lfun", parents=[common], help="period, analytic rank, L-value, analytic Sha")
    lfun.add_argument("curve")
    lfun.set_defaults(func=cmd_lfun)

    heeg = sub.add_parser("heegner", parents=[common], help="auxiliary field and Heegner point")
    heeg.add_argument("curve")
    heeg.add_argument("-p", type=int, required=True)
    heeg.add_argument("--role", choices=ROLES, default="kpp")
    heeg.add_argument("--dmax", type=int, default=DEFAULT_DMAX)
    heeg.set_defaults(func=cmd_heegner)

    ver = sub.add_parser("verify", parents=[common], help="certificate for one curve and prime")
    ver.add_argument("curve")
    ver.add_argument("-p", type=int, required=True)
    ver.add_argument("--depth", choices=DEPTHS, default="valuation")
    ver.add_argument("--dmax", type=int, default=DEFAULT_DMAX)
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)

    bat = sub.add_parser("batch", parents=[common], help="certificates for every curve in a JSON-lines file")
    bat.add_argument("file")
    bat.add_argument("--jobs", type=int, default=1)
    bat.add_argument("--depth", choices=DEPTHS, default="valuation")
    bat.add_argument("--dmax", type=int, default=DEFAULT_DMAX)
    bat.add_argument("--out")
    bat.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else ArgumentError.exit_code
    try:
        return args.func(args)
    except BSDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
