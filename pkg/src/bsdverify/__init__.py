"""Numerical verification of the p-part of the BSD formula for semistable rank-one curves."""

__version__ = "0.1.0"

from .curve import CurvePoint, WeierstrassModel, point  # noqa: E402
from .certify import Certificate, batch_verify, check_hypotheses, verify_bsd_p_part  # noqa: E402

__all__ = [
    "Certificate",
    "CurvePoint",
    "WeierstrassModel",
    "batch_verify",
    "check_hypotheses",
    "point",
    "verify_bsd_p_part",
]
