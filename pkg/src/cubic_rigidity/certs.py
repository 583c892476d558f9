"""Inequality certificates: named linear facts over exact values that can be
re-checked from their stored terms alone."""
from __future__ import annotations

import operator
from fractions import Fraction

from .errors import CertificateError
from .exact import rat_json, to_rat

_RELS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
}


def ineq(name: str, lhs: dict, rel: str, rhs: dict) -> dict:
    """Build a certificate ``sum(lhs) rel sum(rhs)`` with every term recorded."""
    lhs_v = sum((to_rat(v) for v in lhs.values()), Fraction(0))
    rhs_v = sum((to_rat(v) for v in rhs.values()), Fraction(0))
    return {
        "name": name,
        "lhs": {k: rat_json(to_rat(v)) for k, v in lhs.items()},
        "rel": rel,
        "rhs": {k: rat_json(to_rat(v)) for k, v in rhs.items()},
        "lhs_value": rat_json(lhs_v),
        "rhs_value": rat_json(rhs_v),
        "holds": bool(_RELS[rel](lhs_v, rhs_v)),
    }


def check(cert: dict) -> bool:
    """Re-evaluate a certificate from its stored terms."""
    try:
        lhs = sum((to_rat(v) for v in cert["lhs"].values()), Fraction(0))
        rhs = sum((to_rat(v) for v in cert["rhs"].values()), Fraction(0))
        return bool(_RELS[cert["rel"]](lhs, rhs))
    except (KeyError, TypeError) as exc:
        raise CertificateError(f"malformed certificate: {exc}") from None


def require(cert: dict, error_cls, message=None):
    if not cert["holds"]:
        msg = message or (f"hypothesis '{cert['name']}' fails: "
                          f"{cert['lhs_value']} {cert['rel']} {cert['rhs_value']} is false")
        raise error_cls(msg, failed=cert["name"])
    return cert
