"""Fibre-local arithmetic around the centre x of a supermaximal singularity:
existence of a line through x and choice of a good line L with
(C.L) < 4ne/nu(F).

Everything is phrased through the threshold T = ne/nu(F), so the lower bound
on mult_x Z^v is 4T and the supermaximal degree bound is 6T.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .certs import check, ineq, require
from .errors import CertificateError, InputError, PreconditionError
from .exact import to_rat

CASES = ("no_line", "one_line", "two_lines", "three_lines", "six_lines")


@dataclass(frozen=True)
class FiberThreshold:
    T: Fraction

    def __post_init__(self):
        T = to_rat(self.T)
        if T <= 0:
            raise InputError(f"threshold ne/nu(F) must be positive, got {T}")
        object.__setattr__(self, "T", T)

    @classmethod
    def from_triple(cls, n, e, nuF):
        n, e, nuF = to_rat(n), to_rat(e), to_rat(nuF)
        if nuF <= 0:
            raise InputError(f"nu(F) must be positive, got {nuF}")
        return cls(n * e / nuF)


def _T(T) -> Fraction:
    return T.T if isinstance(T, FiberThreshold) else FiberThreshold(T).T


@dataclass(frozen=True)
class VerticalCycleData:
    case: str
    k: tuple = ()
    d: Fraction = Fraction(0)
    d_i: tuple = ()
    m: Fraction = Fraction(0)
    singular_corner: bool = False
    # six lines
    p: tuple = ()
    q: tuple = ()
    degR: Fraction = Fraction(0)
    M: int = 0
    N: int = 0
    L1_choice_asserted: bool = True

    def __post_init__(self):
        if self.case not in CASES:
            raise InputError(f"case must be one of {CASES}, got {self.case!r}")
        for name in ("k", "d_i", "p", "q"):
            vals = tuple(to_rat(x) for x in getattr(self, name))
            if any(x < 0 for x in vals):
                raise InputError(f"{name} entries must be non-negative")
            object.__setattr__(self, name, vals)
        for name in ("d", "m", "degR"):
            v = to_rat(getattr(self, name))
            if v < 0:
                raise InputError(f"{name} must be non-negative")
            object.__setattr__(self, name, v)
        expected = {"one_line": 1, "two_lines": 3, "three_lines": 3, "six_lines": 1}
        if self.case in expected and len(self.k) != expected[self.case]:
            raise InputError(f"{self.case} needs {expected[self.case]} line multiplicities, got {len(self.k)}")
        if self.case in ("two_lines", "three_lines") and len(self.d_i) != 3:
            raise InputError(f"{self.case} needs three intersection numbers d_i")
        for name in ("M", "N"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise InputError(f"{name} must be a non-negative integer")


@dataclass(frozen=True)
class LineSelection:
    chosen_index: int
    certificate: dict
    hypotheses: list = field(default_factory=list)

    def verify(self) -> bool:
        return all(check(c) for c in [self.certificate, *self.hypotheses])


def no_line_contradiction(d, T) -> dict:
    """With no line through x, mult_x Q <= (2/3) deg Q for every cycle, so
    mult_x Z^v <= (2/3) d < 4T contradicts mult_x Z^v >= 4T."""
    d, T = to_rat(d), _T(T)
    if d < 0:
        raise InputError("degree must be non-negative")
    hyp = require(ineq("deg Z^v < 6T", {"d": d}, "<", {"6T": 6 * T}), PreconditionError)
    concl = ineq("mult_x Z^v <= (2/3) deg Z^v < 4T", {"(2/3)d": Fraction(2, 3) * d}, "<", {"4T": 4 * T})
    if not concl["holds"]:  # pragma: no cover - implied by hyp
        raise CertificateError("no-line bound failed to follow from its hypothesis")
    return {"kind": "no_line_contradiction", "hypotheses": [hyp], "conclusion": concl,
            "meaning": "the multiplicity lower bound fails, so a line through x exists"}


def one_line_bound(k, degC, T, multC=None) -> LineSelection:
    k, degC, T = to_rat(k), to_rat(degC), _T(T)
    if k < 0 or degC < 0:
        raise InputError("k and deg C must be non-negative")
    hyps = [
        require(ineq("k + deg C/2 >= 4T", {"k": k, "degC/2": degC / 2}, ">=", {"4T": 4 * T}),
                PreconditionError),
        require(ineq("k + deg C < 6T", {"k": k, "degC": degC}, "<", {"6T": 6 * T}),
                PreconditionError),
    ]
    if multC is not None:
        hyps.append(require(ineq("mult_x C <= deg C/2", {"multC": to_rat(multC)}, "<=",
                                 {"degC/2": degC / 2}), PreconditionError))
    concl = ineq("(C.L) <= deg C < 4T", {"degC": degC}, "<", {"4T": 4 * T})
    if not concl["holds"]:
        raise CertificateError("one-line conclusion failed under its hypotheses", offending=concl)
    return LineSelection(1, concl, hyps)


def _two_three_hypotheses(data: VerticalCycleData, T: Fraction, lines: int):
    k1, k2, k3 = data.k
    d1, d2, d3 = data.d_i
    d, m = data.d, data.m
    hyps = [
        require(ineq(f"{lines}m <= d", {f"{lines}m": lines * m}, "<=", {"d": d}), PreconditionError),
        require(ineq("k1 + k2 + k3 + d < 6T", {"k1": k1, "k2": k2, "k3": k3, "d": d}, "<",
                     {"6T": 6 * T}), PreconditionError),
    ]
    if lines == 2 and data.singular_corner:
        hyps.append(require(ineq("d1 + d2 <= d", {"d1": d1, "d2": d2}, "<=", {"d": d}),
                            PreconditionError))
    else:
        hyps.append(require(ineq("d1 + d2 + d3 = d", {"d1": d1, "d2": d2, "d3": d3}, "==", {"d": d}),
                            PreconditionError))
    if lines == 2:
        hyps.append(require(ineq("k1 + k2 + m >= 4T", {"k1": k1, "k2": k2, "m": m}, ">=",
                                 {"4T": 4 * T}), PreconditionError))
    else:
        hyps.append(require(ineq("k1 + k2 + k3 + m >= 4T", {"k1": k1, "k2": k2, "k3": k3, "m": m},
                                 ">=", {"4T": 4 * T}), PreconditionError))
    return hyps


def two_lines_select(data: VerticalCycleData, T) -> LineSelection:
    """Pick i in {1, 2} with k_j + k_3 + d_i < 4T (smallest such i)."""
    T = _T(T)
    hyps = _two_three_hypotheses(data, T, 2)
    k, di = data.k, data.d_i
    for i in (1, 2):
        j = 3 - i
        cert = ineq(f"k{j} + k3 + d{i} < 4T",
                    {f"k{j}": k[j - 1], "k3": k[2], f"d{i}": di[i - 1]}, "<", {"4T": 4 * T})
        if cert["holds"]:
            return LineSelection(i, cert, hyps)
    raise CertificateError("no good line among two: the hypotheses are inconsistent")


def three_lines_select(data: VerticalCycleData, T) -> LineSelection:
    """Pick i in {1, 2, 3} with k_j + k_l + d_i < 4T (smallest such i)."""
    T = _T(T)
    hyps = _two_three_hypotheses(data, T, 3)
    k, di = data.k, data.d_i
    for i in (1, 2, 3):
        j, l = [x for x in (1, 2, 3) if x != i]
        cert = ineq(f"k{j} + k{l} + d{i} < 4T",
                    {f"k{j}": k[j - 1], f"k{l}": k[l - 1], f"d{i}": di[i - 1]}, "<", {"4T": 4 * T})
        if cert["holds"]:
            return LineSelection(i, cert, hyps)
    raise CertificateError("no good line among three: the hypotheses are inconsistent")


def six_lines_bound(data: VerticalCycleData, n, e, nuF=None) -> dict:
    """Six lines through a double point: certify k > 2ne/nu(F).

    nu(F) is 2 p_1 + sum_{i>=2} p_i (the double point counts twice in the
    first blow up); a supplied ``nuF`` must agree with it.
    """
    n, e = to_rat(n), to_rat(e)
    if n <= 0 or e <= 0:
        raise InputError("n and e must be positive")
    p, q, M, N = data.p, data.q, data.M, data.N
    k, degR, degQ = data.k[0], data.degR, data.d
    if not data.L1_choice_asserted:
        raise PreconditionError("the line L1 with B1 off the other lines must be asserted",
                                failed="L1 choice")
    if not 1 <= M <= N:
        raise PreconditionError(f"need 1 <= M <= N, got M={M}, N={N}", failed="M <= N")
    if len(p) < N or len(q) != N:
        raise InputError(f"need at least N={N} path counts and exactly N multiplicities q_i")
    if any(q[i] < q[i + 1] for i in range(N - 1)):
        raise PreconditionError("q must be non-increasing", failed="q non-increasing")
    hyps = [require(ineq("q1 + ... + qN <= deg Q", {f"q{i + 1}": q[i] for i in range(N)}, "<=",
                         {"degQ": degQ}), PreconditionError)]
    if N >= 2:
        hyps.append(require(ineq("2 q2 <= deg Q", {"2q2": 2 * q[1]}, "<=", {"degQ": degQ}),
                            PreconditionError))
    PM = sum(p[:M], Fraction(0))
    S = 2 * p[0] + sum(p[1:N], Fraction(0))
    ne = n * e
    lhs1 = {"(p1+..+pM)k": PM * k, "p1 degR": p[0] * degR}
    lhs1.update({f"p{i + 1}q{i + 1}": p[i] * q[i] for i in range(N)})
    hyps.append(require(ineq("(sum_M p)k + p1 deg R + sum_N p_i q_i >= 4ne", lhs1, ">=",
                             {"4ne": 4 * ne}), PreconditionError))
    hyps.append(require(ineq("(2p1 + sum_{i>=2} p_i)(k + deg R + deg Q) < 6ne",
                             {"S(k+R+Q)": S * (k + degR + degQ)}, "<", {"6ne": 6 * ne}),
                        PreconditionError))
    if nuF is not None and to_rat(nuF) != S:
        raise PreconditionError(f"nu(F) = {to_rat(nuF)} disagrees with 2p1 + sum p_i = {S}",
                                failed="nu(F) consistency")
    intermediate = ineq("(sum_M p)k + (S/2)(deg R + deg Q) >= 4ne",
                        {"(sum_M p)k": PM * k, "(S/2)(R+Q)": S * (degR + degQ) / 2}, ">=",
                        {"4ne": 4 * ne})
    concl = ineq("k > 2ne/nu(F)", {"k": k}, ">", {"2ne/nu(F)": 2 * ne / S})
    degC = degR + degQ
    cl = ineq("(C.L) <= deg C < 4ne/nu(F)", {"degC": degC}, "<", {"4ne/nu(F)": 4 * ne / S})
    for c in (intermediate, concl, cl):
        if not c["holds"]:
            raise CertificateError(f"six-lines chain broke at '{c['name']}'", offending=c)
    return {"kind": "six_lines", "nuF": S, "hypotheses": hyps, "intermediate": intermediate,
            "k_bound": concl, "certificate": cl, "C": "R + Q", "L": 1}


def prop41_pipeline(data: VerticalCycleData, n, e, nuF) -> dict:
    """Dispatch on the number of lines through x and assemble (L, C, certificate)."""
    n, e, nuF = to_rat(n), to_rat(e), to_rat(nuF)
    if data.case == "six_lines":
        return six_lines_bound(data, n, e, nuF)
    T = FiberThreshold.from_triple(n, e, nuF)
    if data.case == "no_line":
        cert = no_line_contradiction(data.d, T)
        raise PreconditionError("no line through x: " + cert["meaning"], failed=cert)
    if data.case == "one_line":
        sel = one_line_bound(data.k[0], data.d, T, multC=data.m if data.m else None)
        return {"kind": "one_line", "L": 1, "C": "C", "certificate": sel.certificate,
                "hypotheses": sel.hypotheses}
    if data.case == "two_lines":
        sel = two_lines_select(data, T)
        j = 3 - sel.chosen_index
        return {"kind": "two_lines", "L": sel.chosen_index, "C": f"Q + k{j} L{j} + k3 L3",
                "certificate": sel.certificate, "hypotheses": sel.hypotheses}
    sel = three_lines_select(data, T)
    j, l = [x for x in (1, 2, 3) if x != sel.chosen_index]
    return {"kind": "three_lines", "L": sel.chosen_index, "C": f"k{j} L{j} + k{l} L{l} + Q",
            "certificate": sel.certificate, "hypotheses": sel.hypotheses}
