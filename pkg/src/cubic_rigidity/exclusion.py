"""The final contradiction: multiplicity lower bounds against the staircase
upper bounds, the Phi polynomials, their complete-square certificates and an
exact grid search for feasible instances.

All three cases go through one quadratic

    X = k n + sum_b eps_b sum_{i in b} (n - lambda_i) + e,   k = 2 Sigma0 + Sigma1
    U = 3 n^2 Sigma0 + 4 n e + sum_b eps_b sum_{i in b} (3n^2 - 2 lambda_i n - lambda_i^2)
    Phi = X^2 - D U,  D = Sigma0 + Sigma1

where the branches b are {all lambdas} for A and B, and {all, first M-1}
weighted by eps_plus, eps_minus in case C. Case B is the Sigma0 = 0 instance
with D = Sigma (its upper bound multiplied through by eps).
The instance is feasible exactly when Phi < 0.
"""
from __future__ import annotations

import functools
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .certs import ineq
from .errors import CertificateError, InputError, UncoveredRegimeError, PreconditionError
from .exact import MultiPoly, QuadOverBox, V, qf_min_box, rat_json, to_rat, univariate_box_min
from .graph import Aggregates, CaseTag, valuation_of_fiber
from . import kernels

# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class CaseParams:
    case: CaseTag
    n: Fraction
    e: Fraction
    lambdas: tuple
    eps: Fraction = Fraction(0)
    eps_plus: Fraction = Fraction(0)
    eps_minus: Fraction = Fraction(0)
    Sigma0: Fraction = Fraction(0)
    Sigma1: Fraction = Fraction(0)
    Sigma: Fraction = Fraction(0)
    sum_p_squared: Optional[Fraction] = None
    Sigma_lower: Optional[Fraction] = None       # Sigma_* <= eps
    Sigma_plus: Optional[Fraction] = None        # <= eps_plus
    Sigma_minus: Optional[Fraction] = None       # <= eps_minus
    C0_dot_L: Optional[Fraction] = None
    C01_dot_L1: Optional[Fraction] = None
    nuF: Optional[Fraction] = None

    def __post_init__(self):
        conv = lambda v: None if v is None else to_rat(v)  # noqa: E731
        for name in ("n", "e", "eps", "eps_plus", "eps_minus", "Sigma0", "Sigma1", "Sigma"):
            object.__setattr__(self, name, to_rat(getattr(self, name)))
        for name in ("sum_p_squared", "Sigma_lower", "Sigma_plus", "Sigma_minus",
                     "C0_dot_L", "C01_dot_L1", "nuF"):
            object.__setattr__(self, name, conv(getattr(self, name)))
        object.__setattr__(self, "lambdas", tuple(to_rat(x) for x in self.lambdas))
        self._validate()

    def _validate(self):
        c = self.case
        if self.n <= 0:
            raise InputError(f"n must be positive, got {self.n}")
        if self.e <= 0:
            raise PreconditionError(f"e = {self.e} <= 0: not a maximal singularity", failed="e > 0")
        if len(self.lambdas) != c.M:
            raise InputError(f"need M = {c.M} lambdas, got {len(self.lambdas)}")
        for x in self.lambdas:
            if not 0 <= x <= self.n:
                raise InputError(f"lambda = {x} outside [0, n = {self.n}]")
        for name in ("eps", "eps_plus", "eps_minus", "Sigma0", "Sigma1", "Sigma"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be non-negative")
        for name in ("C0_dot_L", "C01_dot_L1", "Sigma_lower", "Sigma_plus", "Sigma_minus"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InputError(f"{name} must be non-negative")
        if c.case == "B":
            if self.Sigma <= 0:
                raise InputError("case B needs Sigma > 0")
            if self.eps <= 0:
                raise InputError("case B needs eps > 0")
            sq = self.p_squared
            if sq <= 0:
                raise InputError("sum of p_i^2 must be positive")
            if sq > self.eps * self.Sigma:
                raise PreconditionError(f"sum p_i^2 = {sq} exceeds eps*Sigma = {self.eps * self.Sigma}",
                                        failed="sum p^2 <= eps Sigma")
        else:
            if self.Sigma0 + self.Sigma1 <= 0:
                raise InputError("Sigma0 + Sigma1 must be positive")
        pairs = [("Sigma_lower", "eps"), ("Sigma_plus", "eps_plus"), ("Sigma_minus", "eps_minus")]
        for low, high in pairs:
            v = getattr(self, low)
            if v is not None and v > getattr(self, high):
                raise PreconditionError(f"{low} = {v} exceeds {high} = {getattr(self, high)}",
                                        failed=f"{low} <= {high}")
        if c.singular_center and (c.case != "C" or c.M != 2):
            raise UncoveredRegimeError(
                "a singular centre is only treated for case C with M = 2")

    @property
    def p_squared(self) -> Fraction:
        return self.eps * self.Sigma if self.sum_p_squared is None else self.sum_p_squared

    @property
    def d_F(self) -> int:
        return 2 if self.case.special else 1

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        case = CaseTag(d.pop("case"), bool(d.pop("special", False)), int(d.pop("M", len(d.get("lambdas", ())) or 1)),
                       bool(d.pop("singular_center", False)))
        d.pop("ranges", None)
        return cls(case=case, **d)

    def to_json(self) -> dict:
        out = {"case": self.case.case, "special": self.case.special, "M": self.case.M,
               "singular_center": self.case.singular_center,
               "n": rat_json(self.n), "e": rat_json(self.e),
               "lambdas": [rat_json(x) for x in self.lambdas]}
        for name in ("eps", "eps_plus", "eps_minus", "Sigma0", "Sigma1", "Sigma", "sum_p_squared",
                     "Sigma_lower", "Sigma_plus", "Sigma_minus", "C0_dot_L", "C01_dot_L1", "nuF"):
            v = getattr(self, name)
            if v is not None:
                out[name] = rat_json(v)
        return out


def _branches(p: CaseParams):
    """(weight, lambdas) pairs entering the staircase sums."""
    if p.case.case == "C":
        return [(p.eps_plus, p.lambdas), (p.eps_minus, p.lambdas[:-1])]
    return [(p.eps, p.lambdas)]


def _quad_sum(n, lams):
    return sum((3 * n * n - 2 * x * n - x * x for x in lams), Fraction(0))


def _lin_sum(n, lams):
    return sum((n - x for x in lams), Fraction(0))


def _sig0_sig1(p: CaseParams):
    if p.case.case == "B":
        return Fraction(0), p.Sigma
    return p.Sigma0, p.Sigma1


def _x_value(p: CaseParams) -> Fraction:
    s0, s1 = _sig0_sig1(p)
    return (2 * s0 + s1) * p.n + sum((w * _lin_sum(p.n, l) for w, l in _branches(p)), Fraction(0)) + p.e


def im_lower_bound(params: CaseParams) -> Fraction:
    """Lower bound for sum p_i m_i (A, C) or mult_B Z (B)."""
    X = _x_value(params)
    if params.case.case == "B":
        den = params.p_squared
    else:
        den = params.Sigma0 + params.Sigma1
    if den == 0:
        raise InputError("zero denominator in the multiplicity lower bound")
    return X * X / den


def _check_restrictions(p: CaseParams):
    c = p.case
    if c.singular_center and (c.case != "C" or c.M != 2):
        raise UncoveredRegimeError("a singular centre is only treated for case C with M = 2")


def upper_bound_lhs(params: CaseParams) -> Fraction:
    """Upper bound after the C-terms have been replaced by 4ne."""
    _check_restrictions(params)
    p = params
    ne4 = 4 * p.n * p.e
    if p.case.case == "B":
        return ne4 / p.eps + _quad_sum(p.n, p.lambdas)
    return 3 * p.n * p.n * p.Sigma0 + ne4 + sum((w * _quad_sum(p.n, l) for w, l in _branches(p)),
                                                Fraction(0))


def fiber_valuation(p: CaseParams) -> Fraction:
    """nu(F) used to justify the 4ne replacement."""
    if p.nuF is not None:
        return p.nuF
    c = p.case
    if c.singular_center:
        return 2 * p.eps_plus + p.eps_minus + p.eps
    if c.case == "C":
        return p.d_F * (p.eps_plus + p.eps_minus)
    return p.d_F * p.eps


def _c_term(p: CaseParams):
    """The weighted (C.L) contribution in the raw bound, or None if C0 is unknown."""
    if p.C0_dot_L is None:
        return None
    c0 = p.C0_dot_L
    c01 = p.C01_dot_L1 or Fraction(0)
    cl = c0 + (c01 if p.case.special else 0)
    if p.case.case == "A":
        w = p.eps if p.Sigma_lower is None else p.Sigma_lower
        return w * cl
    if p.case.case == "B":
        return cl
    sp = p.eps_plus if p.Sigma_plus is None else p.Sigma_plus
    sm = p.eps_minus if p.Sigma_minus is None else p.Sigma_minus
    if p.case.singular_center:
        return sm * c0 + sp * (c0 + c01) + p.eps * c01
    return (sp + sm) * cl


def raw_upper_bound(params: CaseParams) -> Optional[Fraction]:
    """Upper bound with the actual (C.L) values and Sigma_* weights, when supplied."""
    p = params
    ct = _c_term(p)
    if ct is None:
        return None
    if p.case.case == "B":
        return ct + _quad_sum(p.n, p.lambdas)
    if p.case.case == "A":
        w = p.eps if p.Sigma_lower is None else p.Sigma_lower
        return 3 * p.n * p.n * p.Sigma0 + ct + w * _quad_sum(p.n, p.lambdas)
    sp = p.eps_plus if p.Sigma_plus is None else p.Sigma_plus
    sm = p.eps_minus if p.Sigma_minus is None else p.Sigma_minus
    return (3 * p.n * p.n * p.Sigma0 + ct + sp * _quad_sum(p.n, p.lambdas)
            + sm * _quad_sum(p.n, p.lambdas[:-1]))


def phi_value(params: CaseParams) -> Fraction:
    """Phi at the instance: X^2 - D U (case B with D = Sigma and U multiplied by eps)."""
    p = params
    s0, s1 = _sig0_sig1(p)
    D = s0 + s1
    U = 3 * p.n * p.n * s0 + 4 * p.n * p.e + sum((w * _quad_sum(p.n, l) for w, l in _branches(p)),
                                                 Fraction(0))
    X = _x_value(p)
    return X * X - D * U


# --------------------------------------------------------------------------
# symbolic Phi

_n, _e = V("n"), V("e")


def _tag(case) -> str:
    c = case.case if isinstance(case, CaseTag) else case
    if c not in ("A", "B", "C"):
        raise InputError(f"case must be A, B or C, got {c!r}")
    return c


def _lam_names(case: str):
    if case == "C":
        return {"plus": "lambda_plus", "minus": "lambda_minus"}
    return {"": "lambda"}


def _phi_terms(case: str, wide: dict) -> list:
    """Phi as displayed, one (label, polynomial) pair per displayed term.

    ``wide`` maps each lambda name to the polynomial used for the (n + lambda)
    factor, so the rewrite (n + lambda) -> 2n only touches that factor.
    """
    n, e = _n, _e
    if case == "A":
        S0, S1, M, eps, lam = V("Sigma0"), V("Sigma1"), V("M"), V("eps"), V("lambda")
        t = n - lam
        return [
            ("(S0^2+S0S1+S1^2)n^2", (S0 ** 2 + S0 * S1 + S1 ** 2) * n ** 2),
            ("M eps S0 (n-l)^2", M * eps * S0 * t ** 2),
            ("-M eps S1 (n-l)(n+l)", -M * eps * S1 * t * wide["lambda"]),
            ("M^2 eps^2 (n-l)^2", M ** 2 * eps ** 2 * t ** 2),
            ("-2 e S1 n", -2 * e * S1 * n),
            ("2 M eps e (n-l)", 2 * M * eps * e * t),
            ("e^2", e ** 2),
        ]
    if case == "B":
        S, M, eps, lam = V("Sigma"), V("M"), V("eps"), V("lambda")
        t = n - lam
        return [
            ("S^2 n^2", S ** 2 * n ** 2),
            ("-2 S n e", -2 * S * n * e),
            ("M^2 eps^2 (n-l)^2", M ** 2 * eps ** 2 * t ** 2),
            ("e^2", e ** 2),
            ("2 M eps (n-l) e", 2 * M * eps * t * e),
            ("-M eps (n-l) S (n+l)", -M * eps * t * S * wide["lambda"]),
        ]
    S0, S1 = V("Sigma0"), V("Sigma1")
    Mm, Mp, em, ep = V("M_minus"), V("M_plus"), V("eps_minus"), V("eps_plus")
    lm, lp = V("lambda_minus"), V("lambda_plus")
    tm, tp = n - lm, n - lp
    return [
        ("(S0^2+S0S1+S1^2)n^2", (S0 ** 2 + S0 * S1 + S1 ** 2) * n ** 2),
        ("M- eps- S0 (n-l-)^2", Mm * em * S0 * tm ** 2),
        ("M+ eps+ S0 (n-l+)^2", Mp * ep * S0 * tp ** 2),
        ("-M- eps- S1 (n-l-)(n+l-)", -Mm * em * S1 * tm * wide["lambda_minus"]),
        ("-M+ eps+ S1 (n-l+)(n+l+)", -Mp * ep * S1 * tp * wide["lambda_plus"]),
        ("(M- eps- (n-l-) + M+ eps+ (n-l+))^2", (Mm * em * tm + Mp * ep * tp) ** 2),
        ("-2 e S1 n", -2 * e * S1 * n),
        ("2 M- eps- (n-l-) e", 2 * Mm * em * tm * e),
        ("2 M+ eps+ (n-l+) e", 2 * Mp * ep * tp * e),
        ("e^2", e ** 2),
    ]


def _lambda_vars(case: str):
    return ["lambda_plus", "lambda_minus"] if case == "C" else ["lambda"]


def phi_polynomial(case) -> MultiPoly:
    """Phi on the diagonal, assembled term by term from its displayed form."""
    c = _tag(case)
    wide = {l: _n + V(l) for l in _lambda_vars(c)}
    return sum((p for _, p in _phi_terms(c, wide)), MultiPoly())


def phi_rewritten(case) -> MultiPoly:
    """Phi with every (n + lambda) factor replaced by 2n."""
    c = _tag(case)
    wide = {l: 2 * _n for l in _lambda_vars(c)}
    return sum((p for _, p in _phi_terms(c, wide)), MultiPoly())


def phi_from_bounds(case) -> MultiPoly:
    """Phi on the diagonal rebuilt directly as X^2 - D U (independent of the display)."""
    c = _tag(case)
    n, e = _n, _e
    if c == "C":
        S0, S1 = V("Sigma0"), V("Sigma1")
        branches = [(V("M_plus") * V("eps_plus"), V("lambda_plus")),
                    (V("M_minus") * V("eps_minus"), V("lambda_minus"))]
    elif c == "A":
        S0, S1 = V("Sigma0"), V("Sigma1")
        branches = [(V("M") * V("eps"), V("lambda"))]
    else:
        S0, S1 = MultiPoly(), V("Sigma")
        branches = [(V("M") * V("eps"), V("lambda"))]
    X = (2 * S0 + S1) * n + e
    U = 3 * n ** 2 * S0 + 4 * n * e
    for w, lam in branches:
        X = X + w * (n - lam)
        U = U + w * (3 * n ** 2 - 2 * lam * n - lam ** 2)
    return X ** 2 - (S0 + S1) * U


def phi_family(case, M: int) -> MultiPoly:
    """Phi before the diagonal reduction, with separate lambda_1..lambda_M
    (case C: lambda_plus_1..M and lambda_minus_1..M-1)."""
    c = _tag(case)
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise InputError("M must be a positive integer")
    return _phi_family(c, M)


@functools.lru_cache(maxsize=64)
def _phi_family(c: str, M: int) -> MultiPoly:
    n, e = _n, _e
    if c == "C":
        S0, S1 = V("Sigma0"), V("Sigma1")
        branches = [(V("eps_plus"), [V(f"lambda_plus_{i}") for i in range(1, M + 1)]),
                    (V("eps_minus"), [V(f"lambda_minus_{i}") for i in range(1, M)])]
    else:
        S0, S1 = (V("Sigma0"), V("Sigma1")) if c == "A" else (MultiPoly(), V("Sigma"))
        branches = [(V("eps"), [V(f"lambda_{i}") for i in range(1, M + 1)])]
    X = (2 * S0 + S1) * n + e
    U = 3 * n ** 2 * S0 + 4 * n * e
    for w, lams in branches:
        for lam in lams:
            X = X + w * (n - lam)
            U = U + w * (3 * n ** 2 - 2 * lam * n - lam ** 2)
    return X ** 2 - (S0 + S1) * U


def family_box_vars(case, M: int):
    c = _tag(case)
    if c == "C":
        return [f"lambda_plus_{i}" for i in range(1, M + 1)] + [f"lambda_minus_{i}" for i in range(1, M)]
    return [f"lambda_{i}" for i in range(1, M + 1)]


def diagonal_minimum(case, M: int, fixed: dict):
    """Minimum of the family over the diagonal (line for A/B, plane for C)."""
    c = _tag(case)
    fam = phi_family(c, M)
    n = to_rat(fixed["n"])
    fam = fam.subst({k: v for k, v in fixed.items() if k in fam.variables})
    if c == "C":
        bind = {f"lambda_plus_{i}": V("lambda_plus") for i in range(1, M + 1)}
        bind.update({f"lambda_minus_{i}": V("lambda_minus") for i in range(1, M)})
        diag = fam.subst(bind)
        box = {"lambda_plus": (0, n)}
        if M > 1:
            box["lambda_minus"] = (0, n)
        return qf_min_box(QuadOverBox(diag, box))
    diag = fam.subst({f"lambda_{i}": V("lambda") for i in range(1, M + 1)})
    a2 = diag.coefficient({"lambda": 2})
    a1 = diag.coefficient({"lambda": 1})
    a0 = diag.coefficient({})
    val, t = univariate_box_min(a2, a1, a0, Fraction(0), n)
    return val, {"lambda": t}


def box_minimum(case, M: int, fixed: dict):
    fam = phi_family(case, M)
    fam = fam.subst({k: v for k, v in fixed.items() if k in fam.variables})
    n = to_rat(fixed["n"])
    names = family_box_vars(case, M)
    return qf_min_box(QuadOverBox(fam, {v: (0, n) for v in names}), max_vars=len(names))


# --------------------------------------------------------------------------
# complete squares

_ATOM = {"lambda": "n_minus_lambda", "lambda_plus": "n_minus_lambda_plus",
         "lambda_minus": "n_minus_lambda_minus"}


def atomize(poly: MultiPoly) -> MultiPoly:
    """Rewrite lambda = n - t with t an atomic non-negative variable."""
    bind = {l: _n - V(t) for l, t in _ATOM.items() if l in poly.variables}
    return poly.subst(bind) if bind else poly


def _square_base(case: str) -> MultiPoly:
    n, e = _n, _e
    if case == "A":
        return V("Sigma1") * n - V("M") * V("eps") * (n - V("lambda")) - e
    if case == "B":
        return V("Sigma") * n - V("M") * V("eps") * (n - V("lambda")) - e
    return (V("Sigma1") * n - V("M_minus") * V("eps_minus") * (n - V("lambda_minus"))
            - V("M_plus") * V("eps_plus") * (n - V("lambda_plus")) - e)


@dataclass(frozen=True)
class SquareCertificate:
    case: str
    phi: MultiPoly
    rewrite_slack: MultiPoly          # Phi - Phi' in atomic variables, must be >= 0
    square_base: MultiPoly
    square: MultiPoly
    residual_terms: tuple             # monomials of Phi' - square in atomic variables

    @property
    def residual(self) -> MultiPoly:
        return sum(self.residual_terms, MultiPoly())

    def verify(self) -> bool:
        """Re-derive everything and re-run the identity and sign checks."""
        rew = atomize(phi_rewritten(self.case))
        if atomize(self.phi) != atomize(phi_polynomial(self.case)):
            return False
        if atomize(self.phi) - rew != self.rewrite_slack:
            return False
        if self.square != self.square_base ** 2:
            return False
        if atomize(self.square) + self.residual != rew:
            return False
        return all(_nonneg_monomials(p) is None for p in (self.rewrite_slack, self.residual))

    def to_json(self) -> dict:
        return {"case": self.case, "phi": self.phi.to_json(),
                "rewrite": "(n+lambda) -> 2n",
                "rewrite_slack": self.rewrite_slack.to_json(),
                "square_base": self.square_base.to_json(),
                "residual": self.residual.to_json(),
                "residual_terms": [repr(t) for t in self.residual_terms],
                "atoms": {v: f"n - {k}" for k, v in _ATOM.items()}}


def _nonneg_monomials(poly: MultiPoly):
    """First monomial with a negative coefficient, or None."""
    for mono, c in poly.monomials():
        if c < 0:
            return MultiPoly({tuple(mono.items()): c})
    return None


def complete_square_certificate(case) -> SquareCertificate:
    c = _tag(case)
    phi = phi_polynomial(c)
    rew = phi_rewritten(c)
    slack = atomize(phi - rew)
    bad = _nonneg_monomials(slack)
    if bad is not None:
        raise CertificateError(f"(n+lambda) -> 2n did not decrease Phi: term {bad!r}", offending=bad)
    base = _square_base(c)
    sq = base ** 2
    residual = atomize(rew - sq)
    bad = _nonneg_monomials(residual)
    if bad is not None:
        raise CertificateError(f"residual has a negative term {bad!r}", offending=bad)
    if c == "B" and not residual.is_zero():
        raise CertificateError(f"case B residual is not zero: {residual!r}", offending=residual)
    terms = tuple(MultiPoly({tuple(m.items()): k}) for m, k in residual.monomials())
    return SquareCertificate(c, phi, slack, base, sq, terms)


# --------------------------------------------------------------------------
# single instance


def _symbolic_bindings(p: CaseParams) -> dict:
    """Values for the diagonal Phi variables at an instance whose lambdas are all equal."""
    c = p.case.case
    out = {"n": p.n, "e": p.e}
    if c == "A":
        out.update(Sigma0=p.Sigma0, Sigma1=p.Sigma1, M=p.case.M, eps=p.eps)
    elif c == "B":
        out.update(Sigma=p.Sigma, M=p.case.M, eps=p.eps)
    else:
        out.update(Sigma0=p.Sigma0, Sigma1=p.Sigma1, M_plus=p.case.M, M_minus=p.case.M - 1,
                   eps_plus=p.eps_plus, eps_minus=p.eps_minus)
    return out


def exclude_case(params: CaseParams) -> dict:
    """Compare the two bounds and certify the contradiction (or report a
    feasible instance)."""
    p = params
    _check_restrictions(p)
    c = p.case
    lower = im_lower_bound(p)
    upper = upper_bound_lhs(p)
    hyps = []
    nuF = fiber_valuation(p)
    if p.C0_dot_L is not None:
        limit = 4 * p.n * p.e / (p.eps if c.case == "B" else 1)
        ct = _c_term(p)
        hyps.append(ineq("weighted (C.L) < 4ne", {"C-term": ct}, "<", {"4ne": limit}))
        hyps.append(ineq("(C.L) < 4ne/nu(F)",
                         {"C0.L": p.C0_dot_L, "C01.L1": (p.C01_dot_L1 or 0) if c.special else 0},
                         "<", {"4ne/nu(F)": 4 * p.n * p.e / nuF}))
        raw = raw_upper_bound(p)
        hyps.append(ineq("raw upper <= replaced upper", {"raw": raw}, "<=", {"upper": upper}))
        for h in hyps:
            if not h["holds"]:
                raise PreconditionError(f"hypothesis '{h['name']}' fails", failed=h["name"])
    if c.case == "B" and p.sum_p_squared is not None:
        hyps.append(ineq("sum p^2 <= eps Sigma", {"sum p^2": p.sum_p_squared}, "<=",
                         {"eps Sigma": p.eps * p.Sigma}))
    phi = phi_value(p)
    compare = ineq("upper <= lower", {"upper": upper}, "<=", {"lower": lower})
    # Phi at the instance is bounded below by its diagonal minimum
    M = c.M
    fixed = {k: v for k, v in _symbolic_bindings(p).items()
             if k not in ("M", "M_plus", "M_minus")}
    fam_fixed = dict(fixed)
    if c.case == "B":
        fam_fixed.pop("Sigma0", None)
    fam = phi_family(c.case, M)
    assign = dict(zip(family_box_vars(c.case, M),
                      list(p.lambdas) + (list(p.lambdas[:-1]) if c.case == "C" else [])))
    phi_family_value = fam.evaluate({**fam_fixed, **assign})
    diag_val, diag_arg = diagonal_minimum(c.case, M, fam_fixed)
    sym = _symbolic_bindings(p)
    sym.update(diag_arg)
    if c.case == "C" and M == 1:
        sym["lambda_minus"] = p.n
    sq_cert = complete_square_certificate(c.case)
    at_diag = {
        "phi": rat_json(phi_polynomial(c.case).evaluate(sym)),
        "phi_rewritten": rat_json(phi_rewritten(c.case).evaluate(sym)),
        "square": rat_json(sq_cert.square.evaluate(sym)),
        "residual": rat_json(sum((t.evaluate({**sym, **{v: p.n - sym[k] for k, v in _ATOM.items() if k in sym}})
                                 for t in sq_cert.residual_terms), Fraction(0))),
        "argmin": {k: rat_json(v) for k, v in diag_arg.items()},
    }
    chain = [
        ineq("Phi(instance) == X^2 - D U", {"family": phi_family_value}, "==", {"phi": phi}),
        ineq("Phi(instance) >= diagonal minimum", {"phi": phi}, ">=", {"min": diag_val}),
        ineq("displayed Phi at the argmin == diagonal minimum",
             {"display": to_rat(at_diag["phi"])}, "==", {"min": diag_val}),
        ineq("square + residual == rewritten Phi",
             {"square": to_rat(at_diag["square"]), "residual": to_rat(at_diag["residual"])}, "==",
             {"rewritten": to_rat(at_diag["phi_rewritten"])}),
        ineq("diagonal minimum >= rewritten Phi >= 0", {"min": diag_val}, ">=",
             {"rewritten": max(to_rat(at_diag["phi_rewritten"]), Fraction(0))}),
    ]
    contradiction = compare["holds"]
    if contradiction and not all(x["holds"] for x in chain):
        raise CertificateError("bounds contradict but the Phi chain does not close")
    try:
        nu_cov = str(valuation_of_fiber(c, Aggregates(p=(), Sigma_star=p.eps, eps_plus=p.eps_plus,
                                                      eps_minus=p.eps_minus), p.d_F))
    except UncoveredRegimeError as exc:
        nu_cov = f"not covered: {exc}"
    return {
        "kind": "exclusion",
        "params": p.to_json(),
        "lower_bound": rat_json(lower),
        "upper_bound": rat_json(upper),
        "raw_upper_bound": None if p.C0_dot_L is None else rat_json(raw_upper_bound(p)),
        "nuF": rat_json(nuF),
        "nuF_formula": nu_cov,
        "hypotheses": hyps,
        "comparison": compare,
        "phi": rat_json(phi),
        "phi_chain": chain,
        "at_diagonal_minimum": at_diag,
        "square_certificate": sq_cert.to_json(),
        "verdict": "contradiction-certified" if contradiction else "counterexample",
    }


def replay_exclusion(cert: dict) -> bool:
    """Recompute an exclusion certificate from its stored parameters."""
    fresh = exclude_case(CaseParams.from_dict(cert["params"]))
    keys = ("lower_bound", "upper_bound", "phi", "verdict", "nuF")
    return all(fresh[k] == cert[k] for k in keys)


# --------------------------------------------------------------------------
# grid search

GRID_KEYS = {
    "A": ("n", "M", "eps", "Sigma0", "Sigma1", "e", "lambda_fractions"),
    "B": ("n", "M", "eps", "Sigma", "e", "lambda_fractions"),
    "C": ("n", "M", "eps_plus", "eps_minus", "Sigma0", "Sigma1", "e", "lambda_fractions"),
}


def expand_range(rs) -> list:
    """A list of values, or {"min", "max", "step"} (inclusive)."""
    if isinstance(rs, dict):
        lo, hi = to_rat(rs["min"]), to_rat(rs["max"])
        step = to_rat(rs.get("step", 1))
        if step <= 0:
            raise InputError("range step must be positive")
        count = math.floor((hi - lo) / step) + 1
        if count > 10 ** 6:
            raise InputError("range has too many points")
        return [lo + i * step for i in range(max(count, 0))]
    if isinstance(rs, (list, tuple)):
        return [to_rat(x) for x in rs]
    return [to_rat(rs)]


def _ints(vals, name, minimum=0):
    out = []
    for v in vals:
        if v.denominator != 1 or v < minimum:
            raise InputError(f"{name} values must be integers >= {minimum}, got {v}")
        out.append(int(v))
    return sorted(set(out))


def _lcm(values):
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _grid_cells(case: str, ranges: dict):
    missing = [k for k in GRID_KEYS[case] if k not in ranges]
    if missing:
        raise InputError(f"ranges for case {case} miss {missing}")
    g = {k: expand_range(ranges[k]) for k in GRID_KEYS[case]}
    evals = sorted(set(g["e"]))
    dropped = [x for x in evals if x <= 0]
    evals = [x for x in evals if x > 0]
    fr = sorted(set(g["lambda_fractions"]), reverse=True)
    if any(not 0 <= f <= 1 for f in fr):
        raise InputError("lambda fractions must lie in [0, 1]")
    ns = sorted(set(g["n"]))
    if any(x <= 0 for x in ns):
        raise InputError("n values must be positive")
    Ms = _ints(g["M"], "M", 1)
    ints = {}
    for k in GRID_KEYS[case]:
        if k in ("n", "M", "e", "lambda_fractions"):
            continue
        ints[k] = _ints(g[k], k, 0)
    return ns, Ms, evals, dropped, fr, ints


def _cell_job(args):
    (case, n, M, S, fr, ints, evals, backend, max_dump) = args
    N = int(n * S)
    lam_scaled = [int(f * n * S) for f in fr]
    tuples = list(itertools.combinations_with_replacement(range(len(fr)), M))
    s1p, s1m, qp, qm = [], [], [], []
    for tup in tuples:
        L = [lam_scaled[i] for i in tup]
        s1p.append(sum(N - x for x in L))
        qp.append(sum(3 * N * N - 2 * x * N - x * x for x in L))
        s1m.append(sum(N - x for x in L[:-1]))
        qm.append(sum(3 * N * N - 2 * x * N - x * x for x in L[:-1]))
    if case == "A":
        sig0, sig1, ep, em = ints["Sigma0"], ints["Sigma1"], ints["eps"], [0]
    elif case == "B":
        sig0, sig1, ep, em = [0], [x for x in ints["Sigma"] if x > 0], [x for x in ints["eps"] if x > 0], [0]
    else:
        sig0, sig1, ep, em = ints["Sigma0"], ints["Sigma1"], ints["eps_plus"], ints["eps_minus"]
    E = [int(x * S) for x in evals]
    if not (sig0 and sig1 and ep and em and E):
        return 0, 0, None, []
    _overflow_guard(N, M, sig0, sig1, ep, em, E)
    count, feasible, min_phi, dump = kernels.exclusion_grid(
        N, s1p, s1m, qp, qm, sig0, sig1, ep, em, E, max_dump=max_dump, backend=backend)
    rows = []
    for t, s0, s1, a, b, ee, ph in dump.tolist():
        lams = [fr[i] * n for i in tuples[t]]
        inst = {"n": rat_json(n), "M": M, "lambdas": [rat_json(x) for x in lams],
                "e": rat_json(Fraction(ee, S)), "phi": rat_json(Fraction(ph, S * S))}
        if case == "A":
            inst.update(Sigma0=s0, Sigma1=s1, eps=a)
        elif case == "B":
            inst.update(Sigma=s1, eps=a)
        else:
            inst.update(Sigma0=s0, Sigma1=s1, eps_plus=a, eps_minus=b)
        rows.append(inst)
    mp = None if count == 0 else Fraction(min_phi, S * S)
    return count, feasible, mp, rows


def _overflow_guard(N, M, sig0, sig1, ep, em, E):
    s0, s1, a, b, e = max(sig0), max(sig1), max(ep), max(em), max(E)
    X = (2 * s0 + s1) * N + (a + b) * M * N + e
    U = 3 * N * N * s0 + 4 * N * e + (a + b) * M * 3 * N * N
    if X * X >= kernels.INT64_SAFE or (s0 + s1) * U >= kernels.INT64_SAFE:
        raise InputError("grid values too large for the exact int64 kernel; shrink the ranges")


def feasibility_search(case, ranges: dict, special: bool = False, singular_center: bool = False,
                       backend=None, jobs: int = 1, max_dump: int = 20) -> dict:
    """Exhaustive exact sweep; every cell with Phi < 0 is a feasible instance."""
    c = _tag(case)
    if singular_center and not (special and c == "C"):
        raise UncoveredRegimeError("a singular centre is only treated for special case C")
    t0 = time.perf_counter()
    ns, Ms, evals, dropped, fr, ints = _grid_cells(c, ranges)
    if singular_center:
        if any(M != 2 for M in Ms):
            raise UncoveredRegimeError("a singular centre is only treated for M = 2")
    dens = [x.denominator for x in evals] + [(f * n).denominator for f in fr for n in ns] + \
        [n.denominator for n in ns]
    S = _lcm(dens)
    jobs_list = [(c, n, M, S, fr, ints, evals, kernels.resolve_backend(backend), max_dump)
                 for n in ns for M in Ms]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_cell_job, jobs_list))
    else:
        results = [_cell_job(j) for j in jobs_list]
    total = sum(r[0] for r in results)
    feas = sum(r[1] for r in results)
    mins = [r[2] for r in results if r[2] is not None]
    dump = []
    for r in results:
        dump.extend(r[3])
    dump.sort(key=lambda d: (to_rat(d["n"]), d["M"], to_rat(d["e"]), str(d)))
    warnings = []
    if dropped:
        warnings.append(f"dropped e values <= 0 (not maximal): {[rat_json(x) for x in dropped]}")
    return {
        "kind": "feasibility_search",
        "case": c,
        "special": bool(special),
        "singular_center": bool(singular_center),
        "backend": kernels.resolve_backend(backend),
        "cells": total,
        "feasible": feas,
        "min_phi": None if not mins else rat_json(min(mins)),
        "instances": dump[:max_dump],
        "warnings": warnings,
        "seconds": round(time.perf_counter() - t0, 3),
        "verdict": "contradiction-certified" if feas == 0 else "counterexample",
    }
