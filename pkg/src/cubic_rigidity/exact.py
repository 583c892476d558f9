"""Exact rationals, sparse multivariate polynomials and exact box minimization
of quadratics.

Rationals are :class:`fractions.Fraction`; nothing in this module ever touches
a float.
"""
from __future__ import annotations

import functools
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

from .errors import InputError

Rat = Fraction

# Canonical variable names; their order fixes the layout of every serialized
# polynomial so that the same expression always prints the same way.
REGISTRY = (
    "n", "e",
    "eps", "eps_plus", "eps_minus",
    "Sigma", "Sigma0", "Sigma1",
    "M", "M_plus", "M_minus",
    "lambda", "lambda_plus", "lambda_minus",
    "n_minus_lambda", "n_minus_lambda_plus", "n_minus_lambda_minus",
)
_REG_INDEX = {name: i for i, name in enumerate(REGISTRY)}
_INDEXED = re.compile(r"^(.*?)_(\d+)$")


@functools.lru_cache(maxsize=4096)
def var_key(name: str):
    """Sort key: registry names first, then indexed families (lambda_1 < lambda_10)."""
    if name in _REG_INDEX:
        return (0, _REG_INDEX[name], "", 0)
    m = _INDEXED.match(name)
    if m:
        return (1, 0, m.group(1), int(m.group(2)))
    return (2, 0, name, 0)


def to_rat(value) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string. Floats are refused."""
    if isinstance(value, bool):
        raise InputError(f"boolean is not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) or isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not re.fullmatch(r"[+-]?\d+(/[+-]?\d+)?", text):
            raise InputError(f"not a rational literal: {value!r}")
        try:
            return Fraction(text)
        except ZeroDivisionError:
            raise InputError(f"zero denominator in {value!r}") from None
    raise InputError(f"expected int or 'p/q' string, got {type(value).__name__}: {value!r}")


def rat_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rat_json(q: Fraction):
    """Integers stay JSON ints; everything else becomes a ``"p/q"`` string."""
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, k in b:
        exps[v] = exps.get(v, 0) + k
    return tuple(sorted(exps.items(), key=lambda item: var_key(item[0])))


class MultiPoly:
    """Sparse polynomial with rational coefficients over named variables.

    Terms are stored as ``{monomial: coefficient}`` where a monomial is a sorted
    tuple of ``(name, exponent)`` pairs with positive exponents. Zero
    coefficients are never stored, so two polynomials are equal exactly when
    their term maps are equal. ``variables`` is the declared variable list (a
    superset of the names that actually occur), kept in canonical order.
    """

    __slots__ = ("terms", "variables")

    def __init__(self, terms: Mapping | None = None, variables: Iterable[str] = ()):
        clean = {}
        names = set(variables)
        for mono, coeff in (terms or {}).items():
            coeff = to_rat(coeff)
            if coeff == 0:
                continue
            mono = tuple(sorted(((v, int(k)) for v, k in mono if k), key=lambda it: var_key(it[0])))
            for v, k in mono:
                if k < 0:
                    raise InputError(f"negative exponent for {v}")
                names.add(v)
            clean[mono] = clean.get(mono, Fraction(0)) + coeff
            if clean[mono] == 0:
                del clean[mono]
        self.terms = clean
        self.variables = tuple(sorted(names, key=var_key))

    # constructors ---------------------------------------------------------
    @classmethod
    def const(cls, c, variables=()):
        return cls({(): to_rat(c)}, variables)

    @classmethod
    def var(cls, name: str):
        return cls({((name, 1),): 1})

    @classmethod
    def coerce(cls, x):
        if isinstance(x, MultiPoly):
            return x
        return cls.const(x)

    # ring operations ------------------------------------------------------
    def __add__(self, other):
        other = MultiPoly.coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return MultiPoly(terms, self.variables + other.variables)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({m: -c for m, c in self.terms.items()}, self.variables)

    def __sub__(self, other):
        return self + (-MultiPoly.coerce(other))

    def __rsub__(self, other):
        return MultiPoly.coerce(other) - self

    def __mul__(self, other):
        other = MultiPoly.coerce(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return MultiPoly(terms, self.variables + other.variables)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise InputError("only non-negative integer powers are supported")
        out = MultiPoly.const(1, self.variables)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    # inspection -----------------------------------------------------------
    def degree_in(self, name: str) -> int:
        return max((dict(m).get(name, 0) for m in self.terms), default=0)

    def total_degree(self, names: Iterable[str] | None = None) -> int:
        names = None if names is None else set(names)
        return max(
            (sum(k for v, k in m if names is None or v in names) for m in self.terms),
            default=0,
        )

    def occurring(self) -> tuple:
        return tuple(sorted({v for m in self.terms for v, _ in m}, key=var_key))

    def coefficient(self, monomial: Mapping[str, int]) -> Fraction:
        key = tuple(sorted(((v, k) for v, k in monomial.items() if k), key=lambda it: var_key(it[0])))
        return self.terms.get(key, Fraction(0))

    def monomials(self):
        """Terms as ``(exponent dict, coefficient)`` in canonical order."""
        for m in sorted(self.terms, key=_mono_sort_key):
            yield dict(m), self.terms[m]

    # substitution / evaluation -------------------------------------------
    def subst(self, bindings: Mapping) -> "MultiPoly":
        """Replace variables by polynomials or rationals, simultaneously."""
        for name in bindings:
            if name not in self.variables:
                raise InputError(f"unknown variable {name!r}; polynomial has {list(self.variables)}")
        keep = [v for v in self.variables if v not in bindings]
        if not any(isinstance(b, MultiPoly) for b in bindings.values()):
            # numeric bindings: fold powers into the coefficients directly
            vals = {v: to_rat(b) for v, b in bindings.items()}
            acc = {}
            for mono, coeff in self.terms.items():
                rest = []
                for v, k in mono:
                    if v in vals:
                        coeff *= vals[v] ** k
                    else:
                        rest.append((v, k))
                rest = tuple(rest)
                acc[rest] = acc.get(rest, 0) + coeff
            return MultiPoly(acc, keep)
        images = {v: MultiPoly.coerce(to_rat(b) if not isinstance(b, MultiPoly) else b)
                  for v, b in bindings.items()}
        for img in images.values():
            keep.extend(img.variables)
        out = MultiPoly({}, keep)
        powers = {}
        for mono, coeff in self.terms.items():
            rest = []
            term = MultiPoly.const(coeff)
            for v, k in mono:
                if v in images:
                    key = (v, k)
                    if key not in powers:
                        powers[key] = images[v] ** k
                    term = term * powers[key]
                else:
                    rest.append((v, k))
            out = out + term * MultiPoly({tuple(rest): 1})
        return MultiPoly(out.terms, keep)

    def evaluate(self, assignment: Mapping) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self.terms.items():
            t = coeff
            for v, k in mono:
                if v not in assignment:
                    raise InputError(f"no value for variable {v!r}")
                t *= to_rat(assignment[v]) ** k
            total += t
        return total

    # serialization --------------------------------------------------------
    def to_json(self):
        """``{"variables": [...], "terms": [[exponent vector, "p/q"], ...]}`` sorted."""
        variables = list(self.variables)
        rows = []
        for mono in self.terms:
            d = dict(mono)
            rows.append(([d.get(v, 0) for v in variables], rat_json(self.terms[mono])))
        rows.sort(key=lambda r: r[0])
        return {"variables": variables, "terms": [[vec, c] for vec, c in rows]}

    @classmethod
    def from_json(cls, obj):
        try:
            variables = list(obj["variables"])
            terms = {}
            for vec, c in obj["terms"]:
                if len(vec) != len(variables):
                    raise InputError("exponent vector arity does not match variables")
                if any((not isinstance(k, int)) or isinstance(k, bool) or k < 0 for k in vec):
                    raise InputError(f"bad exponent vector {vec!r}")
                mono = tuple((v, k) for v, k in zip(variables, vec) if k)
                if mono in terms:
                    raise InputError("duplicate exponent vector")
                terms[mono] = to_rat(c)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed polynomial: {exc}") from None
        return cls(terms, variables)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for d, c in self.monomials():
            mono = "*".join(f"{v}^{k}" if k > 1 else v for v, k in sorted(d.items(), key=lambda it: var_key(it[0])))
            if not mono:
                parts.append(rat_str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{rat_str(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _mono_sort_key(mono):
    deg = sum(k for _, k in mono)
    return (-deg, [(var_key(v), -k) for v, k in mono])


def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise InputError(f"unknown op {op!r}")


def poly_subst(p: MultiPoly, bindings: Mapping) -> MultiPoly:
    return p.subst(bindings)


def V(name: str) -> MultiPoly:
    """Shorthand for a single-variable polynomial."""
    return MultiPoly.var(name)


# --------------------------------------------------------------------------
# quadratic minimization over a box

DEFAULT_MAX_BOX_VARS = 6


@dataclass(frozen=True)
class QuadOverBox:
    poly: MultiPoly
    box: dict                      # variable -> (lo, hi)
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        box = {}
        for v, (lo, hi) in self.box.items():
            lo, hi = to_rat(lo), to_rat(hi)
            if lo > hi:
                raise InputError(f"empty interval for {v}: [{lo}, {hi}]")
            box[v] = (lo, hi)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "fixed", {v: to_rat(x) for v, x in self.fixed.items()})


def quadratic_parts(poly: MultiPoly, names):
    """Split a polynomial of total degree <= 2 in ``names`` into (c, b, A)
    with f(x) = c + b.x + x^T A x and A symmetric."""
    idx = {v: i for i, v in enumerate(names)}
    k = len(names)
    c = Fraction(0)
    b = [Fraction(0)] * k
    A = [[Fraction(0)] * k for _ in range(k)]
    for mono, coeff in poly.terms.items():
        ex = [(idx[v], e) for v, e in mono]
        deg = sum(e for _, e in ex)
        if deg == 0:
            c += coeff
        elif deg == 1:
            b[ex[0][0]] += coeff
        elif len(ex) == 1:
            A[ex[0][0]][ex[0][0]] += coeff
        else:
            (i, _), (j, _) = ex
            A[i][j] += coeff / 2
            A[j][i] += coeff / 2
    return c, b, A


def qf_min_box(q: QuadOverBox, max_vars: int = DEFAULT_MAX_BOX_VARS):
    """Exact global minimum of a quadratic over a box.

    Every face of the box is visited (each variable pinned to ``lo``, pinned
    to ``hi`` or left free, 3**M faces); on a face the stationary point of the
    restricted quadratic is solved exactly and kept if it lies in the box.
    The minimizer lies in the relative interior of some face where it is
    stationary, and a flat direction always reaches a smaller face, so the
    candidate set contains a global minimizer.

    Returns ``(min_value, argmin)`` where ties go to the lexicographically
    smallest assignment vector (variables in canonical order).
    """
    poly = q.poly
    if q.fixed:
        bind = {v: x for v, x in q.fixed.items() if v in poly.variables}
        poly = poly.subst(bind)
    names = sorted(q.box, key=var_key)
    stray = [v for v in poly.occurring() if v not in q.box]
    if stray:
        raise InputError(f"variables {stray} are neither boxed nor fixed")
    if len(names) > max_vars:
        raise InputError(f"{len(names)} box variables exceed the limit {max_vars}")
    for v in names:
        if poly.degree_in(v) > 2:
            raise InputError(f"polynomial is not quadratic in {v}")
    if poly.total_degree(names) > 2:
        raise InputError("polynomial has total degree > 2 in the box variables")
    c, b, A = quadratic_parts(poly, names)
    k = len(names)
    # scale to integers: f = (C + B.x + x^T A x) / L, and every bound = integer / qb
    L = _lcm_int([c.denominator] + [x.denominator for x in b] + [x.denominator for r in A for x in r])
    C = int(c * L)
    B = [int(x * L) for x in b]
    Ai = [[int(x * L) for x in r] for r in A]
    bounds = [q.box[v] for v in names]
    qb = _lcm_int([x.denominator for lh in bounds for x in lh])
    LO = [int(lo * qb) for lo, _ in bounds]
    HI = [int(hi * qb) for _, hi in bounds]
    movable = [i for i in range(k) if LO[i] != HI[i]]

    best = None
    for r in range(len(movable) + 1):
        for free in itertools.combinations(movable, r):
            fset = set(free)
            pinned = [i for i in range(k) if i not in fset]
            if free:
                inv = _adj_det([[2 * Ai[i][j] for j in free] for i in free])
                if inv is None:
                    # singular: a flat direction leads to a smaller face
                    continue
                d, adj = inv
            choices = [(LO[i], HI[i]) if LO[i] != HI[i] else (LO[i],) for i in pinned]
            for combo in itertools.product(*choices):
                X = dict(zip(pinned, combo))
                if free:
                    # 2 A_FF x_F = -(B_F + 2 A_FX x_X), with x_X = X / qb
                    rhs = [-(B[i] * qb + 2 * sum(Ai[i][j] * X[j] for j in pinned)) for i in free]
                    num = [sum(a * y for a, y in zip(row, rhs)) for row in adj]
                    den = d * qb
                    if den < 0:
                        den, num = -den, [-x for x in num]
                    if any(not LO[i] * den <= x * qb <= HI[i] * den for i, x in zip(free, num)):
                        continue
                    scale = den // qb
                    Y = [0] * k
                    for i, x in zip(free, num):
                        Y[i] = x
                    for j in pinned:
                        Y[j] = X[j] * scale
                else:
                    den, Y = qb, [X[j] for j in range(k)]
                quad = sum(Y[i] * sum(Ai[i][j] * Y[j] for j in range(k)) for i in range(k))
                val = Fraction(C * den * den + den * sum(B[i] * Y[i] for i in range(k)) + quad,
                               den * den * L)
                if best is None or val <= best[0]:
                    x = [Fraction(y, den) for y in Y]
                    if best is None or val < best[0] or x < best[1]:
                        best = (val, x)
    return best[0], dict(zip(names, best[1]))


def _lcm_int(values):
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _adj_det(M):
    """Fraction-free Gauss-Jordan on [M | I] over the integers.

    Returns ``(d, E)`` with ``M^-1 = E / d``, or None when M is singular.
    """
    n = len(M)
    rows = [list(M[i]) + [int(i == j) for j in range(n)] for i in range(n)]
    prev = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col]
        pc = p[col]
        for r in range(n):
            if r != col:
                row = rows[r]
                f = row[col]
                rows[r] = [(pc * x - f * y) // prev for x, y in zip(row, p)]
        prev = pc
    return prev, [row[n:] for row in rows]


def univariate_box_min(a2: Fraction, a1: Fraction, a0: Fraction, lo: Fraction, hi: Fraction):
    """Minimum of a2*t^2 + a1*t + a0 over [lo, hi] by endpoint/vertex comparison."""
    cands = [lo, hi]
    if a2 > 0:
        t = -a1 / (2 * a2)
        if lo <= t <= hi:
            cands.append(t)
    return min((a2 * t * t + a1 * t + a0, t) for t in cands)
