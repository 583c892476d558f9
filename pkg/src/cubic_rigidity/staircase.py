"""The L-staircase: the chain of blow ups of L = L_0, L_1, L_2, ... with each
exceptional divisor a ruled surface of type F_1 and L_i its (-1)-section.

Cycle classes at level i use the folded basis (s_i, f_1, ..., f_i) on top of
the level-0 class, with sigma^* s_{i-1} = s_i.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .chow import VCycleClass
from .errors import InputError
from .exact import rat_json, to_rat


@dataclass(frozen=True)
class ExceptionalData:
    level: int
    self_triple: int = 1                       # (E^(i))^3
    restriction: tuple = (-1, -1)              # E^(i)|E^(i) ~ -s_i - f_i
    dot_exceptional_section: int = 0           # (E^(i) . L_i)
    # class of the curve where the previous divisor meets this one (s_i + f_i);
    # None at level 1 of a special staircase, where F^(1) . E^(1) = L_1 + R
    consecutive_class: Optional[tuple] = (1, 1)
    reducible: bool = False


@dataclass(frozen=True)
class Staircase:
    M: int
    special: bool
    levels: tuple = ()

    @property
    def d_F(self) -> int:
        return 2 if self.special else 1


def build_staircase(M: int, special: bool) -> Staircase:
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise InputError(f"staircase length must be an integer >= 1, got {M!r}")
    levels = []
    for i in range(1, M + 1):
        if special and i == 1:
            levels.append(ExceptionalData(i, consecutive_class=None, reducible=True))
        else:
            levels.append(ExceptionalData(i))
    return Staircase(M, bool(special), tuple(levels))


def pullback_fiber_class(st: Staircase) -> dict:
    """Coefficients of sigma^*F on V^(M): F^(M) + sum E^(i,M), with weight 2
    on levels >= 2 when the line passes through the double point."""
    out = {"F": 1}
    for i in range(1, st.M + 1):
        out[f"E{i}"] = 2 if (st.special and i >= 2) else 1
    return out


def discrepancy(st: Staircase, i: int) -> int:
    """Canonical multiplicity of the valuation of E^(i): it equals i."""
    if not 1 <= i <= st.M:
        raise InputError(f"level {i} outside 1..{st.M}")
    return i


@dataclass(frozen=True)
class StairCycleClass:
    base: VCycleClass
    cs: Fraction = Fraction(0)
    cf: tuple = ()

    @property
    def level(self) -> int:
        return len(self.cf)


def z_recursion(n, lambdas, z0: StairCycleClass) -> StairCycleClass:
    """z_i = z_{i-1} - (2 lambda_i n + lambda_i^2) f_i - lambda_i^2 s_i."""
    n = to_rat(n)
    cs, cf = to_rat(z0.cs), list(z0.cf)
    prev = n
    for lam in lambdas:
        lam = to_rat(lam)
        if not 0 <= lam <= n:
            raise InputError(f"lambda = {lam} outside [0, n = {n}]")
        if lam > prev:
            raise InputError("lambdas must satisfy n >= lambda_1 >= lambda_2 >= ...")
        prev = lam
        cf.append(-(2 * lam * n + lam * lam))
        cs -= lam * lam
    return StairCycleClass(z0.base, cs, tuple(cf))


@dataclass(frozen=True)
class LedgerRow:
    lam: Fraction
    k: Fraction = Fraction(0)
    d_h: Fraction = Fraction(0)
    d_v: Fraction = Fraction(0)
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("lam", "k", "d_h", "d_v", "alpha", "beta"):
            object.__setattr__(self, name, to_rat(getattr(self, name)))

    def to_json(self):
        return {"lambda": rat_json(self.lam), "k": rat_json(self.k), "d_h": rat_json(self.d_h),
                "d_v": rat_json(self.d_v), "alpha": rat_json(self.alpha),
                "beta": rat_json(self.beta)}


@dataclass(frozen=True)
class LevelLedger:
    n: Fraction
    rows: tuple
    C0_dot_L: Fraction = Fraction(0)
    C01_dot_L1: Fraction = Fraction(0)
    integral: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n", to_rat(self.n))
        object.__setattr__(self, "C0_dot_L", to_rat(self.C0_dot_L))
        object.__setattr__(self, "C01_dot_L1", to_rat(self.C01_dot_L1))
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def lambdas(self):
        return [r.lam for r in self.rows]


def ledger_violations(ledger: LevelLedger) -> list:
    """Names of violated ledger invariants (empty list when consistent)."""
    bad = []
    n = ledger.n
    prev = n
    for i, r in enumerate(ledger.rows, start=1):
        if r.lam > prev or r.lam < 0:
            bad.append(f"level {i}: lambdas must satisfy n >= lambda_1 >= lambda_2 >= ... >= 0")
        prev = r.lam
        if r.alpha > 3 * n * n:
            bad.append(f"level {i}: alpha = {r.alpha} exceeds deg Z^h = 3n^2")
        if r.beta < r.d_h:
            bad.append(f"level {i}: beta = {r.beta} < d_h = {r.d_h}")
        for name in ("k", "d_h", "d_v", "alpha"):
            if getattr(r, name) < 0:
                bad.append(f"level {i}: {name} is negative")
        if ledger.integral:
            for name in ("lam", "k", "d_h", "d_v", "alpha", "beta"):
                if getattr(r, name).denominator != 1:
                    bad.append(f"level {i}: {name} is not an integer")
    for name in ("C0_dot_L", "C01_dot_L1"):
        if getattr(ledger, name) < 0:
            bad.append(f"{name} is negative")
    return bad


def _step_terms(st: Staircase, i: int, ledger: LevelLedger) -> dict:
    """Right-hand side of the level-i relation, term by term."""
    r = ledger.rows[i - 1]
    n = ledger.n
    terms = {"alpha": r.alpha}
    if i == 1:
        terms["C0.L"] = ledger.C0_dot_L
    else:
        p = ledger.rows[i - 2]
        terms["d_v(prev)"] = p.d_v
        terms["beta(prev) - d_h(prev)"] = p.beta - p.d_h
        if st.special and i == 2:
            terms["C01.L1"] = ledger.C01_dot_L1
    terms["-2 lambda n"] = -2 * r.lam * n
    terms["-lambda^2"] = -r.lam * r.lam
    return terms


_SOLVABLE = ("d_v", "beta", "alpha")


def ledger_step(st: Staircase, i: int, ledger: LevelLedger, solve_for: Optional[str] = None):
    """Check d_v^(i) + beta_i = alpha_i + (carry from level i-1) - 2 lambda_i n - lambda_i^2.

    With ``solve_for`` in {"d_v", "beta", "alpha"} the designated field of row
    i is solved for instead, and the completed row is returned.
    """
    if not 1 <= i <= min(st.M, len(ledger.rows)):
        raise InputError(f"level {i} outside the ledger")
    r = ledger.rows[i - 1]
    rhs = sum(_step_terms(st, i, ledger).values(), Fraction(0))
    lhs = r.d_v + r.beta
    if solve_for is None:
        residual = lhs - rhs
        return {"level": i, "lhs": rat_json(lhs), "rhs": rat_json(rhs),
                "residual": rat_json(residual), "holds": residual == 0}
    if solve_for not in _SOLVABLE:
        raise InputError(f"can only solve for one of {_SOLVABLE}")
    if solve_for == "d_v":
        return LedgerRow(r.lam, r.k, r.d_h, rhs - r.beta, r.alpha, r.beta)
    if solve_for == "beta":
        return LedgerRow(r.lam, r.k, r.d_h, r.d_v, r.alpha, rhs - r.d_v)
    # alpha enters the right-hand side with coefficient +1
    return LedgerRow(r.lam, r.k, r.d_h, r.d_v, r.alpha + (lhs - rhs), r.beta)


def level_bound(st: Staircase, ledger: LevelLedger, i: int) -> Fraction:
    n = ledger.n
    b = ledger.C0_dot_L
    if st.special and i >= 2:
        b += ledger.C01_dot_L1
    for r in ledger.rows[:i]:
        b += 3 * n * n - 2 * r.lam * n - r.lam * r.lam
    return b


def ledger_bound(st: Staircase, ledger: LevelLedger) -> dict:
    """Upper bounds for d_v^(i) + beta_i at every level, checked against the ledger."""
    bad = ledger_violations(ledger)
    if bad:
        raise InputError("; ".join(bad))
    out = []
    for i in range(1, min(st.M, len(ledger.rows)) + 1):
        r = ledger.rows[i - 1]
        b = level_bound(st, ledger, i)
        out.append({"level": i, "bound": rat_json(b), "value": rat_json(r.d_v + r.beta),
                    "holds": r.d_v + r.beta <= b})
    return {"levels": out, "holds": all(x["holds"] for x in out)}
