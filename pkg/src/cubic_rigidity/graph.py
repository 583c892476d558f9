"""Resolution graphs of a discrete valuation: path counts, the Sigma/N
aggregates, nu(F) and the Noether-Fano identity."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from .errors import InputError, UncoveredRegimeError
from .exact import rat_json, to_rat


@dataclass(frozen=True)
class CaseTag:
    case: str
    special: bool = False
    M: int = 1
    singular_center: bool = False

    def __post_init__(self):
        if self.case not in ("A", "B", "C"):
            raise InputError(f"case must be A, B or C, got {self.case!r}")
        if not isinstance(self.M, int) or isinstance(self.M, bool) or self.M < 1:
            raise InputError(f"staircase length M must be an integer >= 1, got {self.M!r}")
        if self.singular_center and not self.special:
            raise InputError("a singular centre only occurs on a special line")


@dataclass(frozen=True)
class ResolutionGraph:
    """Nodes 1..K; an edge (j, i) is an arrow j -> i (E_j was blown up later)."""
    K: int
    edges: tuple = ()
    point_phase: Optional[int] = None
    nu: tuple = ()
    delta: tuple = ()
    in_E: tuple = ()
    in_E_plus: tuple = ()
    in_E_minus: tuple = ()

    def __post_init__(self):
        if not isinstance(self.K, int) or isinstance(self.K, bool) or self.K < 1:
            raise InputError(f"K must be a positive integer, got {self.K!r}")
        edges = []
        for e in self.edges:
            try:
                j, i = e
            except (TypeError, ValueError):
                raise InputError(f"edge must be a pair [j, i], got {e!r}") from None
            for v in (j, i):
                if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= self.K:
                    raise InputError(f"edge endpoint {v!r} outside 1..{self.K}")
            if i == j:
                raise InputError(f"self loop at node {i}")
            edges.append((j, i))
        object.__setattr__(self, "edges", tuple(edges))
        if self.point_phase is not None and not 0 <= self.point_phase <= self.K:
            raise InputError(f"pointPhase must lie in 0..{self.K}")
        object.__setattr__(self, "nu", tuple(to_rat(x) for x in self.nu))
        object.__setattr__(self, "delta", tuple(to_rat(x) for x in self.delta))
        for name in ("nu", "delta", "in_E", "in_E_plus", "in_E_minus"):
            v = getattr(self, name)
            if v and len(v) != self.K:
                raise InputError(f"{name} must have K = {self.K} entries")
        for name in ("in_E", "in_E_plus", "in_E_minus"):
            object.__setattr__(self, name, tuple(bool(x) for x in getattr(self, name)))


def path_counts(g: ResolutionGraph) -> list:
    """p_i = number of paths from node K to node i (p_K = 1)."""
    preds = {v: set() for v in range(1, g.K + 1)}
    for j, i in g.edges:
        preds[i].add(j)
    try:
        order = list(TopologicalSorter(preds).static_order())
    except CycleError as exc:
        raise InputError(f"resolution graph has a cycle: {exc.args[1]}") from None
    mult = {}
    for j, i in g.edges:
        mult[(j, i)] = mult.get((j, i), 0) + 1
    p = {v: 0 for v in range(1, g.K + 1)}
    p[g.K] = 1
    for v in order:
        if v == g.K:
            continue
        p[v] = sum(p[j] * mult[(j, v)] for j in preds[v])
    return [p[v] for v in range(1, g.K + 1)]


def chain_graph(K: int, **kw) -> ResolutionGraph:
    return ResolutionGraph(K, tuple((i + 1, i) for i in range(1, K)), **kw)


@dataclass(frozen=True)
class Aggregates:
    p: tuple
    Sigma0: Fraction = Fraction(0)
    Sigma1: Fraction = Fraction(0)
    Sigma: Fraction = Fraction(0)
    sum_p_squared: Fraction = Fraction(0)
    N_star: int = 0
    N: int = 0
    Sigma_star: Fraction = Fraction(0)      # eps
    Sigma_lower: Fraction = Fraction(0)     # Sigma_*
    N_star_plus: int = 0
    N_star_minus: int = 0
    N_plus: int = 0
    N_minus: int = 0
    eps_plus: Fraction = Fraction(0)
    eps_minus: Fraction = Fraction(0)
    Sigma_plus: Fraction = Fraction(0)
    Sigma_minus: Fraction = Fraction(0)

    @property
    def eps(self) -> Fraction:
        return self.Sigma_star

    def to_json(self):
        out = {}
        for k, v in self.__dict__.items():
            if k == "p":
                out[k] = list(v)
            elif isinstance(v, Fraction):
                out[k] = rat_json(v)
            else:
                out[k] = v
        out["eps"] = rat_json(self.eps)
        return out


def _last_true(flags, name):
    if not flags:
        raise InputError(f"membership flags '{name}' are required for this case")
    idx = [i for i, f in enumerate(flags, start=1) if f]
    if not idx:
        raise InputError(f"no centre lies on the divisor for '{name}'")
    return max(idx)


def aggregates(g: ResolutionGraph, case: CaseTag) -> Aggregates:
    p = path_counts(g)
    psum = lambda a, b: Fraction(sum(p[a:b]))  # noqa: E731 - p_{a+1} + ... + p_b
    sq = Fraction(sum(x * x for x in p))
    if case.case in ("A", "C"):
        if g.point_phase is None:
            raise InputError("pointPhase L is required in cases A and C")
        L = g.point_phase
    if case.case == "B":
        Ns = _last_true(g.in_E, "in_E")
        return Aggregates(tuple(p), Sigma=psum(0, g.K), sum_p_squared=sq, N_star=Ns, N=Ns,
                          Sigma_star=psum(0, Ns), Sigma_lower=psum(0, Ns))
    base = dict(p=tuple(p), Sigma0=psum(0, L), Sigma1=psum(L, g.K), Sigma=psum(0, g.K),
                sum_p_squared=sq)
    if case.case == "A":
        Ns = _last_true(g.in_E, "in_E")
        N = min(Ns, L)
        return Aggregates(**base, N_star=Ns, N=N, Sigma_star=psum(0, Ns), Sigma_lower=psum(0, N))
    Np = _last_true(g.in_E_plus, "in_E_plus")
    Nm = _last_true(g.in_E_minus, "in_E_minus")
    extra = {}
    if case.singular_center:
        Ns = _last_true(g.in_E, "in_E")
        extra = dict(N_star=Ns, N=min(Ns, L), Sigma_star=psum(0, Ns),
                     Sigma_lower=psum(0, min(Ns, L)))
    return Aggregates(**base, **extra, N_star_plus=Np, N_star_minus=Nm, N_plus=min(Np, L),
                      N_minus=min(Nm, L), eps_plus=psum(0, Np), eps_minus=psum(0, Nm),
                      Sigma_plus=psum(0, min(Np, L)), Sigma_minus=psum(0, min(Nm, L)))


def check_case_b_multiplicities(g: ResolutionGraph) -> None:
    """nu_i >= sum_{j -> i} nu_j for a chain of curve blow ups."""
    if not g.nu:
        raise InputError("multiplicities nu are required")
    for i in range(1, g.K + 1):
        incoming = sum((g.nu[j - 1] for j, t in g.edges if t == i), Fraction(0))
        if g.nu[i - 1] < incoming:
            raise InputError(f"node {i}: nu_{i} = {g.nu[i - 1]} < sum over arrows into it = {incoming}")


def valuation_of_fiber(case: CaseTag, agg: Aggregates, d_F: int) -> Fraction:
    """nu(F) in the covered regimes; anything else raises UncoveredRegimeError."""
    if d_F not in (1, 2) or (d_F == 2) != case.special:
        raise InputError(f"d_F = {d_F} does not match special = {case.special}")
    if case.singular_center:
        if case.case != "C" or case.M != 2:
            raise UncoveredRegimeError("the singular-centre formula covers case C with M = 2 only")
        return 2 * agg.eps_plus + agg.eps_minus + agg.eps
    # every non-singular formula is stated for M >= 2 (special case A states
    # nu(F) = 2 eps from M >= 2 on, special case C uses M = 2 off the double point)
    if case.M < 2:
        raise UncoveredRegimeError(
            f"nu(F) for case {case.case} ({'special' if case.special else 'non-special'}) "
            f"is only given for M >= 2, got M = {case.M}")
    if case.case == "C":
        return d_F * (agg.eps_plus + agg.eps_minus)
    return d_F * agg.eps


def nf_identity(case: CaseTag, agg: Aggregates, n, lambdas, nu, delta, e=None) -> dict:
    """Noether-Fano identity sum p_i nu_i = (staircase term) + n sum p_i delta_i + e.

    With ``e=None`` it is solved for; otherwise the residual is reported.
    """
    n = to_rat(n)
    lambdas = [to_rat(x) for x in lambdas]
    if len(lambdas) != case.M:
        raise InputError(f"need M = {case.M} lambdas, got {len(lambdas)}")
    p = agg.p
    if len(nu) != len(p) or len(delta) != len(p):
        raise InputError("nu and delta must have one entry per node")
    lhs = sum((pi * to_rat(v) for pi, v in zip(p, nu)), Fraction(0))
    disc = n * sum((pi * to_rat(d) for pi, d in zip(p, delta)), Fraction(0))
    if case.case == "C":
        stair = agg.eps_plus * sum((n - x for x in lambdas), Fraction(0)) + \
            agg.eps_minus * sum((n - x for x in lambdas[:-1]), Fraction(0))
    else:
        stair = agg.eps * sum((n - x for x in lambdas), Fraction(0))
    if e is None:
        e_val = lhs - stair - disc
        return {"lhs": rat_json(lhs), "staircase_term": rat_json(stair),
                "discrepancy_term": rat_json(disc), "e": rat_json(e_val),
                "maximal": e_val > 0, "holds": True}
    e_val = to_rat(e)
    residual = lhs - stair - disc - e_val
    return {"lhs": rat_json(lhs), "staircase_term": rat_json(stair),
            "discrepancy_term": rat_json(disc), "e": rat_json(e_val),
            "residual": rat_json(residual), "maximal": e_val > 0, "holds": residual == 0}
