"""Shared oracles for the test suite."""
from fractions import Fraction

import sympy

from cubic_rigidity.exact import MultiPoly


def to_sympy(p: MultiPoly):
    syms = {v: sympy.Symbol(v) for v in p.variables}
    expr = sympy.Integer(0)
    for mono, c in p.monomials():
        t = sympy.Rational(c.numerator, c.denominator)
        for v, k in mono.items():
            t *= syms[v] ** k
        expr += t
    return sympy.expand(expr)


def from_sympy(expr) -> MultiPoly:
    expr = sympy.expand(expr)
    gens = sorted(expr.free_symbols, key=lambda s: s.name)
    if not gens:
        return MultiPoly.const(Fraction(int(sympy.numer(expr)), int(sympy.denom(expr))))
    poly = sympy.Poly(expr, *gens)
    terms = {}
    for exps, c in poly.terms():
        c = sympy.Rational(c)
        mono = tuple((g.name, k) for g, k in zip(gens, exps) if k)
        terms[mono] = Fraction(int(c.p), int(c.q))
    return MultiPoly(terms)


def random_dag(rng, K, density=0.4, multi=False):
    """Edges (j, i) with j > i, so the graph is acyclic; node K reaches every node."""
    edges = []
    for i in range(1, K):
        # keep every node reachable from K
        edges.append((rng.randint(i + 1, K), i))
        for j in range(i + 1, K + 1):
            if rng.random() < density:
                edges.append((j, i))
    if multi and edges and rng.random() < 0.3:
        edges.append(edges[0])
    return edges


def brute_force_paths(K, edges):
    """Count paths K -> i by explicit depth-first enumeration."""
    out = {v: [] for v in range(1, K + 1)}
    for j, i in edges:
        out[j].append(i)
    counts = [0] * (K + 1)
    stack = [K]
    while stack:
        v = stack.pop()
        counts[v] += 1
        stack.extend(out[v])
    return counts[1:]


def _solve(A, b):
    n = len(A)
    rows = [list(A[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [x / p for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def reference_box_min(c, b, A, box):
    """Plain Fraction face enumeration, 3**k faces, one solve each."""
    import itertools
    k = len(b)
    best = None
    for face in itertools.product((0, 1, 2), repeat=k):
        x = [None] * k
        free = []
        for i, s in enumerate(face):
            lo, hi = box[i]
            if s == 0 or (s == 1 and lo == hi):
                x[i] = lo
            elif s == 2:
                x[i] = hi
            else:
                free.append(i)
        if free:
            M = [[2 * A[i][j] for j in free] for i in free]
            rhs = [-(b[i] + 2 * sum(A[i][j] * x[j] for j in range(k) if j not in free)) for i in free]
            sol = _solve(M, rhs)
            if sol is None or any(not box[i][0] <= v <= box[i][1] for i, v in zip(free, sol)):
                continue
            for i, v in zip(free, sol):
                x[i] = v
        val = c + sum(b[i] * x[i] for i in range(k)) + sum(A[i][j] * x[i] * x[j]
                                                           for i in range(k) for j in range(k))
        if best is None or val < best:
            best = val
    return best
