from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from cubic_rigidity.errors import InputError
from cubic_rigidity.exact import (MultiPoly, QuadOverBox, V, _adj_det, poly_arith, poly_subst, qf_min_box,
                                  quadratic_parts,
                                  rat_json, to_rat, univariate_box_min, var_key)
from helpers import _solve as _solve_ref, from_sympy, reference_box_min, to_sympy

NAMES = ["n", "e", "eps", "Sigma1", "lambda", "lambda_2"]

rats = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def polys(draw, max_terms=5):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = tuple((v, draw(st.integers(1, 2))) for v in draw(st.sets(st.sampled_from(NAMES), max_size=3)))
        terms[mono] = draw(rats)
    return MultiPoly(terms)


class TestRationals:
    def test_parse(self):
        assert to_rat("3/6") == Fraction(1, 2)
        assert to_rat(-4) == -4
        assert to_rat(" -7/2 ") == Fraction(-7, 2)

    @pytest.mark.parametrize("bad", [0.5, True, "1.5", "a/b", "1/0", None, [1]])
    def test_refuse(self, bad):
        with pytest.raises(InputError):
            to_rat(bad)

    def test_json(self):
        assert rat_json(Fraction(4, 2)) == 2
        assert rat_json(Fraction(-3, 4)) == "-3/4"


class TestPolyArith:
    def test_binomial(self):
        x, y = V("x"), V("y")
        assert poly_arith(x + y, x + y, "mul") == x ** 2 + 2 * x * y + y ** 2

    def test_self_difference_is_empty(self):
        p = V("n") * 3 - V("e")
        d = poly_arith(p, p, "sub")
        assert d.is_zero() and d.terms == {}

    def test_square_expansion_by_hand(self):
        S1, M, eps, n, lam, e = (V(x) for x in ("Sigma1", "M", "eps", "n", "lambda", "e"))
        t = n - lam
        lhs = (S1 * n - M * eps * t - e) ** 2
        rhs = (S1 ** 2 * n ** 2 + M ** 2 * eps ** 2 * t ** 2 + e ** 2 - 2 * S1 * M * eps * n * t
               - 2 * S1 * n * e + 2 * M * eps * t * e)
        assert lhs == rhs
        assert to_sympy(lhs) == sympy.expand(to_sympy(rhs))

    def test_unknown_op(self):
        with pytest.raises(InputError):
            poly_arith(V("n"), V("n"), "div")

    @given(polys(), polys(), polys())
    def test_ring_axioms(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a and a * b == b * a
        assert a - a == MultiPoly()

    @given(polys(), polys())
    def test_product_matches_sympy(self, a, b):
        assert from_sympy(to_sympy(a) * to_sympy(b)) == a * b

    @given(polys())
    def test_json_round_trip(self, p):
        assert MultiPoly.from_json(p.to_json()) == p


class TestSubst:
    def test_collapse(self):
        n, lam = V("n"), V("lambda")
        assert poly_subst((n - lam) ** 2, {"lambda": n}).is_zero()
        assert poly_subst(2 * lam * n + lam ** 2, {"lambda": 0}).is_zero()

    def test_named_rewrite_of_one_factor(self):
        M, eps, S1, n, lam = (V(x) for x in ("M", "eps", "Sigma1", "n", "lambda"))
        # the (n + lambda) factor is a stand-in variable, so only it changes
        term = -M * eps * S1 * (n - lam) * V("w")
        assert term.subst({"w": 2 * n}) == -2 * M * eps * S1 * n * (n - lam)

    def test_unknown_variable(self):
        with pytest.raises(InputError):
            V("n").subst({"q": 1})

    @given(polys(), rats, rats)
    def test_subst_matches_sympy(self, p, a, b):
        bind = {v: x for v, x in zip(p.variables, (a, b))}
        expect = to_sympy(p).subs({sympy.Symbol(v): sympy.Rational(x.numerator, x.denominator)
                                   for v, x in bind.items()})
        assert from_sympy(expect) == p.subst(bind)

    def test_registry_order(self):
        p = V("lambda_10") + V("lambda_2") + V("e") + V("n") + V("zeta")
        assert p.variables == ("n", "e", "lambda_2", "lambda_10", "zeta")
        assert var_key("n") < var_key("eps_minus")


def grid_min(poly, names, lo, hi, steps):
    best = None
    pts = [lo + (hi - lo) * Fraction(i, steps) for i in range(steps + 1)]
    import itertools
    for x in itertools.product(pts, repeat=len(names)):
        v = poly.evaluate(dict(zip(names, x)))
        best = v if best is None or v < best else best
    return best


class TestQfMinBox:
    def test_examples(self):
        lam = V("lambda")
        assert qf_min_box(QuadOverBox(lam ** 2, {"lambda": (0, 1)})) == (0, {"lambda": 0})
        assert qf_min_box(QuadOverBox((lam - 2) ** 2, {"lambda": (0, 1)})) == (1, {"lambda": 1})

    def test_symmetric_form_on_the_diagonal(self):
        l1, l2 = V("lambda_1"), V("lambda_2")
        q = l1 ** 2 + l2 ** 2 - 2 * l1 - 2 * l2 + l1 * l2
        val, arg = qf_min_box(QuadOverBox(q, {"lambda_1": (0, 1), "lambda_2": (0, 1)}))
        assert val == Fraction(-4, 3) and arg["lambda_1"] == arg["lambda_2"] == Fraction(2, 3)
        assert val <= grid_min(q, ["lambda_1", "lambda_2"], 0, 1, 20)
        diag = q.subst({"lambda_1": V("t"), "lambda_2": V("t")})
        assert univariate_box_min(diag.coefficient({"t": 2}), diag.coefficient({"t": 1}),
                                  diag.coefficient({}), Fraction(0), Fraction(1))[0] == val

    def test_concave_and_fixed(self):
        x, y, c = V("x"), V("y"), V("c")
        q = -(x - y) ** 2 + c * x
        val, arg = qf_min_box(QuadOverBox(q, {"x": (0, 2), "y": (0, 2)}, fixed={"c": 1}))
        assert val == -4 and arg == {"x": 0, "y": 2}

    def test_rejects(self):
        x = V("x")
        with pytest.raises(InputError):
            qf_min_box(QuadOverBox(x ** 3, {"x": (0, 1)}))
        with pytest.raises(InputError):
            qf_min_box(QuadOverBox(x * V("y"), {"x": (0, 1)}))
        with pytest.raises(InputError):
            QuadOverBox(x, {"x": (1, 0)})
        with pytest.raises(InputError):
            qf_min_box(QuadOverBox(x, {f"x_{i}": (0, 1) for i in range(7)}))

    @given(st.lists(rats, min_size=6, max_size=6))
    def test_against_grid(self, c):
        x, y = V("x"), V("y")
        q = c[0] * x * x + c[1] * y * y + c[2] * x * y + c[3] * x + c[4] * y + c[5]
        val, arg = qf_min_box(QuadOverBox(q, {"x": (0, 1), "y": (0, 1)}))
        assert q.evaluate(arg) == val
        assert all(0 <= v <= 1 for v in arg.values())
        assert val <= grid_min(q, ["x", "y"], 0, 1, 8)

    @given(st.integers(1, 4), st.data())
    def test_against_reference_enumeration(self, k, data):
        names = [f"x_{i}" for i in range(1, k + 1)]
        xs = [V(v) for v in names]
        small = st.fractions(min_value=-5, max_value=5, max_denominator=6)
        q = MultiPoly() + data.draw(small)
        for i in range(k):
            q = q + data.draw(small) * xs[i]
            for j in range(i, k):
                q = q + data.draw(small) * xs[i] * xs[j]
        box = [tuple(sorted((data.draw(small), data.draw(small)))) for _ in range(k)]
        val, arg = qf_min_box(QuadOverBox(q, dict(zip(names, box))))
        c, b, A = quadratic_parts(q, names)
        assert val == reference_box_min(c, b, A, box)
        assert q.evaluate(arg) == val


@given(st.integers(1, 5), st.data())
def test_adj_det_inverts(k, data):
    M = [[data.draw(st.integers(-6, 6)) for _ in range(k)] for _ in range(k)]
    out = _adj_det(M)
    ref = [[Fraction(x) for x in row] for row in M]
    cols = [_solve_ref(ref, [Fraction(int(i == j)) for i in range(k)]) for j in range(k)]
    if out is None:
        assert cols[0] is None
        return
    d, E = out
    assert d != 0
    for i in range(k):
        for j in range(k):
            assert Fraction(E[i][j], d) == cols[j][i]
