import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from cubic_rigidity.errors import InputError, UncoveredRegimeError, PreconditionError
from cubic_rigidity.exact import MultiPoly, V
from cubic_rigidity.exclusion import (CaseParams, atomize, box_minimum, complete_square_certificate,
                                      diagonal_minimum, exclude_case, feasibility_search, im_lower_bound,
                                      phi_family, phi_from_bounds, phi_polynomial, phi_rewritten, phi_value,
                                      replay_exclusion, upper_bound_lhs)
from cubic_rigidity.graph import CaseTag
from helpers import from_sympy, to_sympy

n, e, eps, S0, S1, S, M, lam = (V(x) for x in ("n", "e", "eps", "Sigma0", "Sigma1", "Sigma", "M", "lambda"))
t = V("n_minus_lambda")


def params(case, M=1, special=False, singular=False, **kw):
    return CaseParams(CaseTag(case, special, M, singular), **kw)


class TestBounds:
    def test_lower_examples(self):
        assert im_lower_bound(params("A", n=1, e=1, lambdas=(1,), eps=1, Sigma0=1, Sigma1=0)) == 9
        assert im_lower_bound(params("B", n=1, e=1, lambdas=(0,), eps=2, Sigma=2, sum_p_squared=2)) == Fraction(25, 2)

    @pytest.mark.parametrize("case,kw", [("A", dict(Sigma0=1, Sigma1=2, eps=3)), ("B", dict(Sigma=2, eps=3)),
                                         ("C", dict(Sigma0=1, Sigma1=2, eps_plus=3, eps_minus=2))])
    def test_lambda_n_drops_eps_term(self, case, kw):
        p = params(case, M=2, n=2, e=1, lambdas=(2, 2), **kw)
        q = params(case, M=2, n=2, e=1, lambdas=(2, 2), **{**kw, **{k: 0 for k in kw if k.startswith("eps")}}) \
            if case != "B" else None
        if q is not None:
            assert im_lower_bound(p) == im_lower_bound(q)

    @given(st.fractions(min_value=Fraction(1, 4), max_value=6, max_denominator=4))
    def test_upper_examples(self, ev):
        assert upper_bound_lhs(params("A", n=1, e=ev, lambdas=(1,), eps=1, Sigma0=1)) == 3 + 4 * ev
        assert upper_bound_lhs(params("B", n=1, e=ev, lambdas=(0,), eps=1, Sigma=1)) == 4 * ev + 3

    def test_special_same_formula(self):
        kw = dict(M=2, n=3, e=2, lambdas=(2, 1), eps=2, Sigma0=1, Sigma1=1)
        assert upper_bound_lhs(params("A", special=True, **kw)) == upper_bound_lhs(params("A", **kw))

    def test_zero_denominator(self):
        with pytest.raises(InputError):
            params("A", n=1, e=1, lambdas=(1,), eps=1)

    def test_precondition_p_squared(self):
        with pytest.raises(PreconditionError):
            params("B", n=1, e=1, lambdas=(0,), eps=1, Sigma=2, sum_p_squared=3)

    def test_singular_restriction(self):
        with pytest.raises(UncoveredRegimeError):
            params("C", M=3, special=True, singular=True, n=1, e=1, lambdas=(0, 0, 0), Sigma0=1)
        with pytest.raises(UncoveredRegimeError):
            params("A", M=2, special=True, singular=True, n=1, e=1, lambdas=(0, 0), Sigma0=1)

    def test_monotone_in_lambda(self):
        rng = random.Random(4)
        for _ in range(200):
            case = rng.choice("ABC")
            Mv = rng.randint(1, 4)
            nv = Fraction(rng.randint(1, 8))
            kw = dict(eps=rng.randint(1, 5), Sigma=rng.randint(1, 5), Sigma0=rng.randint(0, 5),
                      Sigma1=rng.randint(1, 5), eps_plus=rng.randint(1, 5), eps_minus=rng.randint(0, 5))
            lams = sorted((nv * Fraction(rng.randint(0, 4), 4) for _ in range(Mv)), reverse=True)
            p = params(case, M=Mv, n=nv, e=Fraction(rng.randint(1, 24), 4), lambdas=tuple(lams), **kw)
            i = rng.randrange(Mv)
            bumped = list(lams)
            bumped[i] = min(nv, bumped[i] + nv / 4)
            q = params(case, M=Mv, n=nv, e=p.e, lambdas=tuple(bumped), **kw)
            assert im_lower_bound(q) <= im_lower_bound(p)
            assert upper_bound_lhs(q) <= upper_bound_lhs(p)


def sympy_phi(case):
    """X^2 - D U on the diagonal written straight in sympy."""
    sn, se, sl, sM, seps, sS0, sS1, sS = sympy.symbols("n e lambda M eps Sigma0 Sigma1 Sigma")
    if case == "B":
        X = sS * sn + sM * seps * (sn - sl) + se
        return sympy.expand(X ** 2 - sS * (4 * sn * se + sM * seps * (3 * sn ** 2 - 2 * sl * sn - sl ** 2)))
    if case == "A":
        X = (2 * sS0 + sS1) * sn + sM * seps * (sn - sl) + se
        U = 3 * sn ** 2 * sS0 + 4 * sn * se + sM * seps * (3 * sn ** 2 - 2 * sl * sn - sl ** 2)
        return sympy.expand(X ** 2 - (sS0 + sS1) * U)
    lp, lm, Mp, Mm, ep, em = sympy.symbols("lambda_plus lambda_minus M_plus M_minus eps_plus eps_minus")
    X = (2 * sS0 + sS1) * sn + Mp * ep * (sn - lp) + Mm * em * (sn - lm) + se
    U = (3 * sn ** 2 * sS0 + 4 * sn * se + Mp * ep * (3 * sn ** 2 - 2 * lp * sn - lp ** 2)
         + Mm * em * (3 * sn ** 2 - 2 * lm * sn - lm ** 2))
    return sympy.expand(X ** 2 - (sS0 + sS1) * U)


class TestPhi:
    @pytest.mark.parametrize("case", "ABC")
    def test_display_equals_bounds(self, case):
        assert phi_polynomial(case) == from_sympy(sympy_phi(case))
        assert phi_polynomial(case) == phi_from_bounds(case)

    def test_A_degenerate(self):
        assert phi_polynomial("A").subst({"Sigma1": 0, "M": 0}) == S0 ** 2 * n ** 2 + e ** 2

    def test_B_at_lambda_n(self):
        assert phi_polynomial("B").subst({"lambda": n}) == (S * n - e) ** 2

    def test_C_reduces_to_A(self):
        c = phi_polynomial("C").subst({"eps_minus": 0}).subst(
            {"eps_plus": eps, "M_plus": M, "lambda_plus": lam})
        assert c.subst({"M_minus": 0}) == phi_polynomial("A")
        assert c == phi_polynomial("A")

    def test_rewrite_only_touches_the_factor(self):
        diff = phi_polynomial("A") - phi_rewritten("A")
        assert diff == M * eps * S1 * (n - lam) * (2 * n - (n + lam))

    def test_phi_value_matches_polynomial(self):
        p = params("A", M=3, n=4, e=Fraction(3, 2), lambdas=(1, 1, 1), eps=2, Sigma0=3, Sigma1=1)
        assert phi_value(p) == phi_polynomial("A").evaluate(
            dict(n=4, e=Fraction(3, 2), **{"lambda": 1}, M=3, eps=2, Sigma0=3, Sigma1=1))
        lower, upper = im_lower_bound(p), upper_bound_lhs(p)
        assert (lower - upper) * 4 == phi_value(p)


class TestCertificates:
    def test_B_is_a_square(self):
        c = complete_square_certificate("B")
        assert c.residual.is_zero() and c.residual_terms == ()
        assert c.square_base == S * n - M * eps * (n - lam) - e

    def test_A_residual(self):
        c = complete_square_certificate("A")
        assert c.residual == S0 * (S0 + S1) * n ** 2 + M * eps * S0 * t ** 2
        assert c.rewrite_slack == M * eps * S1 * t ** 2
        assert c.verify()

    def test_C_residual_golden(self):
        c = complete_square_certificate("C")
        tp, tm = V("n_minus_lambda_plus"), V("n_minus_lambda_minus")
        golden = (S0 * (S0 + S1) * n ** 2 + V("M_plus") * V("eps_plus") * S0 * tp ** 2
                  + V("M_minus") * V("eps_minus") * S0 * tm ** 2)
        assert c.residual == golden
        assert all(k > 0 for _, k in c.residual.monomials())
        assert c.verify()

    @pytest.mark.parametrize("case", "ABC")
    def test_identity(self, case):
        c = complete_square_certificate(case)
        assert atomize(c.square) + c.residual == atomize(phi_rewritten(case))
        assert atomize(phi_polynomial(case)) == atomize(phi_rewritten(case)) + c.rewrite_slack
        assert MultiPoly.from_json(c.to_json()["residual"]) == c.residual

    def test_sympy_identity(self):
        # independent check that square + residual equals the rewritten display
        c = complete_square_certificate("A")
        lhs = to_sympy(atomize(phi_rewritten("A")))
        rhs = to_sympy(atomize(c.square)) + to_sympy(c.residual)
        assert sympy.expand(lhs - rhs) == 0


class TestExclude:
    def test_case_b(self):
        p = params("B", n=1, e=1, lambdas=(0,), eps=2, Sigma=2, sum_p_squared=2)
        c = exclude_case(p)
        assert c["lower_bound"] == "25/2" and c["upper_bound"] == 5
        assert c["verdict"] == "contradiction-certified"
        assert all(x["holds"] for x in c["phi_chain"])
        assert replay_exclusion(c)

    def test_case_a(self):
        c = exclude_case(params("A", n=1, e=1, lambdas=(1,), eps=1, Sigma0=1, Sigma1=0))
        assert (c["lower_bound"], c["upper_bound"], c["verdict"]) == (9, 7, "contradiction-certified")

    def test_e_nonpositive(self):
        for ev in (0, -1):
            with pytest.raises(PreconditionError):
                params("A", n=1, e=ev, lambdas=(1,), eps=1, Sigma0=1)

    def test_c_terms(self):
        base = dict(M=2, n=3, e=1, lambdas=(2, 1), eps=2, Sigma0=1, Sigma1=1, Sigma_lower=1)
        c = exclude_case(params("A", C0_dot_L=5, **base))
        assert c["raw_upper_bound"] is not None and all(h["holds"] for h in c["hypotheses"])
        with pytest.raises(PreconditionError):
            exclude_case(params("A", C0_dot_L=6, **base))

    def test_singular_center(self):
        p = params("C", M=2, special=True, singular=True, n=3, e=Fraction(1, 2), lambdas=(2, 1), eps=1,
                   eps_plus=2, eps_minus=1, Sigma0=1, Sigma1=3, C0_dot_L=0, C01_dot_L1=0)
        c = exclude_case(p)
        assert c["nuF"] == 6 and c["verdict"] == "contradiction-certified"

    def test_random_instances(self):
        rng = random.Random(9)
        for _ in range(150):
            case = rng.choice("ABC")
            Mv = rng.randint(1, 3)
            nv = Fraction(rng.randint(1, 6))
            lams = tuple(sorted((nv * Fraction(rng.randint(0, 4), 4) for _ in range(Mv)), reverse=True))
            p = params(case, M=Mv, n=nv, e=Fraction(rng.randint(1, 24), 4), lambdas=lams,
                       eps=rng.randint(1, 5), Sigma=rng.randint(1, 5), Sigma0=rng.randint(0, 5),
                       Sigma1=rng.randint(1, 5), eps_plus=rng.randint(1, 5), eps_minus=rng.randint(0, 5))
            c = exclude_case(p)
            assert c["verdict"] == "contradiction-certified"
            assert all(x["holds"] for x in c["phi_chain"])


class TestDiagonal:
    @pytest.mark.parametrize("case", "ABC")
    def test_small(self, case):
        rng = random.Random(12)
        for Mv in (1, 2, 3):
            for _ in range(5):
                fixed = dict(n=Fraction(rng.randint(1, 9), rng.randint(1, 3)), e=Fraction(rng.randint(1, 20), 4),
                             eps=rng.randint(1, 4), Sigma=rng.randint(1, 4), Sigma0=rng.randint(0, 4),
                             Sigma1=rng.randint(1, 4), eps_plus=rng.randint(1, 4), eps_minus=rng.randint(0, 4))
                assert box_minimum(case, Mv, fixed)[0] == diagonal_minimum(case, Mv, fixed)[0]

    def test_family_symmetric(self):
        f = phi_family("A", 3)
        assert f.subst({"lambda_1": V("lambda_2"), "lambda_2": V("lambda_1")}) == f


RANGES_B = {"n": {"min": 1, "max": 5}, "M": [1, 2, 3], "eps": {"min": 1, "max": 4}, "Sigma": {"min": 1, "max": 6},
            "e": {"min": "1/2", "max": 5, "step": "1/2"}, "lambda_fractions": [0, "1/2", 1]}


class TestSearch:
    def test_case_b_grid(self):
        rep = feasibility_search("B", RANGES_B)
        assert rep["feasible"] == 0 and rep["cells"] > 0 and rep["instances"] == []

    def test_filter_e(self):
        rep = feasibility_search("B", {**RANGES_B, "e": [-1, 0, 1]})
        assert rep["warnings"] and rep["feasible"] == 0

    def test_c_with_zero_minus_matches_a(self):
        common = {"n": [1, 2, 3], "M": [1, 2], "Sigma0": [0, 1, 2], "Sigma1": [0, 1, 3],
                  "e": [Fraction(1, 4), 1, 3], "lambda_fractions": [0, Fraction(1, 2), 1]}
        a = feasibility_search("A", {**common, "eps": [1, 2, 4]})
        c = feasibility_search("C", {**common, "eps_plus": [1, 2, 4], "eps_minus": [0]})
        assert (a["cells"], a["feasible"], a["min_phi"]) == (c["cells"], c["feasible"], c["min_phi"])

    def test_grid_matches_fraction_oracle(self):
        ranges = {"n": [1, 2], "M": [1, 2], "eps_plus": [1, 2], "eps_minus": [0, 1], "Sigma0": [0, 1],
                  "Sigma1": [1, 2], "e": [Fraction(1, 3), 1], "lambda_fractions": [0, Fraction(1, 3), 1]}
        rep = feasibility_search("C", ranges)
        best = None
        count = 0
        for nv, Mv, ep, em, s0, s1, ev in itertools.product([1, 2], [1, 2], [1, 2], [0, 1], [0, 1], [1, 2],
                                                            [Fraction(1, 3), 1]):
            for tup in itertools.combinations_with_replacement([1, Fraction(1, 3), 0], Mv):
                p = params("C", M=Mv, n=nv, e=ev, lambdas=tuple(f * nv for f in tup), eps_plus=ep,
                           eps_minus=em, Sigma0=s0, Sigma1=s1)
                v = phi_value(p)
                best = v if best is None else min(best, v)
                count += 1
        assert rep["cells"] == count and Fraction(rep["min_phi"]) == best

    def test_restrictions(self):
        with pytest.raises(UncoveredRegimeError):
            feasibility_search("A", RANGES_B, special=True, singular_center=True)
        with pytest.raises(InputError):
            feasibility_search("B", {"n": [1]})
        with pytest.raises(InputError):
            feasibility_search("B", {**RANGES_B, "Sigma": ["1/2"]})

    def test_jobs(self):
        one = feasibility_search("B", RANGES_B)
        two = feasibility_search("B", RANGES_B, jobs=2)
        assert {k: one[k] for k in ("cells", "feasible", "min_phi")} == \
            {k: two[k] for k in ("cells", "feasible", "min_phi")}
