import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from _helpers import grid, random_rational
from mollify.errors import DegreeCondition, PoleEvaluation, RealPole, ValidationError
from mollify.poly import Polynomial
from mollify.ratfun import (
    PartialFractionTerm,
    RationalFunction,
    eval_rat,
    make_kernel_rational,
    partial_fractions,
    sum_terms,
    translate_scale,
)

X = Polynomial.x()
ONE = Polynomial([1.0])
CAUCHY = RationalFunction(ONE, X * X + 1)


def test_kernel_tag_examples():
    r = make_kernel_rational(ONE, X * X + 1)
    assert r.kernel
    with pytest.raises(DegreeCondition):
        make_kernel_rational(X, X * X + 1)
    with pytest.raises(RealPole):
        make_kernel_rational(ONE, X * X - 1)


def test_zero_denominator():
    with pytest.raises(ValidationError):
        RationalFunction(ONE, Polynomial())


def test_eval_examples():
    assert eval_rat(CAUCHY, 0.0) == 1.0
    assert eval_rat(CAUCHY, 1.0) == 0.5
    with pytest.raises(PoleEvaluation):
        eval_rat(RationalFunction(ONE, X), 0.0)


def test_eval_matches_quotient():
    rng = np.random.default_rng(5)
    r = random_rational(rng)
    x = rng.uniform(-3, 3, 100)
    assert np.allclose(eval_rat(r, x), r.num(x) / r.den(x), rtol=1e-15, atol=0)


class TestTranslateScale:
    def test_cauchy_closed_form(self):
        x = np.linspace(-4, 4, 81)
        for t in (0.1, 0.5, 3.0):
            r = translate_scale(CAUCHY, t, 0.0)
            assert np.allclose(r(x).real, t / (t * t + x * x), rtol=1e-13)

    def test_identity(self):
        r = translate_scale(CAUCHY, 1.0, 0.0)
        assert r.num.allclose(CAUCHY.num) and r.den.allclose(CAUCHY.den)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.2, 5.0), st.floats(-2.0, 2.0))
    def test_pointwise(self, seed, t, y):
        rng = np.random.default_rng(seed)
        r = random_rational(rng, max_deg=6)
        x = rng.uniform(-3, 3, 50)
        got = translate_scale(r, t, y)(x)
        want = r((x - y) / t) / t
        assert np.max(np.abs(got - want)) <= 1e-10 * (1 + np.max(np.abs(want)))

    def test_poles_move(self):
        r = make_kernel_rational(ONE, X * X + 1)
        s = translate_scale(r, 2.0, 1.0)
        got = sorted((p for p, _ in s.poles), key=lambda z: z.imag)
        assert np.allclose(got, [1 - 2j, 1 + 2j])
        assert s.kernel

    def test_integral_preserved(self):
        r = make_kernel_rational(Polynomial([1.0, 0.3]), (X * X + 1) * (X * X + 0.5 * X + 2))
        base = quad(lambda x: r(x).real, -np.inf, np.inf, epsabs=1e-12)[0]
        for t, y in ((0.3, 0.0), (2.0, -1.5)):
            s = translate_scale(r, t, y)
            v = quad(lambda x: s(x).real, -np.inf, np.inf, epsabs=1e-12)[0]
            assert abs(v - base) < 1e-8


class TestPartialFractions:
    def test_cauchy_cover_up(self):
        pf = partial_fractions(CAUCHY)
        assert pf.poly_part.is_zero()
        got = {(round(t.c.imag), t.l): t.coeff for t in pf.terms}
        assert set(got) == {(-1, 1), (1, 1)}
        assert abs(got[(-1, 1)] - (-0.5j)) < 1e-13
        assert abs(got[(1, 1)] - 0.5j) < 1e-13

    def test_long_division(self):
        pf = partial_fractions(RationalFunction(X * X * X, X * X + 1))
        assert pf.poly_part.allclose(X)
        x = grid()
        rest = sum(t(x) for t in pf.terms)
        assert np.allclose(rest, -x / (x * x + 1), atol=1e-13)

    @pytest.mark.parametrize("method", ["lstsq", "laurent", "auto"])
    def test_double_poles(self, method):
        r = RationalFunction(ONE, (X * X + 1) ** 2)
        pf = partial_fractions(r, method)
        x = grid()
        v = r(x).real
        assert np.max(np.abs(pf(x) - v) / (1 + np.abs(v))) <= 1e-9
        assert max(t.l for t in pf.terms) == 2

    def test_high_multiplicity_uses_local_series(self):
        r = RationalFunction(ONE, (X * X + 1) ** 6)
        pf = partial_fractions(r)
        x = grid()
        assert np.max(np.abs(pf(x) - r(x))) <= 1e-9

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            partial_fractions(CAUCHY, "residues")

    def test_real_poles_allowed(self):
        r = RationalFunction(ONE, X * X - 1)
        pf = partial_fractions(r)
        x = np.array([0.0, 0.5, 3.0])
        assert np.allclose(pf(x), r(x))

    def test_polynomial_source(self):
        pf = partial_fractions(RationalFunction(X * X + 2, Polynomial([2.0])))
        assert pf.terms == ()
        assert pf.poly_part.allclose(Polynomial([1.0, 0.0, 0.5]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_round_trip(seed):
    r = random_rational(np.random.default_rng(seed))
    pf = partial_fractions(r)
    back = sum_terms(pf.terms, pf.poly_part)
    x = grid()
    want = r(x)
    assert np.max(np.abs(back(x) - want) / (1 + np.abs(want))) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_conjugate_symmetry(seed):
    r = random_rational(np.random.default_rng(seed), real=True)
    pf = partial_fractions(r)
    table = {(t.c, t.l): t.coeff for t in pf.terms}
    for (c, l), a in table.items():
        if c.imag != 0:
            assert table[(c.conjugate(), l)] == a.conjugate()
    assert np.max(np.abs(np.imag(pf(grid())))) <= 1e-10


class TestSumTerms:
    def test_single_term(self):
        term = PartialFractionTerm(c=1j, l=2, coeff=3.0)
        r = sum_terms([term])
        x = grid()
        assert np.allclose(r(x), term(x), rtol=1e-14)
        assert r.den.degree() == 2

    def test_empty(self):
        p = Polynomial([1.0, 2.0])
        r = sum_terms([], p)
        assert r.num.allclose(p) and r.den.allclose(ONE)

    def test_bad_order(self):
        with pytest.raises(ValidationError):
            PartialFractionTerm(c=0j, l=0, coeff=1.0)
