import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mollify.errors import DimensionLimit, NonPositiveScale, ValidationError, ZeroIntegral
from mollify.kernels import (
    audit_grid,
    ball_mass,
    bump,
    gauss,
    get_kernel,
    make_radial,
    make_tensor,
    normalize,
    poisson,
    poisson2,
    poisson_m,
    radial_kernel,
    scale,
)
from mollify._quad import integrate_1d, integrate_nd, panel_edges

# mpmath, 40 digits: int_{-1}^{1} exp(-1/(1-x^2)) dx
BUMP_INTEGRAL = 0.44399381616807943782
BUMP_NORM = 2.2522836210435810105

CATALOG = [poisson, poisson2, gauss, bump]


def integral_1d(k, R=None, tol=1e-11):
    if R is None:
        R = k.radius_for_tail(1e-11) if math.isinf(k.support_radius) else k.support_radius
    return integrate_1d(k, panel_edges(0.0, R, min(0.25, R / 8)), tol).value + 0.0


class TestNormalize:
    def test_cauchy_numeric(self):
        k = normalize(lambda x: 1 / (1 + x * x), raw_decay_C=2.0, name="c")
        assert abs(k.norm_factor - 1 / math.pi) < 1e-8

    def test_gauss_numeric(self):
        k = normalize(lambda x: np.exp(-x * x), raw_decay_C=10.0, name="g")
        assert abs(k.norm_factor - 1 / math.sqrt(math.pi)) < 1e-8

    def test_bump_oracle(self):
        assert abs(bump().norm_factor - BUMP_NORM) < 1e-7
        assert abs(1 / bump().norm_factor - BUMP_INTEGRAL) < 1e-8

    def test_zero_integral(self):
        with pytest.raises(ZeroIntegral):
            normalize(lambda x: np.asarray(x, dtype=float) * np.exp(-x * x), raw_decay_C=1.0)

    def test_dimension_cap(self):
        with pytest.raises(DimensionLimit):
            gauss(4)


@pytest.mark.parametrize("make", CATALOG, ids=lambda m: m.__name__)
def test_unit_integral_and_audit(make):
    k = make()
    assert abs(integral_1d(k) - 1) < 1e-8
    a = k.audit()
    assert a["decay_ok"] and a["parity_ok"]
    assert k.parity_even


class TestScale:
    def test_identity(self):
        x = np.linspace(-3, 3, 61)
        for make in CATALOG:
            k = make()
            assert np.array_equal(scale(k, 1.0)(x), k(x))

    def test_poisson_closed_form(self):
        x = np.linspace(-5, 5, 101)
        for t in (0.05, 0.5, 2.0):
            v = scale(poisson(), t)(x)
            assert np.max(np.abs(v - t / (math.pi * (t * t + x * x)))) <= 1e-12 * max(1, 1 / t)

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_scaled_integral(self, t):
        for make in CATALOG:
            kt = scale(make(), t)
            R = t * (make().radius_for_tail(1e-11) if math.isinf(make().support_radius) else 1.0)
            v = integrate_1d(kt, panel_edges(0.0, R, t / 4), 1e-11).value
            assert abs(v - 1) < 1e-8

    @pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
    def test_scaling_identity(self, t):
        for make in CATALOG + [lambda: make_tensor([gauss(), bump()])]:
            k = make()
            x = audit_grid(k.dim, 2.0)
            assert np.max(np.abs(scale(k, t)(x) - t ** -k.dim * k(x / t))) <= 1e-12 * max(1, t ** -k.dim)

    def test_rational_follows_scaling(self):
        kt = scale(poisson2(), 0.3)
        x = np.linspace(-2, 2, 41)
        assert np.allclose(kt.rational(x).real, kt(x), rtol=1e-12)

    @pytest.mark.parametrize("t", [0.0, -1.0, math.inf, math.nan])
    def test_bad_scale(self, t):
        with pytest.raises(NonPositiveScale):
            scale(gauss(), t)


class TestBallMass:
    @pytest.mark.parametrize("t", [1.0, 0.1, 0.01])
    @pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
    def test_poisson_arctan(self, t, r):
        assert abs(ball_mass(poisson(), t, r) - 2 / math.pi * math.atan(r / t)) < 1e-8

    def test_gauss_increasing(self):
        v = [ball_mass(gauss(), t, 1.0) for t in (1.0, 0.1, 0.01)]
        # erf(10) and erf(100) are both 1 in double precision
        assert v[0] < v[1] <= v[2] <= 1.0
        assert v[-1] >= 0.99
        assert abs(v[0] - math.erf(1.0)) < 1e-10

    def test_small_ball(self):
        assert ball_mass(poisson(), 1.0, 0.001) <= 0.01

    def test_bump_exact_inside_support(self):
        assert ball_mass(bump(), 0.5, 1.0) == 1.0
        assert ball_mass(bump(), 0.9, 1.0) == 1.0
        assert ball_mass(bump(), 2.0, 1.0) < 1.0

    @pytest.mark.parametrize("make", CATALOG, ids=lambda m: m.__name__)
    def test_concentration(self, make):
        assert ball_mass(make(), 0.01, 1.0) >= 0.95

    def test_monotone_in_r(self):
        for make in CATALOG:
            v = [ball_mass(make(), 0.5, r) for r in (0.1, 0.2, 0.4, 0.8, 1.6)]
            assert all(b >= a for a, b in zip(v, v[1:]))

    def test_radial_2d(self):
        k = radial_kernel("gauss", 2)
        assert abs(ball_mass(k, 1.0, 1.0) - (1 - math.exp(-1))) < 1e-9

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            ball_mass(gauss(), 1.0, 0.0)


class TestTensor:
    def test_origin_value(self):
        k = make_tensor([gauss(), gauss()])
        assert abs(float(k(np.zeros(2))) - 1 / math.pi) < 1e-12

    def test_single_factor(self):
        assert make_tensor([bump()]) is bump()

    def test_integral_2d(self):
        k = make_tensor([gauss(), poisson2()])
        R = 40.0
        e = [panel_edges(0.0, 6.0, 0.25), panel_edges(0.0, R, 0.25)]
        v = integrate_nd(k, e, 1e-9).value
        assert abs(v - 1) < 1e-7 + k.tail_bound(6.0)

    def test_support_diagonal(self):
        k = make_tensor([bump(), bump(), bump()])
        assert abs(k.support_radius - math.sqrt(3)) < 1e-15

    def test_dimension_limit(self):
        with pytest.raises(DimensionLimit):
            make_tensor([gauss()] * 4)

    def test_factors_must_be_1d(self):
        with pytest.raises(ValidationError):
            make_tensor([gauss(2), gauss()])


class TestRadial:
    def test_gauss_2d_value(self):
        k = make_radial(lambda s: np.exp(-s * s), 2, raw_decay_C=10.0)
        assert abs(float(k(np.zeros(2))) - 1 / math.pi) < 1e-8
        assert k.parity_even

    def test_constant_on_circles(self):
        k = radial_kernel("poisson", 2)
        th = 2 * math.pi * np.arange(64) / 64
        v = k(0.7 * np.stack([np.cos(th), np.sin(th)], axis=1))
        assert np.ptp(v) <= 1e-12

    def test_one_dim_matches_even_extension(self):
        k1 = make_radial(lambda s: np.exp(-s * s), 1, raw_decay_C=10.0)
        k0 = normalize(lambda x: np.exp(-x * x), raw_decay_C=10.0)
        x = np.linspace(-3, 3, 31)
        assert np.allclose(k1(x), k0(x), rtol=1e-10)

    def test_3d_unit_mass(self):
        k = radial_kernel("bump", 3)
        assert abs(ball_mass(k, 1.0, 1.0) - 1.0) < 1e-12
        assert abs(ball_mass(k, 1.0, 0.999999) - 1.0) < 1e-6


class TestCatalogNames:
    @pytest.mark.parametrize(
        "spec,dim",
        [("poisson", 1), ("poisson2", 1), ("poisson5", 1), ("gauss", 1), ("bump", 1),
         ("tensor(gauss,bump)", 2), ("tensor(bump, bump, bump)", 3), ("radial(gauss,2)", 2)],
    )
    def test_resolves(self, spec, dim):
        assert get_kernel(spec).dim == dim

    def test_unknown(self):
        with pytest.raises(ValidationError):
            get_kernel("laplace")


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(CATALOG), st.floats(0.01, 10.0), st.floats(-5.0, 5.0))
def test_even_kernels_symmetric(make, t, x):
    kt = scale(make(), t)
    assert kt(np.array([x])) == kt(np.array([-x]))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([poisson, poisson2, poisson_m.__wrapped__, gauss]), st.integers(3, 6), st.floats(0.5, 50.0))
def test_tail_bound_is_a_bound(make, m, R):
    k = make(m) if make is poisson_m.__wrapped__ else make()
    outside = 2 * quad(lambda x: float(k(np.array([x]))[0]), R, np.inf, epsabs=1e-15, epsrel=1e-10)[0]
    assert outside <= k.tail_bound(R) * (1 + 1e-9) + 1e-15
