import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mollify import convolve as conv
from mollify import functions as fns
from mollify.errors import DimensionMismatch, NotEven, NotRadial, ValidationError
from mollify.kernels import bump, gauss, get_kernel, make_tensor, normalize, poisson, poisson2, radial_kernel, scale

# mpmath quad, 30 digits
HAT_POISSON_T01_X0 = 0.78964511649487101348
# sup |hat * gauss_t - hat| on [-2, 2], attained at x = 0 (mpmath)
HAT_GAUSS_SUP = {0.2: 0.11283791670952163053, 0.1: 0.056418958354775628695, 0.05: 0.028209479177387814347}
# jump 2 -> 6 at x = 1 with the u^2/(1+u^2) perturbation, Gaussian kernel, value at x = 1
JUMP_GAUSS = {0.1: 4.0049268121755302526, 0.01: 4.0000499925018743440}

CATALOG = {"poisson": poisson, "poisson2": poisson2, "gauss": gauss, "bump": bump}


class TestFunctions:
    def test_audits(self):
        for f in (fns.hat(), fns.heaviside(), fns.jump(), fns.abs_fn(), fns.identity(), fns.constant(2.0)):
            a = f.audit()
            assert a["bound_ok"] and a["limits_ok"], f.name

    def test_unbounded_rejected(self):
        with pytest.raises(ValidationError):
            fns.FunctionSpec("bad", 1, lambda x: x, math.inf)

    def test_piecewise_json(self):
        f = fns.get_function('[{"interval": [-1, 0], "poly": [1, 1]}, {"interval": [0, 1], "poly": [1, -1]}]')
        x = np.linspace(-1.5, 1.5, 31)
        assert np.allclose(f(x), fns.hat()(x))
        assert f.breakpoints == ()

    def test_piecewise_jump_limits(self):
        f = fns.piecewise([{"interval": [0, 1], "poly": [2]}, {"interval": [1, 2], "poly": [5, 1]}])
        assert f.left_right(1.0) == (2.0, 6.0)
        assert f.left_right(0.0) == (0.0, 2.0)
        assert f.audit()["limits_ok"]

    @pytest.mark.parametrize(
        "text", ["[]", "{", '[{"interval": [1, 0], "poly": [1]}]',
                 '[{"interval": [0, 2], "poly": [1]}, {"interval": [1, 3], "poly": [1]}]']
    )
    def test_piecewise_invalid(self, text):
        with pytest.raises(ValidationError):
            fns.get_function(text)

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            fns.get_function("sinc")

    def test_product_and_box(self):
        f = fns.product(fns.hat(), fns.hat())
        assert f.support.lo == (-1.0, -1.0)
        assert float(f(np.array([0.5, 0.5]))) == 0.25
        assert float(f(np.array([1.5, 0.0]))) == 0.0


class TestConvolveAt:
    @pytest.mark.parametrize("name", list(CATALOG))
    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
    def test_unit_mass(self, name, t):
        r = conv.convolve_detail(fns.constant(1.0), scale(CATALOG[name](), t), 0.7, 1e-8)
        assert abs(r.value - 1) <= 1e-6
        assert abs(r.value - 1) <= r.error_estimate + 1e-12

    @pytest.mark.parametrize("t", [0.05, 0.3, 1.0])
    def test_identity_reproduced(self, t):
        f = fns.identity(20.0)
        for x in (-1.3, 0.0, 2.2):
            assert abs(conv.convolve_at(f, scale(gauss(), t), x, 1e-9) - x) <= 1e-6

    def test_hat_poisson_oracle(self):
        v = conv.convolve_at(fns.hat(), scale(poisson(), 0.1), 0.0, 1e-10)
        assert abs(v - HAT_POISSON_T01_X0) <= 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            conv.convolve_at(fns.hat(), scale(gauss(2), 0.1), np.zeros(2))

    def test_unscaled_kernel_rejected(self):
        with pytest.raises(ValidationError):
            conv.convolve_at(fns.hat(), gauss(), 0.0)

    def test_zero_function(self):
        f = fns.constant(0.0)
        assert conv.convolve_at(f, scale(poisson(), 0.1), 3.0) == 0.0

    def test_many_matches_single(self):
        f, kt = fns.hat(), scale(bump(), 0.3)
        xs = np.array([-0.5, 0.25, 1.1])
        assert np.array_equal(conv.convolve_many(f, kt, xs), [conv.convolve_at(f, kt, x) for x in xs])


class TestSweep:
    def test_hat_gauss_oracle(self):
        ts = [0.2, 0.1, 0.05]
        rep = conv.sweep(fns.hat(), gauss(), ts, fns.Box.interval(-2, 2), m=201, tol=1e-9)
        for t, e in zip(ts, rep.sup_errors):
            assert abs(e - HAT_GAUSS_SUP[t]) <= 1e-7
        assert rep.sup_errors[0] > rep.sup_errors[1] > rep.sup_errors[2]
        assert rep.sup_errors[-1] <= 0.05
        assert rep.monotone_tail

    def test_lipschitz_moment_bound(self):
        # |f * phi_t - f| <= L t int |u| phi(u) du; for the Gaussian the moment is 1/sqrt(pi)
        moment = 1 / math.sqrt(math.pi)
        ts = [0.2, 0.1, 0.05]
        rep = conv.sweep(fns.hat(), gauss(), ts, fns.Box.interval(-2, 2), m=101)
        for t, e in zip(ts, rep.sup_errors):
            assert e <= t * moment * (1 + 1e-6)

    def test_constant(self):
        rep = conv.sweep(fns.constant(1.0), poisson(), [1.0, 0.1], fns.Box.interval(-2, 2), m=21)
        assert max(rep.sup_errors) <= 1e-6

    def test_wider_box_same_error(self):
        a = conv.sweep(fns.hat(), gauss(), [0.1], fns.Box.interval(-2, 2), m=201).sup_errors[0]
        b = conv.sweep(fns.hat(), gauss(), [0.1], fns.Box.interval(-8, 8), m=801).sup_errors[0]
        assert abs(a - b) <= 1e-6

    def test_rejects_increasing_ts(self):
        with pytest.raises(ValidationError):
            conv.sweep(fns.hat(), gauss(), [0.1, 0.2], fns.Box.interval(-2, 2))

    def test_rejects_jump_inside(self):
        with pytest.raises(ValidationError):
            conv.sweep(fns.heaviside(), gauss(), [0.1], fns.Box.interval(-1, 1))

    def test_reported_tail_matches_window(self):
        rep = conv.sweep(fns.hat(), poisson(), [0.1], fns.Box.interval(-1, 1), m=11, tol=1e-6)
        assert 0 < rep.tail_bounds[0] <= 0.5e-6


class TestJump:
    @pytest.mark.parametrize("name", list(CATALOG))
    @pytest.mark.parametrize("t", [0.1, 0.01, 1.0])
    def test_heaviside_average(self, name, t):
        v = conv.jump_value(fns.heaviside(), scale(CATALOG[name](), t), 0.0, 1e-9)
        assert abs(v - 0.5) <= 1e-6

    def test_continuous_point(self):
        f, kt = fns.hat(), scale(gauss(), 0.01)
        assert abs(conv.jump_value(f, kt, 0.5, 1e-9) - conv.convolve_at(f, kt, 0.5, 1e-9)) <= 1e-6

    def test_perturbed_jump_oracle(self):
        f = fns.jump()
        dev = []
        for t in (0.1, 0.01):
            v = conv.jump_value(f, scale(gauss(), t), 1.0, 1e-10)
            assert abs(v - JUMP_GAUSS[t]) <= 1e-8
            dev.append(abs(v - 4.0))
        assert dev[1] < dev[0] and dev[1] <= 1e-3

    def test_odd_kernel_rejected(self):
        k = normalize(lambda x: np.exp(-(np.asarray(x) - 0.5) ** 2), raw_decay_C=10.0, parity_even=False)
        with pytest.raises(NotEven):
            conv.jump_value(fns.heaviside(), scale(k, 0.1), 0.0)


class TestTensor:
    def test_separable_factorizes(self):
        k = make_tensor([gauss(), bump()])
        f = fns.product(fns.hat(), fns.hat())
        for x in ([0.1, -0.3], [0.9, 0.4]):
            got = conv.convolve_tensor(f, k, 0.2, x, 1e-10)
            a = conv.convolve_at(fns.hat(), scale(gauss(), 0.2), x[0], 1e-11)
            b = conv.convolve_at(fns.hat(), scale(bump(), 0.2), x[1], 1e-11)
            assert abs(got - a * b) <= 1e-8

    def test_matches_direct(self):
        k = make_tensor([gauss(), gauss()])
        f = fns.smoothed_square(2)
        rng = np.random.default_rng(7)
        for x in rng.uniform(-1.5, 1.5, size=(5, 2)):
            a = conv.convolve_tensor(f, k, 0.25, x, 1e-9)
            b = conv.convolve_at(f, scale(k, 0.25), x, 1e-9)
            assert abs(a - b) <= 1e-6

    def test_single_factor(self):
        f = fns.hat()
        a = conv.convolve_tensor(f, gauss(), 0.3, 0.2)
        assert a == conv.convolve_at(f, scale(gauss(), 0.3), 0.2)

    def test_needs_tensor(self):
        with pytest.raises(ValidationError):
            conv.convolve_tensor(fns.smoothed_square(2), gauss(2), 0.3, [0, 0])


class TestCommutation:
    def test_identity_map(self):
        R = conv.OrthogonalMap(np.eye(2))
        f = fns.smoothed_square(2)
        assert conv.commutation_defect(f, gauss(2), 0.3, R, [[0.2, 0.1]]) <= 1e-12

    def test_quarter_turn(self):
        R = conv.rotation(math.pi / 2)
        f = fns.smoothed_square(2)
        pts = [[0.3, -0.2], [0.9, 0.7]]
        assert conv.commutation_defect(f, gauss(2), 0.3, R, pts, 1e-8) <= 1e-4

    def test_radial_output(self):
        f = fns.radial_bump(2)
        assert conv.radial_spread(f, radial_kernel("gauss", 2), 0.3, 0.5, 16, 1e-8) <= 1e-4

    def test_non_radial_kernel(self):
        k = make_tensor([bump(), bump()])
        with pytest.raises(NotRadial):
            conv.commutation_defect(fns.smoothed_square(2), k, 0.3, conv.rotation(0.4), [[0, 0]])

    def test_non_orthogonal(self):
        with pytest.raises(ValidationError):
            conv.OrthogonalMap(np.array([[1.0, 0.1], [0.0, 1.0]]))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_random_maps(self, seed):
        rng = np.random.default_rng(seed)
        Q = conv.random_orthogonal(2, rng)
        assert np.max(np.abs(Q.R.T @ Q.R - np.eye(2))) <= 1e-12
        pts = rng.uniform(-1, 1, size=(2, 2))
        assert conv.commutation_defect(fns.anisotropic(2), gauss(2), 0.3, Q, pts, 1e-8) <= 1e-4


@pytest.mark.parametrize("name", ["gauss", "poisson"])
@pytest.mark.parametrize("t", [0.05, 0.01])
def test_concentration_link(name, t):
    k = get_kernel(name)
    err = conv.sweep(fns.hat(), k, [t], fns.Box.interval(-2, 2), m=101, tol=1e-8).sup_errors[0]
    for r in (0.1, 0.5):
        assert err <= conv.concentration_bound(k, t, r, 1.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(CATALOG)), st.floats(0.02, 2.0), st.floats(-3.0, 3.0), st.floats(-2.0, 2.0))
def test_linear_in_f(name, t, x, c):
    kt = scale(CATALOG[name](), t)
    f = fns.hat()
    g = fns.FunctionSpec("c*hat", 1, lambda y: c * fns.hat()(y), abs(c), f.support, kinks=f.kinks)
    a = conv.convolve_at(g, kt, x, 1e-9)
    b = conv.convolve_at(f, kt, x, 1e-9)
    assert abs(a - c * b) <= 1e-8 * (1 + abs(c))
