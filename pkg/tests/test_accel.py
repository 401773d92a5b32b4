import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mollify import _accel

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

NB, NP = _accel.NUMBA_KERNELS, _accel.NUMPY_KERNELS


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def close(a, b, rtol=1e-12):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) <= rtol * max(1.0, float(np.max(np.abs(b))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 30))
def test_horner(seed, n):
    rng = np.random.default_rng(seed)
    c, z = crandn(rng, n), crandn(rng, 50)
    assert close(NB["horner"](c, z), NP["horner"](c, z))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 40))
def test_comp_horner(seed, n):
    rng = np.random.default_rng(seed)
    c, x = rng.normal(size=n), rng.uniform(-1, 1, 64)
    assert np.array_equal(NB["comp_horner"](c, x), NP["comp_horner"](c, x))


def test_comp_horner_is_compensated():
    # (x - 1)^9 expanded: plain Horner loses everything near the root
    c = np.polynomial.polynomial.polyfromroots([1.0] * 9)
    x = np.linspace(0.99, 1.01, 11)
    exact = np.array([float(sum(Fraction(ck) * Fraction(xi) ** k for k, ck in enumerate(c))) for xi in x])
    comp = _accel.comp_horner(c, x)
    plain = np.polynomial.polynomial.polyval(x, c)
    scale = np.polynomial.polynomial.polyval(np.abs(x), np.abs(c))
    assert np.max(np.abs(comp - exact)) <= 1e-2 * np.max(np.abs(plain - exact)) + 1e-300
    assert np.max(np.abs(comp - exact) / scale) <= 1e-25


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 12))
def test_taylor_shift(seed, n):
    rng = np.random.default_rng(seed)
    c = crandn(rng, n)
    a = complex(*rng.normal(size=2))
    assert close(NB["taylor_shift"](c, a), NP["taylor_shift"](c, a), 1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_translate_sum(seed):
    rng = np.random.default_rng(seed)
    num = crandn(rng, 2)
    den = np.array([1.0, 0.0, 1.0], dtype=complex)
    ys, ws = rng.uniform(-1, 1, 13), rng.normal(size=13).astype(complex)
    xs = rng.uniform(-2, 2, 31).astype(complex)
    assert close(NB["translate_sum"](num, den, ys, ws, xs), NP["translate_sum"](num, den, ys, ws, xs))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 8), st.integers(8, 60))
def test_reexpand(seed, J, mmax):
    rng = np.random.default_rng(seed)
    a = crandn(rng, J)
    a[0] = 0
    d = 0.3 * complex(*rng.normal(size=2))
    assert close(NB["reexpand"](a, d, mmax), NP["reexpand"](a, d, mmax))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 8), st.integers(0, 60))
def test_inverse_power_taylor(seed, M, N):
    rng = np.random.default_rng(seed)
    a = crandn(rng, M)
    w = complex(*rng.normal(size=2)) * 3
    assert close(NB["inverse_power_taylor"](a, w, 1.0, N), NP["inverse_power_taylor"](a, w, 1.0, N), 1e-11)


def test_aberth_agree():
    rng = np.random.default_rng(4)
    roots = crandn(rng, 7)
    c = np.polynomial.polynomial.polyfromroots(roots).astype(complex)
    z0 = 2.0 * np.exp(2j * np.pi * (np.arange(7) + 0.25) / 7)
    za, _, oka = NB["aberth"](c, z0.copy(), 500, 1e-12)
    zb, _, okb = NP["aberth"](c, z0.copy(), 500, 1e-12)
    assert oka and okb
    for r in roots:
        assert np.min(np.abs(za - r)) < 1e-9 and np.min(np.abs(zb - r)) < 1e-9


@pytest.mark.parametrize("flag,want", [("1", "numpy"), ("0", "numba")])
def test_env_flag(flag, want):
    env = dict(os.environ, MOLLIFY_NO_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from mollify import _accel; print(_accel.backend())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == want


def test_pipeline_same_on_both_backends():
    code = (
        "from mollify import approx, functions as f;"
        "cp = approx.weierstrass(f.FunctionSpec('x', 1, lambda x: x, 1.0), (0, 1), 1e-2);"
        "print(repr(cp.measured_error), cp.degree)"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, MOLLIFY_NO_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True).stdout.split())
    assert outs[0][1] == outs[1][1]
    assert abs(float(outs[0][0]) - float(outs[1][0])) <= 1e-12
