"""End-to-end acceptance criteria, one test each.

Every test records a PASS/FAIL line that conftest prints in the terminal
summary, then asserts the same condition.
"""

import math
import time

import numpy as np
import pytest

from _helpers import grid, random_rational, record
from mollify import approx, convolve as conv, functions as fns
from mollify.kernels import ball_mass, bump, gauss, make_tensor, poisson, poisson2, radial_kernel, scale
from mollify.poly import Polynomial
from mollify.ratfun import make_kernel_rational, partial_fractions, sum_terms

CATALOG = {"poisson": poisson, "poisson2": poisson2, "gauss": gauss, "bump": bump}


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def check(num, ok, detail, seconds, limit=None):
    if limit is not None and seconds >= limit:
        ok = False
        detail += f"; runtime over {limit:g}s"
    record(num, ok, detail, seconds)
    assert ok, detail


def test_01_unit_integral():
    xs = [-1.3, 0.0, 0.4, 2.0]
    with Clock() as c:
        worst = 0.0
        for make in CATALOG.values():
            for t in (0.01, 0.1, 1.0):
                kt = scale(make(), t)
                for x in xs:
                    worst = max(worst, abs(conv.convolve_at(fns.constant(1.0), kt, x, 1e-8) - 1))
    check(1, worst <= 1e-6, f"max |(1 * phi_t)(x) - 1| = {worst:.3g}", c.seconds, 10)


def test_02_uniform_convergence():
    ts = [0.2, 0.1, 0.05]
    with Clock() as c:
        rep = conv.sweep(fns.hat(), gauss(), ts, fns.Box.interval(-2, 2), m=401, tol=1e-9)
    e = rep.sup_errors
    # hat is 1-Lipschitz: sup error <= t E|Z| for Z ~ N(0, 1/2), i.e. t / sqrt(pi)
    bounds = [t / math.sqrt(math.pi) for t in ts]
    ok = e[0] > e[1] > e[2] and e[2] <= 0.05 and all(a <= b * (1 + 1e-6) for a, b in zip(e, bounds))
    detail = "sup errors " + ", ".join(f"{v:.4g}" for v in e) + " vs bounds " + ", ".join(f"{b:.4g}" for b in bounds)
    check(2, ok, detail, c.seconds, 30)


def test_03_jump_average():
    with Clock() as c:
        worst = 0.0
        for make in CATALOG.values():
            for t in (0.1, 0.01):
                v = conv.convolve_at(fns.heaviside(), scale(make(), t), 0.0, 1e-9)
                worst = max(worst, abs(v - 0.5))
    check(3, worst <= 1e-6, f"max |value - 0.5| = {worst:.3g}", c.seconds, 10)


def test_04_concentration():
    with Clock() as c:
        dev = max(abs(ball_mass(poisson(), t, 1.0) - 2 / math.pi * math.atan(1 / t)) for t in (1.0, 0.1, 0.01))
    check(4, dev <= 1e-8, f"max |ball_mass - (2/pi) atan(1/t)| = {dev:.3g}", c.seconds)


def test_05_partial_fraction_round_trip():
    x = grid(-3, 3, 200)
    with Clock() as c:
        worst = 0.0
        for seed in range(25):
            r = random_rational(np.random.default_rng(seed))
            pf = partial_fractions(r)
            want = r(x)
            back = sum_terms(pf.terms, pf.poly_part)(x)
            worst = max(worst, float(np.max(np.abs(back - want) / (1 + np.abs(want)))))
    check(5, worst <= 1e-9, f"max relative reconstruction error = {worst:.3g}", c.seconds, 10)


def test_06_certified_polynomial():
    r = make_kernel_rational(Polynomial([1 / math.pi]), Polynomial([1.0, 0.0, 1.0]))
    with Clock() as c:
        cp = approx.rational_to_polynomial(r, (-1.0, 1.0), 1e-3)
    xs = np.linspace(-1, 1, 10001)
    err = float(np.max(np.abs(cp(xs) - 1 / (math.pi * (1 + xs * xs)))))
    ok = err <= cp.bound <= 1e-3
    check(6, ok, f"measured {err:.3g} <= bound {cp.bound:.3g} <= 1e-3, degree {cp.degree}", c.seconds, 10)


def test_07_weierstrass_abs():
    f = fns.abs_fn()
    with Clock() as c:
        cp = approx.weierstrass(f, (-1.0, 1.0), 0.1)
    xs = np.linspace(-1, 1, 10000)
    err = float(np.max(np.abs(cp(xs) - np.abs(xs))))
    stages = cp.meta["stages"]
    each = all(s["measured"] <= s["budget"] for s in stages)
    ok = err <= 0.1 and each and cp.meta["ok"]
    parts = ", ".join(f"{s['stage']} {s['measured']:.2g}/{s['budget']:.2g}" for s in stages)
    check(7, ok, f"sup error {err:.3g}; stages {parts}", c.seconds, 60)


def test_08_tensor_factorization():
    k = make_tensor([gauss(), gauss()])
    f = fns.smoothed_square(2)
    rng = np.random.default_rng(8)
    with Clock() as c:
        gap = 0.0
        for x in rng.uniform(-1.5, 1.5, size=(25, 2)):
            a = conv.convolve_tensor(f, k, 0.25, x, 1e-9)
            b = conv.convolve_at(f, scale(k, 0.25), x, 1e-9)
            gap = max(gap, abs(a - b))
        g = fns.product(fns.hat(), fns.hat())
        split = 0.0
        for x in ([0.1, -0.3], [0.9, 0.4], [-0.5, 0.0]):
            got = conv.convolve_tensor(g, k, 0.2, x, 1e-10)
            one = [conv.convolve_at(fns.hat(), scale(gauss(), 0.2), xi, 1e-11) for xi in x]
            split = max(split, abs(got - one[0] * one[1]))
    ok = gap <= 1e-6 and split <= 1e-8
    check(8, ok, f"iterated vs direct {gap:.3g}; separable {split:.3g}", c.seconds)


def test_09_radial_commutation():
    f = fns.anisotropic(2)
    with Clock() as c:
        defect = 0.0
        for seed in range(5):
            rng = np.random.default_rng(seed)
            Q = conv.random_orthogonal(2, rng)
            pts = rng.uniform(-1, 1, size=(3, 2))
            defect = max(defect, conv.commutation_defect(f, gauss(2), 0.3, Q, pts, 1e-8))
        spread = max(conv.radial_spread(fns.radial_bump(2), radial_kernel("gauss", 2), 0.3, r, 16, 1e-8)
                     for r in (0.25, 0.5, 1.0))
    ok = defect <= 1e-4 and spread <= 1e-4
    check(9, ok, f"max defect {defect:.3g}; spread on circles {spread:.3g}", c.seconds)


def test_10_riemann_translates():
    f, kt = fns.hat(), scale(poisson(), 0.5)
    xs = np.linspace(-2, 2, 81)
    with Clock() as c:
        ref = conv.convolve_many(f, kt, xs, 1e-11)
        gaps = [float(np.max(np.abs(approx.riemann_rational(f, kt, None, h)(xs) - ref))) for h in (0.2, 0.1, 0.05)]
        ts = approx.riemann_rational(f, kt, None, 0.1)
        r = approx.collapse(ts)
        xc = np.linspace(-3, 3, 121)
        termwise = ts(xc)
        dev = float(np.max(np.abs(r(xc).real - termwise)))
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] <= 1e-3 and len(ts) == 21 and dev <= 1e-8
    detail = "gaps " + ", ".join(f"{g:.3g}" for g in gaps) + f"; {len(ts)}-term collapse {dev:.3g}"
    check(10, ok, detail, c.seconds)
