"""Property suites behind ``mollify verify``.

Each check returns a :class:`Check`; an exception inside a check is a
failure, never a crash of the whole run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import approx, convolve as conv, functions as fns
from .kernels import bump, gauss, get_kernel, make_tensor, poisson, poisson2, scale
from .ratfun import RationalFunction, make_kernel_rational, partial_fractions
from .poly import Polynomial


@dataclass
class Check:
    suite: str
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"[{tag}] {self.suite}.{self.name}: {self.detail} ({self.seconds:.2f}s)"


CATALOG = {"poisson": poisson, "poisson2": poisson2, "gauss": gauss, "bump": bump}


# -- convolve -----------------------------------------------------------------


def unit_mass(rng):
    worst = 0.0
    ok = True
    for name, make in CATALOG.items():
        k = make()
        for t in (0.01, 0.1, 1.0):
            r = conv.convolve_detail(fns.constant(1.0), scale(k, t), 0.3, 1e-8)
            dev = abs(r.value - 1.0)
            worst = max(worst, dev)
            ok &= dev <= r.error_estimate + 1e-12
    return ok, f"max |f*phi_t - 1| = {worst:.3g}"


def concentration_link(rng):
    f = fns.hat()
    K = fns.Box.interval(-2, 2)
    worst = -np.inf
    for name in ("gauss", "poisson"):
        k = get_kernel(name)
        for t in (0.05, 0.01):
            err = conv.sweep(f, k, [t], K, m=101, tol=1e-8).sup_errors[0]
            for r in (0.1, 0.5):
                # hat: oscillation 1, Lipschitz 1
                worst = max(worst, err - conv.concentration_bound(k, t, r, 1.0, 1.0))
    return worst <= 0, f"max(sweep error - bound) = {worst:.3g}"


def jump_average(rng):
    f = fns.heaviside()
    worst = 0.0
    for name, make in CATALOG.items():
        k = make()
        for t in (0.1, 0.01):
            worst = max(worst, abs(conv.jump_value(f, scale(k, t), 0.0, 1e-9) - 0.5))
    return worst <= 1e-6, f"max |value - 0.5| = {worst:.3g}"


def tensor_direct(rng):
    k = make_tensor([gauss(), gauss()])
    sep = fns.product(fns.hat(), fns.hat())
    non = fns.smoothed_square(2)
    pts = rng.uniform(-1.5, 1.5, size=(4, 2))
    worst = 0.0
    for f in (sep, non):
        for x in pts:
            a = conv.convolve_tensor(f, k, 0.2, x, 1e-9)
            b = conv.convolve_at(f, scale(k, 0.2), x, 1e-9)
            worst = max(worst, abs(a - b))
    return worst <= 1e-6, f"max |iterated - direct| = {worst:.3g}"


def commutation(rng):
    worst = 0.0
    for dim, tol in ((2, 1e-8), (3, 5e-5)):
        f = fns.anisotropic(dim)
        k = gauss(dim)
        for _ in range(5):
            Q = conv.random_orthogonal(dim, rng)
            pts = rng.uniform(-1, 1, size=(2, dim))
            worst = max(worst, conv.commutation_defect(f, k, 0.3, Q, pts, tol))
    return worst <= 1e-4, f"max defect = {worst:.3g}"


# -- approx -------------------------------------------------------------------


def certification(rng):
    cases = [
        (make_kernel_rational(Polynomial([1 / np.pi]), Polynomial([1.0, 0.0, 1.0])), (-1.0, 1.0), 1e-3),
        (poisson2().rational, (-0.5, 2.0), 1e-6),
        (RationalFunction(Polynomial([1.0]), Polynomial.from_roots([0.3 + 0.4j, 0.3 - 0.4j, -2 + 1j, -2 - 1j])),
         (-1.0, 1.0), 1e-4),
    ]
    notes = []
    for r, ab, eps in cases:
        cp = approx.rational_to_polynomial(r, ab, eps)
        if not cp.measured_error <= cp.bound <= eps:
            return False, f"measured {cp.measured_error:.3g}, bound {cp.bound:.3g}, eps {eps:.3g}"
        notes.append(f"{cp.measured_error:.2g}<={cp.bound:.2g}")
    return True, ", ".join(notes)


def telescoping(rng):
    f = fns.FunctionSpec("x", 1, lambda x: np.asarray(x, dtype=float), 1.0)
    eps = 1e-2
    cp = approx.weierstrass(f, (0.0, 1.0), eps)
    stages = cp.meta["stages"]
    each = all(s["measured"] <= s["budget"] for s in stages)
    spent = sum(s["measured"] for s in stages)
    ok = each and spent <= eps and cp.measured_error <= eps
    return ok, f"final {cp.measured_error:.3g}, stage errors sum to {spent:.3g}, eps {eps:g}; stages ok: {each}"


def linearity(rng):
    ts = approx.riemann_rational(fns.hat(), poisson(), 0.5, 0.1)
    x = rng.uniform(-3, 3, 200)
    dev = float(np.max(np.abs(ts.scaled(2.0)(x) - 2 * ts(x))))
    return dev <= 1e-14, f"max |S_2w - 2 S_w| = {dev:.3g}"


def push_convergence(rng):
    r = RationalFunction(Polynomial([1.0]), Polynomial.from_roots([0.5 + 0.1j]))
    term = partial_fractions(r).terms[0]
    x = np.linspace(0, 1, 401)
    exact = term(x)
    prev = np.inf
    notes = []
    for n in (40, 80, 160):
        new, bound = approx.push_pole(term, (0.0, 1.0), 5.0, n)
        err = float(np.max(np.abs(sum(t(x) for t in new) - exact)))
        if not (err <= bound * (1 + 1e-9) + 1e-13 and bound < prev):
            return False, f"N={n}: error {err:.3g}, bound {bound:.3g}, previous bound {prev:.3g}"
        prev = bound
        notes.append(f"N={n}: {err:.2g}<={bound:.2g}")
    return True, "; ".join(notes)


def realness(rng):
    ts = approx.riemann_rational(fns.hat(), poisson(), 1.0, 0.25)
    poly, groups = ts.pole_groups()
    cp = approx._polynomialize(poly, groups, (-1.0, 1.0), 1e-3, ts)
    im = cp.meta["imag_residue"]
    return im <= 1e-10, f"max |Im c| = {im:.3g}"


SUITES: dict[str, list[tuple[str, Callable]]] = {
    "convolve": [
        ("unit_mass", unit_mass),
        ("concentration_link", concentration_link),
        ("jump_average", jump_average),
        ("tensor_direct", tensor_direct),
        ("commutation", commutation),
    ],
    "approx": [
        ("certification", certification),
        ("telescoping", telescoping),
        ("linearity", linearity),
        ("push_convergence", push_convergence),
        ("realness", realness),
    ],
}


def run_checks(seed: int = 0, suites=None) -> list[Check]:
    out = []
    for suite, checks in SUITES.items():
        if suites and suite not in suites:
            continue
        for name, fn in checks:
            rng = np.random.default_rng([seed, len(out)])
            t0 = time.perf_counter()
            try:
                ok, detail = fn(rng)
            except Exception as exc:  # a crash is a failed invariant
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            out.append(Check(suite, name, bool(ok), detail, time.perf_counter() - t0))
    return out
