"""Constructive approximation: translate sums, pole pushing, Taylor, Weierstrass.

Pipeline for a rational function on [a, b]:

1. partial fractions, grouped by pole: sum_j a_j (x - p)^-j;
2. poles too close to the interval are re-expanded about points further
   out ("pushed"), with a rigorous bound on what the truncation drops;
3. each group is Taylor expanded about the midpoint z0 in the normalized
   variable sigma = (x - z0)/hl, hl = (b - a)/2, with a geometric tail bound.

The output polynomial is stored in sigma; ``to_monomial`` converts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from . import _accel
from .convolve import convolve_many
from .errors import (
    BudgetExceeded,
    CertificationFailure,
    DegreeOverflow,
    DimensionLimit,
    NoConvergence,
    PoleNearInterval,
    PoleOnInterval,
    UnboundedSupport,
    ValidationError,
)
from .functions import Box, FunctionSpec
from .kernels import Kernel, ScaledKernel, audit_grid, poisson_m, scale
from .poly import Polynomial
from .ratfun import PartialFractionTerm, RationalFunction, partial_fractions, sum_terms

__all__ = [
    "TranslateSum",
    "CertifiedPolynomial",
    "SumOfProducts",
    "riemann_rational",
    "collapse",
    "taylor_term",
    "push_pole",
    "rational_to_polynomial",
    "POLY_METHODS",
    "weierstrass",
    "extend",
    "sum_of_products",
    "COLLAPSE_LIMIT",
]

COLLAPSE_LIMIT = 64
MAX_PUSH_STEPS = 200
U = np.finfo(float).eps / 2


def _interval(K) -> tuple[float, float]:
    if isinstance(K, Box):
        if K.dim != 1:
            raise ValidationError("expected a one-dimensional interval")
        return K.a, K.b
    a, b = (float(v) for v in K)
    if not a < b:
        raise ValidationError(f"invalid interval [{a}, {b}]")
    return a, b


def _dist(p: complex, a: float, b: float) -> float:
    return abs(p - min(max(p.real, a), b))


# ---------------------------------------------------------------------------
# Riemann sums of translated kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TranslateSum:
    """sum_k w_k phi_t(x - y_k) with phi_t rational.

    ``phi`` is an optional direct evaluator for phi_t; when present it is used
    instead of the coefficient form, which overflows for high-order kernels.
    """

    kernel: RationalFunction
    ys: np.ndarray
    ws: np.ndarray
    h: float
    phi: Callable | None = field(default=None, repr=False)

    def __len__(self):
        return int(self.ys.size)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if self.ys.size == 0:
            return np.zeros_like(x)
        if self.phi is not None:
            out = np.zeros(flat.size)
            step = max(1, 2_000_000 // max(1, self.ys.size))
            for s in range(0, flat.size, step):
                u = flat[s : s + step, None] - self.ys[None, :]
                out[s : s + step] = self.phi(u) @ self.ws
            return out.reshape(x.shape)
        num = self.kernel.num.coeffs
        den = self.kernel.den.coeffs
        v = _accel.translate_sum(num, den, self.ys, self.ws, flat.astype(np.complex128))
        return v.real.reshape(x.shape)

    def scaled(self, c: float) -> "TranslateSum":
        return TranslateSum(self.kernel, self.ys, self.ws * c, self.h, self.phi)

    def pole_groups(self) -> tuple[Polynomial, list[tuple[complex, np.ndarray]]]:
        """Partial fractions of the whole sum, grouped by pole."""
        pf = partial_fractions(self.kernel)
        base = _group_vectors(pf.terms)
        groups = []
        keep = self.ws != 0
        for y, w in zip(self.ys[keep], self.ws[keep]):
            for p, a in base:
                groups.append((p + y, a * w))
        poly = pf.poly_part * float(np.sum(self.ws)) if not pf.poly_part.is_zero() else Polynomial()
        return poly, groups

    def terms(self) -> list[PartialFractionTerm]:
        _, groups = self.pole_groups()
        return _groups_to_terms(groups)


def _kernel_parts(k: Kernel | ScaledKernel, t: float | None) -> ScaledKernel:
    if isinstance(k, ScaledKernel):
        kt = k if t is None else scale(k.base, t)
    else:
        if t is None:
            raise ValidationError("t is required for an unscaled kernel")
        kt = scale(k, t)
    if kt.rational is None:
        raise ValidationError(f"kernel {kt.name} is not rational")
    return kt


def riemann_rational(
    f: FunctionSpec, k: Kernel | ScaledKernel, t: float | None = None, h: float = 0.1
) -> TranslateSum:
    """Riemann sum for (f * phi_t): nodes y_k = k h over f's support, w_k = f(y_k) h."""
    if f.dim != 1:
        raise DimensionLimit("riemann_rational is one-dimensional")
    if f.support is None:
        raise UnboundedSupport(f"{f.name} has unbounded support")
    if not h > 0:
        raise ValidationError("spacing h must be positive")
    kt = _kernel_parts(k, t)
    a, b = f.support.a, f.support.b
    k0 = math.floor(a / h + 1e-9)
    k1 = math.ceil(b / h - 1e-9)
    ys = np.arange(k0, k1 + 1) * h
    ws = f(ys) * h
    return TranslateSum(kt.rational, ys, ws, float(h), phi=kt)


def collapse(ts: TranslateSum) -> RationalFunction:
    """The translate sum as one p/q."""
    keep = ts.ws != 0
    n = int(np.count_nonzero(keep))
    if n > COLLAPSE_LIMIT:
        raise DegreeOverflow(f"{n} terms exceed the collapse limit {COLLAPSE_LIMIT}")
    if n == 0:
        return RationalFunction(Polynomial(), Polynomial([1.0]))
    if n == 1:
        y = float(ts.ys[keep][0])
        w = float(ts.ws[keep][0])
        r = ts.kernel
        hint = tuple((p + y, m) for p, m in r.poles)
        return RationalFunction(r.num.shift(y) * w, r.den.shift(y), poles_hint=hint)
    poly, groups = ts.pole_groups()
    return sum_terms(_groups_to_terms(groups), poly)


# ---------------------------------------------------------------------------
# groups of inverse powers at one pole
# ---------------------------------------------------------------------------


def _group_vectors(terms: Sequence[PartialFractionTerm]) -> list[tuple[complex, np.ndarray]]:
    """{pole: a} with a[l] the coefficient of (x - pole)^-l (a[0] unused)."""
    table: dict[complex, dict[int, complex]] = {}
    for tm in terms:
        table.setdefault(-tm.c, {})
        d = table[-tm.c]
        d[tm.l] = d.get(tm.l, 0j) + tm.coeff
    out = []
    for p, d in table.items():
        a = np.zeros(max(d) + 1, dtype=np.complex128)
        for l, v in d.items():
            a[l] = v
        out.append((complex(p), a))
    return out


def _groups_to_terms(groups) -> list[PartialFractionTerm]:
    out = []
    for p, a in groups:
        for l in range(1, a.size):
            if a[l] != 0:
                out.append(PartialFractionTerm(c=-p, l=l, coeff=complex(a[l])))
    return out


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _series_tail(m: np.ndarray, q: float, N: int) -> np.ndarray:
    """Upper bound on sum_{k > N} C(k+m-1, m-1) q^k, elementwise in m.

    Two bounds, whichever is smaller:
      A = C(N+m, m-1) q^(N+1) (1-q)^-m
      B = C(N+m, m-1) q^(N+1) / (1 - r),  r = q (N+1+m)/(N+2)  (when r < 1)
    """
    m = np.asarray(m, dtype=float)
    lead = _log_binom(N + m, m - 1) + (N + 1) * math.log(q)
    logA = lead - m * math.log1p(-q)
    r = q * (N + 1 + m) / (N + 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        logB = np.where(r < 1, lead - np.log1p(-np.minimum(r, 0.999999999)), np.inf)
    return np.exp(np.minimum(logA, logB))


def _group_taylor_tail(a: np.ndarray, w: complex, hl: float, N: int) -> float:
    """Bound on |sum_m a_m (w + hl s)^-m - its degree-N Taylor poly| for |s| <= 1."""
    q = hl / abs(w)
    if q >= 1:
        return math.inf
    m = np.nonzero(a)[0]
    m = m[m >= 1]
    if m.size == 0:
        return 0.0
    m = m[a[m] != 0]
    logs = np.log(np.abs(a[m])) - m * math.log(abs(w))
    with np.errstate(divide="ignore"):
        return float(np.sum(np.exp(logs + np.log(_series_tail(m, q, N)))))


def taylor_term(
    term: PartialFractionTerm, z0: complex, N: int, K=None
) -> tuple[Polynomial, float]:
    """Degree-N Taylor polynomial of coeff (x + c)^-l about z0 and its tail bound.

    The polynomial is in s = x - z0.  The bound holds on K (default: the
    real interval [z0 - 1, z0 + 1]).
    """
    if N < 0:
        raise ValidationError("degree N must be >= 0")
    if K is None:
        a, b = z0.real - 1.0, z0.real + 1.0
    else:
        a, b = _interval(K)
    w = complex(z0) + term.c
    reach = max(abs(a - z0), abs(b - z0))
    rho = abs(w) / reach if reach > 0 else math.inf
    if rho <= 1:
        raise NoConvergence(f"convergence margin {rho:.4g} <= 1; push the pole first")
    vec = np.zeros(term.l + 1, dtype=np.complex128)
    vec[term.l] = term.coeff
    coeffs = _accel.inverse_power_taylor(vec, w, 1.0, N)
    bound = _group_taylor_tail(vec, w, reach, N) if reach > 0 else 0.0
    return Polynomial(coeffs), bound


# ---------------------------------------------------------------------------
# pole pushing
# ---------------------------------------------------------------------------


def _push_step_bound(inp: np.ndarray, beta_full: np.ndarray, M: int, q: float) -> float:
    """What truncating one re-expansion at order M costs on K.

    Works in normalized form: ``inp[j]`` multiplies (d'/(x - p))^j and
    ``beta_full[m]`` multiplies (d'/(x - p'))^m, both at most 1 in modulus on
    K.  Orders M < m <= len(beta_full)-1 are summed explicitly; past that each
    source order j leaves a geometric tail of C(k+j-1, j-1) q^k.
    """
    Mpp = beta_full.size - 1
    explicit = float(np.sum(np.abs(beta_full[M + 1 :])))
    js = np.nonzero(inp)[0]
    js = js[js >= 1]
    if js.size == 0 or q == 0:
        return explicit
    K0 = Mpp - js + 1  # first k left out for order j
    r = q * (K0 + js) / (K0 + 1.0)
    if np.any(r >= 1):
        return math.inf
    logfirst = _log_binom(K0 + js - 1, js - 1) + K0 * math.log(q)
    tails = np.exp(np.log(np.abs(inp[js])) + logfirst) / (1.0 - r)
    return explicit + float(np.sum(tails))


def _rescale(vec: np.ndarray, ratio: float) -> np.ndarray:
    """vec[j] * ratio**j without intermediate overflow."""
    j = np.arange(vec.size)
    out = np.zeros_like(vec)
    nz = vec != 0
    out[nz] = vec[nz] * np.exp(j[nz] * math.log(ratio))
    return out


def _push_vector(
    vec: np.ndarray,
    p: complex,
    D: float,
    ab: tuple[float, float],
    target: float,
    n_step: int,
) -> tuple[complex, np.ndarray, float, float, int]:
    """Push sum_j vec_j (D/(x-p))^j outward until dist(p, K) >= target.

    Returns (new pole, new normalized vector, new scale, error bound, steps).
    Each step moves the pole by half its distance along the ray from the
    nearest point of K, so the re-expansion ratio on K is at most 1/3.
    """
    lo, hi = ab
    near = min(max(p.real, lo), hi)
    d = abs(p - near)
    if d == 0:
        raise PoleOnInterval(f"pole {p} lies on [{lo}, {hi}]")
    if d >= target:
        return p, vec, D, 0.0, 0
    direction = (p - near) / d
    total = 0.0
    steps = 0
    M = max(int(n_step), 1)
    while d < target * (1 - 1e-12):
        steps += 1
        if steps > MAX_PUSH_STEPS:
            raise BudgetExceeded(f"pole push needs more than {MAX_PUSH_STEPS} steps")
        step = min(0.5 * d, target - d)
        d_new = d + step
        q = step / d_new
        inp = _rescale(vec, D / d_new)
        J = int(np.max(np.nonzero(inp)[0])) if np.any(inp) else 1
        Mpp = M + 3 * max(J, 1) + 8
        beta = _accel.reexpand(inp, q * direction, Mpp)
        total += _push_step_bound(inp, beta, M, q)
        vec = beta[: M + 1].copy()
        p = p + step * direction
        d = D = d_new
    return p, vec, D, total, steps


def push_pole(
    term: PartialFractionTerm | Sequence[PartialFractionTerm],
    K,
    target_dist: float,
    N_step: int,
) -> tuple[list[PartialFractionTerm], float]:
    """Re-expand inverse powers about a pole further from K.

    Accepts one term or several terms sharing a pole.  Returns the new terms
    (orders 1..N_step at the new pole) and the accumulated error bound on K.
    """
    terms = [term] if isinstance(term, PartialFractionTerm) else list(term)
    if not terms:
        return [], 0.0
    groups = _group_vectors(terms)
    if len(groups) != 1:
        raise ValidationError("push_pole expects terms that share one pole")
    p, a = groups[0]
    ab = _interval(K)
    if _dist(p, *ab) == 0:
        raise PoleOnInterval(f"pole {p} lies on the interval")
    if not _dist(p, *ab) < target_dist:
        return terms, 0.0
    p2, beta, D, bound, _ = _push_vector(a, p, 1.0, ab, float(target_dist), int(N_step))
    return _groups_to_terms([(p2, _rescale(beta, D))]), bound


# ---------------------------------------------------------------------------
# certified polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CertifiedPolynomial:
    """Real polynomial on [a, b] with a certified sup-norm error bound.

    Coefficients are stored in sigma = (x - center)/half_width, which keeps
    them well scaled; ``poly`` gives the monomial form in x.
    """

    coeffs: np.ndarray
    interval: tuple[float, float]
    bound: float
    measured_error: float
    meta: dict = field(default_factory=dict)

    @property
    def center(self) -> float:
        return 0.5 * (self.interval[0] + self.interval[1])

    @property
    def half_width(self) -> float:
        return 0.5 * (self.interval[1] - self.interval[0])

    @property
    def degree(self) -> int:
        return int(self.coeffs.size) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = (x - self.center) / self.half_width
        if np.iscomplexobj(self.coeffs):
            return np.polynomial.polynomial.polyval(s, self.coeffs)
        return _accel.comp_horner(self.coeffs, s).reshape(x.shape)

    def to_monomial(self) -> Polynomial:
        k = np.arange(self.coeffs.size)
        scaled = Polynomial(self.coeffs / self.half_width**k)
        return scaled.shift(self.center)

    @property
    def poly(self) -> Polynomial:
        return self.to_monomial()


def _cheb_audit_grid(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    x = np.cos((2 * k + 1) * np.pi / (2 * n))
    return np.concatenate([[a, b], 0.5 * (a + b) + 0.5 * (b - a) * x])


def _pick_degree(groups, z0, hl, budget, n_max=4096) -> tuple[int, float]:
    """Smallest N whose summed Taylor tail bound is within budget."""

    def tail(N):
        return sum(_group_taylor_tail(v, (z0 - p) / D, hl / D, N) for p, v, D in groups)

    if not groups:
        return 0, 0.0
    N = 4
    while tail(N) > budget:
        N *= 2
        if N > n_max:
            raise BudgetExceeded(f"Taylor degree would exceed {n_max}")
    lo, hi = N // 2, N
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi, tail(hi)


N_STEP_LADDER = (8, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384)


def _polynomialize(
    poly_part: Polynomial,
    groups: list[tuple[complex, np.ndarray]],
    ab: tuple[float, float],
    eps: float,
    source: Callable[[np.ndarray], np.ndarray],
    *,
    margin: float = 2.0,
    real: bool = True,
    meta: dict | None = None,
) -> CertifiedPolynomial:
    """Certified polynomial for poly_part + sum of pole groups on [a, b].

    Half of eps goes to the truncations: a quarter to pushes, a quarter to
    Taylor tails.
    """
    a, b = ab
    z0 = 0.5 * (a + b)
    hl = 0.5 * (b - a)
    meta = dict(meta or {})
    for p, _ in groups:
        if _dist(p, a, b) < 1e-6:
            raise PoleNearInterval(f"pole {p:.6g} within 1e-6 of [{a}, {b}]")

    # pushes: poles with margin < `margin` about the midpoint
    target = margin * hl
    norm = [(p, vec, 1.0) for p, vec in groups]
    near = [i for i, (p, _) in enumerate(groups) if abs(p - z0) < target]
    push_total = 0.0
    n_step_used = 0
    pushed = norm
    if near:
        J0 = max(int(np.max(np.nonzero(groups[i][1])[0])) for i in near)
        for n_step in N_STEP_LADDER:
            if n_step < J0 + 4:
                continue
            trial = list(norm)
            total = 0.0
            for i in near:
                p, vec = groups[i]
                p2, vec2, D2, bnd, _ = _push_vector(vec, p, 1.0, (a, b), target, n_step)
                trial[i] = (p2, vec2, D2)
                total += bnd
                if total > eps / 4:
                    break
            if total <= eps / 4:
                pushed, push_total, n_step_used = trial, total, n_step
                break
        else:
            raise BudgetExceeded(f"pole pushing cannot reach {eps / 4:.3g}")
    # anything still inside the margin (should not happen) would break Taylor
    for p, _, _ in pushed:
        if abs(p - z0) <= hl:
            raise NoConvergence(f"pole {p} still inside the convergence disc")

    N, taylor_total = _pick_degree(pushed, z0, hl, eps / 4)
    pp = poly_part
    # polynomial part in sigma: q(z0 + hl s)
    if not pp.is_zero():
        pp_sigma = Polynomial(_accel.taylor_shift(pp.coeffs, z0))
        pp_sigma = Polynomial(pp_sigma.coeffs * hl ** np.arange(pp_sigma.coeffs.size))
        N = max(N, pp_sigma.degree())
    c = np.zeros(N + 1, dtype=np.complex128)
    mass = 0.0
    for p, vec, D in pushed:
        part = _accel.inverse_power_taylor(vec, (z0 - p) / D, hl / D, N)
        c += part
        mass += float(np.sum(np.abs(part)))
    if not pp.is_zero():
        c[: pp_sigma.coeffs.size] += pp_sigma.coeffs
        mass += float(np.sum(np.abs(pp_sigma.coeffs)))
    imag = float(np.max(np.abs(c.imag))) if c.size else 0.0
    scale_c = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    if real and imag > 1e-10 * scale_c:
        raise CertificationFailure(f"imaginary residue {imag:.3g} in a real pipeline")
    coeffs = c.real.copy() if real else c
    # floating-point terms: summing the contributions, then Horner at |s| <= 1
    gamma = lambda n: n * U / (1 - n * U)
    rounding = gamma(len(pushed) + 2) * mass + gamma(2 * N + 2) * float(np.sum(np.abs(coeffs)))
    bound = push_total + taylor_total + rounding
    xs = _cheb_audit_grid(a, b, 10 * (N + 1))
    s = (xs - z0) / hl
    approx = np.polynomial.polynomial.polyval(s, coeffs)
    ref = np.asarray(source(xs))
    measured = float(np.max(np.abs(approx - ref)))
    meta.update(
        {
            "degree": N,
            "pushes": int(len(near)),
            "push_n_step": n_step_used,
            "push_bound": push_total,
            "taylor_bound": taylor_total,
            "rounding_bound": rounding,
            "imag_residue": imag,
            "audit_points": int(xs.size),
        }
    )
    meta["method"] = "taylor"
    if measured > bound:
        raise CertificationFailure(
            f"measured error {measured:.3g} exceeds certified bound {bound:.3g}"
        )
    if bound > eps:
        raise BudgetExceeded(f"certified bound {bound:.3g} exceeds eps {eps:.3g} (rounding {rounding:.3g})")
    return CertifiedPolynomial(np.asarray(coeffs), (a, b), bound, measured, meta)


def _ellipse_param(w: np.ndarray) -> np.ndarray:
    """Bernstein parameter of the ellipse (foci +-1) through each point w."""
    w = np.asarray(w, dtype=np.complex128)
    r = w + np.sqrt(w - 1) * np.sqrt(w + 1)
    return np.maximum(np.abs(r), 1.0 / np.abs(r))


def _ellipse_dist(w: np.ndarray, rho: float, n: int = 2048) -> np.ndarray:
    """Lower bound on the distance from each w to the ellipse E_rho."""
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    z = 0.5 * (rho * np.exp(1j * th) + np.exp(-1j * th) / rho)
    major = 0.5 * (rho + 1 / rho)
    slack = major * np.pi / n  # half the longest chord between samples
    out = np.empty(w.size)
    for s in range(0, w.size, 256):
        out[s : s + 256] = np.min(np.abs(w[s : s + 256, None] - z[None, :]), axis=1)
    return out - slack


UL = float(np.finfo(np.longdouble).eps) / 2


def _cheb_to_monomial(chat: np.ndarray) -> np.ndarray:
    """Monomial coefficients of sum chat_k T_k, accumulated in long double."""
    N = chat.size - 1
    ld = np.longdouble
    out = np.zeros(N + 1, dtype=ld)
    t_prev = np.zeros(N + 1, dtype=ld)
    t_cur = np.zeros(N + 1, dtype=ld)
    t_cur[0] = 1
    out += ld(chat[0]) * t_cur
    for k in range(1, N + 1):
        t_next = -t_prev
        if k == 1:
            t_next[1:] += t_cur[:-1]
        else:
            t_next[1:] += 2 * t_cur[:-1]
        t_prev, t_cur = t_cur, t_next
        out += ld(chat[k]) * t_cur
    return out.astype(float)


def _cheb_monomial_norms(N: int) -> np.ndarray:
    """Sum of |monomial coefficients| of T_0..T_N."""
    k = np.arange(N + 1)
    return 0.5 * ((1 + math.sqrt(2)) ** k + np.abs(1 - math.sqrt(2)) ** k)


CHEB_LADDER = (4, 6, 8, 12, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 256)


def _sampled_curvature(fn: Callable[[np.ndarray], np.ndarray], u: np.ndarray, delta: float) -> float:
    """max |fn''| over the samples u by central differences, with 25% slack."""
    d2 = (fn(u + delta) - 2 * fn(u) + fn(u - delta)) / delta**2
    return 1.25 * float(np.max(np.abs(d2)))


def _cheb_polynomialize(
    poly_part: Polynomial,
    groups: list[tuple[complex, np.ndarray]],
    ab: tuple[float, float],
    eps: float,
    source: Callable[[np.ndarray], np.ndarray],
    *,
    value_error: Callable[[np.ndarray], float] | None = None,
    curvature: float | None = None,
    meta: dict | None = None,
    max_grid: int = 2_000_000,
) -> CertifiedPolynomial:
    """Certified real polynomial by Chebyshev interpolation of the source.

    Two certificates, whichever succeeds first as the degree grows:

    * a priori: the pole groups bound the source on a Bernstein ellipse
      E_rho, so the interpolant is within 4 M rho^-N / (rho - 1);
    * a posteriori: the error is sampled on a uniform grid fine enough that
      h^2/8 (|P''| + |S''|) stays below eps/4, given ``curvature`` >= |S''|.

    Unlike a Taylor series about the midpoint this only needs the source to
    be analytic on a thin neighbourhood of [a, b].
    """
    a, b = ab
    z0 = 0.5 * (a + b)
    hl = 0.5 * (b - a)
    meta = dict(meta or {})
    if groups:
        ws = np.array([(p - z0) / hl for p, _ in groups])
        rho_max = float(np.min(_ellipse_param(ws)))
    else:
        ws = np.empty(0, dtype=np.complex128)
        rho_max = math.inf
    if rho_max <= 1 + 1e-9:
        raise PoleNearInterval("a pole sits on the interval")
    pp_sigma = None
    if not poly_part.is_zero():
        pp_sigma = Polynomial(_accel.taylor_shift(poly_part.coeffs, z0))
        pp_sigma = Polynomial(np.real(pp_sigma.coeffs) * hl ** np.arange(pp_sigma.coeffs.size))

    def sup_on_ellipse(rho):
        M = 0.0
        if pp_sigma is not None:
            major = 0.5 * (rho + 1 / rho)
            M += float(np.sum(np.abs(pp_sigma.coeffs) * major ** np.arange(pp_sigma.coeffs.size)))
        if groups:
            d = _ellipse_dist(ws, rho)
            if np.any(d <= 0):
                return math.inf
            for (p, vec), dk in zip(groups, d):
                j = np.nonzero(vec)[0]
                j = j[j >= 1]
                if j.size:
                    M += float(np.sum(np.exp(np.log(np.abs(vec[j])) - j * math.log(hl * dk))))
        return M

    top = min(rho_max, 1e3)
    rhos = 1 + (top - 1) * np.linspace(0.02, 0.98, 49)
    Ms = np.array([sup_on_ellipse(r) for r in rhos])

    def ellipse_bound(N):
        with np.errstate(over="ignore", invalid="ignore"):
            v = 4 * Ms * rhos ** (-float(N)) / (rhos - 1)
        v = v[np.isfinite(v)]
        return float(np.min(v)) if v.size else math.inf

    lo_deg = pp_sigma.degree() if pp_sigma is not None else 0
    ladder = sorted({max(N, lo_deg) for N in CHEB_LADDER})
    cheb = np.polynomial.chebyshev
    pn = np.polynomial.polynomial
    k_all = np.arange(ladder[-1] + 1, dtype=float)
    notes = []
    for N in ladder:
        k = np.arange(N + 1)
        nodes = np.cos((2 * k + 1) * np.pi / (2 * N + 2))
        vals = np.real(np.asarray(source(z0 + hl * nodes)))
        chat = cheb.chebfit(nodes, vals, N)
        coeffs = _cheb_to_monomial(chat)
        g2 = _gamma(2 * N + 2)
        gl = (2 * N + 2) * UL / (1 - (2 * N + 2) * UL)
        lebesgue = 2 / np.pi * math.log(N + 1) + 1
        verr = value_error(z0 + hl * nodes) if value_error is not None else 0.0
        vmax = float(np.max(np.abs(vals)))
        # node values and the fit, long double conversion, rounding to double
        build = (
            lebesgue * (verr + g2 * vmax)
            + gl * float(np.sum(np.abs(chat) * _cheb_monomial_norms(N)))
            + U * float(np.sum(np.abs(coeffs)))
        )
        # compensated Horner at |s| <= 1
        horner = U * (vmax + eps) + g2 * g2 * float(np.sum(np.abs(coeffs)))
        prior = ellipse_bound(N) + build + horner
        if prior <= eps:
            cert = {"certificate": "ellipse", "truncation_bound": prior - build - horner}
            bound = prior
            break
        notes.append((N, prior))
        if curvature is None:
            continue
        kk = k_all[: N + 1]
        p2_cheb = float(np.sum(np.abs(chat) * kk**2 * (kk**2 - 1) / 3))
        p2_mono = float(np.sum(np.abs(coeffs) * kk * (kk - 1)))
        p2 = min(p2_cheb, p2_mono) / hl**2
        step = math.sqrt(2 * eps / (p2 + curvature))  # h^2/8 (P'' + S'') = eps/4
        n_grid = int(math.ceil((b - a) / step)) + 1
        if n_grid > max_grid:
            continue
        xg = np.linspace(a, b, n_grid)
        h = (b - a) / (n_grid - 1)
        sg = np.real(np.asarray(source(xg)))
        pg = _accel.comp_horner(coeffs, (xg - z0) / hl)
        gmax = float(np.max(np.abs(pg - sg)))
        gverr = value_error(xg) if value_error is not None else 0.0
        post = gmax + gverr + horner + h * h / 8 * (p2 + curvature)
        notes[-1] = (N, prior, post)
        if post <= eps:
            cert = {"certificate": "grid", "grid_points": n_grid, "curvature": curvature + p2}
            bound = post
            break
    else:
        raise BudgetExceeded(f"no Chebyshev degree up to {ladder[-1]} certifies {eps:.3g}: {notes}")

    xs = _cheb_audit_grid(a, b, 10 * (N + 1))
    approx = _accel.comp_horner(coeffs, (xs - z0) / hl)
    measured = float(np.max(np.abs(approx - np.real(np.asarray(source(xs))))))
    if cert["certificate"] == "grid":
        measured = max(measured, gmax)
    meta.update(
        {
            "method": "chebyshev",
            "degree": N,
            "pushes": 0,
            "rounding_bound": build + horner,
            "audit_points": int(xs.size),
            **cert,
        }
    )
    if measured > bound:
        raise CertificationFailure(
            f"measured error {measured:.3g} exceeds certified bound {bound:.3g}"
        )
    return CertifiedPolynomial(np.asarray(coeffs, dtype=float), (a, b), bound, measured, meta)


POLY_METHODS = ("auto", "taylor", "chebyshev")


def _gamma(n: int) -> float:
    return n * U / (1 - n * U)


def _certify(poly_part, groups, ab, eps, source, *, method, margin, real, value_error, curvature=None, meta=None):
    if method not in POLY_METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {POLY_METHODS}")
    if method in ("auto", "taylor"):
        try:
            return _polynomialize(poly_part, groups, ab, eps, source, margin=margin, real=real, meta=meta)
        except (BudgetExceeded, NoConvergence) as exc:
            if method == "taylor" or not real:
                raise
            meta = dict(meta or {}, taylor_failure=str(exc))
    return _cheb_polynomialize(
        poly_part, groups, ab, eps, source, value_error=value_error, curvature=curvature, meta=meta
    )


def rational_to_polynomial(
    r: RationalFunction, K, eps: float, *, margin: float = 2.0, method: str = "auto"
) -> CertifiedPolynomial:
    """Polynomial within eps of r on K.

    ``method="taylor"``: partial fractions, pole pushes, Taylor about the
    midpoint.  ``"chebyshev"``: interpolation with a Bernstein ellipse bound.
    ``"auto"`` tries Taylor and falls back when it cannot meet eps.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    a, b = _interval(K)
    real = r.is_real()

    def source(x):
        v = r(x)
        return np.real(v) if real else v

    def value_error(x):
        ax = np.abs(x)
        pn = np.polynomial.polynomial
        dn = np.abs(pn.polyval(x, r.den.coeffs))
        num_abs = pn.polyval(ax, np.abs(r.num.coeffs))
        den_abs = pn.polyval(ax, np.abs(r.den.coeffs))
        n = 2 * max(r.num.degree(), r.den.degree()) + 4
        return float(np.max(_gamma(n) * (num_abs + np.abs(r(x)) * den_abs) / dn))

    if r.den.degree() == 0:
        q = r.num * (1.0 / complex(r.den.coeffs[0]))
        return _polynomialize(q, [], (a, b), eps, source, real=real)
    for p, _ in r.poles:
        if _dist(p, a, b) < 1e-6:
            raise PoleNearInterval(f"pole {p:.6g} within 1e-6 of [{a}, {b}]")
    pf = partial_fractions(r)
    groups = _group_vectors(pf.terms)
    # |r''| on [a, b], sampled at a spacing well below the nearest pole distance
    dmin = min(_dist(p, a, b) for p, _ in r.poles)
    delta = min(1e-3 * dmin, 1e-3 * (b - a))
    xs = np.linspace(a, b, max(2001, int(20 * (b - a) / dmin) + 1))
    curvature = _sampled_curvature(lambda x: np.real(r(x)), xs, delta)
    return _certify(
        pf.poly_part, groups, (a, b), eps, source,
        method=method, margin=margin, real=real, value_error=value_error, curvature=curvature,
    )


# ---------------------------------------------------------------------------
# Weierstrass
# ---------------------------------------------------------------------------


def extend(f: FunctionSpec, K, mode: str = "linear") -> FunctionSpec:
    """Compactly supported continuous g equal to f on [a, b].

    Outside [a, b] g continues for a distance L = b - a, then tapers linearly
    to 0 over another L.  ``mode="constant"`` continues with f(a), f(b);
    ``mode="linear"`` continues with the one-sided slopes at the ends, which
    avoids creating a kink at a and b when f is smooth there.
    """
    if f.dim != 1:
        raise DimensionLimit("extension is one-dimensional")
    a, b = _interval(K)
    L = b - a
    fa = float(f(np.array([a]))[0])
    fb = float(f(np.array([b]))[0])
    if mode == "constant":
        sa = sb = 0.0
    elif mode == "linear":
        dx = 1e-7 * L
        sa = (float(f(np.array([a + dx]))[0]) - fa) / dx
        sb = (fb - float(f(np.array([b - dx]))[0])) / dx
    else:
        raise ValidationError(f"unknown extension mode {mode!r}")
    ea, eb = fa - sa * L, fb + sb * L

    def fn(x):
        x = np.asarray(x, dtype=float)
        inside = np.clip(x, a, b)
        out = np.asarray(f(inside), dtype=float).copy()
        left = x < a
        right = x > b
        sl = a - x
        sr = x - b
        out = np.where(left & (sl <= L), fa - sa * sl, out)
        out = np.where(left & (sl > L), ea * np.clip(2 - sl / L, 0, 1), out)
        out = np.where(right & (sr <= L), fb + sb * sr, out)
        out = np.where(right & (sr > L), eb * np.clip(2 - sr / L, 0, 1), out)
        return out

    kinks = set(f.axis_kinks()) if f.kinks or f.breakpoints else set()
    kinks = {k for k in kinks if a < k < b} | {a - 2 * L, a - L, a, b, b + L, b + 2 * L}
    bound = max(f.bound, abs(ea), abs(eb), abs(fa), abs(fb))
    return FunctionSpec(
        f"ext({f.name})",
        1,
        fn,
        bound,
        Box.interval(a - 2 * L, b + 2 * L),
        kinks=(tuple(sorted(kinks)),),
    )


M_LADDER = (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128)
DEFAULT_SPLIT = (0.8, 0.05, 0.15)


def weierstrass(
    f: FunctionSpec,
    K,
    eps: float,
    *,
    kernel: Kernel | None = None,
    split: Sequence[float] = DEFAULT_SPLIT,
    extension: str = "linear",
    stage_grid: int = 401,
    final_grid: int = 10000,
    max_halvings: int = 12,
    method: str = "auto",
) -> CertifiedPolynomial:
    """Polynomial approximation of a continuous f on [a, b] in three stages.

    1. mollify: g * phi_t with g the compactly supported extension of f;
    2. Riemann sum of translated rational kernels;
    3. certified polynomialization of that rational function.

    ``split`` divides eps across the stages.  Stage 1 gets its share
    outright; what its measured error leaves over goes to stages 2 and 3 in
    the ratio of the remaining two entries, and stage 3 also inherits any
    slack from stage 2.  Without an explicit kernel the
    kernel is c_m/(1+x^2)^m with t near the half-length and m raised along a
    ladder; with an explicit rational kernel t is halved instead.
    """
    if f.dim != 1:
        raise DimensionLimit("weierstrass is one-dimensional")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    split = tuple(float(s) for s in split)
    if len(split) != 3 or any(s <= 0 for s in split) or sum(split) > 1 + 1e-12:
        raise ValidationError("split must be three positive fractions summing to at most 1")
    a, b = _interval(K)
    hl = 0.5 * (b - a)
    e1 = eps * split[0]
    g = extend(f, (a, b), extension)
    xs = np.linspace(a, b, stage_grid)
    fx = f(xs)
    conv_tol = min(1e-9, eps * split[1] / 100)

    def stage1(kt):
        vals = convolve_many(g, kt, xs, conv_tol)
        return float(np.max(np.abs(vals - fx))), vals

    # stage 1
    chosen = None
    tried = []
    if kernel is None:
        for t in (hl * 2.0**-j for j in range(0, 3)):
            for m in M_LADDER:
                kt = scale(poisson_m(m), t)
                err, vals = stage1(kt)
                tried.append((t, m, err))
                if err <= e1:
                    chosen = (kt, err, vals, m)
                    break
            if chosen:
                break
    else:
        if kernel.rational is None:
            raise ValidationError("weierstrass needs a rational kernel")
        t = hl
        for _ in range(max_halvings + 1):
            kt = scale(kernel, t)
            err, vals = stage1(kt)
            tried.append((t, None, err))
            if err <= e1:
                chosen = (kt, err, vals, None)
                break
            t *= 0.5
    if chosen is None:
        raise BudgetExceeded(f"mollification error stays above {e1:.3g}: tried {tried[-3:]}")
    kt, err1, conv_vals, m_used = chosen

    # stage 2: what stage 1 left over is shared in the ratio of the split
    rest = eps - err1
    e2 = rest * split[1] / (split[1] + split[2])
    h = kt.t / 4.0
    for _ in range(20):
        ts = riemann_rational(g, kt, None, h)
        err2 = float(np.max(np.abs(ts(xs) - conv_vals)))
        if err2 <= e2:
            break
        h *= 0.5
    else:
        raise BudgetExceeded(f"Riemann gap stays above {e2:.3g}")

    # stage 3 gets everything not yet spent
    e3 = eps - err1 - err2
    poly_part, groups = ts.pole_groups()
    absum = TranslateSum(ts.kernel, ts.ys, np.abs(ts.ws), ts.h, ts.phi)
    # each phi value is good to a few ulps; the dot product adds len(ts)
    value_error = lambda x: _gamma(len(ts) + 16) * float(np.max(absum(x)))
    # |S''| <= sum |w_k| sup |phi_t''|
    u = audit_grid(1, kt.t, 20001)
    curvature = float(np.sum(np.abs(ts.ws))) * _sampled_curvature(kt, u, 1e-3 * kt.t)
    cp = _certify(
        poly_part, groups, (a, b), e3, ts,
        method=method, margin=2.0, real=True, value_error=value_error, curvature=curvature,
    )

    xf = np.linspace(a, b, final_grid)
    final = float(np.max(np.abs(cp(xf) - f(xf))))
    stages = [
        {"stage": "mollify", "budget": e1, "measured": err1},
        {"stage": "riemann", "budget": e2, "measured": err2},
        {"stage": "polynomial", "budget": e3, "measured": cp.measured_error, "certified": cp.bound},
    ]
    meta = dict(cp.meta)
    meta.update(
        {
            "t": kt.t,
            "h": h,
            "kernel": kt.name,
            "kernel_order": m_used,
            "nodes": len(ts),
            "split": list(split),
            "extension": extension,
            "stages": stages,
            "final_grid": final_grid,
            "ok": final <= eps and all(s["measured"] <= s["budget"] for s in stages),
        }
    )
    bound = err1 + err2 + cp.bound
    return CertifiedPolynomial(cp.coeffs, (a, b), bound, final, meta)


# ---------------------------------------------------------------------------
# sums of products
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SumOfProducts:
    """sum_k w_k prod_j theta_{j,t}(x_j - y_kj)."""

    factors: tuple[ScaledKernel, ...]
    nodes: np.ndarray  # (K, n)
    weights: np.ndarray  # (K,)
    h: float
    box: Box  # every term vanishes outside

    @property
    def dim(self) -> int:
        return len(self.factors)

    def __len__(self):
        return int(self.weights.size)

    def term(self, k: int) -> list[Callable[[np.ndarray], np.ndarray]]:
        """The one-variable factors of term k (weight folded into the first)."""
        y = self.nodes[k]
        w = self.weights[k]
        out = []
        for j, th in enumerate(self.factors):
            c = w if j == 0 else 1.0
            out.append(lambda u, th=th, yj=y[j], c=c: c * th(np.asarray(u, dtype=float) - yj))
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        out = np.zeros(x.shape[0])
        step = max(1, 1_000_000 // max(1, len(self)))
        for s in range(0, x.shape[0], step):
            xb = x[s : s + step]
            prod = np.ones((xb.shape[0], len(self)))
            for j, th in enumerate(self.factors):
                prod *= th(xb[:, j, None] - self.nodes[None, :, j])
            out[s : s + step] = prod @ self.weights
        return out


def sum_of_products(f: FunctionSpec, k: Kernel | ScaledKernel, t: float | None, h: float) -> SumOfProducts:
    """Riemann sum of f * phi_t for a tensor kernel of compactly supported factors."""
    kt = k if isinstance(k, ScaledKernel) and t is None else scale(k.base if isinstance(k, ScaledKernel) else k, t)
    n = kt.dim
    if n > 3:
        raise DimensionLimit("dimension above 3")
    if n != f.dim:
        raise ValidationError("f and kernel dimensions differ")
    factors = kt.factors if kt.structure == "tensor" else (kt,)
    if f.support is None:
        raise UnboundedSupport(f"{f.name} has unbounded support")
    if any(not math.isfinite(th.support_radius) for th in factors):
        raise UnboundedSupport("tensor factors must have compact support")
    if not h > 0:
        raise ValidationError("spacing h must be positive")
    axes = []
    for j in range(n):
        lo, hi = f.support.lo[j], f.support.hi[j]
        axes.append(np.arange(math.floor(lo / h + 1e-9), math.ceil(hi / h - 1e-9) + 1) * h)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    w = f(grid) * h**n
    keep = w != 0
    fat = [th.support_radius for th in factors]
    box = Box(
        tuple(f.support.lo[j] - fat[j] for j in range(n)),
        tuple(f.support.hi[j] + fat[j] for j in range(n)),
    )
    return SumOfProducts(tuple(factors), grid[keep], w[keep], float(h), box)
