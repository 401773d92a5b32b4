"""Mollifier catalog: normalized kernels, scaling and concentration.

A :class:`Kernel` is a unit-integral function on R^n (n <= 3) together
with the metadata the convolution engine needs to truncate integrals:
a constant ``decay_C`` with ``|phi(x)| <= C/(1 + |x|**(n+1))``, a support
radius, a parity flag and a structure tag.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfc, gammaincc, gammaln

from ._quad import integrate_1d, panel_edges
from .errors import DimensionLimit, NonIntegrable, NonPositiveScale, ValidationError, ZeroIntegral
from .poly import Polynomial
from .ratfun import RationalFunction, make_kernel_rational, translate_scale

__all__ = [
    "Kernel",
    "ScaledKernel",
    "normalize",
    "scale",
    "ball_mass",
    "make_tensor",
    "make_radial",
    "poisson",
    "poisson2",
    "poisson_m",
    "gauss",
    "bump",
    "get_kernel",
    "CATALOG_1D",
    "sphere_area",
    "audit_grid",
]

MAX_DIM = 3
NORM_TOL = 1e-10
SAFETY = 1.5


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2, 2*pi, 4*pi for n = 1, 2, 3)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def audit_grid(dim: int, scale: float = 1.0, n: int = 1000, seed: int = 0) -> np.ndarray:
    """Deterministic audit points: sinh-spaced radii, dense near the origin."""
    umax = math.asinh(1e3)
    if dim == 1:
        return scale * np.sinh(np.linspace(-umax, umax, n))
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = scale * np.sinh(np.linspace(0.0, umax, n))
    return d * r[:, None]


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return x
    if x.shape[-1] != dim:
        raise ValidationError(f"expected points with last axis {dim}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class Kernel:
    """A normalized mollifier phi on R^dim."""

    name: str
    dim: int
    structure: str
    raw: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    norm_factor: float
    decay_C: float
    parity_even: bool
    support_radius: float = math.inf
    rational: Optional[RationalFunction] = field(default=None, repr=False)
    factors: tuple["Kernel", ...] = field(default=(), repr=False)
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    tail_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def __call__(self, x):
        x = _as_points(x, self.dim)
        return self.norm_factor * np.asarray(self.raw(x), dtype=float)

    def scale(self, t: float) -> "ScaledKernel":
        return scale(self, t)

    def tail_bound(self, R: float) -> float:
        """Upper bound on the mass of |phi| outside the cube [-R, R]^dim."""
        if R >= self.support_radius:
            return 0.0
        if self.tail_fn is not None:
            return float(min(1.0, self.tail_fn(R)))
        if self.factors:
            return float(min(1.0, sum(f.tail_bound(R) for f in self.factors)))
        if not math.isfinite(self.decay_C):
            return math.inf
        # int_{|x|>R} C |x|^-(n+1) dx; the cube contains the ball of radius R
        return self.decay_C * sphere_area(self.dim) / R

    def radius_for_tail(self, tol: float) -> float:
        """Smallest dyadic R >= 1 with tail_bound(R) < tol."""
        if math.isfinite(self.support_radius):
            return float(self.support_radius)
        R = 1.0
        while self.tail_bound(R) >= tol:
            R *= 2.0
            if R > 2.0**80:
                raise NonIntegrable(f"{self.name}: tail bound does not fall below {tol:.3g}")
        return R

    def audit(self, grid: np.ndarray | None = None) -> dict:
        """Check the decay bound and parity on an audit grid."""
        scale_ = self.support_radius if math.isfinite(self.support_radius) else 1.0
        x = audit_grid(self.dim, scale_) if grid is None else grid
        v = self(x)
        rad = np.abs(x) if self.dim == 1 else np.linalg.norm(x, axis=-1)
        env = self.decay_C / (1.0 + rad ** (self.dim + 1))
        decay_ok = bool(np.all(np.abs(v) <= env * (1 + 1e-12)))
        parity_dev = float(np.max(np.abs(self(-x) - v)))
        return {
            "decay_ok": decay_ok,
            "parity_dev": parity_dev,
            "parity_ok": (not self.parity_even) or parity_dev <= 1e-12,
        }


@dataclass(frozen=True, eq=False)
class ScaledKernel:
    """phi_t(x) = t**-n phi(x/t)."""

    base: Kernel
    t: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def parity_even(self) -> bool:
        return self.base.parity_even

    @property
    def structure(self) -> str:
        return self.base.structure

    @property
    def support_radius(self) -> float:
        return self.t * self.base.support_radius

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def rational(self) -> Optional[RationalFunction]:
        if self.base.rational is None:
            return None
        return translate_scale(self.base.rational, self.t, 0.0)

    @property
    def factors(self) -> tuple["ScaledKernel", ...]:
        return tuple(ScaledKernel(f, self.t) for f in self.base.factors)

    def __call__(self, x):
        x = _as_points(x, self.dim)
        return self.base(x / self.t) / self.t**self.dim

    def tail_bound(self, R: float) -> float:
        """Mass of |phi_t| outside [-R, R]^n."""
        return self.base.tail_bound(R / self.t)


def scale(k: Kernel, t: float) -> ScaledKernel:
    if not (isinstance(t, (int, float, np.floating)) and t > 0 and math.isfinite(t)):
        raise NonPositiveScale(f"scale must be a positive finite number, got {t!r}")
    return ScaledKernel(k, float(t))


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------


def _line_integral(g, R, tol, inner=0.25):
    return integrate_1d(g, panel_edges(0.0, R, inner), tol).value


def _radial_integral(rho, dim, R, tol, inner=0.25):
    area = sphere_area(dim)

    def g(r):
        return area * np.abs(r) ** (dim - 1) * rho(np.abs(r)) * 0.5

    # integrate over [-R, R] and halve: reuses the symmetric panel layout
    return integrate_1d(g, panel_edges(0.0, R, inner), tol).value


def _polar_grid(dim, n_ang=64):
    """Angular rule on the unit sphere: directions and weights (sum = area)."""
    if dim == 2:
        th = 2 * math.pi * (np.arange(n_ang) + 0.5) / n_ang
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n_ang, 2 * math.pi / n_ang)
    u, wu = np.polynomial.legendre.leggauss(n_ang // 2)
    ph = 2 * math.pi * (np.arange(n_ang) + 0.5) / n_ang
    U, P = np.meshgrid(u, ph, indexing="ij")
    s = np.sqrt(1 - U**2)
    dirs = np.stack([s * np.cos(P), s * np.sin(P), U], axis=-1).reshape(-1, 3)
    w = np.outer(wu, np.full(n_ang, 2 * math.pi / n_ang)).ravel()
    return dirs, w


def _ball_integral(fn, dim, r, tol, inner=0.25):
    """int_{|x|<r} fn(x) dx in polar coordinates."""
    dirs, w = _polar_grid(dim)

    def g(s):
        s = np.abs(s)
        pts = s[:, None, None] * dirs[None, :, :]
        vals = fn(pts.reshape(-1, dim)).reshape(s.size, -1) @ w
        return 0.5 * vals * s ** (dim - 1)

    return integrate_1d(g, panel_edges(0.0, r, min(inner, r)), tol).value


def _raw_integral(raw, dim, decay_C, support_radius, radial_profile=None):
    if radial_profile is not None:
        integ = lambda R: _radial_integral(radial_profile, dim, R, NORM_TOL / 10)
    elif dim == 1:
        integ = lambda R: _line_integral(raw, R, NORM_TOL / 10)
    else:
        integ = lambda R: _ball_integral(raw, dim, R, NORM_TOL / 10)
    if math.isfinite(support_radius):
        return integ(support_radius)
    if decay_C is not None and math.isfinite(decay_C):
        R = 1.0
        while decay_C * sphere_area(dim) / R >= NORM_TOL:
            R *= 2.0
        return integ(R)
    # no decay metadata: watch the integral under R-doubling
    R = 4.0
    prev = integ(R)
    for _ in range(60):
        R *= 2.0
        cur = integ(R)
        if abs(cur - prev) < NORM_TOL * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise NonIntegrable("integral does not stabilize under radius doubling")


def normalize(
    raw: Callable[[np.ndarray], np.ndarray],
    dim: int = 1,
    *,
    name: str = "custom",
    structure: str = "custom",
    decay_C: float | None = None,
    raw_decay_C: float | None = None,
    parity_even: bool = False,
    support_radius: float = math.inf,
    integral: float | None = None,
    rational: RationalFunction | None = None,
    profile: Callable | None = None,
    tail_fn: Callable | None = None,
) -> Kernel:
    """Scale ``raw`` to unit integral and attach metadata.

    ``raw_decay_C`` is a decay constant for ``raw`` itself and is used to pick
    the truncation radius; ``decay_C`` is the constant for the normalized
    kernel.  When neither is known the normalized kernel's constant is taken
    from an audit-grid maximum times a safety factor.  ``integral`` skips the
    numerical integration when a closed form is known.
    """
    if not 1 <= dim <= MAX_DIM:
        raise DimensionLimit(f"dimension {dim} outside 1..{MAX_DIM}")
    if integral is None:
        integral = _raw_integral(raw, dim, raw_decay_C, support_radius, profile)
    if abs(integral) < 1e-12:
        raise ZeroIntegral(f"raw integral {integral:.3g} is too close to zero")
    nf = 1.0 / integral
    if decay_C is None:
        if raw_decay_C is not None:
            decay_C = abs(nf) * raw_decay_C
        else:
            sc = support_radius if math.isfinite(support_radius) else 1.0
            x = audit_grid(dim, sc)
            rad = np.abs(x) if dim == 1 else np.linalg.norm(x, axis=-1)
            decay_C = SAFETY * float(np.max(np.abs(nf * raw(x)) * (1 + rad ** (dim + 1))))
    nprofile = None
    if profile is not None:
        nprofile = lambda s, _p=profile, _nf=nf: _nf * _p(s)
    if rational is not None:
        rational = RationalFunction(
            rational.num * nf, rational.den, kernel=rational.kernel, poles_hint=rational.poles
        )
    return Kernel(
        name=name,
        dim=dim,
        structure=structure,
        raw=raw,
        norm_factor=nf,
        decay_C=float(decay_C),
        parity_even=parity_even,
        support_radius=float(support_radius),
        rational=rational,
        profile=nprofile,
        tail_fn=tail_fn,
    )


def ball_mass(k: Kernel | ScaledKernel, t: float, r: float) -> float:
    """int over |x| < r of phi_t."""
    if isinstance(k, ScaledKernel):
        k, t = k.base, k.t * t
    if not (t > 0 and r > 0):
        raise ValidationError("t and r must be positive")
    u = r / t
    if u >= k.support_radius:
        return 1.0  # all of the mass sits inside the support
    if k.dim == 1:
        v = _line_integral(k, u, 1e-12)
    elif k.profile is not None:
        v = _radial_integral(k.profile, k.dim, u, 1e-12)
    else:
        v = _ball_integral(k, k.dim, u, 1e-11)
    return float(min(max(v, 0.0), 1.0)) if _nonneg(k) else float(v)


def _nonneg(k: Kernel) -> bool:
    return k.structure in ("rational", "gaussian", "bump", "tensor", "radial")


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def poisson_m_integral(m: int) -> float:
    """int (1 + x^2)^-m dx over R."""
    return math.exp(0.5 * math.log(math.pi) + gammaln(m - 0.5) - gammaln(m))


def _poisson_m_tail(m: int) -> Callable[[float], float]:
    c = 1.0 / poisson_m_integral(m)

    def tail(R):
        # 2 * int_R^inf c (1+x^2)^-m dx <= 2c int_R^inf x^-2m dx
        if m == 1:
            return 1.0 - 2.0 / math.pi * math.atan(R)
        if m == 2:
            return 1.0 - 2.0 / math.pi * (math.atan(R) + R / (1 + R * R))
        return 2.0 * c * R ** (1 - 2 * m) / (2 * m - 1)

    return tail


@lru_cache(maxsize=None)
def poisson_m(m: int) -> Kernel:
    """c_m / (1 + x^2)^m; m = 1 is the Poisson kernel."""
    if m < 1:
        raise ValidationError("poisson order must be >= 1")
    den = Polynomial([1.0, 0.0, 1.0]) ** m
    hint = ((1j, m), (-1j, m))
    rat = make_kernel_rational(Polynomial([1.0]), den, poles_hint=hint)
    I = poisson_m_integral(m)

    def raw(x, _m=m):
        return (1.0 + np.asarray(x, dtype=float) ** 2) ** (-_m)

    name = {1: "poisson", 2: "poisson2"}.get(m, f"poisson{m}")
    # phi(x) (1 + x^2) = c (1 + x^2)^(1-m) <= c
    return normalize(
        raw,
        1,
        name=name,
        structure="rational",
        decay_C=1.0 / I * (2.0 if m == 1 else 1.0),
        parity_even=True,
        integral=I,
        rational=rat,
        tail_fn=_poisson_m_tail(m),
    )


def poisson() -> Kernel:
    return poisson_m(1)


def poisson2() -> Kernel:
    return poisson_m(2)


def _gauss_tail(dim):
    def tail(R):
        if dim == 1:
            return float(erfc(R))
        # the cube contains the ball, whose complement has mass Q(n/2, R^2)
        return float(gammaincc(dim / 2, R * R))

    return tail


@lru_cache(maxsize=None)
def gauss(dim: int = 1) -> Kernel:
    """exp(-|x|^2) / pi^(n/2)."""
    if not 1 <= dim <= MAX_DIM:
        raise DimensionLimit(f"dimension {dim} outside 1..{MAX_DIM}")

    def raw(x, _d=dim):
        x = np.asarray(x, dtype=float)
        r2 = x * x if _d == 1 else np.sum(x * x, axis=-1)
        return np.exp(-r2)

    return normalize(
        raw,
        dim,
        name="gauss",
        structure="gaussian",
        parity_even=True,
        integral=math.pi ** (dim / 2),
        profile=(lambda s: np.exp(-np.asarray(s) ** 2)) if dim > 1 else None,
        tail_fn=_gauss_tail(dim),
    )


def _bump_profile(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def bump(dim: int = 1) -> Kernel:
    """exp(-1/(1-|x|^2)) on the unit ball, normalized."""
    if not 1 <= dim <= MAX_DIM:
        raise DimensionLimit(f"dimension {dim} outside 1..{MAX_DIM}")

    def raw(x, _d=dim):
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if _d == 1 else np.linalg.norm(x, axis=-1)
        return _bump_profile(r)

    return normalize(
        raw,
        dim,
        name="bump",
        structure="bump",
        parity_even=True,
        support_radius=1.0,
        profile=_bump_profile if dim > 1 else None,
    )


def make_tensor(thetas: Sequence[Kernel]) -> Kernel:
    """phi(x) = prod_j theta_j(x_j) from 1-d kernels."""
    thetas = tuple(thetas)
    n = len(thetas)
    if n > MAX_DIM:
        raise DimensionLimit(f"tensor of {n} factors exceeds dimension {MAX_DIM}")
    if n == 0:
        raise ValidationError("tensor needs at least one factor")
    for th in thetas:
        if th.dim != 1:
            raise ValidationError("tensor factors must be one-dimensional")
    if n == 1:
        return thetas[0]

    def raw(x):
        x = np.asarray(x, dtype=float)
        out = thetas[0](x[..., 0])
        for j in range(1, n):
            out = out * thetas[j](x[..., j])
        return out

    radii = [th.support_radius for th in thetas]
    compact = all(math.isfinite(r) for r in radii)
    sr = math.sqrt(sum(r * r for r in radii)) if compact else math.inf
    # a product of slowly decaying factors does not meet the n-d decay bound
    fast = all(math.isfinite(r) or th.structure == "gaussian" for r, th in zip(radii, thetas))
    if fast:
        sc = sr if compact else 1.0
        x = audit_grid(n, sc)
        rad = np.linalg.norm(x, axis=-1)
        C = SAFETY * float(np.max(np.abs(raw(x)) * (1 + rad ** (n + 1))))
    else:
        C = math.inf
    name = "tensor(" + ",".join(th.name for th in thetas) + ")"
    return Kernel(
        name=name,
        dim=n,
        structure="tensor",
        raw=raw,
        norm_factor=1.0,
        decay_C=C,
        parity_even=all(th.parity_even for th in thetas),
        support_radius=sr,
        factors=thetas,
    )


def make_radial(
    rho: Callable[[np.ndarray], np.ndarray],
    dim: int,
    *,
    name: str = "radial",
    support_radius: float = math.inf,
    raw_decay_C: float | None = None,
    tail_fn: Callable | None = None,
) -> Kernel:
    """phi(x) = c * rho(|x|) on R^dim, normalized."""
    if not 1 <= dim <= MAX_DIM:
        raise DimensionLimit(f"dimension {dim} outside 1..{MAX_DIM}")

    def raw(x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if dim == 1 else np.linalg.norm(x, axis=-1)
        return rho(r)

    return normalize(
        raw,
        dim,
        name=name,
        structure="radial",
        raw_decay_C=raw_decay_C,
        parity_even=True,
        support_radius=support_radius,
        profile=rho if dim > 1 else None,
        tail_fn=tail_fn,
    )


def _cauchy_profile(dim):
    e = (dim + 1) / 2.0

    def rho(s):
        return (1.0 + np.asarray(s, dtype=float) ** 2) ** (-e)

    return rho


@lru_cache(maxsize=None)
def radial_kernel(profile: str, dim: int) -> Kernel:
    if profile in ("gauss", "gaussian"):
        k = make_radial(lambda s: np.exp(-np.asarray(s) ** 2), dim, name=f"radial(gauss,{dim})",
                        tail_fn=lambda R, _d=dim: float(gammaincc(_d / 2, R * R)))
        return k
    if profile == "bump":
        return make_radial(_bump_profile, dim, name=f"radial(bump,{dim})", support_radius=1.0)
    if profile == "poisson":
        # (1+s^2)^-(n+1)/2 <= 2^((n+1)/2) / (1 + s^(n+1))
        return make_radial(_cauchy_profile(dim), dim, name=f"radial(poisson,{dim})",
                           raw_decay_C=2.0 ** ((dim + 1) / 2))
    raise ValidationError(f"unknown radial profile {profile!r}")


CATALOG_1D = {
    "poisson": poisson,
    "poisson2": poisson2,
    "gauss": gauss,
    "bump": bump,
}

_TENSOR_RE = re.compile(r"^tensor\((.*)\)$")
_RADIAL_RE = re.compile(r"^radial\(\s*([a-z]+)\s*,\s*(\d+)\s*\)$")
_POISSON_M_RE = re.compile(r"^poisson(\d+)$")


def get_kernel(spec: str) -> Kernel:
    """Resolve a catalog name: poisson, poisson2, poissonM, gauss, bump,
    tensor(k1,k2[,k3]), radial(profile,n)."""
    s = spec.strip().lower()
    if s in CATALOG_1D:
        return CATALOG_1D[s]()
    m = _POISSON_M_RE.match(s)
    if m:
        return poisson_m(int(m.group(1)))
    m = _TENSOR_RE.match(s)
    if m:
        parts = [p.strip() for p in m.group(1).split(",") if p.strip()]
        return make_tensor([get_kernel(p) for p in parts])
    m = _RADIAL_RE.match(s)
    if m:
        return radial_kernel(m.group(1), int(m.group(2)))
    raise ValidationError(f"unknown kernel {spec!r}")
