"""Target functions f: bounded, with known support and one-sided limits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "Box",
    "Breakpoint",
    "FunctionSpec",
    "constant",
    "hat",
    "heaviside",
    "jump",
    "abs_fn",
    "identity",
    "piecewise",
    "from_json",
    "product",
    "smoothed_square",
    "radial_bump",
    "compose",
    "get_function",
    "FUNCTION_NAMES",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; a 1-d box is an interval."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValidationError("box bounds must be non-empty and of equal length")
        for a, b in zip(self.lo, self.hi):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValidationError(f"invalid box axis [{a}, {b}]")

    @classmethod
    def interval(cls, a: float, b: float) -> "Box":
        return cls((float(a),), (float(b),))

    @classmethod
    def cube(cls, a: float, b: float, dim: int) -> "Box":
        return cls((float(a),) * dim, (float(b),) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def a(self) -> float:
        return self.lo[0]

    @property
    def b(self) -> float:
        return self.hi[0]

    def widened(self, r: float) -> "Box":
        return Box(tuple(x - r for x in self.lo), tuple(x + r for x in self.hi))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            return (x >= self.lo[0]) & (x <= self.hi[0])
        return np.all((x >= np.array(self.lo)) & (x <= np.array(self.hi)), axis=-1)

    def grid(self, m: int) -> np.ndarray:
        """m points per axis, endpoints included."""
        axes = [np.linspace(a, b, m) for a, b in zip(self.lo, self.hi)]
        if self.dim == 1:
            return axes[0]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)


@dataclass(frozen=True)
class Breakpoint:
    x: float
    left: float
    right: float


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A bounded function on R^dim.

    ``support`` is None for unbounded support.  ``kinks`` lists, per axis,
    coordinates where f or a derivative is not smooth; the quadrature aligns
    panel edges with them.  ``breakpoints`` (dim 1) are jump points with
    their one-sided limits.
    """

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    bound: float
    support: Optional[Box] = None
    breakpoints: tuple[Breakpoint, ...] = ()
    kinks: tuple[tuple[float, ...], ...] = ()
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (self.bound >= 0 and math.isfinite(self.bound)):
            raise ValidationError("f must be bounded (finite bound M required)")
        if self.breakpoints and self.dim != 1:
            raise ValidationError("breakpoints are only defined in one dimension")
        if self.support is not None and self.support.dim != self.dim:
            raise ValidationError("support box dimension does not match f")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim > 1 and x.shape[-1] != self.dim:
            raise ValidationError(f"expected points with last axis {self.dim}")
        out = np.asarray(self.fn(x), dtype=float)
        if self.support is not None:
            out = np.where(self.support.contains(x), out, 0.0)
        return out

    @property
    def support_radius(self) -> float:
        if self.support is None:
            return math.inf
        return float(max(np.max(np.abs(self.support.lo)), np.max(np.abs(self.support.hi))) * math.sqrt(self.dim))

    def axis_kinks(self, axis: int = 0) -> tuple[float, ...]:
        pts = set(self.kinks[axis]) if self.kinks else set()
        if self.dim == 1:
            pts.update(b.x for b in self.breakpoints)
        if self.support is not None:
            pts.update((self.support.lo[axis], self.support.hi[axis]))
        return tuple(sorted(pts))

    def audit(self, n: int = 1000, seed: int = 0) -> dict:
        """Bound check on an audit grid and one-sided limit checks."""
        if self.dim == 1:
            if self.support is not None:
                w = self.support.b - self.support.a
                x = np.linspace(self.support.a - 0.25 * w, self.support.b + 0.25 * w, n)
            else:
                x = np.sinh(np.linspace(-8, 8, n))
        else:
            rng = np.random.default_rng(seed)
            if self.support is not None:
                lo, hi = np.array(self.support.lo), np.array(self.support.hi)
                x = lo + (hi - lo) * rng.uniform(-0.1, 1.1, size=(n, self.dim))
            else:
                x = rng.normal(scale=3.0, size=(n, self.dim))
        bound_ok = bool(np.all(np.abs(self(x)) <= self.bound * (1 + 1e-12)))
        lim_err = 0.0
        for bp in self.breakpoints:
            # approach sequence x -+ 2^-k; the deepest term stands in for the limit
            h = 2.0 ** -np.arange(10, 41)
            lo = self(bp.x - h)
            hi = self(bp.x + h)
            lim_err = max(lim_err, abs(float(lo[-1]) - bp.left), abs(float(hi[-1]) - bp.right))
        return {"bound_ok": bound_ok, "limit_err": lim_err, "limits_ok": lim_err <= 1e-9}

    def left_right(self, x: float) -> tuple[float, float]:
        for bp in self.breakpoints:
            if bp.x == x:
                return bp.left, bp.right
        v = float(self(np.array([x]))[0])
        return v, v


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def constant(c: float = 1.0, dim: int = 1) -> FunctionSpec:
    """f = c everywhere; no compact support."""
    c = float(c)

    def fn(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape if dim == 1 else x.shape[:-1]
        return np.full(shape, c)

    return FunctionSpec(f"constant({c:g})", dim, fn, abs(c), None)


def hat() -> FunctionSpec:
    return FunctionSpec(
        "hat",
        1,
        lambda x: np.maximum(0.0, 1.0 - np.abs(x)),
        1.0,
        Box.interval(-1, 1),
        kinks=((-1.0, 0.0, 1.0),),
        meta={"lipschitz": 1.0},
    )


def heaviside() -> FunctionSpec:
    return FunctionSpec(
        "step",
        1,
        lambda x: (np.asarray(x) > 0).astype(float),
        1.0,
        None,
        breakpoints=(Breakpoint(0.0, 0.0, 1.0),),
    )


def jump(at: float = 1.0, left: float = 2.0, right: float = 6.0) -> FunctionSpec:
    """left + g(x - at) for x < at, right + g(x - at) after, g(u) = u^2/(1+u^2).

    The bounded perturbation g keeps the limit value (left+right)/2 from being
    attained exactly at every t.
    """

    def fn(x):
        x = np.asarray(x, dtype=float)
        u = x - at
        g = u * u / (1 + u * u)
        return np.where(x < at, left, right) + g

    return FunctionSpec(
        f"jump({at:g},{left:g},{right:g})",
        1,
        fn,
        max(abs(left), abs(right)) + 1.0,
        None,
        breakpoints=(Breakpoint(float(at), float(left), float(right)),),
    )


def abs_fn(half_width: float = 1.0) -> FunctionSpec:
    """|x| on [-w, w], zero outside."""
    w = float(half_width)
    return FunctionSpec(
        "abs",
        1,
        lambda x: np.abs(x),
        w,
        Box.interval(-w, w),
        breakpoints=(Breakpoint(-w, 0.0, w), Breakpoint(w, w, 0.0)),
        kinks=((0.0,),),
    )


def identity(half_width: float = 10.0) -> FunctionSpec:
    """x on [-w, w], zero outside (f must be bounded)."""
    w = float(half_width)
    return FunctionSpec(
        f"identity({w:g})",
        1,
        lambda x: np.asarray(x, dtype=float),
        w,
        Box.interval(-w, w),
        breakpoints=(Breakpoint(-w, 0.0, -w), Breakpoint(w, w, 0.0)),
    )


def piecewise(pieces: Sequence[dict], name: str = "piecewise") -> FunctionSpec:
    """Piecewise polynomial from ``[{"interval": [lo, hi], "poly": [c0, c1, ...]}, ...]``.

    Zero outside the pieces.  Jumps between adjacent pieces (and at the outer
    ends) become breakpoints with one-sided limits taken from the pieces.
    """
    if not pieces:
        raise ValidationError("piecewise function needs at least one piece")
    parsed = []
    for p in pieces:
        try:
            lo, hi = (float(v) for v in p["interval"])
            coeffs = np.asarray([float(c) for c in p["poly"]], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad piece {p!r}: {exc}") from None
        if not lo < hi:
            raise ValidationError(f"empty piece interval [{lo}, {hi}]")
        if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
            raise ValidationError("piece polynomial must have finite coefficients")
        parsed.append((lo, hi, coeffs))
    parsed.sort(key=lambda r: r[0])
    for (a0, b0, _), (a1, b1, _) in zip(parsed, parsed[1:]):
        if a1 < b0:
            raise ValidationError("piece intervals overlap")

    def peval(c, x):
        return np.polynomial.polynomial.polyval(x, c)

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for lo, hi, c in parsed:
            m = (x >= lo) & (x < hi)
            out = np.where(m, peval(c, x), out)
        # the last piece owns its right endpoint
        lo, hi, c = parsed[-1]
        out = np.where(x == hi, peval(c, x), out)
        return out

    # one-sided limits at every piece endpoint
    ends = sorted({v for lo, hi, _ in parsed for v in (lo, hi)})
    bps, kinks = [], []
    for e in ends:
        left = right = 0.0
        for lo, hi, c in parsed:
            if hi == e:
                left = float(peval(c, e))
            if lo == e:
                right = float(peval(c, e))
        kinks.append(e)
        if abs(left - right) > 0.0:
            bps.append(Breakpoint(e, left, right))
    # a crude but safe bound: sample each piece densely, add slack for curvature
    bound = 0.0
    for lo, hi, c in parsed:
        xs = np.linspace(lo, hi, 2001)
        vals = np.abs(peval(c, xs))
        d = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
        slope = float(np.max(np.abs(peval(d, xs)))) if d.size else 0.0
        bound = max(bound, float(vals.max()) + slope * (hi - lo) / 2000)
    support = Box.interval(parsed[0][0], parsed[-1][1])
    return FunctionSpec(
        name, 1, fn, bound, support, breakpoints=tuple(bps), kinks=(tuple(kinks),),
        meta={"pieces": [{"interval": [lo, hi], "poly": c.tolist()} for lo, hi, c in parsed]},
    )


def from_json(text: str) -> FunctionSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid piecewise JSON: {exc}") from None
    if isinstance(data, dict) and "pieces" in data:
        data = data["pieces"]
    if not isinstance(data, list):
        raise ValidationError("piecewise JSON must be a list of pieces")
    return piecewise(data)


def product(*factors: FunctionSpec) -> FunctionSpec:
    """f(x) = prod_j g_j(x_j) for one-dimensional g_j."""
    if not 2 <= len(factors) <= 3:
        raise ValidationError("product needs 2 or 3 factors")
    for g in factors:
        if g.dim != 1:
            raise ValidationError("product factors must be one-dimensional")
    n = len(factors)

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = factors[0](x[..., 0])
        for j in range(1, n):
            out = out * factors[j](x[..., j])
        return out

    if all(g.support is not None for g in factors):
        support = Box(tuple(g.support.a for g in factors), tuple(g.support.b for g in factors))
    else:
        support = None
    return FunctionSpec(
        "product(" + ",".join(g.name for g in factors) + ")",
        n,
        fn,
        float(np.prod([g.bound for g in factors])),
        support,
        kinks=tuple(g.axis_kinks() for g in factors),
        meta={"factors": factors},
    )


def _smootherstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6 * u - 15) + 10)


def smoothed_square(dim: int = 2, inner: float = 0.6, outer: float = 1.2) -> FunctionSpec:
    """Indicator of the cube [-inner, inner]^n blended to 0 at +-outer (C^2)."""

    def s(u):
        return _smootherstep((outer - np.abs(u)) / (outer - inner))

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = s(x[..., 0])
        for j in range(1, dim):
            out = out * s(x[..., j])
        return out

    k = (-outer, -inner, inner, outer)
    return FunctionSpec(
        "square", dim, fn, 1.0, Box.cube(-outer, outer, dim), kinks=(k,) * dim
    )


def radial_bump(dim: int = 2, radius: float = 1.0) -> FunctionSpec:
    """(1 - |x|^2/r^2)^3 inside the ball, zero outside."""

    def fn(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1) / radius**2
        return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)

    return FunctionSpec("radial", dim, fn, 1.0, Box.cube(-radius, radius, dim))


def anisotropic(dim: int = 2) -> FunctionSpec:
    """exp(-sum_j j x_j^2): smooth, bounded, not radial."""
    w = np.arange(1, dim + 1, dtype=float)

    def fn(x):
        x = np.asarray(x, dtype=float).reshape(-1, dim)
        return np.exp(-(x * x) @ w)

    return FunctionSpec("aniso", dim, fn, 1.0)


def compose(f: FunctionSpec, R: np.ndarray) -> FunctionSpec:
    """f o R for a linear map R (rows act on column vectors)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (f.dim, f.dim):
        raise ValidationError("map shape does not match f")
    support = None
    if f.support is not None:
        corner = np.maximum(np.abs(f.support.lo), np.abs(f.support.hi))
        rad = float(np.linalg.norm(corner)) / max(float(np.min(np.linalg.svd(R, compute_uv=False))), 1e-300)
        support = Box.cube(-rad, rad, f.dim)
    return FunctionSpec(
        f"{f.name}oR", f.dim, lambda x: f(np.asarray(x, dtype=float) @ R.T), f.bound, support
    )


FUNCTION_NAMES = (
    "constant", "one", "hat", "step", "heaviside", "jump", "abs", "identity", "square", "radial", "product", "aniso",
)


def get_function(spec: str, dim: int = 1) -> FunctionSpec:
    """Resolve a catalog name, or parse piecewise JSON when ``spec`` starts with '[' or '{'."""
    s = spec.strip()
    if s.startswith("[") or s.startswith("{"):
        return from_json(s)
    key = s.lower()
    if key in ("constant", "one"):
        return constant(1.0, dim)
    if key == "hat":
        return hat()
    if key in ("step", "heaviside"):
        return heaviside()
    if key == "jump":
        return jump()
    if key == "abs":
        return abs_fn()
    if key in ("identity", "x"):
        return identity()
    if key == "square":
        return smoothed_square(max(dim, 2))
    if key == "radial":
        return radial_bump(max(dim, 2))
    if key == "product":
        return product(hat(), hat())
    if key == "aniso":
        return anisotropic(max(dim, 2))
    raise ValidationError(f"unknown function {spec!r}")
