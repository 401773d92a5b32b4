"""Quadrature convolution (f * phi_t)(x) and the diagnostics built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import ortho_group

from ._quad import MAX_POINTS_1D, MAX_POINTS_ND, QuadResult, integrate_1d, integrate_nd, panel_edges
from .errors import DimensionLimit, DimensionMismatch, NotEven, NotRadial, ValidationError
from .functions import Box, FunctionSpec, compose
from .kernels import MAX_DIM, Kernel, ScaledKernel, ball_mass, scale

__all__ = [
    "ConvolutionResult",
    "ApproximationReport",
    "OrthogonalMap",
    "convolve_at",
    "convolve_detail",
    "convolve_many",
    "sweep",
    "jump_value",
    "convolve_tensor",
    "commutation_defect",
    "radial_spread",
    "random_orthogonal",
    "rotation",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class ConvolutionResult:
    value: float
    quad_error: float  # Richardson estimate of the quadrature error
    tail_bound: float  # M * (kernel mass outside the window)
    budget: float
    R: float
    points: int

    @property
    def error_estimate(self) -> float:
        return self.quad_error + self.tail_bound


def _window(f: FunctionSpec, k: ScaledKernel, tol: float) -> tuple[float, float]:
    """Half-width R of the cube |y - x| <= R and the tail it leaves out."""
    if math.isfinite(k.support_radius):
        return k.support_radius, 0.0
    M = f.bound
    if M == 0:
        return k.t, 0.0
    u = k.base.radius_for_tail(tol / (2.0 * M))
    return k.t * u, M * k.base.tail_bound(u)


def _check(f: FunctionSpec, k: ScaledKernel):
    if not isinstance(k, ScaledKernel):
        raise ValidationError("expected a scaled kernel (use kernels.scale)")
    if f.dim != k.dim:
        raise DimensionMismatch(f"f has dimension {f.dim}, kernel has {k.dim}")
    if f.dim > MAX_DIM:
        raise DimensionLimit(f"dimension {f.dim} exceeds {MAX_DIM}")


def _edges_1d(f: FunctionSpec, k: ScaledKernel, c: float, R: float, axis: int = 0):
    clip = None
    if f.support is not None:
        clip = (f.support.lo[axis], f.support.hi[axis])
    return panel_edges(c, R, k.t / 4.0, f.axis_kinks(axis), clip=clip)


def convolve_detail(
    f: FunctionSpec,
    k: ScaledKernel,
    x,
    tol: float = DEFAULT_TOL,
    max_points: int | None = None,
) -> ConvolutionResult:
    """int f(y) phi_t(x - y) dy with its error budget.

    The window |y - x| <= R leaves out at most tol/2 (bound M times the kernel
    tail); the quadrature on the window is refined until its Richardson
    estimate is below tol/2.
    """
    _check(f, k)
    R, tail = _window(f, k, tol)
    if f.bound == 0:
        return ConvolutionResult(0.0, 0.0, 0.0, tol, R, 0)
    if f.dim == 1:
        x = float(np.asarray(x, dtype=float).reshape(()))
        edges = _edges_1d(f, k, x, R)

        def g(y):
            return f(y) * k(x - y)

        q = integrate_1d(g, edges, tol / 2, max_points=max_points or MAX_POINTS_1D)
    else:
        x = np.asarray(x, dtype=float).reshape(f.dim)
        edges = [_edges_1d(f, k, x[j], R, j) for j in range(f.dim)]

        def g(y):
            return f(y) * k(x[None, :] - y)

        q = integrate_nd(g, edges, tol / 2, max_points=max_points or MAX_POINTS_ND)
    return ConvolutionResult(q.value, q.error, tail, tol, R, q.points)


def convolve_at(f: FunctionSpec, k: ScaledKernel, x, tol: float = DEFAULT_TOL) -> float:
    """(f * phi_t)(x) by composite midpoint quadrature."""
    return convolve_detail(f, k, x, tol).value


def convolve_many(f: FunctionSpec, k: ScaledKernel, xs, tol: float = DEFAULT_TOL) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if f.dim == 1:
        return np.array([convolve_at(f, k, x, tol) for x in xs.ravel()]).reshape(xs.shape)
    return np.array([convolve_at(f, k, x, tol) for x in xs.reshape(-1, f.dim)])


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class ApproximationReport:
    ts: list[float]
    grid: dict
    sup_errors: list[float]
    tail_bounds: list[float]
    grid_points: list[int]
    quad_points: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def rows(self):
        return list(zip(self.ts, self.sup_errors, self.tail_bounds, self.grid_points))

    @property
    def monotone_tail(self) -> bool:
        """Errors for the final three t values are nonincreasing (noise 1e-6)."""
        e = self.sup_errors[-3:]
        return all(b <= a + 1e-6 for a, b in zip(e, e[1:]))


def sweep(
    f: FunctionSpec,
    k: Kernel,
    ts: Sequence[float],
    K: Box,
    m: int = 201,
    tol: float = DEFAULT_TOL,
) -> ApproximationReport:
    """sup over a grid on K of |(f * phi_t) - f| for each t."""
    ts = [float(t) for t in ts]
    if not ts or any(t <= 0 for t in ts):
        raise ValidationError("ts must be positive")
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValidationError("ts must be strictly decreasing")
    if K.dim != f.dim:
        raise DimensionMismatch("box and f dimensions differ")
    for bp in f.breakpoints:
        if K.a <= bp.x <= K.b:
            raise ValidationError(f"f has a jump at {bp.x} inside the sweep box")
    pts = K.grid(m)
    fx = f(pts)
    errs, tails, qpts = [], [], []
    for t in ts:
        kt = scale(k, t)
        res = [convolve_detail(f, kt, x, tol) for x in (pts if f.dim == 1 else pts.reshape(-1, f.dim))]
        vals = np.array([r.value for r in res])
        errs.append(float(np.max(np.abs(vals - fx))))
        tails.append(max(r.tail_bound for r in res))
        qpts.append(max(r.points for r in res))
    rep = ApproximationReport(
        ts=ts,
        grid={"lo": list(K.lo), "hi": list(K.hi), "m": m},
        sup_errors=errs,
        tail_bounds=tails,
        grid_points=[int(len(fx))] * len(ts),
        quad_points=qpts,
        notes=[f"f={f.name}", f"kernel={k.name}", f"tol={tol:g}"],
    )
    if len(ts) >= 3 and not rep.monotone_tail:
        rep.notes.append("final three errors are not nonincreasing")
    return rep


def jump_value(f: FunctionSpec, k: ScaledKernel, x: float, tol: float = DEFAULT_TOL) -> float:
    """(f * phi_t)(x) at a jump; tends to the mean of the one-sided limits."""
    if not k.parity_even:
        raise NotEven(f"kernel {k.name} is not tagged even")
    if f.dim != 1:
        raise DimensionMismatch("jump values are one-dimensional")
    return convolve_at(f, k, x, tol)


# ---------------------------------------------------------------------------
# tensor kernels: iterated one-dimensional integrals
# ---------------------------------------------------------------------------


def convolve_tensor(
    f: FunctionSpec, k: Kernel | ScaledKernel, t: float | None, x, tol: float = DEFAULT_TOL
) -> float:
    """(f * phi_t)(x) for phi = theta_1 x ... x theta_n as nested 1-d integrals."""
    if isinstance(k, ScaledKernel):
        kt = k if t is None else scale(k.base, t)
    else:
        if t is None:
            raise ValidationError("t is required for an unscaled kernel")
        kt = scale(k, t)
    if kt.dim > MAX_DIM:
        raise DimensionLimit(f"dimension {kt.dim} exceeds {MAX_DIM}")
    if kt.dim == 1:
        return convolve_at(f, kt, x, tol)
    if kt.structure != "tensor":
        raise ValidationError("convolve_tensor needs a tensor-product kernel")
    if f.dim != kt.dim:
        raise DimensionMismatch(f"f has dimension {f.dim}, kernel has {kt.dim}")
    n = kt.dim
    x = np.asarray(x, dtype=float).reshape(n)
    thetas = kt.factors
    M = max(f.bound, 1e-300)
    # split the tail budget evenly across axes
    edges = []
    for j, th in enumerate(thetas):
        if math.isfinite(th.support_radius):
            R = th.support_radius
        else:
            R = th.t * th.base.radius_for_tail(tol / (2.0 * n * M))
        edges.append(_edges_1d(f, th, x[j], R, j))
    inner_tol = tol / (2.0 * n)

    def integrate_axis(prefix: np.ndarray, j: int) -> float:
        th = thetas[j]
        if j == n - 1:
            def g(y):
                pts = np.empty((y.size, n))
                pts[:, :j] = prefix
                pts[:, j] = y
                return f(pts) * th(x[j] - y)
        else:
            def g(y):
                vals = np.array([integrate_axis(np.append(prefix, yy), j + 1) for yy in y])
                return vals * th(x[j] - y)
        return integrate_1d(g, edges[j], inner_tol).value

    return integrate_axis(np.empty(0), 0)


# ---------------------------------------------------------------------------
# orthogonal maps and radial kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OrthogonalMap:
    R: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValidationError("orthogonal map must be a square matrix")
        dev = float(np.max(np.abs(R.T @ R - np.eye(R.shape[0]))))
        if dev > 1e-12:
            raise ValidationError(f"matrix is not orthogonal (deviation {dev:.3g})")
        object.__setattr__(self, "R", R)

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.R.T


def rotation(theta: float) -> OrthogonalMap:
    c, s = math.cos(theta), math.sin(theta)
    return OrthogonalMap(np.array([[c, -s], [s, c]]))


def random_orthogonal(dim: int, rng: np.random.Generator | int | None = None) -> OrthogonalMap:
    rng = np.random.default_rng(rng)
    Q = ortho_group.rvs(dim, random_state=rng)
    # one Newton-Schulz step squeezes the residual to rounding level
    Q = 1.5 * Q - 0.5 * Q @ Q.T @ Q
    return OrthogonalMap(Q)


def _radial_audit(k: Kernel, n_dirs: int = 64, seed: int = 0) -> float:
    """Largest relative spread of phi over circles/spheres at a few radii."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_dirs, k.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    worst = 0.0
    for r in (0.1, 0.35, 0.7, 1.5):
        v = k(r * d)
        worst = max(worst, float(np.ptp(v)) / max(float(np.max(np.abs(v))), 1e-300))
    return worst


def _require_radial(k: Kernel):
    if k.structure in ("radial", "gaussian"):
        return
    if _radial_audit(k) > 1e-12:
        raise NotRadial(f"kernel {k.name} is not radial")


def commutation_defect(
    f: FunctionSpec,
    k: Kernel | ScaledKernel,
    t: float,
    R: OrthogonalMap,
    pts,
    tol: float = 1e-7,
) -> float:
    """max over pts of |((f o R) * phi_t)(x) - (f * phi_t)(R x)|."""
    base = k.base if isinstance(k, ScaledKernel) else k
    if base.dim not in (2, 3):
        raise DimensionMismatch("commutation checks need dimension 2 or 3")
    if R.dim != base.dim or f.dim != base.dim:
        raise DimensionMismatch("map, kernel and f dimensions differ")
    _require_radial(base)
    kt = scale(base, t)
    fR = compose(f, R.R)
    pts = np.asarray(pts, dtype=float).reshape(-1, base.dim)
    if np.array_equal(R.R, np.eye(base.dim)):
        return 0.0
    worst = 0.0
    for x in pts:
        lhs = convolve_at(fR, kt, x, tol)
        rhs = convolve_at(f, kt, R(x), tol)
        worst = max(worst, abs(lhs - rhs))
    return worst


def radial_spread(
    f: FunctionSpec, k: Kernel, t: float, r: float, n_dirs: int = 16, tol: float = 1e-7
) -> float:
    """Spread of (f * phi_t) over n_dirs directions at radius r (2-d: a circle)."""
    _require_radial(k)
    kt = scale(k, t)
    if k.dim == 2:
        th = 2 * math.pi * np.arange(n_dirs) / n_dirs
        d = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        d = np.random.default_rng(0).normal(size=(n_dirs, k.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
    vals = np.array([convolve_at(f, kt, r * di, tol) for di in d])
    return float(np.ptp(vals))


def concentration_bound(k: Kernel, t: float, r: float, oscillation: float, lipschitz: float) -> float:
    """oscillation * (1 - ball_mass(t, r)) + L r.

    Bounds |f * phi_t - f| for a nonnegative kernel when |f(u) - f(v)| never
    exceeds ``oscillation`` and f is L-Lipschitz.
    """
    return oscillation * (1.0 - ball_mass(k, t, r)) + lipschitz * r
