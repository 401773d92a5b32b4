"""Composite midpoint quadrature on graded panels.

Panels are laid out symmetrically about a centre point: dyadic shells
``centre +- inner*2**k`` out to the truncation radius, plus the mirror images
of any breakpoints.  Each panel gets ``m`` midpoint nodes and ``m`` is doubled
until Richardson-extrapolated values settle.  Symmetric panels give
symmetric node sets, so odd integrands cancel to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded

MAX_POINTS_1D = 2**22
MAX_POINTS_ND = 2**24


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    points: int
    levels: int


def shell_offsets(R: float, inner: float, breaks: Sequence[float] = ()) -> np.ndarray:
    """Sorted positive offsets (ending at R) used on both sides of the centre."""
    R = float(R)
    inner = min(float(inner), R)
    offs = []
    s = inner
    while s < R:
        offs.append(s)
        s *= 2.0
    brk = sorted({abs(float(b)) for b in breaks if 0.0 < abs(float(b)) < R})
    # a shell edge hugging a breakpoint only makes a sliver panel
    if brk:
        b_arr = np.array(brk)
        offs = [o for o in offs if np.min(np.abs(b_arr - o)) > 1e-9 * R]
    out = np.unique(np.array(offs + brk + [R], dtype=float))
    return out


def panel_edges(
    centre: float,
    R: float,
    inner: float,
    breaks: Sequence[float] = (),
    clip: tuple[float, float] | None = None,
) -> np.ndarray:
    """Symmetric panel edges on [centre - R, centre + R].

    ``breaks`` are absolute positions; their distances from ``centre`` are
    mirrored.  ``clip`` drops panels lying outside an interval, which must
    itself be among the breaks for the result to stay aligned.
    """
    offs = shell_offsets(R, inner, [b - centre for b in breaks])
    edges = np.concatenate([centre - offs[::-1], [centre], centre + offs])
    if clip is not None:
        lo, hi = clip
        keep = (edges[1:] > lo) & (edges[:-1] < hi)
        if not keep.any():
            return np.empty(0)
        idx = np.flatnonzero(keep)
        edges = edges[idx[0] : idx[-1] + 2]
        edges[0] = max(edges[0], lo)
        edges[-1] = min(edges[-1], hi)
    return edges


def midpoint_nodes(edges: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point midpoint rule on every panel."""
    if edges.size < 2:
        return np.empty(0), np.empty(0)
    a = edges[:-1, None]
    w = (edges[1:] - edges[:-1])[:, None] / m
    frac = (np.arange(m) + 0.5)[None, :]
    nodes = a + w * frac
    weights = np.broadcast_to(w, nodes.shape)
    return nodes.ravel(), np.array(weights).ravel()


def romberg(
    rule: Callable[[int], float],
    npanels: int,
    tol: float,
    *,
    m0: int = 4,
    max_points: int = MAX_POINTS_1D,
    min_levels: int = 3,
    dim: int = 1,
) -> QuadResult:
    """Double ``m`` until the Richardson table settles below ``tol``.

    ``rule(m)`` returns the composite midpoint value with ``m`` nodes per
    panel (per axis when ``dim > 1``).
    """
    table: list[list[float]] = []
    m = m0
    err = np.inf
    points = 0
    while True:
        points = npanels * m**dim
        if points > max_points:
            if table:
                best = table[-1][-1]
                raise BudgetExceeded(
                    f"quadrature did not reach {tol:.3g} within {max_points} points "
                    f"(estimate {err:.3g}, value {best:.17g})"
                )
            raise BudgetExceeded("quadrature grid exceeds the point budget")
        row = [rule(m)]
        for j, prev in enumerate(table[-1] if table else []):
            # midpoint error expands in even powers of h
            fac = 4.0 ** (j + 1)
            row.append(row[j] + (row[j] - prev) / (fac - 1.0))
        if table:
            err = abs(row[-1] - table[-1][-1])
        table.append(row)
        if len(table) >= min_levels and err < tol:
            return QuadResult(row[-1], err, points, len(table))
        m *= 2


def integrate_1d(
    g: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    tol: float,
    *,
    m0: int = 4,
    max_points: int = MAX_POINTS_1D,
) -> QuadResult:
    """Integrate a vectorized ``g`` over the union of panels ``edges``."""
    if edges.size < 2:
        return QuadResult(0.0, 0.0, 0, 0)

    def rule(m):
        y, w = midpoint_nodes(edges, m)
        return float(np.dot(np.asarray(g(y), dtype=float), w))

    return romberg(rule, edges.size - 1, tol, m0=m0, max_points=max_points)


def integrate_nd(
    g: Callable[[np.ndarray], np.ndarray],
    edges_per_axis: Sequence[np.ndarray],
    tol: float,
    *,
    m0: int = 4,
    max_points: int = MAX_POINTS_ND,
) -> QuadResult:
    """Tensor-product midpoint rule; ``g`` takes an (N, n) array."""
    n = len(edges_per_axis)
    if any(e.size < 2 for e in edges_per_axis):
        return QuadResult(0.0, 0.0, 0, 0)
    npanels = int(np.prod([e.size - 1 for e in edges_per_axis]))
    # start coarser when three levels would not fit in the budget; a fourth
    # level is worth a crude first row when panels are many
    while m0 > 2 and npanels * (8 * m0) ** n > max_points:
        m0 //= 2
    while m0 > 1 and npanels * (4 * m0) ** n > max_points:
        m0 //= 2

    def rule(m):
        axes = [midpoint_nodes(e, m) for e in edges_per_axis]
        nodes = [a[0] for a in axes]
        weights = [a[1] for a in axes]
        # sweep the first axis in slabs to bound memory
        rest_nodes = np.stack(np.meshgrid(*nodes[1:], indexing="ij"), axis=-1).reshape(-1, n - 1)
        rest_w = weights[1]
        for w in weights[2:]:
            rest_w = np.multiply.outer(rest_w, w)
        rest_w = rest_w.ravel()
        nr = rest_nodes.shape[0]
        step = max(1, (1 << 20) // nr)
        total = 0.0
        for s in range(0, nodes[0].size, step):
            y0 = nodes[0][s : s + step]
            pts = np.empty((y0.size, nr, n))
            pts[:, :, 0] = y0[:, None]
            pts[:, :, 1:] = rest_nodes[None, :, :]
            vals = np.asarray(g(pts.reshape(-1, n)), dtype=float).reshape(y0.size, nr)
            total += float(weights[0][s : s + step] @ (vals @ rest_w))
        return total

    return romberg(rule, npanels, tol, m0=m0, max_points=max_points, dim=n)
