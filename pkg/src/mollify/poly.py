"""Dense complex-coefficient polynomials.

Coefficients are stored in ascending order (index k multiplies x**k).  The
zero polynomial is the empty coefficient array and has degree -1.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .errors import NonConvergence, ValidationError

__all__ = [
    "Polynomial",
    "evaluate",
    "arith",
    "shift",
    "roots",
    "root_multiplicities",
    "cauchy_bound",
]

ROOT_MAXITER = 500
ROOT_TOL = 1e-12
CLUSTER_TOL = 1e-6
# irrational offset for the initial circle, breaks symmetric stalls
_START_ANGLE = (math.sqrt(5.0) - 1.0) / 2.0


class Polynomial:
    """Immutable dense polynomial with complex coefficients."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex] = ()):
        c = np.array(coeffs, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(c)):
            raise ValidationError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:0]
        c.setflags(write=False)
        self._c = c

    # -- construction -----------------------------------------------------
    @classmethod
    def x(cls) -> "Polynomial":
        return cls([0.0, 1.0])

    @classmethod
    def constant(cls, value: complex) -> "Polynomial":
        return cls([value])

    @classmethod
    def from_roots(cls, rts: Sequence[complex], lead: complex = 1.0) -> "Polynomial":
        c = np.array([lead], dtype=np.complex128)
        for r in rts:
            c = np.convolve(c, np.array([-r, 1.0], dtype=np.complex128))
        return cls(c)

    # -- basic properties -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    def degree(self) -> int:
        return self._c.size - 1

    def is_zero(self) -> bool:
        return self._c.size == 0

    @property
    def lead(self) -> complex:
        return complex(self._c[-1]) if self._c.size else 0j

    def is_real(self, tol: float = 0.0) -> bool:
        if self._c.size == 0:
            return True
        return bool(np.max(np.abs(self._c.imag)) <= tol * max(1.0, np.max(np.abs(self._c))))

    def real(self) -> "Polynomial":
        return Polynomial(self._c.real)

    def conj(self) -> "Polynomial":
        return Polynomial(self._c.conj())

    def scale(self) -> float:
        """Largest coefficient magnitude (0 for the zero polynomial)."""
        return float(np.max(np.abs(self._c))) if self._c.size else 0.0

    # -- evaluation -------------------------------------------------------
    def __call__(self, z):
        z_arr = np.asarray(z)
        if self._c.size == 0:
            out = np.zeros(z_arr.shape, dtype=np.complex128)
        else:
            flat = np.ascontiguousarray(z_arr, dtype=np.complex128).ravel()
            out = _accel.horner(self._c, flat).reshape(z_arr.shape)
        return out[()] if out.ndim == 0 else out

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if np.isscalar(other):
            return Polynomial([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(self._c.size, other._c.size)
        c = np.zeros(n, dtype=np.complex128)
        c[: self._c.size] += self._c
        c[: other._c.size] += other._c
        return Polynomial(c)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return Polynomial()
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValidationError("negative powers are not polynomials")
        out = Polynomial([1.0])
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, scalar):
        return Polynomial(self._c / complex(scalar))

    def __divmod__(self, other: "Polynomial"):
        return polydivmod(self, other)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other: "Polynomial", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: self._c.size] = self._c
        b[: other._c.size] = other._c
        scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def deriv(self, order: int = 1) -> "Polynomial":
        c = self._c
        for _ in range(order):
            if c.size <= 1:
                return Polynomial()
            c = c[1:] * np.arange(1, c.size)
        return Polynomial(c)

    def shift(self, a: complex) -> "Polynomial":
        return shift(self, a)

    def roots(self) -> np.ndarray:
        return roots(self)

    def __repr__(self):
        if self.is_zero():
            return "Polynomial(0)"
        terms = []
        for k, ck in enumerate(self._c):
            if ck == 0:
                continue
            s = f"{ck.real:.6g}" if ck.imag == 0 else f"({ck.real:.6g}{ck.imag:+.6g}j)"
            terms.append(s if k == 0 else f"{s}*x^{k}" if k > 1 else f"{s}*x")
        return "Polynomial(" + " + ".join(terms) + ")"


def polydivmod(a: Polynomial, b: Polynomial) -> tuple[Polynomial, Polynomial]:
    """Long division a = q*b + r with deg r < deg b."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.degree() < b.degree():
        return Polynomial(), a
    r = a.coeffs.copy()
    bc = b.coeffs
    db = bc.size - 1
    q = np.zeros(r.size - db, dtype=np.complex128)
    inv = 1.0 / bc[-1]
    for k in range(q.size - 1, -1, -1):
        qk = r[k + db] * inv
        q[k] = qk
        r[k : k + db + 1] -= qk * bc
        r[k + db] = 0.0
    return Polynomial(q), Polynomial(r[:db])


def evaluate(p: Polynomial, z):
    return p(z)


def arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValidationError(f"unknown polynomial op {op!r}")


def shift(p: Polynomial, a: complex) -> Polynomial:
    """Return q with q(x) = p(x - a)."""
    if p.degree() < 1 or a == 0:
        return p
    return Polynomial(_accel.taylor_shift(p.coeffs.copy(), -complex(a)))


def cauchy_bound(p: Polynomial) -> float:
    c = p.coeffs
    if c.size < 2:
        return 0.0
    return 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))


def _raw_roots(p: Polynomial) -> np.ndarray:
    c = p.coeffs
    n = c.size - 1
    B = cauchy_bound(p)
    # roots at the origin are exact; strip them first
    k0 = int(np.flatnonzero(c)[0])
    zeros = np.zeros(k0, dtype=np.complex128)
    c = c[k0:]
    n = c.size - 1
    if n == 0:
        return zeros
    if n == 1:
        return np.concatenate([zeros, [-c[0] / c[1]]])
    c = c / c[-1]
    angles = 2.0 * np.pi * np.arange(n) / n + _START_ANGLE
    z0 = B * np.exp(1j * angles)
    z, _, ok = _accel.aberth(np.ascontiguousarray(c), z0.astype(np.complex128), ROOT_MAXITER, ROOT_TOL)
    if not ok:
        raise NonConvergence(
            f"simultaneous iteration did not reach relative residual {ROOT_TOL:g} "
            f"within {ROOT_MAXITER} iterations (degree {n})"
        )
    return np.concatenate([zeros, z])


def _cluster(z: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Single-linkage clustering; returns (mean, size) pairs."""
    return [(complex(np.mean(z[idx])), len(idx)) for idx in _cluster_members(z, tol)]


def _polish(p: Polynomial, r: complex, mult: int) -> complex:
    """Newton on the (mult-1)-th derivative, where a mult-fold root is simple."""
    d = p.deriv(mult - 1)
    dd = d.deriv()
    best, best_res = r, abs(d(r))
    z = r
    for _ in range(8):
        dz = dd(z)
        if dz == 0:
            break
        z = z - d(z) / dz
        res = abs(d(z))
        if res < best_res:
            best, best_res = z, res
        else:
            break
    return complex(best)


def _symmetrize_real(groups: list[tuple[complex, int]], B: float) -> list[tuple[complex, int]]:
    """Pair conjugate roots exactly for real-coefficient input."""
    out = []
    used = [False] * len(groups)
    imag_tol = 1e-10 * max(1.0, B)
    for i, (r, m) in enumerate(groups):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) <= imag_tol:
            out.append((complex(r.real, 0.0), m))
            continue
        best, bd = None, np.inf
        for j in range(len(groups)):
            if not used[j] and groups[j][1] == m:
                d = abs(groups[j][0] - r.conjugate())
                if d < bd:
                    best, bd = j, d
        if best is None or bd > 1e-6 * max(1.0, abs(r)):
            out.append((r, m))
            continue
        used[best] = True
        s = 0.5 * (r + groups[best][0].conjugate())
        out.append((s, m))
        out.append((s.conjugate(), m))
    return out


def _is_multiple_root(p: Polynomial, r: complex, mult: int, tol: float = 1e-9) -> bool:
    """Check p^(j)(r)/j! ~ 0 for j < mult, relative to the Horner scale."""
    q = p
    for j in range(mult):
        c = q.coeffs
        if c.size == 0:
            return True
        scale = float(np.polyval(np.abs(c[::-1]), abs(r)))
        if abs(q(r)) > tol * scale:
            return False
        q = q.deriv() / (j + 1)
    return True


def _merge_verified(p: Polynomial, z: np.ndarray, B: float) -> list[tuple[complex, int]]:
    groups = _cluster(z, CLUSTER_TOL * B)
    groups = [(_polish(p, r, m) if m > 1 else r, m) for r, m in groups]
    # a k-fold root scatters by ~eps**(1/k); looser merges must pass a derivative check
    for loose in (1e-5, 1e-4, 1e-3, 1e-2, 5e-2):
        pts = np.array([g[0] for g in groups])
        cand = _cluster_members(pts, loose * B)
        merged = []
        for members in cand:
            if len(members) == 1:
                merged.append(groups[members[0]])
                continue
            mult = sum(groups[i][1] for i in members)
            w = np.array([groups[i][1] for i in members], dtype=float)
            r = complex(np.sum(pts[members] * w) / w.sum())
            r = _polish(p, r, mult)
            if _is_multiple_root(p, r, mult):
                merged.append((r, mult))
            else:
                merged.extend(groups[i] for i in members)
        groups = merged
    return groups


def _cluster_members(z: np.ndarray, tol: float) -> list[list[int]]:
    n = z.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def root_multiplicities(p: Polynomial) -> list[tuple[complex, int]]:
    """Distinct roots with multiplicities, sorted by (real, imag)."""
    if p.degree() < 1:
        raise ValidationError("roots() needs a polynomial of degree >= 1")
    z = _raw_roots(p)
    B = cauchy_bound(p)
    groups = _merge_verified(p, z, B)
    if p.is_real():
        groups = _symmetrize_real(groups, B)
    groups.sort(key=lambda g: (round(g[0].real, 12), g[0].imag))
    return groups


def roots(p: Polynomial) -> np.ndarray:
    """All roots repeated by multiplicity."""
    out = []
    for r, m in root_multiplicities(p):
        out.extend([r] * m)
    return np.array(out, dtype=np.complex128)
