"""Hot numeric kernels with a numba path and a pure-numpy path.

Every kernel exists twice: ``_loop_<name>`` is a scalar-loop implementation
that ``numba.njit`` compiles into ``_nb_<name>``, and ``_np_<name>`` is a
vectorized numpy implementation.  The public name (``horner``, ``aberth``, ...) is bound to
one of them at import time.

Set ``MOLLIFY_NO_NUMBA=1`` to force the numpy path.  When numba is not
importable the numpy path is used silently.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import comb

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("MOLLIFY_NO_NUMBA", "") not in ("1", "true", "yes")

__all__ = [
    "USE_NUMBA",
    "HAVE_NUMBA",
    "horner",
    "comp_horner",
    "aberth",
    "taylor_shift",
    "translate_sum",
    "reexpand",
    "inverse_power_taylor",
    "backend",
]


# ---------------------------------------------------------------------------
# Horner evaluation
# ---------------------------------------------------------------------------


def _loop_horner(coeffs, z):
    n = coeffs.shape[0]
    out = np.empty(z.shape[0], dtype=np.complex128)
    for i in range(z.shape[0]):
        acc = 0j
        zi = z[i]
        for k in range(n - 1, -1, -1):
            acc = acc * zi + coeffs[k]
        out[i] = acc
    return out


def _np_horner(coeffs, z):
    acc = np.zeros(z.shape, dtype=np.complex128)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


# compensated Horner for real coefficients (error-free transformations with a
# Dekker split, so no FMA is needed): about twice working precision

_SPLIT = 134217729.0  # 2**27 + 1


def _loop_comp_horner(coeffs, x):
    n = coeffs.shape[0]
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        xi = x[i]
        t = _SPLIT * xi
        xh = t - (t - xi)
        xl = xi - xh
        r = coeffs[n - 1]
        c = 0.0
        for k in range(n - 2, -1, -1):
            p = r * xi
            t = _SPLIT * r
            rh = t - (t - r)
            rl = r - rh
            pi = rl * xl - (((p - rh * xh) - rl * xh) - rh * xl)
            s = p + coeffs[k]
            z = s - p
            sig = (p - (s - z)) + (coeffs[k] - z)
            r = s
            c = c * xi + (pi + sig)
        out[i] = r + c
    return out


def _np_comp_horner(coeffs, x):
    t = _SPLIT * x
    xh = t - (t - x)
    xl = x - xh
    r = np.full(x.shape, coeffs[-1])
    c = np.zeros(x.shape)
    for a in coeffs[-2::-1]:
        p = r * x
        t = _SPLIT * r
        rh = t - (t - r)
        rl = r - rh
        pi = rl * xl - (((p - rh * xh) - rl * xh) - rh * xl)
        s = p + a
        z = s - p
        sig = (p - (s - z)) + (a - z)
        r = s
        c = c * x + (pi + sig)
    return r + c


# ---------------------------------------------------------------------------
# Aberth-Ehrlich simultaneous iteration
# ---------------------------------------------------------------------------


def _loop_aberth(coeffs, z, maxiter, tol):
    """Gauss-Seidel Aberth sweeps; returns (roots, iterations, converged)."""
    n = z.shape[0]
    deg = coeffs.shape[0] - 1
    absc = np.abs(coeffs)
    done = np.zeros(n, dtype=np.bool_)
    eps = 2.220446049250313e-16
    it = 0
    for it in range(1, maxiter + 1):
        for k in range(n):
            if done[k]:
                continue
            zk = z[k]
            p = 0j
            dp = 0j
            scale = 0.0
            az = abs(zk)
            for j in range(deg, -1, -1):
                dp = dp * zk + p
                p = p * zk + coeffs[j]
                scale = scale * az + absc[j]
            if abs(p) <= 4.0 * (deg + 1) * eps * scale:
                done[k] = True
                continue
            s = 0j
            for j in range(n):
                if j != k:
                    s += 1.0 / (zk - z[j])
            ratio = p / dp if dp != 0 else p
            denom = 1.0 - ratio * s
            w = ratio / denom if denom != 0 else ratio
            z[k] = zk - w
            if abs(w) <= eps * abs(z[k]):
                done[k] = True
        alldone = True
        for k in range(n):
            if not done[k]:
                alldone = False
                break
        if alldone:
            break
    # residual check against the relative tolerance
    ok = True
    for k in range(n):
        zk = z[k]
        az = abs(zk)
        p = 0j
        scale = 0.0
        for j in range(deg, -1, -1):
            p = p * zk + coeffs[j]
            scale = scale * az + absc[j]
        if abs(p) > tol * scale:
            ok = False
    return z, it, ok


def _np_aberth(coeffs, z, maxiter, tol):
    z = z.copy()
    n = z.shape[0]
    deg = coeffs.shape[0] - 1
    absc = np.abs(coeffs)
    dcoeffs = coeffs[1:] * np.arange(1, deg + 1)
    eps = np.finfo(float).eps
    done = np.zeros(n, dtype=bool)
    it = 0
    for it in range(1, maxiter + 1):
        # Jacobi sweep on the active set
        act = ~done
        za = z[act]
        p = _np_horner(coeffs, za)
        dp = _np_horner(dcoeffs, za)
        scale = _np_horner(absc.astype(np.complex128), np.abs(za).astype(np.complex128)).real
        small = np.abs(p) <= 4.0 * (deg + 1) * eps * scale
        diff = za[:, None] - z[None, :]
        idx = np.flatnonzero(act)
        diff[np.arange(idx.size), idx] = 1.0
        s = (1.0 / diff).sum(axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, p)
            denom = 1.0 - ratio * s
            w = np.where(denom != 0, ratio / denom, ratio)
        w[small] = 0.0
        znew = za - w
        z[act] = znew
        newly = small | (np.abs(w) <= eps * np.abs(znew))
        done[idx[newly]] = True
        if done.all():
            break
    p = _np_horner(coeffs, z)
    scale = _np_horner(absc.astype(np.complex128), np.abs(z).astype(np.complex128)).real
    ok = bool(np.all(np.abs(p) <= tol * scale))
    return z, it, ok


# ---------------------------------------------------------------------------
# Taylor shift: coefficients of p(x + a)
# ---------------------------------------------------------------------------


def _loop_taylor_shift(coeffs, a):
    c = coeffs.copy()
    n = c.shape[0]
    for i in range(n - 1):
        for k in range(n - 2, i - 1, -1):
            c[k] += a * c[k + 1]
    return c


def _np_taylor_shift(coeffs, a):
    n = coeffs.shape[0]
    if n < 2:
        return coeffs.copy()
    j = np.arange(n)
    # out_k = sum_{j>=k} c_j C(j, k) a^(j-k)
    binom = comb(j[None, :], j[:, None])
    powers = np.triu(np.power(complex(a), np.clip(j[None, :] - j[:, None], 0, None)))
    return (binom * powers) @ coeffs


# ---------------------------------------------------------------------------
# Sum of translated rational kernels: sum_k w_k num(x - y_k) / den(x - y_k)
# ---------------------------------------------------------------------------


def _loop_translate_sum(num, den, ys, ws, xs):
    out = np.zeros(xs.shape[0], dtype=np.complex128)
    nn = num.shape[0]
    nd = den.shape[0]
    for i in range(xs.shape[0]):
        acc = 0j
        for k in range(ys.shape[0]):
            u = xs[i] - ys[k]
            pn = 0j
            for j in range(nn - 1, -1, -1):
                pn = pn * u + num[j]
            pd = 0j
            for j in range(nd - 1, -1, -1):
                pd = pd * u + den[j]
            acc += ws[k] * pn / pd
        out[i] = acc
    return out


def _np_translate_sum(num, den, ys, ws, xs):
    out = np.zeros(xs.shape[0], dtype=np.complex128)
    # chunk over nodes to bound the (points x nodes) temporary
    step = max(1, 2_000_000 // max(1, xs.shape[0]))
    for s in range(0, ys.shape[0], step):
        u = (xs[:, None] - ys[None, s : s + step]).astype(np.complex128)
        out += (_np_horner(num, u) / _np_horner(den, u)) @ ws[s : s + step]
    return out


# ---------------------------------------------------------------------------
# Re-expansion of inverse powers about a displaced pole
#   sum_j a_j (x - p)^-j  ->  sum_m b_m (x - p')^-m,  delta = p' - p
#   (x - p)^-j = sum_k C(k+j-1, j-1) (-delta)^k (x - p')^-(j+k)
# ---------------------------------------------------------------------------


def _loop_reexpand(a, delta, mmax):
    b = np.zeros(mmax + 1, dtype=np.complex128)
    J = a.shape[0] - 1
    for j in range(1, min(J, mmax) + 1):
        c = a[j]
        if c == 0:
            continue
        for k in range(0, mmax - j + 1):
            b[j + k] += c
            c = c * (-(k + j) / (k + 1.0)) * delta
    return b


def _np_reexpand(a, delta, mmax):
    b = np.zeros(mmax + 1, dtype=np.complex128)
    J = a.shape[0] - 1
    jmax = min(J, mmax)
    if jmax < 1:
        return b
    # propagate all orders at once along the shift index k
    cur = a[1 : jmax + 1].astype(np.complex128).copy()
    js = np.arange(1, jmax + 1)
    for k in range(0, mmax):
        tgt = js + k
        m = tgt <= mmax
        if not m.any():
            break
        np.add.at(b, tgt[m], cur[m])
        cur = cur * (-(k + js) / (k + 1.0)) * delta
    return b


# ---------------------------------------------------------------------------
# Taylor coefficients in sigma of  sum_m a_m (w + hl*sigma)^-m
#   (w + hl s)^-m = w^-m sum_k C(k+m-1, m-1) (-hl/w)^k s^k
# ---------------------------------------------------------------------------


def _loop_inverse_power_taylor(a, w, hl, N):
    out = np.zeros(N + 1, dtype=np.complex128)
    q = -hl / w
    winv = 1.0 / w
    wp = 1.0 + 0j
    for m in range(1, a.shape[0]):
        wp = wp * winv
        c = a[m] * wp
        if c == 0:
            continue
        for k in range(N + 1):
            out[k] += c
            c = c * ((k + m) / (k + 1.0)) * q
    return out


def _np_inverse_power_taylor(a, w, hl, N):
    M = a.shape[0] - 1
    if M < 1:
        return np.zeros(N + 1, dtype=np.complex128)
    ms = np.arange(1, M + 1)
    cur = a[1:] * (1.0 / w) ** ms
    q = -hl / w
    out = np.empty(N + 1, dtype=np.complex128)
    for k in range(N + 1):
        out[k] = cur.sum()
        cur = cur * ((k + ms) / (k + 1.0)) * q
    return out


# ---------------------------------------------------------------------------
# binding
# ---------------------------------------------------------------------------

_jit = njit(cache=True, nogil=True)
_nb_horner = _jit(_loop_horner)
_nb_comp_horner = _jit(_loop_comp_horner)
_nb_aberth = _jit(_loop_aberth)
_nb_taylor_shift = _jit(_loop_taylor_shift)
_nb_translate_sum = _jit(_loop_translate_sum)
_nb_reexpand = _jit(_loop_reexpand)
_nb_inverse_power_taylor = _jit(_loop_inverse_power_taylor)

NUMBA_KERNELS = {
    "horner": _nb_horner,
    "comp_horner": _nb_comp_horner,
    "aberth": _nb_aberth,
    "taylor_shift": _nb_taylor_shift,
    "translate_sum": _nb_translate_sum,
    "reexpand": _nb_reexpand,
    "inverse_power_taylor": _nb_inverse_power_taylor,
}
NUMPY_KERNELS = {
    "horner": _np_horner,
    "comp_horner": _np_comp_horner,
    "aberth": _np_aberth,
    "taylor_shift": _np_taylor_shift,
    "translate_sum": _np_translate_sum,
    "reexpand": _np_reexpand,
    "inverse_power_taylor": _np_inverse_power_taylor,
}

_active = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate ascending complex ``coeffs`` at the 1-d complex array ``z``."""
    return _active["horner"](coeffs, z)


def comp_horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Real polynomial at real points, compensated: error ~ u|p(x)| + (2n u)^2 p(|x|)."""
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    x = np.ascontiguousarray(x, dtype=float).ravel()
    if coeffs.size == 0:
        return np.zeros_like(x)
    return _active["comp_horner"](coeffs, x)


def aberth(coeffs, z0, maxiter, tol):
    return _active["aberth"](coeffs, z0.copy(), maxiter, tol)


def taylor_shift(coeffs, a):
    return _active["taylor_shift"](coeffs, complex(a))


def translate_sum(num, den, ys, ws, xs):
    return _active["translate_sum"](num, den, ys, ws.astype(np.complex128), xs)


def reexpand(a, delta, mmax):
    return _active["reexpand"](a, complex(delta), int(mmax))


def inverse_power_taylor(a, w, hl, N):
    return _active["inverse_power_taylor"](a, complex(w), float(hl), int(N))
