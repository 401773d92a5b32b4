"""Rational functions p/q, kernel validation and partial fractions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.special import binom

from .errors import DegreeCondition, PoleEvaluation, RealPole, ValidationError
from .poly import Polynomial, polydivmod, root_multiplicities

__all__ = [
    "RationalFunction",
    "PartialFractionTerm",
    "PFDecomposition",
    "make_kernel_rational",
    "eval_rat",
    "translate_scale",
    "partial_fractions",
    "sum_terms",
]

REAL_POLE_TOL = 1e-9
PRUNE_REL = 1e-12


@dataclass(frozen=True)
class RationalFunction:
    """``num/den``.

    ``poles`` optionally carries the known factorization of ``den`` as
    ``((pole, multiplicity), ...)``; when present it replaces numerical root
    finding.  ``kernel`` marks a validated integrable kernel.
    """

    num: Polynomial
    den: Polynomial
    kernel: bool = False
    poles_hint: Optional[tuple[tuple[complex, int], ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.den.is_zero():
            raise ValidationError("denominator is the zero polynomial")

    @cached_property
    def poles(self) -> tuple[tuple[complex, int], ...]:
        if self.poles_hint is not None:
            return self.poles_hint
        if self.den.degree() < 1:
            return ()
        return tuple(root_multiplicities(self.den))

    def __call__(self, x):
        return eval_rat(self, x)

    def is_real(self) -> bool:
        return self.num.is_real() and self.den.is_real()

    def __repr__(self):
        tag = ", kernel" if self.kernel else ""
        return f"RationalFunction({self.num!r} / {self.den!r}{tag})"


@dataclass(frozen=True)
class PartialFractionTerm:
    """``coeff * (x + c)**(-l)``; the pole sits at ``-c``."""

    c: complex
    l: int
    coeff: complex

    def __post_init__(self):
        if self.l < 1:
            raise ValidationError("partial-fraction order must be >= 1")

    @property
    def pole(self) -> complex:
        return -self.c

    def __call__(self, x):
        return self.coeff * (np.asarray(x, dtype=complex) + self.c) ** (-self.l)


@dataclass(frozen=True)
class PFDecomposition:
    poly_part: Polynomial
    terms: tuple[PartialFractionTerm, ...]

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.asarray(self.poly_part(x), dtype=complex)
        # group by pole so each power is computed once
        for c, group in _group_terms(self.terms).items():
            inv = 1.0 / (x + c)
            acc = np.zeros_like(x)
            for l in sorted(group, reverse=True):
                acc = (acc + group[l]) * inv
            out = out + acc
        return out


def _group_terms(terms: Sequence[PartialFractionTerm]) -> dict[complex, dict[int, complex]]:
    out: dict[complex, dict[int, complex]] = {}
    for t in terms:
        d = out.setdefault(t.c, {})
        d[t.l] = d.get(t.l, 0j) + t.coeff
    return out


def _pole_scale(poles) -> float:
    return max([1.0] + [abs(p) for p, _ in poles])


def make_kernel_rational(
    num: Polynomial, den: Polynomial, poles_hint=None
) -> RationalFunction:
    """Validate ``num/den`` as an integrable kernel shape on the real line."""
    r = RationalFunction(num, den, kernel=False, poles_hint=poles_hint)
    if den.degree() < num.degree() + 2:
        raise DegreeCondition(
            f"kernel needs deg(den) >= deg(num) + 2, got {den.degree()} < {num.degree()} + 2"
        )
    scale = _pole_scale(r.poles)
    for p, _ in r.poles:
        if abs(p.imag) <= REAL_POLE_TOL * scale:
            raise RealPole(f"denominator vanishes near the real axis at {p:.6g}")
    return RationalFunction(num, den, kernel=True, poles_hint=r.poles)


def eval_rat(r: RationalFunction, x):
    x_arr = np.asarray(x)
    d = np.asarray(r.den(x_arr))
    if np.any(np.abs(d) < 1e-300):
        raise PoleEvaluation("evaluation at a pole of the rational function")
    out = np.asarray(r.num(x_arr)) / d
    return out[()] if out.ndim == 0 else out


def translate_scale(r: RationalFunction, t: float, y: float = 0.0) -> RationalFunction:
    """``x -> r((x - y)/t) / t``, as a new rational function."""
    if not t > 0:
        raise ValidationError("scale t must be positive")
    dd = r.den.degree()
    # multiply through by t**dd so no negative powers of t appear
    kn = np.arange(r.num.coeffs.size)
    kd = np.arange(r.den.coeffs.size)
    num = Polynomial(r.num.coeffs * np.power(float(t), dd - 1 - kn))
    den = Polynomial(r.den.coeffs * np.power(float(t), dd - kd))
    if y != 0:
        num = num.shift(y)
        den = den.shift(y)
    hint = None
    if r.poles_hint is not None or "poles" in r.__dict__:
        hint = tuple((t * p + y, m) for p, m in r.poles)
    return RationalFunction(num, den, kernel=r.kernel, poles_hint=hint)


# ---------------------------------------------------------------------------
# partial fractions
# ---------------------------------------------------------------------------


def _cofactor_values(poles, lead, x, idx, l):
    """den(x) / (x - p_idx)**l evaluated at points x, as a product of factors."""
    out = np.full(x.shape, lead, dtype=complex)
    for j, (q, mq) in enumerate(poles):
        e = mq - l if j == idx else mq
        if e:
            out = out * (x - q) ** e
    return out


def _pf_lstsq(rem: Polynomial, den: Polynomial, poles) -> list[PartialFractionTerm]:
    n = den.degree()
    centre = np.mean([p.real for p, _ in poles])
    half = max(abs(p - centre) for p, _ in poles) + 1.0
    npts = 4 * n + 4
    k = np.arange(npts)
    xs = centre + half * np.cos((2 * k + 1) * np.pi / (2 * npts))
    cols, keys = [], []
    for i, (p, m) in enumerate(poles):
        for l in range(1, m + 1):
            cols.append(_cofactor_values(poles, den.lead, xs, i, l))
            keys.append((p, l))
    A = np.column_stack(cols)
    b = np.asarray(rem(xs), dtype=complex)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    As = A / norms
    sol, *_ = np.linalg.lstsq(As, b, rcond=None)
    # one step of iterative refinement
    res = b - As @ sol
    corr, *_ = np.linalg.lstsq(As, res, rcond=None)
    sol = (sol + corr) / norms
    return [PartialFractionTerm(c=-p, l=l, coeff=complex(a)) for (p, l), a in zip(keys, sol)]


def _inverse_power_series(d: complex, m: int, order: int) -> np.ndarray:
    """Series coefficients in s of (s + d)**(-m), up to s**order."""
    k = np.arange(order + 1)
    return binom(k + m - 1, m - 1) * (-1.0) ** k / d ** (k + m)


def _pf_laurent(num: Polynomial, den: Polynomial, poles) -> list[PartialFractionTerm]:
    """Principal parts from the local expansion num(p+s) / cofactor(p+s)."""
    terms = []
    for i, (p, m) in enumerate(poles):
        order = m - 1
        ser = np.zeros(order + 1, dtype=complex)
        shifted = num.shift(-p).coeffs  # coefficients of num(p + s)
        ser[: min(order + 1, shifted.size)] = shifted[: order + 1]
        for j, (q, mq) in enumerate(poles):
            if j == i:
                continue
            inv = _inverse_power_series(p - q, mq, order)
            ser = np.convolve(ser, inv)[: order + 1]
        ser = ser / den.lead
        for jj in range(order + 1):
            terms.append(PartialFractionTerm(c=-p, l=m - jj, coeff=complex(ser[jj])))
    return terms


def _symmetrize_coeffs(terms: list[PartialFractionTerm]) -> list[PartialFractionTerm]:
    """Force exact conjugate pairing for real-coefficient sources."""
    table = {(t.c, t.l): t.coeff for t in terms}
    out = []
    for t in terms:
        if t.c.imag == 0:
            out.append(PartialFractionTerm(t.c, t.l, complex(t.coeff.real)))
            continue
        partner = table.get((t.c.conjugate(), t.l))
        if partner is None:
            out.append(t)
        else:
            out.append(PartialFractionTerm(t.c, t.l, 0.5 * (t.coeff + partner.conjugate())))
    return out


def partial_fractions(r: RationalFunction, method: str = "auto") -> PFDecomposition:
    """Polynomial part plus ``coeff*(x+c)**(-l)`` terms covering every pole.

    ``method`` is ``"lstsq"`` (sampled linear system), ``"laurent"`` (local
    series at each pole) or ``"auto"``, which uses the linear system for
    small denominators with low multiplicities and the local series otherwise.
    """
    q, rem = polydivmod(r.num, r.den)
    if r.den.degree() < 1 or rem.is_zero():
        return PFDecomposition(q, ())
    poles = list(r.poles)
    if method == "auto":
        small = r.den.degree() <= 12 and max(m for _, m in poles) <= 3
        method = "lstsq" if small else "laurent"
    if method == "lstsq":
        terms = _pf_lstsq(rem, r.den, poles)
    elif method == "laurent":
        terms = _pf_laurent(rem, r.den, poles)
    else:
        raise ValidationError(f"unknown partial-fraction method {method!r}")
    if r.is_real():
        terms = _symmetrize_coeffs(terms)
    big = max(abs(t.coeff) for t in terms)
    terms = [t for t in terms if abs(t.coeff) > PRUNE_REL * big]
    return PFDecomposition(q, tuple(terms))


def sum_terms(terms: Sequence[PartialFractionTerm], poly_part: Polynomial | None = None) -> RationalFunction:
    """Collapse a termwise sum over the common denominator prod (x+c)**L_c."""
    poly_part = Polynomial() if poly_part is None else poly_part
    groups = _group_terms(terms)
    orders = {c: max(g) for c, g in groups.items()}
    factors = {c: Polynomial([c, 1.0]) ** L for c, L in orders.items()}
    den = Polynomial([1.0])
    for f in factors.values():
        den = den * f
    num = poly_part * den
    for c, g in groups.items():
        others = Polynomial([1.0])
        for c2, f in factors.items():
            if c2 != c:
                others = others * f
        L = orders[c]
        # sum_l a_l (x+c)^(L-l) as one polynomial, then times the other factors
        local = Polynomial()
        base = Polynomial([c, 1.0])
        for l, a in g.items():
            local = local + (base ** (L - l)) * a
        num = num + local * others
    hint = tuple((-c, L) for c, L in orders.items())
    return RationalFunction(num, den, poles_hint=hint)
