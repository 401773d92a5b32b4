"""Mollifiers, approximate identities and constructive polynomial approximation."""

from .approx import (
    CertifiedPolynomial,
    TranslateSum,
    collapse,
    push_pole,
    rational_to_polynomial,
    riemann_rational,
    sum_of_products,
    taylor_term,
    weierstrass,
)
from .convolve import convolve_at, convolve_many, convolve_tensor, jump_value, sweep
from .errors import MollifyError, NumericalFailure, ValidationError
from .functions import Box, FunctionSpec, get_function
from .kernels import Kernel, ScaledKernel, ball_mass, get_kernel, scale
from .poly import Polynomial
from .ratfun import RationalFunction, partial_fractions

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CertifiedPolynomial",
    "FunctionSpec",
    "Kernel",
    "MollifyError",
    "NumericalFailure",
    "Polynomial",
    "RationalFunction",
    "ScaledKernel",
    "TranslateSum",
    "ValidationError",
    "ball_mass",
    "collapse",
    "convolve_at",
    "convolve_many",
    "convolve_tensor",
    "get_function",
    "get_kernel",
    "jump_value",
    "partial_fractions",
    "push_pole",
    "rational_to_polynomial",
    "riemann_rational",
    "scale",
    "sum_of_products",
    "sweep",
    "taylor_term",
    "weierstrass",
]
