"""Numeric backends.

Every computation runs over one of two scalar types: ``fractions.Fraction``
(the exact reference backend) or ``float``. Code elsewhere is written against
the common field operations and only calls into this module to convert
values, build constants and raise backend errors.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

from .errors import BackendError, EvaluationError

Scalar = Union[Fraction, float]

RATIONAL = "rational"
FLOAT = "float"
AUTO = "auto"
BACKENDS = (RATIONAL, FLOAT)

_RATIONAL_RE = re.compile(r"^\s*[-+]?\d+(\s*/\s*[-+]?\d+)?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``"num/den"``, an integer string or an int into a Fraction."""
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational string: {text!r}")
    value = Fraction(text.replace(" ", ""))
    return value


def parse_scalar(text) -> Scalar:
    """Inverse of :func:`format_scalar`."""
    if isinstance(text, float):
        return text
    try:
        return parse_rational(text)
    except ValueError:
        return float(text)


def format_scalar(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def backend_of(x) -> str:
    return RATIONAL if isinstance(x, (Fraction, int)) else FLOAT


def convert(x, backend: str) -> Scalar:
    if backend == RATIONAL:
        if isinstance(x, float):
            raise BackendError(f"cannot represent float {x!r} exactly in the rational backend")
        return Fraction(x)
    if backend == FLOAT:
        return float(x)
    raise BackendError(f"unknown backend {backend!r}")


def one(backend: str) -> Scalar:
    return Fraction(1) if backend == RATIONAL else 1.0


def zero(backend: str) -> Scalar:
    return Fraction(0) if backend == RATIONAL else 0.0


def is_zero(x) -> bool:
    return x == 0


def check_finite(x, what: str = "value") -> Scalar:
    if isinstance(x, float) and not math.isfinite(x):
        raise EvaluationError(f"non-finite {what}: {x!r}")
    return x


def exp_weight(rho, n: int, backend: str) -> Scalar:
    """``e^{rho n}``; exact only for rho == 0."""
    if rho == 0:
        return one(backend)
    if backend == RATIONAL:
        raise BackendError("rational backend requires rho == 0 (e^rho is irrational otherwise)")
    return math.exp(float(rho) * n)
