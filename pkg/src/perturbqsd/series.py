"""Truncated power series in the perturbation parameter.

A :class:`PowerSeries` holds coefficients ``c[0..order]`` and stands for
``c[0] + c[1] eps + ... + c[order] eps^order + o(eps^order)``. Arithmetic
never silently changes the order; mixing orders is a usage error.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

from .errors import SingularMatrixError, UsageError


@dataclass(frozen=True)
class PowerSeries:
    coeffs: tuple

    def __post_init__(self):
        if not isinstance(self.coeffs, tuple):
            object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) == 0:
            raise UsageError("a power series needs at least the constant coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, order: int, zero=None) -> "PowerSeries":
        """Pad with zeros or truncate ``coeffs`` to exactly ``order``."""
        if order < 0:
            raise UsageError("order must be non-negative")
        coeffs = list(coeffs)[: order + 1]
        if zero is None:
            zero = coeffs[0] * 0 if coeffs else 0
        coeffs += [zero] * (order + 1 - len(coeffs))
        return cls(tuple(coeffs))

    @classmethod
    def constant(cls, value, order: int) -> "PowerSeries":
        return cls.from_coeffs([value], order, zero=value * 0)

    @classmethod
    def zero(cls, order: int, like=0) -> "PowerSeries":
        return cls.constant(like * 0, order)

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def truncate(self, order: int) -> "PowerSeries":
        if order > self.order:
            raise UsageError(f"cannot raise order {self.order} to {order} by truncation")
        return PowerSeries(self.coeffs[: order + 1])

    def pad(self, order: int) -> "PowerSeries":
        """Extend with zero coefficients. Only valid where the caller knows
        the extra coefficients are never read unmultiplied."""
        return PowerSeries.from_coeffs(self.coeffs, order, zero=self.coeffs[0] * 0)

    def evaluate(self, eps):
        acc = self.coeffs[-1] * 0
        for c in reversed(self.coeffs):
            acc = acc * eps + c
        return acc

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            return series_add(self, other)
        return PowerSeries((self.coeffs[0] + other,) + self.coeffs[1:])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            return series_mul(self, other)
        return PowerSeries(tuple(c * other for c in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return series_divide(self, other)
        return PowerSeries(tuple(c / other for c in self.coeffs))

    def __pow__(self, m: int):
        if not isinstance(m, int) or m < 0:
            raise UsageError("only non-negative integer powers are supported")
        result = PowerSeries.constant(self.coeffs[0] * 0 + 1, self.order)
        for _ in range(m):
            result = result * self
        return result

    def __repr__(self):
        return f"PowerSeries({list(self.coeffs)!r})"


def _check_orders(a: PowerSeries, b: PowerSeries):
    if a.order != b.order:
        raise UsageError(f"order mismatch: {a.order} vs {b.order}")


def series_add(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    _check_orders(a, b)
    return PowerSeries(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))


def series_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Cauchy product truncated at the common order."""
    _check_orders(a, b)
    out = []
    for n in range(a.order + 1):
        acc = a.coeffs[0] * b.coeffs[n]
        for m in range(1, n + 1):
            acc += a.coeffs[m] * b.coeffs[n - m]
        out.append(acc)
    return PowerSeries(tuple(out))


def series_divide(num: PowerSeries, den: PowerSeries) -> PowerSeries:
    _check_orders(num, den)
    d0 = den.coeffs[0]
    if d0 == 0:
        raise SingularMatrixError("series division by a denominator with zero constant term")
    q = []
    for n in range(num.order + 1):
        acc = num.coeffs[n]
        for m in range(1, n + 1):
            acc -= den.coeffs[m] * q[n - m]
        q.append(acc / d0)
    return PowerSeries(tuple(q))


def enumerate_partitions(m: int, q: int) -> list[tuple[int, ...]]:
    """All ``(n_1, ..., n_{q-1})`` with ``sum n_p = m`` and ``sum p n_p = q``.

    Returned in lexicographic order.
    """
    slots = q - 1
    out: list[tuple[int, ...]] = []

    def rec(p, prefix, count_left, weight_left):
        if p > slots:
            if count_left == 0 and weight_left == 0:
                out.append(tuple(prefix))
            return
        for n_p in range(0, min(count_left, weight_left // p) + 1):
            prefix.append(n_p)
            rec(p + 1, prefix, count_left - n_p, weight_left - p * n_p)
            prefix.pop()

    if slots >= 1:
        rec(1, [], m, q)
    return out


def partition_sum(c: Sequence, m: int, q: int):
    """``sum over D_{m,q}`` of ``prod_p c_p^{n_p} / n_p!``.

    ``c[p - 1]`` holds ``c_p``. This is the coefficient of ``eps^q`` in
    ``(c_1 eps + c_2 eps^2 + ...)^m / m!``.
    """
    total = None
    for sol in enumerate_partitions(m, q):
        term = None
        for p, n_p in enumerate(sol, start=1):
            if n_p == 0:
                continue
            f = c[p - 1] ** n_p / factorial(n_p)
            term = f if term is None else term * f
        if term is not None:
            total = term if total is None else total + term
    if total is None:
        return c[0] * 0 if len(c) else 0
    return total


def taylor_substitute(outer: Sequence[PowerSeries], inner: PowerSeries, order: int) -> PowerSeries:
    """``sum_r inner^r / r! * outer[r]`` truncated at ``order``.

    ``outer[r]`` needs only ``order - r`` known coefficients: every product
    coefficient it feeds is multiplied by ``inner^r``, whose first ``r``
    coefficients vanish.
    """
    if inner.coeffs[0] != 0:
        raise UsageError("inner series must have zero constant term")
    if len(outer) < order + 1:
        raise UsageError(f"need outer rows r = 0..{order}, got {len(outer)}")
    for r in range(order + 1):
        if outer[r].order < order - r:
            raise UsageError(f"outer row {r} has order {outer[r].order} < {order - r}")
    inner = inner.pad(order) if inner.order < order else inner.truncate(order)
    zero = outer[0].coeffs[0] * 0
    power = PowerSeries.constant(zero + 1, order)
    total = PowerSeries.zero(order, like=zero)
    for r in range(order + 1):
        row = PowerSeries.from_coeffs(outer[r].coeffs[: order - r + 1], order, zero=zero)
        total = total + power * row / factorial(r)
        power = power * inner
    return total
