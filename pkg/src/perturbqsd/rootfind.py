"""Root of the characteristic equation ``phi_ii(rho) = 1``."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoReturnError, SupercriticalError
from .model import ConcreteKernel
from .moments import hitting_transform
from .scalar import FLOAT, RATIONAL, zero

DEFAULT_TOL = 1e-14
FLOAT_ONE_TOL = 1e-12
_MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class RootResult:
    rho: object
    residual: object
    iterations: int
    reference_state: int


def _phi_ii(kernel, rho, i):
    return hitting_transform(kernel, rho, 0, i)[(i, 0)]


def _absorption_before_return(kernel: ConcreteKernel, i: int) -> bool:
    """Can the chain started at ``i`` hit 0 before coming back to ``i``?"""
    succ = {s: set() for s in range(kernel.n_states + 1)}
    for (a, b, _), v in kernel.q.items():
        if v != 0:
            succ[a].add(b)
    seen, stack = set(), list(succ[i])
    while stack:
        s = stack.pop()
        if s == 0:
            return True
        if s in seen or s == i:
            continue
        seen.add(s)
        stack.extend(succ[s])
    return False


def detect_zero_root(kernel: ConcreteKernel, i: int = 1) -> bool:
    """True iff ``g_ii == 1``, so that rho = 0 solves the characteristic equation."""
    g = _phi_ii(kernel, zero(kernel.backend), i)
    if kernel.backend == RATIONAL:
        return g == 1
    return not _absorption_before_return(kernel, i) and abs(g - 1) <= FLOAT_ONE_TOL


def solve_characteristic(kernel: ConcreteKernel, i: int = 1, tol: float = DEFAULT_TOL) -> RootResult:
    """Bisection on the increasing map ``rho -> phi_ii(rho)``.

    Returns an exact zero for a rational kernel when rho = 0 is the root;
    any other root is computed in floating point.
    """
    g = _phi_ii(kernel, zero(kernel.backend), i)
    if g == 0:
        raise NoReturnError(f"state {i} cannot return before absorption (g_ii = 0)")
    if detect_zero_root(kernel, i):
        return RootResult(zero(kernel.backend), g - 1, 0, i)
    fk = kernel.to_backend(FLOAT)

    def above(rho):
        try:
            return _phi_ii(fk, rho, i) > 1.0
        except SupercriticalError:
            return True

    lo, hi = 0.0, 1.0
    iterations = 0
    while not above(hi):
        lo, hi = hi, 2.0 * hi
        iterations += 1
        if iterations > _MAX_DOUBLINGS:
            raise NoReturnError(f"no bracket found for the characteristic root of state {i}")
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if above(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    rho = 0.5 * (lo + hi)
    try:
        residual = _phi_ii(fk, rho, i) - 1.0
    except SupercriticalError:
        rho = lo
        residual = _phi_ii(fk, rho, i) - 1.0
    return RootResult(rho, residual, iterations, i)
