"""Mixed power-exponential moment functionals at a fixed eps.

For a concrete kernel these are finite sums (``p``, sojourn tails) or the
solutions of taboo first-passage linear systems (``phi``, ``omega``). The
systems are triangular in the power ``r``: every level shares the matrix
``I - A(rho)`` with ``A[i][s] = p_is(rho, 0)`` restricted to ``s`` outside
the taboo set, so one factorization serves all ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import SingularMatrixError, SupercriticalError, UsageError
from .linalg import LUFactorization
from .model import ConcreteKernel
from .scalar import exp_weight, one, zero


def _weights(kernel: ConcreteKernel, rho, r: int, upto: int):
    b = kernel.backend
    return [(n ** r) * exp_weight(rho, n, b) for n in range(upto + 1)]


def moment_p(kernel: ConcreteKernel, rho, r: int, i: int, j: int):
    """``sum_n n^r e^{rho n} Q_ij(n)``."""
    if i == 0:
        raise UsageError("moment_p is defined for non-absorbing source states only")
    w = _weights(kernel, rho, r, kernel.max_time)
    acc = zero(kernel.backend)
    for n in range(1, kernel.max_time + 1):
        q = kernel.entry(i, j, n)
        if q != 0:
            acc += w[n] * q
    return acc


def sojourn_tail_transform(kernel: ConcreteKernel, rho, r: int, i: int):
    """``sum_{n < max_time} n^r e^{rho n} P_i{kappa_1 > n}``."""
    if i == 0:
        raise UsageError("sojourn_tail_transform is defined for non-absorbing states only")
    b = kernel.backend
    w = _weights(kernel, rho, r, kernel.max_time)
    survive = one(b)
    acc = zero(b)
    for n in range(kernel.max_time):
        if n >= 1:
            for j in range(kernel.n_states + 1):
                survive -= kernel.entry(i, j, n)
        acc += w[n] * survive
    return acc


class _TabooSystem:
    """``I - A(rho)`` for taboo set ``{0, j}`` plus the higher-power blocks."""

    def __init__(self, kernel: ConcreteKernel, rho, r_max: int, j: int):
        if j == 0:
            raise UsageError("taboo target must be a non-absorbing state")
        N = kernel.n_states
        states = list(kernel.states())
        self.kernel, self.j, self.states = kernel, j, states
        self.p = {
            m: [[moment_p(kernel, rho, m, i, s) for s in states] for i in states]
            for m in range(r_max + 1)
        }
        b = kernel.backend
        ident = one(b)
        matrix = [
            [(ident if a == c else zero(b)) - (self.p[0][a][c] if states[c] != j else 0) for c in range(N)]
            for a in range(N)
        ]
        try:
            self.lu = LUFactorization(matrix)
        except SingularMatrixError as exc:
            raise SupercriticalError(f"taboo system for target {j} is singular at rho={rho}") from exc
        # rho(A) < 1 iff (I - A)^{-1} 1 > 0 for non-negative A
        probe = self.lu.solve([ident] * N)
        if any(x <= 0 for x in probe):
            raise SupercriticalError(f"taboo system for target {j} is supercritical at rho={rho}")

    def coupling(self, m: int, x):
        """``sum_{s not in {0, j}} p_is(rho, m) x_s`` for every i."""
        N = len(self.states)
        out = []
        for a in range(N):
            acc = 0
            for c in range(N):
                if self.states[c] != self.j:
                    acc = acc + self.p[m][a][c] * x[c]
            out.append(acc)
        return out


def hitting_transform(kernel: ConcreteKernel, rho, r_max: int, j: int) -> dict:
    """``(i, r) -> phi_ij(rho, r)`` for every non-absorbing start ``i``."""
    system = _TabooSystem(kernel, rho, r_max, j)
    states = system.states
    levels = []
    for r in range(r_max + 1):
        rhs = [moment_p(kernel, rho, r, i, j) for i in states]
        for m in range(1, r + 1):
            extra = system.coupling(m, levels[r - m])
            rhs = [x + comb(r, m) * y for x, y in zip(rhs, extra)]
        levels.append(system.lu.solve(rhs))
    return {(i, r): levels[r][a] for r in range(r_max + 1) for a, i in enumerate(states)}


def occupation_transform(kernel: ConcreteKernel, rho, r_max: int, j: int) -> dict:
    """``(i, s, r) -> omega_ijs(rho, r)`` for non-absorbing ``i`` and ``s``."""
    system = _TabooSystem(kernel, rho, r_max, j)
    states = system.states
    tails = {(i, r): sojourn_tail_transform(kernel, rho, r, i) for i in states for r in range(r_max + 1)}
    b = kernel.backend
    out = {}
    for s in states:
        levels = []
        for r in range(r_max + 1):
            rhs = [tails[(i, r)] if i == s else zero(b) for i in states]
            for m in range(1, r + 1):
                extra = system.coupling(m, levels[r - m])
                rhs = [x + comb(r, m) * y for x, y in zip(rhs, extra)]
            levels.append(system.lu.solve(rhs))
        for r in range(r_max + 1):
            for a, i in enumerate(states):
                out[(i, s, r)] = levels[r][a]
    return out


@dataclass(frozen=True)
class MomentTable:
    rho: object
    r_max: int
    p: dict
    phi: dict
    omega: dict
    g: dict


def moment_table(kernel: ConcreteKernel, rho, r_max: int) -> MomentTable:
    """All functionals at one (kernel, rho); ``phi`` keyed ``(i, j, r)``, ``omega`` keyed ``(i, j, s, r)``."""
    states = list(kernel.states())
    p = {
        (i, j, r): moment_p(kernel, rho, r, i, j)
        for i in states
        for j in range(kernel.n_states + 1)
        for r in range(r_max + 1)
    }
    phi, omega = {}, {}
    for j in states:
        for (i, r), v in hitting_transform(kernel, rho, r_max, j).items():
            phi[(i, j, r)] = v
        for (i, s, r), v in occupation_transform(kernel, rho, r_max, j).items():
            omega[(i, j, s, r)] = v
    if rho == 0:
        g = {(i, j): phi[(i, j, 0)] for i in states for j in states}
    else:
        g = {}
        for j in states:
            for (i, r), v in hitting_transform(kernel, zero(kernel.backend), 0, j).items():
                g[(i, j)] = v
    return MomentTable(rho, r_max, p, phi, omega, g)
