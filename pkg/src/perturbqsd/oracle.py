"""Ground-truth QSD values at a fixed eps, independent of the expansion.

``qsd_direct`` uses the renewal representation (occupation transforms at the
characteristic root); ``qsd_iterative`` propagates the conditional law of the
process given survival by dynamic programming on the augmented chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import HorizonError, UsageError
from .model import ConcreteKernel, PerturbedSemiMarkovModel, evaluate_at
from .moments import occupation_transform
from .rootfind import DEFAULT_TOL, solve_characteristic
from .scalar import FLOAT


@dataclass
class QsdPoint:
    epsilon: object
    pi: dict
    rho: object
    method: str
    diagnostics: dict = field(default_factory=dict)


def qsd_direct(kernel: ConcreteKernel, tol: float = DEFAULT_TOL, i: int = 1) -> QsdPoint:
    root = solve_characteristic(kernel, i, tol)
    k = kernel if (root.rho == 0 and kernel.backend != FLOAT) else kernel.to_backend(FLOAT)
    omega = occupation_transform(k, root.rho, 0, i)
    row = {s: omega[(i, s, 0)] for s in k.states()}
    total = sum(row.values())
    pi = {s: v / total for s, v in row.items()}
    return QsdPoint(kernel.epsilon, pi, root.rho, "formula",
                    {"root_residual": root.residual, "reference_state": i})


def _tv(p: dict, q: dict) -> float:
    return 0.5 * sum(abs(p[s] - q[s]) for s in p)


def qsd_iterative(kernel: ConcreteKernel, horizon: int, i_start: int = 1) -> QsdPoint:
    """Law of xi(horizon) given survival, started from ``i_start``.

    The augmented state is ``(current, next, remaining)``: the process sits in
    ``current`` and jumps to ``next`` after ``remaining`` more steps. The
    surviving mass is renormalized every step.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    if not 1 <= i_start <= kernel.n_states:
        raise UsageError(f"start state must be in 1..{kernel.n_states}")
    k = kernel.to_backend(FLOAT)
    outgoing = {i: [] for i in k.states()}
    for (i, j, n), v in k.q.items():
        if v > 0:
            outgoing[i].append((j, n, v))

    def enter(state, mass, into):
        for j, n, v in outgoing[state]:
            key = (state, j, n)
            into[key] = into.get(key, 0.0) + mass * v

    law: dict = {}
    enter(i_start, 1.0, law)

    def marginal(dist):
        out = {s: 0.0 for s in k.states()}
        for (cur, _, _), m in dist.items():
            out[cur] += m
        return out

    half = max(horizon // 2, 1)
    snapshot_half = None
    last = marginal(law)
    for step in range(1, horizon + 1):
        nxt: dict = {}
        for (cur, j, rem), m in law.items():
            if rem > 1:
                key = (cur, j, rem - 1)
                nxt[key] = nxt.get(key, 0.0) + m
            elif j != 0:
                enter(j, m, nxt)
        total = sum(nxt.values())
        if not total > 0.0:
            raise HorizonError(f"survival probability underflowed at step {step}", last)
        law = {key: m / total for key, m in nxt.items()}
        last = marginal(law)
        if step == half:
            snapshot_half = last
    return QsdPoint(kernel.epsilon, last, None, "iterative",
                    {"horizon": horizon, "start_state": i_start,
                     "convergence_distance": _tv(last, snapshot_half)})


@dataclass
class RemainderRow:
    epsilon: object
    state: int
    oracle: float
    expansion: float
    error: float
    normalized: float


@dataclass
class RemainderReport:
    k: int
    rows: list
    non_decaying: list

    @property
    def decaying(self) -> bool:
        return not self.non_decaying

    def normalized_by_state(self) -> dict:
        out: dict = {}
        for row in self.rows:
            out.setdefault(row.state, []).append(row.normalized)
        return out


def remainder_report(model: PerturbedSemiMarkovModel, k: int, eps_grid, expansion=None,
                     tol: float = DEFAULT_TOL, kernel_at=None) -> RemainderReport:
    """Compare the k-th order expansion with ``qsd_direct`` on a grid.

    ``kernel_at(eps)`` overrides the oracle chain; by default the model itself
    is evaluated, so only the truncated polynomials are tested.

    A state is flagged when its normalized remainder ``|error| / eps^k`` does
    not decrease along the grid sorted by decreasing eps.
    """
    from .expand import compute_qsd_expansion

    if expansion is None:
        expansion = compute_qsd_expansion(model, k)
    grid = sorted((float(e) for e in eps_grid), reverse=True)
    if any(e <= 0 for e in grid):
        raise UsageError("grid points must be positive")
    rows = []
    for eps in grid:
        kernel = kernel_at(eps) if kernel_at else evaluate_at(model, eps, FLOAT)
        point = qsd_direct(kernel, tol)
        approx = {j: sum(float(c) * eps ** n for n, c in enumerate(expansion.pi[j][: k + 1]))
                  for j in expansion.pi}
        for j in sorted(approx):
            err = abs(point.pi[j] - approx[j])
            rows.append(RemainderRow(eps, j, point.pi[j], approx[j], err, err / eps ** k))
    report = RemainderReport(k, rows, [])
    for j, seq in report.normalized_by_state().items():
        if any(b >= a for a, b in zip(seq, seq[1:])) and any(x > 0 for x in seq):
            report.non_decaying.append(j)
    return report
