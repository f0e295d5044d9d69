"""Asymptotic expansion of the quasi-stationary distribution in eps.

Pipeline:

1. limiting root ``rho0`` of the characteristic equation at eps = 0;
2. power series in eps of ``phi_ii(rho0, r)`` (the ``b`` table) and of
   ``omega_iij(rho0, r)`` (the ``a`` table), obtained by solving the taboo
   linear systems with power-series right-hand sides;
3. root coefficients ``c_n``, omega-at-root coefficients ``d_ij[n]`` and the
   QSD coefficients ``pi_j[n]`` by the partition-sum recursions.

Steps 3 are computed twice (closed-form partition sums and direct series
composition) and the two results must agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

from .errors import (
    BackendError,
    ConditionError,
    DegenerateError,
    InconsistencyError,
    OrderError,
    SingularMatrixError,
    SupercriticalError,
    UsageError,
)
from .linalg import LUFactorization
from .model import PerturbedSemiMarkovModel, evaluate_at, validate_conditions
from .rootfind import DEFAULT_TOL, detect_zero_root, solve_characteristic
from .scalar import AUTO, FLOAT, RATIONAL, convert, exp_weight, one, zero
from .series import PowerSeries, partition_sum, taylor_substitute

FLOAT_ROUTE_RTOL = 1e-9


def _close(x, y, backend):
    if backend == RATIONAL:
        return x == y
    return abs(x - y) <= FLOAT_ROUTE_RTOL * max(1.0, abs(x), abs(y))


def expand_p_functionals(model: PerturbedSemiMarkovModel, rho0, r: int, order: int,
                         backend: str | None = None) -> dict:
    """``(i, j) -> series of p_ij(rho0, r)`` for ``i != 0`` and every ``j``."""
    backend = backend or model.backend
    if order > model.order:
        raise OrderError(f"model carries order {model.order}, requested {order}")
    z = zero(backend)
    w = [(n ** r) * exp_weight(rho0, n, backend) for n in range(model.max_time + 1)]
    out = {}
    for i in range(1, model.n_states + 1):
        for j in range(model.n_states + 1):
            coeffs = [z] * (order + 1)
            for n in range(1, model.max_time + 1):
                poly = model.kernel.get((i, j, n))
                if poly is None:
                    continue
                for d in range(order + 1):
                    coeffs[d] += w[n] * convert(poly[d], backend)
            out[(i, j)] = PowerSeries(tuple(coeffs))
    return out


def _sojourn_tail_series(model, rho0, r, i, order, backend):
    z = zero(backend)
    coeffs = [z] * (order + 1)
    left = [one(backend)] + [z] * order
    for n in range(model.max_time):
        if n >= 1:
            for j in range(model.n_states + 1):
                poly = model.kernel.get((i, j, n))
                if poly is not None:
                    for d in range(order + 1):
                        left[d] -= convert(poly[d], backend)
        wn = (n ** r) * exp_weight(rho0, n, backend)
        for d in range(order + 1):
            coeffs[d] += wn * left[d]
    return PowerSeries(tuple(coeffs))


class _SeriesTabooSystem:
    """Taboo set ``{0, j}`` with power-series matrix entries.

    Solves ``(I - A(eps)) x = rhs`` order by order using one factorization of
    ``I - A[0]``: ``x[n] = (I - A[0])^{-1} (rhs[n] + sum_{m>=1} A[m] x[n-m])``.
    """

    def __init__(self, model, rho0, r_max, order, j, backend):
        self.N, self.order, self.j, self.backend = model.n_states, order, j, backend
        self.p = [expand_p_functionals(model, rho0, m, order, backend) for m in range(r_max + 1)]
        states = range(1, self.N + 1)
        self.A = [
            [self.p[0][(i, s)] if s != j else PowerSeries.zero(order, zero(backend)) for s in states]
            for i in states
        ]
        ident, z = one(backend), zero(backend)
        matrix = [[(ident if a == b else z) - self.A[a][b][0] for b in range(self.N)] for a in range(self.N)]
        try:
            self.lu = LUFactorization(matrix)
        except SingularMatrixError as exc:
            raise SupercriticalError(f"limiting taboo system for state {j} is critical (singular)") from exc
        probe = self.lu.solve([ident] * self.N)
        if any(x <= 0 for x in probe):
            raise SupercriticalError(f"limiting taboo system for state {j} is supercritical at rho0")

    def solve(self, rhs):
        N, z = self.N, zero(self.backend)
        xs = []
        for n in range(self.order + 1):
            b = [rhs[a][n] for a in range(N)]
            for m in range(1, n + 1):
                for a in range(N):
                    acc = z
                    for c in range(N):
                        acc += self.A[a][c][m] * xs[n - m][c]
                    b[a] += acc
            xs.append(self.lu.solve(b))
        return [PowerSeries(tuple(xs[n][a] for n in range(self.order + 1))) for a in range(N)]

    def coupling(self, m, xs):
        out = []
        for i in range(1, self.N + 1):
            acc = PowerSeries.zero(self.order, zero(self.backend))
            for s in range(1, self.N + 1):
                if s != self.j:
                    acc = acc + self.p[m][(i, s)] * xs[s - 1]
            out.append(acc)
        return out


def _series_hitting(system, r_max):
    levels = []
    for r in range(r_max + 1):
        rhs = [system.p[r][(i, system.j)] for i in range(1, system.N + 1)]
        for m in range(1, r + 1):
            extra = system.coupling(m, levels[r - m])
            rhs = [x + y * comb(r, m) for x, y in zip(rhs, extra)]
        levels.append(system.solve(rhs))
    return levels


def _series_occupation(system, model, rho0, r_max, s):
    N, order, backend = system.N, system.order, system.backend
    levels = []
    for r in range(r_max + 1):
        rhs = [
            _sojourn_tail_series(model, rho0, r, i, order, backend) if i == s
            else PowerSeries.zero(order, zero(backend))
            for i in range(1, N + 1)
        ]
        for m in range(1, r + 1):
            extra = system.coupling(m, levels[r - m])
            rhs = [x + y * comb(r, m) for x, y in zip(rhs, extra)]
        levels.append(system.solve(rhs))
    return levels


@dataclass(frozen=True)
class MomentSeriesTable:
    """Series of ``phi_{i,iref}(rho0, r)`` and ``omega_{i,iref,s}(rho0, r)``.

    ``phi_series[(i, r)]`` and ``omega_series[(i, s, r)]`` cover every start
    state ``i``, truncated at order ``k - r``; ``b`` and ``a`` are the rows
    for ``i = i_ref``.
    """

    rho0: object
    i_ref: int
    k: int
    backend: str
    phi_series: dict
    omega_series: dict

    def b_rows(self) -> list:
        return [self.phi_series[(self.i_ref, r)] for r in range(self.k + 1)]

    def a_rows(self, s: int) -> list:
        return [self.omega_series[(self.i_ref, s, r)] for r in range(self.k + 1)]

    @property
    def b(self) -> dict:
        return {(r, n): row[n] for r, row in enumerate(self.b_rows()) for n in range(len(row))}

    @property
    def a(self) -> dict:
        states = sorted({s for (_, s, _) in self.omega_series})
        return {(s, r, n): row[n] for s in states for r, row in enumerate(self.a_rows(s))
                for n in range(len(row))}


def _truncate_levels(levels, k):
    return {(a + 1, r): levels[r][a].truncate(k - r) for r in range(k + 1) for a in range(len(levels[r]))}


def expand_phi(model, rho0, i_ref: int, k: int, backend: str | None = None) -> dict:
    """``(i, r) -> series of phi_{i, i_ref}(rho0, r)``, order ``k - r``."""
    backend = backend or model.backend
    system = _SeriesTabooSystem(model, rho0, k, k, i_ref, backend)
    return _truncate_levels(_series_hitting(system, k), k)


def expand_omega(model, rho0, i_ref: int, k: int, backend: str | None = None) -> dict:
    """``(i, s, r) -> series of omega_{i, i_ref, s}(rho0, r)``, order ``k - r``."""
    backend = backend or model.backend
    system = _SeriesTabooSystem(model, rho0, k, k, i_ref, backend)
    out = {}
    for s in range(1, model.n_states + 1):
        for (i, r), v in _truncate_levels(_series_occupation(system, model, rho0, k, s), k).items():
            out[(i, s, r)] = v
    return out


def moment_series_table(model, rho0, i_ref: int, k: int, backend: str | None = None) -> MomentSeriesTable:
    backend = backend or model.backend
    system = _SeriesTabooSystem(model, rho0, k, k, i_ref, backend)
    phi = _truncate_levels(_series_hitting(system, k), k)
    omega = {}
    for s in range(1, model.n_states + 1):
        for (i, r), v in _truncate_levels(_series_occupation(system, model, rho0, k, s), k).items():
            omega[(i, s, r)] = v
    return MomentSeriesTable(rho0, i_ref, k, backend, phi, omega)


def root_coefficients_closed_form(b: dict, k: int) -> list:
    """``c_1..c_k`` from the partition-sum recursion; ``b[(r, n)]`` for ``r + n <= k``."""
    b10 = b[(1, 0)] if k >= 1 else None
    if k >= 1 and b10 == 0:
        raise DegenerateError("b[1,0] = 0: the limiting return time has zero tilted mean")
    c = []
    for n in range(1, k + 1):
        acc = b[(0, n)]
        for q in range(1, n):
            acc += b[(1, n - q)] * c[q - 1]
        for m in range(2, n + 1):
            for q in range(m, n + 1):
                acc += b[(m, n - q)] * partition_sum(c, m, q)
        c.append(-acc / b10)
    return c


def root_coefficients_by_inversion(b_rows: list, k: int) -> list:
    """``c_1..c_k`` such that ``taylor_substitute(b_rows, c) = 1 + o(eps^k)``."""
    if k == 0:
        return []
    z = b_rows[0][0] * 0
    b10 = b_rows[1][0]
    if b10 == 0:
        raise DegenerateError("b[1,0] = 0: the limiting return time has zero tilted mean")
    c = []
    for n in range(1, k + 1):
        inner = PowerSeries.from_coeffs([z] + c, n, zero=z)
        composite = taylor_substitute(b_rows[: n + 1], inner, n)
        c.append(-composite[n] / b10)
    return c


def expand_root(table: MomentSeriesTable, k: int | None = None) -> list:
    """Root coefficients, cross-checked between the two routes."""
    k = table.k if k is None else k
    closed = root_coefficients_closed_form(table.b, k)
    inverted = root_coefficients_by_inversion(table.b_rows(), k)
    for n, (x, y) in enumerate(zip(closed, inverted), start=1):
        if not _close(x, y, table.backend):
            raise InconsistencyError(f"c_{n}: closed form {x} != series inversion {y}")
    return closed


def omega_at_root_closed_form(a_rows: list, c: list, k: int) -> list:
    """``d[0..k]`` for one ``(i_ref, j)`` pair from its ``a`` rows."""
    a = lambda r, n: a_rows[r][n]  # noqa: E731
    d = [a(0, 0)]
    for n in range(1, k + 1):
        acc = a(0, n)
        for q in range(1, n + 1):
            acc += a(1, n - q) * c[q - 1]
        for m in range(2, n + 1):
            for q in range(m, n + 1):
                acc += a(m, n - q) * partition_sum(c, m, q)
        d.append(acc)
    return d


def omega_at_root_by_substitution(a_rows: list, c: list, k: int) -> list:
    z = a_rows[0][0] * 0
    inner = PowerSeries.from_coeffs([z] + list(c[:k]), k, zero=z)
    return list(taylor_substitute(a_rows[: k + 1], inner, k).coeffs)


def expand_omega_at_root(table: MomentSeriesTable, c: list) -> dict:
    """``j -> (d_{i_ref j}[0], ..., d_{i_ref j}[k])``."""
    k = table.k
    if len(c) < k:
        raise UsageError(f"need {k} root coefficients, got {len(c)}")
    states = sorted({s for (_, s, _) in table.omega_series})
    out = {}
    for s in states:
        rows = table.a_rows(s)
        closed = omega_at_root_closed_form(rows, c, k)
        composed = omega_at_root_by_substitution(rows, c, k)
        for n, (x, y) in enumerate(zip(closed, composed)):
            if not _close(x, y, table.backend):
                raise InconsistencyError(f"d_{table.i_ref}{s}[{n}]: closed form {x} != substitution {y}")
        out[s] = tuple(closed)
    return out


@dataclass
class QsdExpansion:
    pi: dict
    c: tuple
    d: dict
    e: tuple
    i_ref: int
    k: int
    rho0: object = 0
    backend: str = RATIONAL
    table: MomentSeriesTable | None = None
    diagnostics: dict = field(default_factory=dict)

    def coefficient(self, j: int, n: int):
        return self.pi[j][n]

    def pi_series(self, j: int) -> PowerSeries:
        return PowerSeries(self.pi[j])

    def evaluate(self, eps) -> dict:
        return {j: self.pi_series(j).evaluate(eps) for j in self.pi}

    def root_series(self) -> PowerSeries:
        return PowerSeries((self.rho0,) + tuple(self.c))


def expand_qsd(d: dict, k: int, i_ref: int = 1, c=(), rho0=0) -> QsdExpansion:
    """QSD coefficients from the omega-at-root coefficients ``d[j][n]``."""
    states = sorted(d)
    e = []
    for n in range(k + 1):
        acc = d[states[0]][n]
        for j in states[1:]:
            acc += d[j][n]
        e.append(acc)
    if not e[0] > 0:
        raise DegenerateError(f"e[0] = {e[0]} must be positive")
    pi = {}
    for j in states:
        coeffs = []
        for n in range(k + 1):
            acc = d[j][n]
            for q in range(n):
                acc -= e[n - q] * coeffs[q]
            coeffs.append(acc / e[0])
        pi[j] = tuple(coeffs)
    backend = RATIONAL if all(not isinstance(x, float) for x in e) else FLOAT
    return QsdExpansion(pi, tuple(c), dict(d), tuple(e), i_ref, k, rho0, backend)


def required_model_order(model: PerturbedSemiMarkovModel, k: int) -> int:
    return k if model.is_markov else k + 1


def resolve_backend(model: PerturbedSemiMarkovModel, requested: str = AUTO, i_ref: int = 1):
    """Pick the numeric backend and the limiting root ``rho0``.

    Returns ``(backend, rho0, root_result)``.
    """
    if requested not in (AUTO, RATIONAL, FLOAT):
        raise BackendError(f"unknown backend {requested!r}")
    exact_model = model.backend == RATIONAL
    limit = evaluate_at(model, 0, RATIONAL if exact_model else FLOAT)
    zero_root = detect_zero_root(limit, i_ref)
    if requested == AUTO:
        backend = RATIONAL if exact_model and zero_root else FLOAT
    elif requested == RATIONAL:
        if not exact_model:
            raise BackendError("model has non-rational coefficients; use backend 'float' or 'auto'")
        if not zero_root:
            raise BackendError("limiting root is nonzero, exact computation impossible; "
                               "use backend 'float' or 'auto' to downgrade")
        backend = RATIONAL
    else:
        backend = FLOAT
    if zero_root:
        return backend, zero(backend), None
    result = solve_characteristic(limit.to_backend(FLOAT), i_ref, DEFAULT_TOL)
    return backend, result.rho, result


def _pipeline(model, k, i_ref, backend, rho0):
    table = moment_series_table(model, rho0, i_ref, k, backend)
    c = expand_root(table, k)
    d = expand_omega_at_root(table, c)
    expansion = expand_qsd(d, k, i_ref, c, rho0)
    expansion.backend = backend
    expansion.table = table
    return expansion


def compute_qsd_expansion(model: PerturbedSemiMarkovModel, k: int, i_ref: int = 1,
                          backend: str = AUTO, check_invariance: bool = False,
                          validate: bool = True) -> QsdExpansion:
    """k-th order expansion of the quasi-stationary distribution of ``model``."""
    if k < 0:
        raise UsageError("expansion order must be non-negative")
    if not 1 <= i_ref <= model.n_states:
        raise UsageError(f"reference state must be in 1..{model.n_states}")
    need = required_model_order(model, k)
    if model.order < need:
        kind = "Markov-chain" if model.is_markov else "semi-Markov"
        raise OrderError(f"{kind} model of order {model.order} cannot give a QSD expansion "
                         f"of order {k}; perturbation data of order {need} is required")
    if validate:
        report = validate_conditions(model)
        if not (report.communication_ok and report.nonperiodic_ok):
            raise ConditionError("; ".join(report.messages))
    backend, rho0, root = resolve_backend(model, backend, i_ref)
    expansion = _pipeline(model, k, i_ref, backend, rho0)

    identity = taylor_substitute(expansion.table.b_rows(), expansion.root_series() - rho0, k)
    target = [one(backend)] + [zero(backend)] * k
    diag = {
        "backend": backend,
        "model_order": model.order,
        "markov_chain": model.is_markov,
        "limit_root_residual": None if root is None else root.residual,
        "characteristic_identity_residual": max(abs(x - y) for x, y in zip(identity.coeffs, target)),
        "normalization_residual": max(
            abs(sum(expansion.pi[j][n] for j in expansion.pi) - (1 if n == 0 else 0)) for n in range(k + 1)
        ),
    }
    if check_invariance:
        agree = True
        for other in range(1, model.n_states + 1):
            if other == i_ref:
                continue
            alt = _pipeline(model, k, other, backend, rho0)
            for j in expansion.pi:
                if not all(_close(x, y, backend) for x, y in zip(expansion.pi[j], alt.pi[j])):
                    agree = False
        diag["reference_invariant"] = agree
    expansion.diagnostics = diag
    return expansion
