"""Perturbed discrete-time semi-Markov models.

States are ``0..N`` with ``0`` absorbing. The kernel maps ``(i, j, n)``
(``i != 0``, jump ``i -> j`` after ``n >= 1`` time units) to a polynomial in
eps given by its coefficient tuple. Transition times have finite support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .errors import EvaluationError, ModelError
from .scalar import FLOAT, RATIONAL, convert, parse_rational

FLOAT_ROW_TOL = 1e-12
_EPS_MAX_SAMPLES = 1000


def _poly_eval(coeffs, eps):
    acc = coeffs[-1] * 0
    for c in reversed(coeffs):
        acc = acc * eps + c
    return acc


@dataclass(frozen=True)
class PerturbedSemiMarkovModel:
    n_states: int
    order: int
    kernel: Mapping[tuple, tuple]
    eps_max: Fraction | float | None = None

    def __post_init__(self):
        N, k = self.n_states, self.order
        if not isinstance(N, int) or N < 1:
            raise ModelError(f"N must be a positive integer, got {N!r}")
        if not isinstance(k, int) or k < 0:
            raise ModelError(f"order must be a non-negative integer, got {k!r}")
        cleaned = {}
        for key, poly in self.kernel.items():
            i, j, n = key
            if not 1 <= i <= N:
                raise ModelError(f"transition {key}: source state must be in 1..{N}")
            if not 0 <= j <= N:
                raise ModelError(f"transition {key}: target state must be in 0..{N}")
            if not isinstance(n, int) or n < 1:
                raise ModelError(f"transition {key}: time must be a positive integer")
            poly = tuple(poly)
            if len(poly) == 0:
                continue
            if len(poly) > k + 1:
                if any(c != 0 for c in poly[k + 1:]):
                    raise ModelError(f"transition {key}: polynomial degree exceeds order {k}")
                poly = poly[: k + 1]
            zero = poly[0] * 0
            poly = poly + (zero,) * (k + 1 - len(poly))
            if all(c == 0 for c in poly):
                continue
            cleaned[(i, j, n)] = poly
        object.__setattr__(self, "kernel", cleaned)
        self._check_layers()
        if self.eps_max is None:
            object.__setattr__(self, "eps_max", default_eps_max(self))
        elif self.eps_max < 0:
            raise ModelError("eps_max must be non-negative")

    @property
    def max_time(self) -> int:
        return max((n for (_, _, n) in self.kernel), default=1)

    @property
    def is_markov(self) -> bool:
        return self.max_time == 1

    @property
    def backend(self) -> str:
        exact = all(isinstance(c, (Fraction, int)) for p in self.kernel.values() for c in p)
        return RATIONAL if exact else FLOAT

    def poly(self, i: int, j: int, n: int) -> tuple:
        p = self.kernel.get((i, j, n))
        if p is None:
            return (Fraction(0),) * (self.order + 1)
        return p

    def coefficient(self, i, j, n, d):
        return self.poly(i, j, n)[d]

    def embedded_poly(self, i: int, j: int) -> tuple:
        """Coefficients of the embedded-chain probability p_ij(eps)."""
        acc = [Fraction(0)] * (self.order + 1)
        for (a, b, _), p in self.kernel.items():
            if a == i and b == j:
                acc = [x + y for x, y in zip(acc, p)]
        return tuple(acc)

    def _check_layers(self):
        for i in range(1, self.n_states + 1):
            layers = [0] * (self.order + 1)
            for (a, _, _), p in self.kernel.items():
                if a == i:
                    layers = [x + y for x, y in zip(layers, p)]
            tol = 0 if self.backend == RATIONAL else FLOAT_ROW_TOL
            if abs(layers[0] - 1) > tol:
                raise ModelError(f"row {i}: constant terms sum to {layers[0]}, expected 1")
            for d in range(1, self.order + 1):
                if abs(layers[d]) > tol:
                    raise ModelError(f"row {i}: eps^{d} coefficients sum to {layers[d]}, expected 0")

    def with_order(self, order: int) -> "PerturbedSemiMarkovModel":
        kernel = {key: p[: order + 1] for key, p in self.kernel.items()}
        return PerturbedSemiMarkovModel(self.n_states, order, kernel, self.eps_max)


def _entries_valid(model, eps) -> bool:
    for p in model.kernel.values():
        v = _poly_eval(p, eps)
        if v < -FLOAT_ROW_TOL or v > 1 + FLOAT_ROW_TOL:
            return False
    return True


def default_eps_max(model) -> Fraction:
    """Half of the largest sampled eps in (0, 1] up to which every entry stays in [0, 1]."""
    largest = Fraction(0)
    for t in range(1, _EPS_MAX_SAMPLES + 1):
        eps = Fraction(t, _EPS_MAX_SAMPLES)
        if not _entries_valid(model, float(eps)):
            break
        largest = eps
    return largest / 2


def from_markov_chain(p_coeffs: Mapping[tuple, tuple], k: int, eps_max=None, n_states=None):
    """Lift an embedded-chain description ``(i, j) -> poly`` to a semi-Markov
    model with all transition times equal to 1."""
    if n_states is None:
        n_states = max(max(i, j) for (i, j) in p_coeffs)
    kernel = {}
    for (i, j), poly in p_coeffs.items():
        if i == 0:
            continue
        kernel[(i, j, 1)] = tuple(poly)
    return PerturbedSemiMarkovModel(n_states, k, kernel, eps_max)


@dataclass(frozen=True)
class ConcreteKernel:
    """The model at one fixed eps."""

    n_states: int
    q: Mapping[tuple, object]
    max_time: int
    backend: str
    epsilon: object = None

    def __post_init__(self):
        tol = 0 if self.backend == RATIONAL else FLOAT_ROW_TOL
        rows = {i: 0 for i in range(1, self.n_states + 1)}
        for (i, j, n), v in self.q.items():
            if v < -tol:
                raise EvaluationError(f"negative kernel entry Q_{i}{j}({n}) = {v}")
            rows[i] += v
        for i, total in rows.items():
            if abs(total - 1) > tol:
                raise EvaluationError(f"row {i} sums to {total}, expected 1")

    def entry(self, i: int, j: int, n: int):
        return self.q.get((i, j, n), self._zero)

    @property
    def _zero(self):
        return Fraction(0) if self.backend == RATIONAL else 0.0

    def embedded(self, i: int, j: int):
        return sum((self.entry(i, j, n) for n in range(1, self.max_time + 1)), self._zero)

    def states(self) -> range:
        return range(1, self.n_states + 1)

    def to_backend(self, backend: str) -> "ConcreteKernel":
        if backend == self.backend:
            return self
        q = {key: convert(v, backend) for key, v in self.q.items()}
        eps = None if self.epsilon is None else convert(self.epsilon, backend)
        return ConcreteKernel(self.n_states, q, self.max_time, backend, eps)

    @classmethod
    def from_markov_matrix(cls, matrix, backend=None, epsilon=None) -> "ConcreteKernel":
        """Kernel with unit transition times from a full (N+1)x(N+1) matrix; row 0 is ignored."""
        n_states = len(matrix) - 1
        if backend is None:
            exact = all(isinstance(x, (Fraction, int)) for row in matrix for x in row)
            backend = RATIONAL if exact else FLOAT
        q = {}
        for i in range(1, n_states + 1):
            for j in range(n_states + 1):
                v = convert(matrix[i][j], backend)
                if v != 0:
                    q[(i, j, 1)] = v
        return cls(n_states, q, 1, backend, epsilon)


def evaluate_at(model: PerturbedSemiMarkovModel, eps, backend: str | None = None) -> ConcreteKernel:
    if backend is None:
        backend = RATIONAL if isinstance(eps, (Fraction, int)) and model.backend == RATIONAL else FLOAT
    eps = convert(eps, backend)
    if eps < 0:
        raise EvaluationError(f"eps must be non-negative, got {eps}")
    if model.eps_max is not None and eps > model.eps_max:
        raise EvaluationError(f"eps = {eps} exceeds the declared validity bound {model.eps_max}")
    q = {}
    for key, poly in model.kernel.items():
        v = _poly_eval(tuple(convert(c, backend) for c in poly), eps)
        if v != 0:
            q[key] = v
    return ConcreteKernel(model.n_states, q, model.max_time, backend, eps)


@dataclass
class ValidationReport:
    communication_ok: bool
    communication: list
    nonperiodic_ok: bool
    periods: dict
    stochastic_ok: bool
    limit_absorption_free: bool
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.communication_ok and self.nonperiodic_ok and self.stochastic_ok


def _support_edges(model):
    """Edges (i, j, n) of the eps = 0 kernel among non-absorbing states."""
    return [(i, j, n) for (i, j, n), p in model.kernel.items() if j != 0 and p[0] != 0]


def _reachable_after_step(edges, start, N):
    """States reachable from ``start`` by walks of length >= 1 avoiding 0."""
    succ = {s: set() for s in range(1, N + 1)}
    for i, j, _ in edges:
        succ[i].add(j)
    seen = set()
    stack = list(succ[start])
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        stack.extend(succ[s] - seen)
    return seen


def state_period(edges, state, N) -> int:
    """gcd of closed-walk durations through ``state`` (0 if it cannot return).

    Distances are labeled along a spanning tree of the strong component of
    ``state``; every component edge ``u -> v`` of duration ``w`` contributes
    ``|dist(u) + w - dist(v)|`` to the gcd.
    """
    fwd = _reachable_after_step(edges, state, N)
    if state not in fwd:
        return 0
    back = {state}
    changed = True
    while changed:
        changed = False
        for i, j, _ in edges:
            if j in back and i not in back:
                back.add(i)
                changed = True
    comp = (fwd | {state}) & back
    dist = {state: 0}
    stack = [state]
    while stack:
        u = stack.pop()
        for i, j, n in edges:
            if i == u and j in comp and j not in dist:
                dist[j] = dist[u] + n
                stack.append(j)
    g = 0
    for i, j, n in edges:
        if i in comp and j in comp:
            g = math.gcd(g, abs(dist[i] + n - dist[j]))
    return g


def validate_conditions(model: PerturbedSemiMarkovModel, spot_checks: int = 11) -> ValidationReport:
    N = model.n_states
    edges = _support_edges(model)
    messages = []

    reach = {i: _reachable_after_step(edges, i, N) for i in range(1, N + 1)}
    witness = [[j in reach[i] for j in range(1, N + 1)] for i in range(1, N + 1)]
    communication_ok = all(all(row) for row in witness)
    if not communication_ok:
        missing = [(i + 1, j + 1) for i, row in enumerate(witness) for j, ok in enumerate(row) if not ok]
        messages.append(f"communication: g_ij^(0) = 0 for (i, j) in {missing}")

    periods = {i: state_period(edges, i, N) for i in range(1, N + 1)}
    nonperiodic_ok = any(p == 1 for p in periods.values())
    if not nonperiodic_ok:
        messages.append(f"non-periodicity: no state has aperiodic return times (periods {periods})")

    stochastic_ok = True
    eps_max = model.eps_max if model.eps_max is not None else 0
    for t in range(spot_checks):
        eps = float(eps_max) * t / max(spot_checks - 1, 1)
        try:
            evaluate_at(model, eps, FLOAT)
        except EvaluationError as exc:
            stochastic_ok = False
            messages.append(f"stochasticity at eps={eps:g}: {exc}")
            break

    absorbing = [i for i in range(1, N + 1) if any(p[0] != 0 for (a, b, _), p in model.kernel.items() if a == i and b == 0)]
    limit_absorption_free = not absorbing
    if absorbing:
        messages.append(f"limiting chain can be absorbed from states {absorbing}; rho^(0) will be positive")
    return ValidationReport(communication_ok, witness, nonperiodic_ok, periods, stochastic_ok,
                            limit_absorption_free, messages)


def model_from_dict(doc: Mapping) -> PerturbedSemiMarkovModel:
    def need(obj, key, where):
        if key not in obj:
            raise ModelError(f"{where}: missing field {key!r}")
        return obj[key]

    N = need(doc, "N", "model")
    order = need(doc, "order", "model")
    if not isinstance(N, int) or isinstance(N, bool):
        raise ModelError(f"model.N: expected integer, got {N!r}")
    if not isinstance(order, int) or isinstance(order, bool):
        raise ModelError(f"model.order: expected integer, got {order!r}")
    markov = bool(doc.get("markov_chain", False))
    eps_max = None
    if doc.get("eps_max") is not None:
        try:
            eps_max = parse_rational(doc["eps_max"])
        except ValueError as exc:
            raise ModelError(f"model.eps_max: {exc}") from None
    transitions = need(doc, "transitions", "model")
    if not isinstance(transitions, list):
        raise ModelError("model.transitions: expected a list")
    kernel = {}
    for idx, tr in enumerate(transitions):
        where = f"transitions[{idx}]"
        if not isinstance(tr, Mapping):
            raise ModelError(f"{where}: expected an object")
        i = need(tr, "from", where)
        j = need(tr, "to", where)
        n = tr.get("time", 1 if markov else None)
        if n is None:
            raise ModelError(f"{where}: missing field 'time'")
        if markov and n != 1:
            raise ModelError(f"{where}: markov_chain models require time 1")
        poly = need(tr, "poly", where)
        if not isinstance(poly, list):
            raise ModelError(f"{where}.poly: expected a list")
        try:
            coeffs = tuple(parse_rational(c) for c in poly)
        except ValueError as exc:
            raise ModelError(f"{where}.poly: {exc}") from None
        key = (i, j, n)
        if key in kernel:
            raise ModelError(f"{where}: duplicate transition {key}")
        kernel[key] = coeffs
    return PerturbedSemiMarkovModel(N, order, kernel, eps_max)


def model_to_dict(model: PerturbedSemiMarkovModel) -> dict:
    from .scalar import format_scalar

    return {
        "N": model.n_states,
        "order": model.order,
        "eps_max": format_scalar(model.eps_max),
        "transitions": [
            {"from": i, "to": j, "time": n, "poly": [format_scalar(c) for c in p]}
            for (i, j, n), p in sorted(model.kernel.items())
        ],
    }


def load_model(path) -> PerturbedSemiMarkovModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, Mapping):
        raise ModelError(f"{path}: top-level JSON value must be an object")
    return model_from_dict(doc)
