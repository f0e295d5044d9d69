"""Built-in three-state example and its reference coefficient tables.

The chain on {0, 1, 2, 3} moves 1 -> 2 -> 3 -> {1, 2} and leaks to the
absorbing state 0 at rates that vanish with eps:

    p_10 = p_20 = 1 - e^{-eps},  p_30 = 1 - e^{-2 eps},
    p_12 = p_23 = e^{-eps},      p_31 = p_32 = e^{-2 eps} / 2.

The bundled model file holds the second-order Taylor polynomials of these
entries; :func:`example_kernel` gives the untruncated chain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction as F
from importlib import resources

from .errors import QsdError
from .expand import compute_qsd_expansion
from .model import ConcreteKernel, load_model
from .scalar import FLOAT, RATIONAL

FLOAT_TOL = 1e-12


def example_path():
    return resources.files("perturbqsd") / "data" / "example_chain.json"


def example_model():
    with resources.as_file(example_path()) as path:
        return load_model(path)


def example_kernel(eps: float) -> ConcreteKernel:
    a, b = math.exp(-eps), math.exp(-2.0 * eps)
    matrix = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0 - a, 0.0, a, 0.0],
        [1.0 - a, 0.0, 0.0, a],
        [1.0 - b, b / 2, b / 2, 0.0],
    ]
    return ConcreteKernel.from_markov_matrix(matrix, FLOAT, float(eps))


# nonzero embedded-chain coefficients p_ij[n], i, j != 0
REFERENCE_P = {
    (1, 2, 0): F(1), (2, 3, 0): F(1), (3, 1, 0): F(1, 2), (3, 2, 0): F(1, 2),
    (1, 2, 1): F(-1), (2, 3, 1): F(-1), (3, 1, 1): F(-1), (3, 2, 1): F(-1),
    (1, 2, 2): F(1, 2), (2, 3, 2): F(1, 2), (3, 1, 2): F(1), (3, 2, 2): F(1),
}

# (r, n) -> (phi_11, phi_21, phi_31) coefficient of eps^n in phi_i1(0, r)
REFERENCE_PHI = {
    (0, 0): (F(1), F(1), F(1)),
    (0, 1): (F(-7), F(-6), F(-5)),
    (0, 2): (F(67, 2), F(27), F(43, 2)),
    (1, 0): (F(5), F(4), F(3)),
    (1, 1): (F(-47), F(-36), F(-27)),
    (2, 0): (F(33), F(24), F(17)),
}

REFERENCE_B = {(0, 0): F(1), (0, 1): F(-7), (0, 2): F(67, 2), (1, 0): F(5), (1, 1): F(-47), (2, 0): F(33)}

# (j, r, n) -> a_1j[r, n]
REFERENCE_A = {
    (1, 0, 0): F(1), (2, 0, 0): F(2), (3, 0, 0): F(2),
    (1, 0, 1): F(0), (2, 0, 1): F(-8), (3, 0, 1): F(-10),
    (1, 0, 2): F(0), (2, 0, 2): F(34), (3, 0, 2): F(43),
    (1, 1, 0): F(0), (2, 1, 0): F(6), (3, 1, 0): F(8),
    (1, 1, 1): F(0), (2, 1, 1): F(-48), (3, 1, 1): F(-64),
    (1, 2, 0): F(0), (2, 2, 0): F(34), (3, 2, 0): F(48),
}

REFERENCE_C = (F(7, 5), F(-1, 125))

REFERENCE_D = {
    1: (F(1), F(0), F(0)),
    2: (F(2), F(2, 5), F(9, 125)),
    3: (F(2), F(6, 5), F(47, 125)),
}

REFERENCE_E = (F(5), F(8, 5), F(56, 125))

REFERENCE_PI = {
    1: (F(1, 5), F(-8, 125), F(8, 3125)),
    2: (F(2, 5), F(-6, 125), F(-19, 3125)),
    3: (F(2, 5), F(14, 125), F(11, 3125)),
}

TABLES = ("coeffp", "coeffphi", "coeffb", "coeffa", "coeffc", "coeffd", "coeffe", "pi")


@dataclass
class TableCheck:
    name: str
    passed: bool
    max_error: object
    mismatches: list = field(default_factory=list)


@dataclass
class ExampleReport:
    backend: str
    checks: list
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def summary(self) -> str:
        return f"{sum(c.passed for c in self.checks)}/{len(self.checks)} tables PASS"


def _compare(name, pairs, backend):
    """``pairs``: iterable of (label, computed, expected)."""
    worst = F(0) if backend == RATIONAL else 0.0
    bad = []
    for label, got, want in pairs:
        if backend == RATIONAL:
            err = abs(F(got) - want) if not isinstance(got, float) else abs(got - float(want))
            ok = err == 0
        else:
            err = abs(float(got) - float(want))
            ok = err <= FLOAT_TOL * max(1.0, abs(float(want)))
        worst = max(worst, err)
        if not ok:
            bad.append(f"{label}: got {got}, expected {want}")
    return TableCheck(name, not bad, worst, bad)


def reproduce_example(backend: str = RATIONAL, model=None) -> ExampleReport:
    """Run the k = 2 pipeline on the example and compare every intermediate table."""
    start = time.perf_counter()
    model = example_model() if model is None else model
    checks = []

    pairs = []
    for i in range(1, 4):
        for j in range(1, 4):
            poly = model.embedded_poly(i, j) if model.order >= 2 else model.with_order(2).embedded_poly(i, j)
            for n in range(3):
                want = REFERENCE_P.get((i, j, n), F(0))
                got = poly[n] if backend == RATIONAL else float(poly[n])
                pairs.append((f"p_{i}{j}[{n}]", got, want))
    checks.append(_compare("coeffp", pairs, backend))

    try:
        x = compute_qsd_expansion(model, 2, i_ref=1, backend=backend, validate=False)
    except QsdError as exc:
        for name in TABLES[1:]:
            checks.append(TableCheck(name, False, None, [f"pipeline failed: {exc}"]))
        return ExampleReport(backend, checks, time.perf_counter() - start)

    t = x.table
    checks.append(_compare("coeffphi", [
        (f"Phi_1[0,{r},{n}][{i}]", t.phi_series[(i, r)][n], want[i - 1])
        for (r, n), want in REFERENCE_PHI.items() for i in range(1, 4)
    ], backend))
    b = t.b
    checks.append(_compare("coeffb", [(f"b_1[{r},{n}]", b[(r, n)], v) for (r, n), v in REFERENCE_B.items()], backend))
    a = t.a
    checks.append(_compare("coeffa", [(f"a_1{j}[{r},{n}]", a[(j, r, n)], v)
                                      for (j, r, n), v in REFERENCE_A.items()], backend))
    checks.append(_compare("coeffc", [(f"c_{n}", x.c[n - 1], v) for n, v in enumerate(REFERENCE_C, 1)], backend))
    checks.append(_compare("coeffd", [(f"d_1{j}[{n}]", x.d[j][n], v)
                                      for j, row in REFERENCE_D.items() for n, v in enumerate(row)], backend))
    checks.append(_compare("coeffe", [(f"e_1[{n}]", x.e[n], v) for n, v in enumerate(REFERENCE_E)], backend))
    checks.append(_compare("pi", [(f"pi_{j}[{n}]", x.pi[j][n], v)
                                  for j, row in REFERENCE_PI.items() for n, v in enumerate(row)], backend))
    return ExampleReport(backend, checks, time.perf_counter() - start)
