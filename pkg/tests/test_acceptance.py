"""Acceptance criteria, one test per criterion.

Each check records a PASS/FAIL line that is printed in the pytest terminal
summary; ``python3 tests/test_acceptance.py`` prints the same lines directly.
"""

from __future__ import annotations

import math
import random
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import brute_force_g, brute_force_h, markov_suite, random_float_kernel, transform  # noqa: E402
from perturbqsd.example import example_kernel, example_model, reproduce_example  # noqa: E402
from perturbqsd.expand import (  # noqa: E402
    compute_qsd_expansion,
    omega_at_root_by_substitution,
    omega_at_root_closed_form,
    root_coefficients_by_inversion,
    root_coefficients_closed_form,
)
from perturbqsd.model import evaluate_at  # noqa: E402
from perturbqsd.moments import hitting_transform, occupation_transform  # noqa: E402
from perturbqsd.oracle import qsd_direct, qsd_iterative, remainder_report  # noqa: E402
from perturbqsd.rootfind import solve_characteristic  # noqa: E402
from perturbqsd.series import PowerSeries, taylor_substitute  # noqa: E402

RESULTS: dict = {}


def record(number: int, ok: bool, detail: str):
    RESULTS[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    return ok


_SUITE = None


def suite():
    global _SUITE
    if _SUITE is None:
        _SUITE = [(example_model(), 2)] + markov_suite()
    return _SUITE


def check_golden():
    start = time.perf_counter()
    report = reproduce_example("rational")
    elapsed = time.perf_counter() - start
    worst = max(c.max_error for c in report.checks)
    ok = report.passed and worst == 0 and elapsed < 1.0
    return record(1, ok, f"{report.summary}, max error {worst}, {elapsed:.3f} s")


def check_normalization():
    worst_float = 0.0
    exact_ok = True
    for model, k in suite():
        x = compute_qsd_expansion(model, k, backend="rational")
        for n in range(k + 1):
            total = sum(x.pi[j][n] for j in x.pi)
            exact_ok &= total == (1 if n == 0 else 0)
        y = compute_qsd_expansion(model, k, backend="float")
        for n in range(k + 1):
            worst_float = max(worst_float, abs(sum(y.pi[j][n] for j in y.pi) - (1.0 if n == 0 else 0.0)))
    ok = exact_ok and worst_float <= 1e-12
    return record(2, ok, f"{len(suite())} models, rational exact={exact_ok}, float max residual {worst_float:.2e}")


def check_dual_route():
    agree = True
    for model, k in suite():
        x = compute_qsd_expansion(model, k, backend="rational")
        t = x.table
        c_closed = root_coefficients_closed_form(t.b, k)
        agree &= c_closed == root_coefficients_by_inversion(t.b_rows(), k)
        for s in range(1, model.n_states + 1):
            rows = t.a_rows(s)
            agree &= omega_at_root_closed_form(rows, c_closed, k) == omega_at_root_by_substitution(rows, c_closed, k)
        identity = taylor_substitute(t.b_rows(), PowerSeries.from_coeffs([F(0)] + list(c_closed), k), k)
        agree &= identity == PowerSeries.from_coeffs([F(1)], k)
    return record(3, agree, f"{len(suite())} models, closed forms == composition and identity == 1 exactly")


def check_invariance():
    same = True
    for model, k in suite():
        ref = compute_qsd_expansion(model, k, i_ref=1, backend="rational")
        for i in range(2, model.n_states + 1):
            same &= compute_qsd_expansion(model, k, i_ref=i, backend="rational").pi == ref.pi
    return record(4, same, f"{len(suite())} models, every reference state gives identical coefficients")


def _normalized_remainders(k, grid):
    # oracle is the untruncated exponential chain the example model approximates
    x = compute_qsd_expansion(example_model(), k)
    return remainder_report(example_model(), k, grid, x, tol=1e-14, kernel_at=example_kernel)


def check_remainder_decay():
    start = time.perf_counter()
    grid = [0.1 * 2 ** -t for t in range(7)]
    ok = monotone = True
    parts = []
    for k in (1, 2):
        report = _normalized_remainders(k, grid)
        monotone &= report.decaying
        for j, seq in sorted(report.normalized_by_state().items()):
            ratios = [a / b for a, b in zip(seq, seq[1:])]
            mean = math.exp(sum(math.log(r) for r in ratios) / len(ratios))
            if k == 2:
                ok &= mean >= 1.8
            parts.append(f"k={k} j={j} mean ratio {mean:.3f}")
    elapsed = time.perf_counter() - start
    ok &= monotone and elapsed < 10.0
    return record(5, ok, f"monotone={monotone}; " + ", ".join(parts) + f"; {elapsed:.2f} s")


def check_oracles():
    worst_direct = worst_start = 0.0
    for eps in (0.0, 0.05, 0.1, 0.2):
        k = example_kernel(eps)
        direct = qsd_direct(k)
        runs = [qsd_iterative(k, 400, s).pi for s in (1, 2, 3)]
        for pi in runs:
            worst_direct = max(worst_direct, 0.5 * sum(abs(direct.pi[j] - pi[j]) for j in pi))
            worst_start = max(worst_start, 0.5 * sum(abs(runs[0][j] - pi[j]) for j in pi))
    ok = worst_direct <= 1e-8 and worst_start <= 1e-8
    return record(6, ok, f"max TV direct/iterative {worst_direct:.2e}, across starts {worst_start:.2e}")


def check_moments():
    rng = random.Random(20240607)
    worst = 0.0
    for _ in range(20):
        k = random_float_kernel(rng, rng.randint(1, 3), rng.randint(1, 2))
        for rho in (0.0, 0.1):
            for j in k.states():
                phi = hitting_transform(k, rho, 2, j)
                omega = occupation_transform(k, rho, 2, j)
                g = brute_force_g(k, j, 60)
                for i in k.states():
                    for r in range(3):
                        v = transform(g, i, rho, r, 60)
                        worst = max(worst, abs(phi[(i, r)] - v) / max(1.0, abs(v)))
                for s in k.states():
                    h = brute_force_h(k, j, s, 60)
                    for i in k.states():
                        for r in range(3):
                            v = transform(h, i, rho, r, 60)
                            worst = max(worst, abs(omega[(i, s, r)] - v) / max(1.0, abs(v)))
    return record(7, worst <= 1e-9, f"20 kernels, max relative deviation {worst:.2e}")


def check_root():
    worst_residual = 0.0
    within = True
    parts = []
    model = example_model()
    for eps in (0.2, 0.1, 0.05, 0.02, 0.01, 0.005):
        # both the exact chain and its second-order polynomial truncation
        for k in (example_kernel(eps), evaluate_at(model, eps, "float")):
            root = solve_characteristic(k, 1, 1e-14)
            worst_residual = max(worst_residual, abs(hitting_transform(k, root.rho, 0, 1)[(1, 0)] - 1))
            if eps <= 0.05:
                gap = abs(root.rho - (1.4 * eps - eps ** 2 / 125))
                within &= gap <= 5 * eps ** 3
                parts.append(f"eps={eps}: gap {gap:.1e} <= {5 * eps ** 3:.1e}")
    ok = worst_residual <= 1e-13 and within
    return record(8, ok, f"max residual {worst_residual:.1e}; " + ", ".join(parts))


CHECKS = {
    1: check_golden,
    2: check_normalization,
    3: check_dual_route,
    4: check_invariance,
    5: check_remainder_decay,
    6: check_oracles,
    7: check_moments,
    8: check_root,
}


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    assert CHECKS[number]()


if __name__ == "__main__":
    outcomes = [CHECKS[n]() for n in sorted(CHECKS)]
    sys.exit(0 if all(outcomes) else 1)
