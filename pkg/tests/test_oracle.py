import random
from fractions import Fraction as F

import pytest

from perturbqsd.errors import HorizonError, UsageError
from perturbqsd.example import example_kernel, example_model
from perturbqsd.model import ConcreteKernel, evaluate_at
from perturbqsd.oracle import qsd_direct, qsd_iterative, remainder_report

from helpers import random_float_kernel


def _tv(p, q):
    return 0.5 * sum(abs(p[s] - q[s]) for s in p)


def test_limit_is_exact_stationary_law():
    p = qsd_direct(evaluate_at(example_model(), F(0)))
    assert p.pi == {1: F(1, 5), 2: F(2, 5), 3: F(2, 5)}
    assert p.rho == 0


@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1, 0.2])
def test_direct_vs_iterative_on_example(eps):
    k = example_kernel(eps)
    direct = qsd_direct(k)
    for start in (1, 2, 3):
        it = qsd_iterative(k, 400, start)
        assert _tv(direct.pi, it.pi) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_direct_vs_iterative_semi_markov(seed):
    rng = random.Random(seed)
    k = random_float_kernel(rng, 3, 2, absorb=(0.1, 0.3))
    direct = qsd_direct(k)
    it = qsd_iterative(k, 400)
    assert _tv(direct.pi, it.pi) <= 1e-8
    assert sum(direct.pi.values()) == pytest.approx(1.0, abs=1e-14)


def test_horizon_validation():
    with pytest.raises(UsageError):
        qsd_iterative(example_kernel(0.1), 0)


def test_horizon_underflow_keeps_last_snapshot():
    k = ConcreteKernel.from_markov_matrix([[1, 0, 0], [1, 0, 0], [0, 1, 0]], "float", 0.0)
    with pytest.raises(HorizonError) as info:
        qsd_iterative(k, 5, 2)
    assert info.value.last_snapshot == {1: 1.0, 2: 0.0}


def test_order_zero_remainders_scale_with_first_coefficients():
    report = remainder_report(example_model(), 0, [1e-3, 1e-4])
    ratios = {row.state: row.error / row.epsilon for row in report.rows if row.epsilon == 1e-4}
    assert ratios[1] == pytest.approx(8 / 125, rel=1e-2)
    assert ratios[2] == pytest.approx(6 / 125, rel=1e-2)
    assert ratios[3] == pytest.approx(14 / 125, rel=1e-2)


def test_truncated_model_second_order_decays():
    grid = [0.1 * 2 ** -t for t in range(7)]
    report = remainder_report(example_model(), 2, grid)
    assert report.decaying


def test_exact_chain_override():
    grid = [0.1 * 2 ** -t for t in range(7)]
    report = remainder_report(example_model(), 1, grid, kernel_at=example_kernel)
    assert report.decaying


def test_nonpositive_grid_rejected():
    with pytest.raises(UsageError):
        remainder_report(example_model(), 1, [0.1, 0.0])


def test_truncated_model_first_order_remainder_changes_sign():
    # third-order terms of the polynomial model are large enough that the first-order
    # remainder crosses zero inside this grid; the exact chain does not
    grid = [0.1 * 2 ** -t for t in range(7)]
    report = remainder_report(example_model(), 1, grid)
    assert set(report.non_decaying) == {2, 3}
