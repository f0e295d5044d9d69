import math
import random
from fractions import Fraction as F

import pytest

from perturbqsd.errors import NoReturnError
from perturbqsd.example import example_kernel, example_model
from perturbqsd.model import ConcreteKernel, evaluate_at
from perturbqsd.moments import hitting_transform
from perturbqsd.rootfind import detect_zero_root, solve_characteristic

from helpers import random_float_kernel


def test_zero_root_is_exact_for_rational_limit():
    k = evaluate_at(example_model(), F(0))
    assert detect_zero_root(k)
    root = solve_characteristic(k)
    assert root.rho == 0 and isinstance(root.rho, F) and root.residual == 0


def test_float_limit_detected_structurally():
    k = evaluate_at(example_model(), 0.0)
    assert detect_zero_root(k)
    assert not detect_zero_root(evaluate_at(example_model(), 1e-13))


def test_geometric_sojourn_root():
    # single state kept with probability a: phi(rho) = a e^rho, root -ln a
    for a in (0.9, 0.5, 0.1):
        k = ConcreteKernel.from_markov_matrix([[1.0, 0.0], [1 - a, a]], "float", 0.0)
        root = solve_characteristic(k)
        assert root.rho == pytest.approx(-math.log(a), rel=1e-13)


def test_no_return_raises():
    k = ConcreteKernel.from_markov_matrix([[1, 0, 0], [F(1, 2), 0, F(1, 2)], [1, 0, 0]], "rational", F(0))
    with pytest.raises(NoReturnError):
        solve_characteristic(k)


@pytest.mark.parametrize("seed", range(10))
def test_residual_on_random_kernels(seed):
    rng = random.Random(seed)
    k = random_float_kernel(rng, rng.randint(1, 3), rng.randint(1, 2), absorb=(0.05, 0.5))
    for i in k.states():
        root = solve_characteristic(k, i)
        assert abs(hitting_transform(k, root.rho, 0, i)[(i, 0)] - 1) <= 1e-13


def test_root_independent_of_reference_state():
    k = example_kernel(0.1)
    roots = [solve_characteristic(k, i).rho for i in (1, 2, 3)]
    assert max(roots) - min(roots) < 1e-13
