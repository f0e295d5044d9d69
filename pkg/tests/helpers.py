"""Independent oracles and random model generators shared by the tests."""

from __future__ import annotations

import math
import random
from fractions import Fraction as F

from perturbqsd.model import ConcreteKernel, PerturbedSemiMarkovModel, from_markov_chain, validate_conditions


def random_float_kernel(rng: random.Random, N: int, max_time: int, absorb=(0.6, 0.8)) -> ConcreteKernel:
    """Random kernel whose rows leak a large share of mass to state 0."""
    q = {}
    for i in range(1, N + 1):
        a = rng.uniform(*absorb)
        targets = [(j, n) for j in range(1, N + 1) for n in range(1, max_time + 1)]
        w = [rng.random() for _ in targets]
        s = sum(w)
        for (j, n), wi in zip(targets, w):
            q[(i, j, n)] = (1 - a) * wi / s
        wa = [rng.random() for _ in range(max_time)]
        for n, wi in enumerate(wa, start=1):
            q[(i, 0, n)] = a * wi / sum(wa)
    # exact row sums
    for i in range(1, N + 1):
        total = sum(v for (a, _, _), v in q.items() if a == i)
        q[(i, 0, 1)] += 1.0 - total
    return ConcreteKernel(N, q, max_time, "float")


def brute_force_g(kernel: ConcreteKernel, j: int, horizon: int) -> dict:
    """``(i, n) -> g_ij(n)`` by first-step recursion in the time domain."""
    N, T = kernel.n_states, kernel.max_time
    g = {(i, 0): 0.0 for i in range(1, N + 1)}
    for n in range(1, horizon + 1):
        for i in range(1, N + 1):
            acc = float(kernel.entry(i, j, n)) if n <= T else 0.0
            for s in range(1, N + 1):
                if s == j:
                    continue
                for t in range(1, min(T, n - 1) + 1):
                    acc += float(kernel.entry(i, s, t)) * g[(s, n - t)]
            g[(i, n)] = acc
    return g


def brute_force_h(kernel: ConcreteKernel, j: int, s: int, horizon: int) -> dict:
    """``(i, n) -> h_ijs(n) = P_i{xi(n) = s, mu_0 ^ mu_j > n}``."""
    N, T = kernel.n_states, kernel.max_time

    def stay(i, n):
        # mass of jumps not yet made by time n; summed directly to avoid a 1 - sum residue
        return sum(float(kernel.entry(i, b, t)) for t in range(n + 1, T + 1) for b in range(N + 1))

    h = {}
    for n in range(horizon + 1):
        for i in range(1, N + 1):
            acc = stay(i, n) if i == s else 0.0
            for l in range(1, N + 1):
                if l == j:
                    continue
                for t in range(1, min(T, n) + 1):
                    acc += float(kernel.entry(i, l, t)) * h[(l, n - t)]
            h[(i, n)] = acc
    return h


def transform(series: dict, i: int, rho: float, r: int, horizon: int) -> float:
    return sum((n ** r) * math.exp(rho * n) * series[(i, n)] for n in range(horizon + 1))


def _cycle_support(rng, N):
    support = {i: {i % N + 1} for i in range(1, N + 1)}
    # chord or self-loop breaking periodicity
    a = rng.randint(1, N)
    support[a].add(a if N == 1 or rng.random() < 0.5 else rng.randint(1, N))
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            if rng.random() < 0.3:
                support[i].add(j)
    return support


def _rand_frac(rng, lo=1, hi=5, den=(1, 2, 3, 4, 5)):
    return F(rng.randint(lo, hi), rng.choice(den))


def random_rational_markov_model(rng: random.Random, N: int, k: int, absorbing_limit: bool = False):
    """Random rational perturbed chain satisfying communication and non-periodicity.

    Perturbation layers are ``B_d - rowsum(B_d) P0`` with non-negative
    ``B_d``, so rows stay stochastic and entries vanishing at eps = 0 grow
    non-negatively. With ``absorbing_limit`` the limiting chain leaks to 0.
    """
    while True:
        support = _cycle_support(rng, N)
        P0 = {}
        for i in range(1, N + 1):
            cols = sorted(support[i]) + ([0] if absorbing_limit and rng.random() < 0.7 else [])
            w = {j: F(rng.randint(1, 5)) for j in cols}
            s = sum(w.values())
            for j in cols:
                P0[(i, j)] = w[j] / s
        poly = {(i, j): [P0.get((i, j), F(0))] + [F(0)] * k for i in range(1, N + 1) for j in range(N + 1)}
        for d in range(1, k + 1):
            for i in range(1, N + 1):
                B = {j: (_rand_frac(rng, 0, 3) if rng.random() < 0.6 else F(0)) for j in range(N + 1)}
                if d == 1 and B[0] == 0:
                    B[0] = _rand_frac(rng)
                sB = sum(B.values())
                for j in range(N + 1):
                    poly[(i, j)][d] = B[j] - sB * P0.get((i, j), F(0))
        poly = {key: tuple(v) for key, v in poly.items() if any(c != 0 for c in v)}
        model = from_markov_chain(poly, k, n_states=N)
        if model.eps_max == 0:
            continue
        report = validate_conditions(model)
        if report.communication_ok and report.nonperiodic_ok:
            return model


def random_rational_semi_markov_model(rng: random.Random, N: int, order: int, max_time: int = 2):
    """Like :func:`random_rational_markov_model` but spreading each jump over times 1..max_time."""
    base = random_rational_markov_model(rng, N, order)
    kernel = {}
    for (i, j, _), p in base.kernel.items():
        split = [F(rng.randint(1, 3)) for _ in range(max_time)]
        s = sum(split)
        for n, w in enumerate(split, start=1):
            kernel[(i, j, n)] = tuple(c * w / s for c in p)
    return PerturbedSemiMarkovModel(N, order, kernel)


def markov_suite(count=50, seed=20240601, max_n=4, max_k=3):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        N = rng.randint(1, max_n)
        k = rng.randint(1, max_k)
        out.append((random_rational_markov_model(rng, N, k), k))
    return out
