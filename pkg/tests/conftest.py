"""Shared fixtures: the worked small examples used across the suite."""

import numpy as np
import pytest

from mpmiqp import BlockFactorizableSpec, FactorizableSpec


@pytest.fixture
def spec3() -> FactorizableSpec:
    """3-period spec with Q = [[5,4,2],[4,8,4],[2,4,8]]."""
    return FactorizableSpec(np.array([1.0, 2.0, 4.0]), np.array([5.0, 4.0, 2.0]))


@pytest.fixture
def spec5() -> FactorizableSpec:
    """5-period spec with doubling u and linearly decreasing v."""
    return FactorizableSpec(np.array([1.0, 2.0, 4.0, 8.0, 16.0]),
                            np.array([5.0, 4.0, 3.0, 2.0, 1.0]))


@pytest.fixture
def block4() -> BlockFactorizableSpec:
    """4-block spec (d = 2) with geometric U blocks."""
    u1 = np.array([[1.0, 1.0], [1.0, 2.0]])
    U = np.stack([u1, 2 * u1, 4 * u1, 8 * u1])
    V = np.stack([
        np.array([[4.0, 1.0], [1.0, 5.0]]),
        np.array([[3.0, 1.0], [1.0, 4.0]]),
        np.array([[2.0, 1.0], [1.0, 3.0]]),
        np.array([[1.0, 1.0], [1.0, 2.0]]),
    ])
    return BlockFactorizableSpec(U, V)


def simulate_objective(problem, x, z) -> float:
    """Original multi-period objective at (x, z): forward state rollout plus
    deviation, linear, and fixed costs.  Independent of the projection code."""
    n, d = problem.n, problem.d
    xb = np.asarray(x, dtype=float).reshape(n, d)
    states = [np.asarray(problem.b[0], dtype=float)]
    for i in range(n):
        states.append(problem.A[i] @ states[i] + xb[i] + problem.b[i + 1])
    total = 0.0
    for t in range(n + 1):
        dev = states[t] - problem.r[t]
        total += float(dev @ problem.P[t] @ dev)
    total += float(sum(problem.f[i] @ xb[i] for i in range(n)))
    total += float(problem.c @ np.asarray(z, dtype=float))
    return total


def feasible_point(rng, n, d):
    """Random (x, z) respecting the indicator coupling."""
    z = rng.integers(0, 2, size=n).astype(float)
    x = rng.normal(0.0, 1.0, size=n * d) * np.repeat(z, d)
    return x, z
