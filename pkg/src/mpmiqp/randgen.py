"""Random well-posed problems for property sweeps and the verify command.

Positive definite specs are built backwards from their inverse data: draw
positive chain weights and nonzero successor couplings, then recover the
sequences.  This guarantees the positive definiteness condition exactly
(every chain weight positive) while exercising mixed signs and a range of
conditioning.
"""

from __future__ import annotations

import numpy as np

from .factorizable import BlockFactorizableSpec, FactorizableSpec, materialize
from .projection import MultiPeriodProblem, ProjectedMIQP, project_block, project_scalar

__all__ = [
    "random_scalar_spec",
    "random_block_spec",
    "random_projected",
    "random_multiperiod",
    "random_projected_from_dynamics",
]


# reject random specs whose materialized entries exceed this (keeps the
# quadratic form well inside the package's stated conditioning domain)
_MAX_RANDOM_ENTRY = 1e5


def random_scalar_spec(rng: np.random.Generator, n: int) -> FactorizableSpec:
    """Positive definite scalar spec with weights in [0.2, 3] and successor
    ratios of magnitude [0.3, 1.6] and random sign; redrawn when the
    resulting matrix entries leave a sane range."""
    while True:
        delta = rng.uniform(0.2, 3.0, size=n)
        theta = rng.uniform(0.3, 1.6, size=max(n - 1, 0)) * rng.choice(
            [-1.0, 1.0], size=max(n - 1, 0))
        u = np.empty(n)
        u[n - 1] = 1.0
        for i in range(n - 2, -1, -1):
            u[i] = theta[i] * u[i + 1]
        v = np.empty(n)
        v[n - 1] = 1.0 / (delta[n - 1] * u[n - 1])
        for i in range(n - 2, -1, -1):
            v[i] = (u[i + 1] / (u[i] * delta[i]) + u[i] * v[i + 1]) / u[i + 1]
        spec = FactorizableSpec(u, v)
        if float(np.max(np.abs(materialize(spec)))) <= _MAX_RANDOM_ENTRY:
            return spec


def _random_spd(rng: np.random.Generator, d: int) -> np.ndarray:
    base = rng.normal(0.0, 1.0, size=(d, d))
    return base @ base.T + (0.3 + rng.uniform(0.0, 0.7)) * np.eye(d)


def _random_nonsingular(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        m = rng.normal(0.0, 1.0, size=(d, d))
        if abs(np.linalg.det(m)) > 0.05:
            return m


def random_block_spec(rng: np.random.Generator, n: int, d: int) -> BlockFactorizableSpec:
    """Positive definite block spec built from random SPD pair cores and
    random successor couplings of spectral radius [0.4, 1.2]; redrawn when
    the resulting matrix entries leave a sane range."""
    while True:
        cores = [_random_spd(rng, d) for _ in range(n)]
        theta = []
        for _ in range(n - 1):
            raw = _random_nonsingular(rng, d)
            radius = float(np.max(np.abs(np.linalg.eigvals(raw))))
            theta.append(raw * (rng.uniform(0.4, 1.2) / radius))
        U = np.empty((n, d, d))
        U[n - 1] = np.eye(d)
        for i in range(n - 2, -1, -1):
            U[i] = theta[i] @ U[i + 1]
        V = np.empty((n, d, d))
        V[n - 1] = cores[n - 1] @ np.linalg.inv(U[n - 1]).T
        for i in range(n - 2, -1, -1):
            V[i] = (cores[i] @ np.linalg.inv(U[i]).T
                    + U[i] @ V[i + 1].T @ np.linalg.inv(U[i + 1]).T)
        spec = BlockFactorizableSpec(U, V)
        if float(np.max(np.abs(materialize(spec)))) <= _MAX_RANDOM_ENTRY:
            return spec


def random_projected(rng: np.random.Generator, n: int, d: int = 1,
                     cost_scale: float = 1.0) -> ProjectedMIQP:
    """Random projected problem over a positive definite spec.

    Fixed costs are drawn mostly positive so optimal supports are sparse
    but nontrivial.
    """
    spec = random_scalar_spec(rng, n) if d == 1 else random_block_spec(rng, n, d)
    a = rng.normal(0.0, 2.0, size=n * d)
    c = cost_scale * rng.uniform(-0.2, 1.2, size=n)
    constant = float(rng.normal(0.0, 1.0))
    return ProjectedMIQP(spec=spec, a=a, c=c, constant=constant)


def random_multiperiod(rng: np.random.Generator, n: int, d: int = 1) -> MultiPeriodProblem:
    """Random multi-period problem with PD state costs and stable-ish
    dynamics (spectral radius drawn from [0.4, 1.05], so long-horizon
    transition products stay bounded)."""
    P = np.stack([_random_spd(rng, d) for _ in range(n + 1)])
    A = np.stack([_random_nonsingular(rng, d) for _ in range(n)])
    for t in range(n):
        radius = float(np.max(np.abs(np.linalg.eigvals(A[t]))))
        A[t] *= rng.uniform(0.4, 1.05) / radius
    return MultiPeriodProblem(
        P=P, A=A,
        r=rng.normal(0.0, 1.0, size=(n + 1, d)),
        f=rng.normal(0.0, 0.5, size=(n, d)),
        b=rng.normal(0.0, 0.5, size=(n + 1, d)),
        c=rng.uniform(-0.2, 1.2, size=n))


def random_projected_from_dynamics(rng: np.random.Generator, n: int,
                                   d: int = 1) -> ProjectedMIQP:
    """Projected problem obtained through the full projection pipeline."""
    p = random_multiperiod(rng, n, d)
    return project_scalar(p) if d == 1 else project_block(p)
