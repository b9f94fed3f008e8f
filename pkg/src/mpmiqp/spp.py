"""Exact solver for the projected problem without side constraints.

Minimizing x^T Q x + a^T x + c^T z over indicator-coupled (x, z) reduces
to a shortest path problem on the complete DAG with nodes 0..n+1: a path
visits exactly the periods with z_i = 1, the arc (i, j) carries the cost
of period i when j is its successor in the support, and arcs leaving the
source node 0 are free.  Arc costs are

    l(0, j) = 0
    l(i, j) = c_i - (1/4) a^T L_ij a        for 1 <= i < j <= n+1,

where L_ij is ``lambda_matrix(spec, i, j)``.  For scalar specs the
quadratic form collapses to a closed expression in the sequence products;
for block specs it is evaluated on the d-dimensional pair core, never on
the dense dn x dn matrix (a dense reference path exists behind the
``dense`` flag for cross-checking).  One forward pass in node order then
yields the optimum; ties are broken toward the smallest predecessor
index, which makes results deterministic.

The optimal input is recovered as x = -1/2 (sum of L over path arcs) a,
and the reported objective includes the projected constant, so it matches
the original multi-period objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorizable import (
    FactorizableSpec,
    lambda_matrix,
    materialize,
    require_assumption,
)
from .projection import ProjectedMIQP

__all__ = ["ArcCostTable", "SppSolution", "arc_costs", "shortest_path", "solve"]


@dataclass(frozen=True, eq=False)
class ArcCostTable:
    """Arc costs on the complete DAG over nodes 0..n+1.

    ``cost[i, j]`` is meaningful for 0 <= i < j <= n+1; costs out of the
    source node 0 are zero.
    """

    n: int
    cost: np.ndarray

    def get(self, i: int, j: int) -> float:
        if not 0 <= i < j <= self.n + 1:
            raise ValueError(f"arc ({i}, {j}) outside the DAG")
        return float(self.cost[i, j])


@dataclass(frozen=True, eq=False)
class SppSolution:
    """Optimal support, path, and recovered minimizer.

    ``objective`` includes the projected constant; ``path_cost`` is the
    raw shortest-path value, so objective = path_cost + constant.
    """

    path: tuple[int, ...]
    support: tuple[int, ...]
    z: np.ndarray
    x: np.ndarray
    objective: float
    path_cost: float


def _scalar_cost_grid(m: ProjectedMIQP) -> np.ndarray:
    spec = m.spec
    n = spec.n
    qij = spec.uv_grid()
    cross = spec.cross_grid()
    diag = np.array([spec.uv(i, i) for i in range(1, n + 1)])
    a = m.a
    cost = np.zeros((n + 2, n + 2))
    if n > 1:
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            denom = cross - qij ** 2
            coef = diag[None, :] / denom
            rho = qij / diag[None, :]
            resid = a[:, None] - rho * a[None, :]
            interior = m.c[:, None] - 0.25 * coef * resid ** 2
        iu, ju = np.triu_indices(n, k=1)
        cost[iu + 1, ju + 1] = interior[iu, ju]
    cost[1:n + 1, n + 1] = m.c - 0.25 * a ** 2 / diag
    return cost


def _block_cost_grid(m: ProjectedMIQP) -> np.ndarray:
    spec = m.spec
    n, d = spec.n, spec.d
    blocks = m.a.reshape(n, d)
    cost = np.zeros((n + 2, n + 2))
    for i in range(1, n + 1):
        ai = blocks[i - 1]
        coupling = np.eye(d)
        for j in range(i + 1, n + 1):
            coupling = coupling @ spec.chain[j - 2]
            resid = ai - coupling @ blocks[j - 1]
            core = spec.pair_core(i, j)
            quad = float(resid @ np.linalg.solve(core, resid))
            cost[i, j] = m.c[i - 1] - 0.25 * quad
        quad = float(ai @ np.linalg.solve(spec.diag_core(i), ai))
        cost[i, n + 1] = m.c[i - 1] - 0.25 * quad
    return cost


def _dense_cost_grid(m: ProjectedMIQP) -> np.ndarray:
    """Reference arc costs through the dense pair matrices."""
    n = m.n
    cost = np.zeros((n + 2, n + 2))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 2):
            lam = lambda_matrix(m.spec, i, j)
            cost[i, j] = m.c[i - 1] - 0.25 * float(m.a @ lam @ m.a)
    return cost


def arc_costs(m: ProjectedMIQP, dense: bool = False) -> ArcCostTable:
    """Arc cost table for the projected problem.

    Scalar specs use the closed-form expressions; block specs evaluate the
    quadratic form on the d x d pair core.  ``dense`` switches to the
    dense reference computation for debugging.
    """
    require_assumption(m.spec)
    if dense:
        cost = _dense_cost_grid(m)
    elif isinstance(m.spec, FactorizableSpec):
        cost = _scalar_cost_grid(m)
    else:
        cost = _block_cost_grid(m)
    if not np.all(np.isfinite(cost)):
        raise ArithmeticError("arc costs left floating range")
    return ArcCostTable(n=m.n, cost=cost)


def shortest_path(table: ArcCostTable) -> tuple[tuple[int, ...], float]:
    """Minimum-cost 0 -> n+1 path by one forward pass in node order.

    On exact cost ties the predecessor with the smallest index wins, so
    the returned path is deterministic.
    """
    n = table.n
    cost = table.cost
    dist = np.full(n + 2, np.inf)
    dist[0] = 0.0
    pred = np.full(n + 2, -1, dtype=int)
    for j in range(1, n + 2):
        cand = dist[:j] + cost[:j, j]
        k = int(np.argmin(cand))
        dist[j] = cand[k]
        pred[j] = k
    path = [n + 1]
    while path[-1] != 0:
        path.append(int(pred[path[-1]]))
    path.reverse()
    return tuple(path), float(dist[n + 1])


def _recover_input(m: ProjectedMIQP, path: tuple[int, ...]) -> np.ndarray:
    spec = m.spec
    n = spec.n
    x = np.zeros(m.dim)
    arcs = [(i, j) for i, j in zip(path, path[1:]) if i >= 1]
    if isinstance(spec, FactorizableSpec):
        a = m.a
        for i, j in arcs:
            if j == n + 1:
                x[i - 1] -= 0.5 * a[i - 1] / spec.uv(i, i)
                continue
            denom = spec.uv_cross(i, j) - spec.uv(i, j) ** 2
            coef = spec.uv(j, j) / denom
            rho = spec.uv(i, j) / spec.uv(j, j)
            resid = a[i - 1] - rho * a[j - 1]
            x[i - 1] -= 0.5 * coef * resid
            x[j - 1] += 0.5 * coef * rho * resid
        return x
    d = spec.d
    blocks = m.a.reshape(n, d)
    for i, j in arcs:
        if j == n + 1:
            y = np.linalg.solve(spec.diag_core(i), blocks[i - 1])
            x[(i - 1) * d:i * d] -= 0.5 * y
            continue
        cmat = spec.chain_direction(i, j)
        resid = blocks[i - 1] - cmat.T @ blocks[j - 1]
        y = np.linalg.solve(spec.pair_core(i, j), resid)
        x[(i - 1) * d:i * d] -= 0.5 * y
        x[(j - 1) * d:j * d] += 0.5 * cmat @ y
    return x


def solve(m: ProjectedMIQP) -> SppSolution:
    """Exact minimizer of the projected problem without side constraints."""
    table = arc_costs(m)
    path, path_cost = shortest_path(table)
    n = m.n
    support = tuple(node for node in path if 1 <= node <= n)
    z = np.zeros(n)
    for s in support:
        z[s - 1] = 1.0
    x = _recover_input(m, path)
    q = materialize(m.spec)
    objective = float(x @ q @ x + m.a @ x + m.c @ z + m.constant)
    reference = path_cost + m.constant
    # consistency scale includes the magnitudes actually summed, so the
    # check stays meaningful when the quadratic form cancels heavily
    ax = np.abs(x)
    scale = 1.0 + abs(objective) + float(ax @ np.abs(q) @ ax) \
        + float(np.abs(m.a) @ ax) + float(np.abs(m.c) @ z) + abs(m.constant)
    if abs(objective - reference) > 1e-9 * scale:
        raise ArithmeticError(
            f"recovered objective {objective!r} disagrees with path value {reference!r}")
    return SppSolution(path=path, support=support, z=z, x=x,
                       objective=objective, path_cost=path_cost)
