"""Independent verification: exhaustive support search and algebraic audits.

Nothing here touches the closed-form inverse machinery except as the
object under test: fixed-support solves go through dense LU inversion of
the materialized matrix, so agreement with the shortest-path solver and
with the closed-form submatrix inverses is a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorizable import (
    Spec,
    lambda_matrix,
    materialize,
    submatrix_inverse,
)
from .linalg import mat_inverse
from .projection import ProjectedMIQP

__all__ = [
    "SizeGuardError",
    "OracleResult",
    "InverseReport",
    "SUPPORT_ENUMERATION_LIMIT",
    "solve_fixed_support",
    "enumerate_supports",
    "verify_inverse",
    "verify_path_polytope",
]

# 2^n fixed-support solves; refuse anything that would take absurdly long.
SUPPORT_ENUMERATION_LIMIT = 20


class SizeGuardError(ValueError):
    """Requested exhaustive enumeration beyond the size guard."""


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Best support found by exhaustive enumeration.

    ``second_objective`` is the best value over all other supports (useful
    for uniqueness margins); ``per_support`` maps every enumerated support
    to its objective when requested.
    """

    best_support: tuple[int, ...]
    best_x: np.ndarray
    best_objective: float
    second_objective: float
    per_support: dict | None = None


@dataclass(frozen=True)
class InverseReport:
    max_error: float
    passed: bool


def _coordinates(spec: Spec, support: tuple[int, ...]) -> np.ndarray:
    d = spec.d
    return np.array([(t - 1) * d + k for t in support for k in range(d)], dtype=int)


def _solve_on(q: np.ndarray, m: ProjectedMIQP, support: tuple[int, ...]):
    """Fixed-support minimizer via dense inversion of the principal submatrix."""
    x = np.zeros(m.dim)
    fixed_cost = float(sum(m.c[t - 1] for t in support))
    if not support:
        return x, fixed_cost + m.constant
    coords = _coordinates(m.spec, support)
    sub = q[np.ix_(coords, coords)]
    a_sub = m.a[coords]
    inv = mat_inverse(sub)
    x_sub = -0.5 * inv @ a_sub
    x[coords] = x_sub
    objective = -0.25 * float(a_sub @ inv @ a_sub) + fixed_cost + m.constant
    return x, objective


def solve_fixed_support(m: ProjectedMIQP, support) -> tuple[np.ndarray, float]:
    """Minimize the projected objective with z fixed to the given support.

    The support is a set of 1-based periods; x is zero off the support and
    solves the stationarity condition on it.
    """
    sup = tuple(sorted(int(t) for t in support))
    if any(not 1 <= t <= m.n for t in sup) or len(set(sup)) != len(sup):
        raise ValueError(f"support {sup} is not a subset of 1..{m.n}")
    return _solve_on(materialize(m.spec), m, sup)


def enumerate_supports(m: ProjectedMIQP, keep_table: bool = False) -> OracleResult:
    """Exhaustive minimization over all 2^n supports.

    Ties go to the lexicographically smallest support, so results are
    deterministic.  Guarded at n <= SUPPORT_ENUMERATION_LIMIT.
    """
    n = m.n
    if n > SUPPORT_ENUMERATION_LIMIT:
        raise SizeGuardError(
            f"n = {n} exceeds the enumeration guard {SUPPORT_ENUMERATION_LIMIT}")
    q = materialize(m.spec)
    table = {} if keep_table else None
    best_support: tuple[int, ...] | None = None
    best_x = None
    best_obj = np.inf
    second = np.inf
    for mask in range(2 ** n):
        support = tuple(t + 1 for t in range(n) if mask >> t & 1)
        x, obj = _solve_on(q, m, support)
        if table is not None:
            table[support] = obj
        if best_support is None or obj < best_obj or (
                obj == best_obj and support < best_support):
            if best_support is not None:
                second = min(second, best_obj)
            best_support, best_x, best_obj = support, x, obj
        else:
            second = min(second, obj)
    return OracleResult(best_support=best_support, best_x=best_x,
                        best_objective=best_obj, second_objective=second,
                        per_support=table)


def verify_inverse(spec: Spec, support, tol: float = 1e-9) -> InverseReport:
    """Audit the closed-form submatrix inverse against the definition.

    Multiplies the restriction of ``submatrix_inverse`` by the dense
    principal submatrix of the materialized matrix and reports the maximum
    deviation from the identity.
    """
    sup = tuple(sorted(int(t) for t in support))
    if not sup:
        return InverseReport(max_error=0.0, passed=True)
    closed = submatrix_inverse(spec, sup)
    coords = _coordinates(spec, sup)
    dense = materialize(spec)[np.ix_(coords, coords)]
    product = closed[np.ix_(coords, coords)] @ dense
    max_error = float(np.max(np.abs(product - np.eye(len(coords)))))
    return InverseReport(max_error=max_error, passed=max_error <= tol)


def verify_path_polytope(spec: Spec, z) -> tuple[np.ndarray, np.ndarray]:
    """Construct and verify the unique arc flow encoding a support.

    Given binary z, the flow puts a unit on the arcs joining consecutive
    support elements (plus source -> first and last -> terminal; the empty
    support uses the direct source -> terminal arc).  Flow balance at every
    node and the link z_l = sum of inflow into l are checked exactly, and
    the sum of pair matrices over the flow is checked against the
    closed-form submatrix inverse.  Returns the arc flow and that sum.
    """
    z = np.asarray(z)
    if z.ndim != 1 or not np.all((z == 0) | (z == 1)):
        raise ValueError("z must be a binary vector")
    n = spec.n
    if len(z) != n:
        raise ValueError(f"z has length {len(z)}, expected {n}")
    support = tuple(i + 1 for i in range(n) if z[i] == 1)
    nodes = (0,) + support + (n + 1,)
    w = np.zeros((n + 2, n + 2))
    for i, j in zip(nodes, nodes[1:]):
        w[i, j] = 1.0

    for node in range(n + 2):
        balance = w[:node, node].sum() - w[node, node + 1:].sum()
        expected = -1.0 if node == 0 else (1.0 if node == n + 1 else 0.0)
        if balance != expected:
            raise ArithmeticError(f"flow balance violated at node {node}")
    for period in range(1, n + 1):
        if w[:period, period].sum() != float(z[period - 1]):
            raise ArithmeticError(f"indicator link violated at period {period}")

    total = np.zeros((spec.dim, spec.dim))
    for i, j in zip(nodes, nodes[1:]):
        if i >= 1:
            total += lambda_matrix(spec, i, j)
    reference = submatrix_inverse(spec, support)
    scale = max(1.0, float(np.max(np.abs(reference))))
    if float(np.max(np.abs(total - reference))) > 1e-10 * scale:
        raise ArithmeticError("flow-weighted pair matrices disagree with the "
                              "closed-form submatrix inverse")
    return w, total
