"""Projection of multi-period quadratic problems into indicator-MIQP form.

The source problem minimizes, over states s_1..s_{n+1}, inputs x_1..x_n
and binary indicators z,

    sum_i (s_i - r_i)^T P_i (s_i - r_i) + sum_i f_i^T x_i + sum_i c_i z_i

subject to s_1 = b_0, s_{i+1} = A_i s_i + x_i + b_i and x_i (1 - z_i) = 0.
Substituting the states out leaves

    x^T Q x + a^T x + c^T z + constant

where Q is factorizable (d = 1) or block-factorizable (d > 1) and, because
every P_i is positive definite, always passes the positive definiteness
check of :mod:`mpmiqp.factorizable`.

Index convention: period i runs 1..n, states run 1..n+1; arrays are stored
0-based (``P[0]`` is the cost of state 1, ``b[0]`` the initial state).
Empty transition products are the identity and empty sums zero.

Long contracting dynamics can push the u sequence outside plain float
range; when the spread of the cumulative transition products exceeds
1e250 the scalar projection emits a sign/log-scaled spec instead (the
pairwise products consumed downstream remain moderate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorizable import (
    LOG_SCALE_SPREAD,
    BlockFactorizableSpec,
    FactorizableSpec,
    Spec,
)
from .linalg import (
    AsymmetricMatrixError,
    SingularMatrixError,
    asymmetry,
    is_positive_definite,
    mat_inverse,
    symmetrize,
)

__all__ = [
    "MultiPeriodProblem",
    "ProjectedMIQP",
    "project_scalar",
    "project_block",
    "reconstruct_states",
]


@dataclass(frozen=True, eq=False)
class MultiPeriodProblem:
    """Data of an n-period problem with d-dimensional states.

    P: (n+1, d, d) state deviation costs, symmetric positive definite.
    A: (n, d, d) transition matrices, nonsingular.
    r: (n+1, d) state targets.
    f: (n, d) linear input costs.
    b: (n+1, d); b[0] is the initial state, b[1..n] are dynamics offsets.
    c: (n,) fixed indicator costs.
    """

    P: np.ndarray
    A: np.ndarray
    r: np.ndarray
    f: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        P = np.ascontiguousarray(self.P, dtype=float)
        A = np.ascontiguousarray(self.A, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError("A must have shape (n, d, d)")
        n, d = A.shape[0], A.shape[1]
        if n < 1:
            raise ValueError("need at least one period")
        if P.shape != (n + 1, d, d):
            raise ValueError(f"P must have shape ({n + 1}, {d}, {d})")
        r = np.ascontiguousarray(self.r, dtype=float).reshape(n + 1, d)
        f = np.ascontiguousarray(self.f, dtype=float).reshape(n, d)
        b = np.ascontiguousarray(self.b, dtype=float).reshape(n + 1, d)
        c = np.ascontiguousarray(self.c, dtype=float).reshape(n)
        for arr in (P, A, r, f, b, c):
            if not np.all(np.isfinite(arr)):
                raise ValueError("problem data must be finite")
        sym = np.empty_like(P)
        for t in range(n + 1):
            if asymmetry(P[t]) > 1e-8:
                raise AsymmetricMatrixError(
                    f"state cost {t + 1} has relative asymmetry {asymmetry(P[t]):.3e}")
            sym[t] = symmetrize(P[t])
            if not is_positive_definite(sym[t]):
                raise ValueError(f"state cost {t + 1} is not positive definite")
        for t in range(n):
            try:
                mat_inverse(A[t])
            except SingularMatrixError as exc:
                raise ValueError(f"transition matrix {t + 1} is singular") from exc
        object.__setattr__(self, "P", sym)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_scalar(cls, alpha, p, r, f, b, c) -> "MultiPeriodProblem":
        """Build a d = 1 problem from plain 1-D sequences."""
        alpha = np.asarray(alpha, dtype=float)
        n = len(alpha)
        return cls(
            P=np.asarray(p, dtype=float).reshape(n + 1, 1, 1),
            A=alpha.reshape(n, 1, 1),
            r=np.asarray(r, dtype=float).reshape(n + 1, 1),
            f=np.asarray(f, dtype=float).reshape(n, 1),
            b=np.asarray(b, dtype=float).reshape(n + 1, 1),
            c=np.asarray(c, dtype=float),
        )


@dataclass(frozen=True, eq=False)
class ProjectedMIQP:
    """Projected problem min x^T Q x + a^T x + c^T z + constant with
    indicator couplings x_[i] (1 - z_i) = 0."""

    spec: Spec
    a: np.ndarray
    c: np.ndarray
    constant: float

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=float).reshape(-1)
        c = np.ascontiguousarray(self.c, dtype=float).reshape(-1)
        if len(a) != self.spec.dim or len(c) != self.spec.n:
            raise ValueError("a and c lengths must match the spec dimensions")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def dim(self) -> int:
        return self.spec.dim


def _scalar_data(p: MultiPeriodProblem):
    alpha = p.A[:, 0, 0]
    weights = p.P[:, 0, 0]
    targets = p.r[:, 0]
    lin = p.f[:, 0]
    offsets = p.b[:, 0]
    return alpha, weights, targets, lin, offsets


def _transition_table(alpha: np.ndarray) -> np.ndarray:
    """M[i, t] = product of alpha over transitions strictly between input
    period i+1 and state t+1 (coefficient of x_{i+1} in s_{t+1}); zero for
    t <= i, one at t = i + 1."""
    n = len(alpha)
    table = np.zeros((n, n + 1))
    for i in range(n):
        acc = 1.0
        table[i, i + 1] = acc
        for t in range(i + 1, n):
            acc *= alpha[t]
            table[i, t + 1] = acc
    return table


def _logabs_transitions(alpha: np.ndarray):
    """Signs and log-magnitudes of the full-horizon products
    u_i = alpha_{i+1} * ... * alpha_n."""
    n = len(alpha)
    logs = np.zeros(n)
    signs = np.ones(n)
    acc_log, acc_sign = 0.0, 1.0
    for i in range(n - 1, -1, -1):
        logs[i] = acc_log
        signs[i] = acc_sign
        acc_log += np.log(abs(alpha[i]))
        acc_sign *= np.sign(alpha[i])
    return signs, logs


def project_scalar(p: MultiPeriodProblem) -> ProjectedMIQP:
    """Project a d = 1 problem into factorizable form.

    u_i is the transition product from period i to the horizon, v_i the
    weighted tail sum divided by u_i; the pair reproduces
    Q_ij = sum_{t > j} p_t M(i, t) M(j, t) for i <= j.
    """
    if p.d != 1:
        raise ValueError("project_scalar requires d = 1")
    alpha, weights, targets, lin, offsets = _scalar_data(p)
    n = p.n
    table = _transition_table(alpha)

    # initial-state coefficients and residuals of the uncontrolled rollout
    lead = np.empty(n + 1)
    lead[0] = 1.0
    for t in range(1, n + 1):
        lead[t] = lead[t - 1] * alpha[t - 1]
    g = lead * offsets[0] - targets
    for t in range(1, n + 1):
        g[t] += table[:t, t] @ offsets[1:t + 1]

    v_num = np.array([(weights[i + 1:] * table[i, i + 1:] ** 2).sum() for i in range(n)])
    a = 2.0 * np.array([(weights[i + 1:] * g[i + 1:] * table[i, i + 1:]).sum()
                        for i in range(n)]) + lin
    constant = float(weights @ g ** 2)
    if not (np.all(np.isfinite(v_num)) and np.all(np.isfinite(a))):
        raise ArithmeticError("projected data left floating range; dynamics too explosive")

    sign_u, log_u = _logabs_transitions(alpha)
    spread = float(np.max(log_u) - np.min(log_u))
    if spread > np.log(LOG_SCALE_SPREAD):
        if np.any(v_num <= 0.0):
            raise ArithmeticError("nonpositive quadratic tail weight")
        spec = FactorizableSpec.from_signed_logs(
            sign_u, log_u, sign_u, np.log(v_num) - log_u)
    else:
        u = table[:, n].copy()  # exact plain products from the recursion
        spec = FactorizableSpec(u, v_num / u)
    return ProjectedMIQP(spec=spec, a=a, c=p.c.copy(), constant=constant)


def project_block(p: MultiPeriodProblem) -> ProjectedMIQP:
    """Project a d-dimensional problem into block-factorizable form."""
    n, d = p.n, p.d

    # trans[i][t]: coefficient matrix of x_{i+1} in state t+1 (t in i+1..n)
    trans = [dict() for _ in range(n)]
    for i in range(n):
        acc = np.eye(d)
        trans[i][i + 1] = acc
        for t in range(i + 1, n):
            acc = p.A[t] @ acc
            trans[i][t + 1] = acc

    lead = [np.eye(d)]
    for t in range(1, n + 1):
        lead.append(p.A[t - 1] @ lead[t - 1])
    g = [lead[t] @ p.b[0] - p.r[t] for t in range(n + 1)]
    for t in range(1, n + 1):
        for i in range(t):
            g[t] = g[t] + trans[i][t] @ p.b[i + 1]

    # horizon inverses by backward recursion: each step applies one
    # well-conditioned single-period inverse, so no deep product is
    # inverted even when the horizon product is numerically singular
    horizon_inv = [np.eye(d) for _ in range(n)]
    for i in range(n - 2, -1, -1):
        horizon_inv[i] = mat_inverse(p.A[i + 1]) @ horizon_inv[i + 1]

    U = np.empty((n, d, d))
    V = np.empty((n, d, d))
    cores = np.empty((n, d, d))
    a = np.zeros(n * d)
    for i in range(n):
        U[i] = trans[i][n].T
        tail = np.zeros((d, d))
        lin = np.zeros(d)
        for t in range(i + 1, n + 1):
            m = trans[i][t]
            tail += m.T @ p.P[t] @ m
            lin += m.T @ (p.P[t] @ g[t])
        cores[i] = symmetrize(tail)
        V[i] = tail @ horizon_inv[i]
        a[i * d:(i + 1) * d] = 2.0 * lin + p.f[i]
    constant = float(sum(g[t] @ p.P[t] @ g[t] for t in range(n + 1)))
    # adjacent couplings U_i U_{i+1}^{-1} are exactly the transposed
    # one-period transitions
    chain = np.stack([p.A[k + 1].T for k in range(n - 1)]) \
        if n > 1 else np.zeros((0, d, d))
    spec = BlockFactorizableSpec(U, V, chain=chain, cores=cores)
    return ProjectedMIQP(spec=spec, a=a, c=p.c.copy(), constant=constant)


def reconstruct_states(p: MultiPeriodProblem, x, check: bool = True) -> np.ndarray:
    """States s_1..s_{n+1} generated by input vector x (length d*n).

    Runs the forward recursion; with ``check`` the closed-form product
    expression is evaluated as well and a mismatch beyond 1e-10 relative
    raises ArithmeticError.
    """
    n, d = p.n, p.d
    x = np.asarray(x, dtype=float).reshape(n, d)
    states = np.empty((n + 1, d))
    states[0] = p.b[0]
    for i in range(n):
        states[i + 1] = p.A[i] @ states[i] + x[i] + p.b[i + 1]
    if check:
        closed = np.empty((n + 1, d))
        acc = np.eye(d)
        closed[0] = p.b[0]
        for t in range(1, n + 1):
            acc = p.A[t - 1] @ acc
            closed[t] = acc @ p.b[0]
        for i in range(n):
            m = np.eye(d)
            closed[i + 1] += x[i] + p.b[i + 1]
            for t in range(i + 1, n):
                m = p.A[t] @ m
                closed[t + 1] += m @ (x[i] + p.b[i + 1])
        scale = 1.0 + float(np.max(np.abs(states)))
        if float(np.max(np.abs(states - closed))) > 1e-10 * scale:
            raise ArithmeticError("state recursion and closed form disagree")
    return states
