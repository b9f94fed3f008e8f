"""Quadratic-cost matrices with outer-product structure and their closed-form inverses.

A *factorizable* matrix is a symmetric n x n matrix Q whose upper triangle
is the outer product of two sequences: ``Q[i, j] = u_i * v_j`` for i <= j.
The *block-factorizable* generalization replaces the scalars with d x d
blocks, ``Q[[i, j]] = U_i @ V_j.T`` for i <= j.  Nonsingular matrices of
this kind have (block-)tridiagonal inverses, and every principal submatrix
is again of the same kind, so the inverse of any principal submatrix has a
closed form built from the adjacent pairs of the index set:

* the full inverse is a sum of n rank-one (rank-d) terms, one per index,
  each coupling an index to its successor;
* for an index set S, the same construction applies to the consecutive
  elements of S, yielding the zero-padded inverse ``Q_S^{-1}``;
* each possible pair (i, j) contributes a single reusable rank-one
  (rank-d) matrix, here called ``lambda_matrix(spec, i, j)``, with j = n+1
  playing the role of a virtual terminal index.

Indices in this module are 1-based (periods 1..n, terminal n+1), matching
the natural chain/DAG picture used across the package; vectors and
matrices are plain 0-based numpy arrays.

Positive definiteness of Q is equivalent to an explicit sign condition on
the sequences (``check_assumption_scalar`` / ``check_assumption_block``);
all inverse-related operations require that condition to hold.

Sequences with extreme dynamic range (ratios of u entries beyond 1e250,
as produced by long contracting dynamics) are stored as signs plus
log-magnitudes; every formula below consumes only pairwise products
``u_a * v_b`` and products of two such pairs, which stay moderate for
positive definite specs, so the log representation is exact where it
matters and transparent to callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .linalg import (
    AsymmetricMatrixError,
    asymmetry,
    is_positive_definite,
    mat_inverse,
    sym_inv_sqrt,
    symmetrize,
)

__all__ = [
    "AssumptionViolationError",
    "AssumptionReport",
    "FactorizableSpec",
    "BlockFactorizableSpec",
    "RankTerm",
    "RankDecomposition",
    "check_assumption_scalar",
    "check_assumption_block",
    "check_assumption",
    "materialize",
    "inverse_decomposition",
    "submatrix_decomposition",
    "submatrix_inverse",
    "lambda_matrix",
    "phi_factor",
    "lambda_table",
    "quadratic_form",
]

# Relative asymmetry allowed in block diagonal/pair core matrices; beyond
# this the spec could not describe a symmetric Q.
CORE_SYMMETRY_RTOL = 1e-8
# Cholesky pivot tolerance for the block positive definiteness checks.
BLOCK_PD_TOL = 1e-10
# |u_n / u_1| beyond this switches construction to sign/log storage.
LOG_SCALE_SPREAD = 1e250


class AssumptionViolationError(ArithmeticError):
    """An operation requiring a positive definite spec was given a failing one."""


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of a positive definiteness condition check."""

    passed: bool
    first_violation: str | None = None
    violations: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class FactorizableSpec:
    """Scalar sequences (u, v) defining ``Q[i, j] = u_i v_j`` for i <= j.

    Either plain values (``u``, ``v``) or sign/log-magnitude arrays are
    stored; use :meth:`from_signed_logs` for the latter.  All entries of
    u must be nonzero.
    """

    u: np.ndarray | None
    v: np.ndarray | None
    sign_u: np.ndarray | None = None
    log_u: np.ndarray | None = None
    sign_v: np.ndarray | None = None
    log_v: np.ndarray | None = None
    _assumption: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.u is not None:
            u = np.ascontiguousarray(self.u, dtype=float)
            v = np.ascontiguousarray(self.v, dtype=float)
            if u.ndim != 1 or v.ndim != 1 or len(u) != len(v) or len(u) == 0:
                raise ValueError("u and v must be 1-D arrays of equal positive length")
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise ValueError("u and v entries must be finite")
            if np.any(u == 0.0):
                raise ValueError("all u entries must be nonzero")
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        else:
            for name in ("sign_u", "log_u", "sign_v", "log_v"):
                arr = getattr(self, name)
                if arr is None:
                    raise ValueError("log-scaled spec requires all sign/log arrays")
                object.__setattr__(self, name, np.ascontiguousarray(arr, dtype=float))
            if np.any(self.sign_u == 0.0):
                raise ValueError("all u entries must be nonzero")

    @classmethod
    def from_signed_logs(cls, sign_u, log_u, sign_v, log_v) -> "FactorizableSpec":
        return cls(u=None, v=None, sign_u=np.asarray(sign_u, dtype=float),
                   log_u=np.asarray(log_u, dtype=float),
                   sign_v=np.asarray(sign_v, dtype=float),
                   log_v=np.asarray(log_v, dtype=float))

    @property
    def is_log_scaled(self) -> bool:
        return self.u is None

    @property
    def n(self) -> int:
        return len(self.u) if self.u is not None else len(self.sign_u)

    @property
    def d(self) -> int:
        return 1

    @property
    def dim(self) -> int:
        return self.n

    def uv(self, i: int, j: int) -> float:
        """Pairwise product u_i * v_j (1-based)."""
        if not self.is_log_scaled:
            return float(self.u[i - 1] * self.v[j - 1])
        s = self.sign_u[i - 1] * self.sign_v[j - 1]
        return float(s * np.exp(self.log_u[i - 1] + self.log_v[j - 1]))

    def uv_cross(self, i: int, j: int) -> float:
        """Four-way product (u_i v_j) * (u_j v_i)."""
        if not self.is_log_scaled:
            return float(self.u[i - 1] * self.v[j - 1] * self.u[j - 1] * self.v[i - 1])
        s = (self.sign_u[i - 1] * self.sign_v[j - 1]
             * self.sign_u[j - 1] * self.sign_v[i - 1])
        return float(s * np.exp(self.log_u[i - 1] + self.log_v[j - 1]
                                + self.log_u[j - 1] + self.log_v[i - 1]))

    def u_ratio(self, i: int, j: int) -> float:
        """Ratio u_i / u_j."""
        if not self.is_log_scaled:
            return float(self.u[i - 1] / self.u[j - 1])
        s = self.sign_u[i - 1] * self.sign_u[j - 1]
        return float(s * np.exp(self.log_u[i - 1] - self.log_u[j - 1]))

    def uv_grid(self) -> np.ndarray:
        """Dense grid of products u_i v_j; only i <= j entries are guaranteed
        to be in floating range for log-scaled specs."""
        if not self.is_log_scaled:
            return np.outer(self.u, self.v)
        with np.errstate(over="ignore", under="ignore"):
            grid = np.exp(self.log_u[:, None] + self.log_v[None, :])
        return (self.sign_u[:, None] * self.sign_v[None, :]) * grid

    def cross_grid(self) -> np.ndarray:
        """Dense grid of (u_i v_j)(u_j v_i); moderate for valid specs."""
        if not self.is_log_scaled:
            g = np.outer(self.u, self.v)
            return g * g.T
        lg = self.log_u[:, None] + self.log_v[None, :]
        sg = self.sign_u[:, None] * self.sign_v[None, :]
        return (sg * sg.T) * np.exp(lg + lg.T)

    def ratio_grid(self) -> np.ndarray:
        """Dense grid of u_i / u_j."""
        if not self.is_log_scaled:
            return np.outer(self.u, 1.0 / self.u)
        with np.errstate(over="ignore", under="ignore"):
            grid = np.exp(self.log_u[:, None] - self.log_u[None, :])
        return (self.sign_u[:, None] * self.sign_u[None, :]) * grid

    def restrict(self, indices: Sequence[int]) -> "FactorizableSpec":
        """Spec of the principal submatrix induced by 1-based ``indices``."""
        idx = _validated_index_set(indices, self.n)
        sel = [t - 1 for t in idx]
        if not self.is_log_scaled:
            return FactorizableSpec(self.u[sel], self.v[sel])
        return FactorizableSpec.from_signed_logs(
            self.sign_u[sel], self.log_u[sel], self.sign_v[sel], self.log_v[sel])


@dataclass(frozen=True, eq=False)
class BlockFactorizableSpec:
    """Block sequences (U_i, V_i) defining ``Q[[i, j]] = U_i V_j^T`` for i <= j.

    U and V are arrays of shape (n, d, d).  Every U_i must be nonsingular;
    by default that is checked at construction by inverting each U_i.

    Long-horizon projections produce U_i with enormous dynamic range whose
    direct inverses are useless in floating point, even though the
    quantities every formula actually needs -- the adjacent couplings
    ``U_k U_{k+1}^{-1}`` and the symmetric diagonal cores ``U_k V_k^T`` --
    are perfectly tame.  Constructors that know those objects exactly
    (the projection of a multi-period problem does) may pass them as
    ``chain`` (shape (n-1, d, d)) and ``cores`` (shape (n, d, d)); all
    couplings, pair cores, and materialized entries are then evaluated
    through short products of the adjacent couplings and never invert a
    deep product.
    """

    U: np.ndarray
    V: np.ndarray
    chain: np.ndarray | None = None
    cores: np.ndarray | None = None
    _assumption: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        U = np.ascontiguousarray(self.U, dtype=float)
        V = np.ascontiguousarray(self.V, dtype=float)
        if U.ndim != 3 or V.shape != U.shape or U.shape[1] != U.shape[2] or U.shape[0] == 0:
            raise ValueError("U and V must have matching shape (n, d, d), n >= 1")
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            raise ValueError("U and V entries must be finite")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        n, d = U.shape[0], U.shape[1]
        if self.chain is None:
            inv = [mat_inverse(U[k]) for k in range(n)]
            chain = np.stack([U[k] @ inv[k + 1] for k in range(n - 1)]) \
                if n > 1 else np.zeros((0, d, d))
            object.__setattr__(self, "chain", chain)
        else:
            chain = np.ascontiguousarray(self.chain, dtype=float)
            if chain.shape != (n - 1, d, d):
                raise ValueError(f"chain must have shape ({n - 1}, {d}, {d})")
            for k in range(n - 1):
                resid = float(np.max(np.abs(chain[k] @ U[k + 1] - U[k])))
                if resid > 1e-6 * max(1.0, float(np.max(np.abs(U[k])))):
                    raise ValueError(f"chain entry {k + 1} is inconsistent with U")
            object.__setattr__(self, "chain", chain)
        if self.cores is None:
            object.__setattr__(
                self, "cores",
                np.stack([0.5 * (U[k] @ V[k].T + V[k] @ U[k].T) for k in range(n)]))
        else:
            cores = np.ascontiguousarray(self.cores, dtype=float)
            if cores.shape != (n, d, d):
                raise ValueError(f"cores must have shape ({n}, {d}, {d})")
            object.__setattr__(self, "cores", cores)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def dim(self) -> int:
        return self.n * self.d

    def diag_core(self, i: int) -> np.ndarray:
        """Symmetrized diagonal block U_i V_i^T (1-based)."""
        return _symmetrized_core(self.cores[i - 1], f"diagonal block {i}")

    def coupling(self, i: int, j: int) -> np.ndarray:
        """Coupling U_i U_j^{-1} for i <= j <= n, as a product of the
        adjacent couplings (well-conditioned whenever the underlying
        dynamics are)."""
        out = np.eye(self.d)
        for k in range(i - 1, j - 1):
            out = out @ self.chain[k]
        return out

    def pair_core(self, i: int, j: int) -> np.ndarray:
        """Symmetrized pair core U_i V_i^T - U_i U_j^{-1} V_j U_i^T for i < j <= n.

        Evaluated as D_i - T D_j T^T with D the symmetrized diagonal cores
        and T the coupling (algebraically identical), which stays
        symmetric to rounding even when T is ill-conditioned.
        """
        coupling = self.coupling(i, j)
        core = self.diag_core(i) - coupling @ self.diag_core(j) @ coupling.T
        return _symmetrized_core(core, f"pair core ({i}, {j})")

    def chain_direction(self, i: int, j: int) -> np.ndarray:
        """Coupling matrix U_j^{-T} U_i^T mapping index-i coordinates to index j."""
        return self.coupling(i, j).T

    def restrict(self, indices: Sequence[int]) -> "BlockFactorizableSpec":
        idx = _validated_index_set(indices, self.n)
        sel = [t - 1 for t in idx]
        sub_chain = np.stack([self.coupling(a, b) for a, b in zip(idx, idx[1:])]) \
            if len(idx) > 1 else np.zeros((0, self.d, self.d))
        return BlockFactorizableSpec(self.U[sel], self.V[sel],
                                     chain=sub_chain, cores=self.cores[sel])


Spec = Union[FactorizableSpec, BlockFactorizableSpec]


@dataclass(frozen=True, eq=False)
class RankTerm:
    """One low-rank term of an inverse decomposition, tied to the pair (i, j).

    ``weight`` is the positive scalar (or symmetric PD d x d matrix) of the
    term and ``direction`` the successor coupling (scalar ratio u_i/u_{next}
    or matrix U_i U_next^{-1}); terminal terms (j = n+1) have no direction.
    """

    i: int
    j: int
    weight: float | np.ndarray
    direction: float | np.ndarray | None


@dataclass(frozen=True, eq=False)
class RankDecomposition:
    """Sum-of-low-rank-terms form of a (zero-padded) principal submatrix inverse."""

    terms: tuple[RankTerm, ...]
    assembled: np.ndarray


def _symmetrized_core(core: np.ndarray, what: str) -> np.ndarray:
    if asymmetry(core) > CORE_SYMMETRY_RTOL:
        raise AsymmetricMatrixError(
            f"{what} has relative asymmetry {asymmetry(core):.3e}; "
            "the spec does not describe a symmetric matrix")
    return symmetrize(core)


def _validated_index_set(indices: Iterable[int], n: int) -> tuple[int, ...]:
    idx = tuple(int(t) for t in indices)
    for t in idx:
        if not 1 <= t <= n:
            raise ValueError(f"index {t} outside 1..{n}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ValueError("index set must be strictly increasing")
    return idx


def check_assumption_scalar(spec: FactorizableSpec) -> AssumptionReport:
    """Exact sign test for positive definiteness of a scalar spec.

    Passes iff u_i v_i > 0 for every i and
    (u_i v_j)(u_j v_i - u_i v_j) > 0 for every i < j.
    """
    violations = []
    n = spec.n
    for i in range(1, n + 1):
        d = spec.uv(i, i)
        if not d > 0.0:
            violations.append(f"u_{i} v_{i} = {d!r} is not positive")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            q = spec.uv_cross(i, j) - spec.uv(i, j) ** 2
            if not q > 0.0:
                violations.append(
                    f"pair ({i}, {j}): u_{i} v_{j} (u_{j} v_{i} - u_{i} v_{j}) = {q!r} "
                    "is not positive")
    return AssumptionReport(
        passed=not violations,
        first_violation=violations[0] if violations else None,
        violations=tuple(violations))


def check_assumption_block(spec: BlockFactorizableSpec) -> AssumptionReport:
    """Positive definiteness test for a block spec.

    Passes iff every diagonal block U_i V_i^T and every pair core
    U_i V_i^T - U_i U_j^{-1} V_j U_i^T (equivalently
    U_i U_j^{-1} (U_j V_i^T - V_j U_i^T)) is positive definite.
    """
    violations = []
    n = spec.n
    for i in range(1, n + 1):
        if not is_positive_definite(spec.diag_core(i), tol=BLOCK_PD_TOL):
            violations.append(f"diagonal block {i}: U_{i} V_{i}^T is not positive definite")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if not is_positive_definite(spec.pair_core(i, j), tol=BLOCK_PD_TOL):
                violations.append(
                    f"pair ({i}, {j}): U_{i} V_{i}^T - U_{i} U_{j}^-1 V_{j} U_{i}^T "
                    "is not positive definite")
    return AssumptionReport(
        passed=not violations,
        first_violation=violations[0] if violations else None,
        violations=tuple(violations))


def check_assumption(spec: Spec) -> AssumptionReport:
    """Cached positive definiteness check for either spec kind."""
    if not spec._assumption:
        if isinstance(spec, FactorizableSpec):
            spec._assumption.append(check_assumption_scalar(spec))
        else:
            spec._assumption.append(check_assumption_block(spec))
    return spec._assumption[0]


def require_assumption(spec: Spec) -> None:
    report = check_assumption(spec)
    if not report.passed:
        raise AssumptionViolationError(
            f"spec fails positive definiteness condition: {report.first_violation}")


def materialize(spec: Spec) -> np.ndarray:
    """Dense symmetric Q defined by the spec (n x n or dn x dn)."""
    if isinstance(spec, FactorizableSpec):
        n = spec.n
        upper = np.triu(spec.uv_grid())
        return upper + np.triu(upper, 1).T
    n, d = spec.n, spec.d
    q = np.zeros((n * d, n * d))
    for i in range(n):
        # diagonal blocks are symmetrized unconditionally here; the gated
        # accessor is reserved for the inversion paths
        q[i * d:(i + 1) * d, i * d:(i + 1) * d] = symmetrize(spec.cores[i])
        # off-diagonal blocks U_i V_j^T = (U_i U_j^{-1})(U_j V_j^T): chained
        # couplings keep deep-horizon products accurate
        coupling = np.eye(d)
        for j in range(i + 1, n):
            coupling = coupling @ spec.chain[j - 1]
            block = coupling @ spec.cores[j]
            q[i * d:(i + 1) * d, j * d:(j + 1) * d] = block
            q[j * d:(j + 1) * d, i * d:(i + 1) * d] = block.T
    return q


def _scalar_pair_weight(spec: FactorizableSpec, i: int, j: int) -> float:
    """Weight u_j / (u_i (u_j v_i - u_i v_j)) of the (i, j) rank-one term."""
    denom = spec.uv_cross(i, j) - spec.uv(i, j) ** 2
    return spec.uv(j, j) / denom


def _scalar_ratio(spec: FactorizableSpec, i: int, j: int) -> float:
    """Successor ratio u_i / u_j, computed from pairwise products."""
    return spec.uv(i, j) / spec.uv(j, j)


def submatrix_decomposition(spec: Spec, indices: Sequence[int]) -> RankDecomposition:
    """Closed-form decomposition of the zero-padded inverse of Q restricted
    to the 1-based index set ``indices``.

    The terms couple consecutive elements of the set, with the last element
    coupled to the virtual terminal index n+1; their sum is the zero-padded
    inverse of the principal submatrix.
    """
    require_assumption(spec)
    idx = _validated_index_set(indices, spec.n)
    terminal = spec.n + 1
    if isinstance(spec, FactorizableSpec):
        assembled = np.zeros((spec.n, spec.n))
        terms = []
        for a, b in zip(idx, idx[1:]):
            w = _scalar_pair_weight(spec, a, b)
            r = _scalar_ratio(spec, a, b)
            terms.append(RankTerm(a, b, w, r))
            ia, ib = a - 1, b - 1
            assembled[ia, ia] += w
            assembled[ia, ib] -= w * r
            assembled[ib, ia] -= w * r
            assembled[ib, ib] += w * r * r
        if idx:
            last = idx[-1]
            w = 1.0 / spec.uv(last, last)
            terms.append(RankTerm(last, terminal, w, None))
            assembled[last - 1, last - 1] += w
        return RankDecomposition(tuple(terms), assembled)

    d = spec.d
    assembled = np.zeros((spec.dim, spec.dim))
    terms = []
    for a, b in zip(idx, idx[1:]):
        weight = mat_inverse(spec.pair_core(a, b))
        weight = symmetrize(weight)
        direction = spec.coupling(a, b)
        terms.append(RankTerm(a, b, weight, direction))
        ia, ib = (a - 1) * d, (b - 1) * d
        wd = weight @ direction
        assembled[ia:ia + d, ia:ia + d] += weight
        assembled[ia:ia + d, ib:ib + d] -= wd
        assembled[ib:ib + d, ia:ia + d] -= wd.T
        assembled[ib:ib + d, ib:ib + d] += direction.T @ wd
    if idx:
        last = idx[-1]
        weight = symmetrize(mat_inverse(spec.diag_core(last)))
        terms.append(RankTerm(last, terminal, weight, None))
        il = (last - 1) * d
        assembled[il:il + d, il:il + d] += weight
    return RankDecomposition(tuple(terms), assembled)


def inverse_decomposition(spec: Spec) -> RankDecomposition:
    """Decomposition of the full inverse Q^{-1}; assembled is (block-)tridiagonal."""
    return submatrix_decomposition(spec, range(1, spec.n + 1))


def submatrix_inverse(spec: Spec, indices: Sequence[int]) -> np.ndarray:
    """Zero-padded inverse of the principal submatrix induced by ``indices``.

    The empty set yields the zero matrix by convention.
    """
    return submatrix_decomposition(spec, indices).assembled


def lambda_matrix(spec: Spec, i: int, j: int) -> np.ndarray:
    """Rank-one (rank-d) matrix attached to the pair (i, j), 1 <= i < j <= n+1.

    For j <= n this is the contribution of i when j is its successor in an
    index set; j = n+1 marks i as the last element.  The result is dense,
    symmetric PSD, and zero outside rows/columns (blocks) i and j.
    """
    require_assumption(spec)
    n = spec.n
    if not (1 <= i <= n and i < j <= n + 1):
        raise ValueError(f"pair ({i}, {j}) outside 1 <= i < j <= {n + 1}")
    if isinstance(spec, FactorizableSpec):
        out = np.zeros((n, n))
        if j == n + 1:
            out[i - 1, i - 1] = 1.0 / spec.uv(i, i)
            return out
        w = _scalar_pair_weight(spec, i, j)
        r = _scalar_ratio(spec, i, j)
        ia, ib = i - 1, j - 1
        out[ia, ia] = w
        out[ia, ib] = out[ib, ia] = -w * r
        out[ib, ib] = w * r * r
        return out
    d = spec.d
    out = np.zeros((spec.dim, spec.dim))
    ia = (i - 1) * d
    if j == n + 1:
        out[ia:ia + d, ia:ia + d] = symmetrize(mat_inverse(spec.diag_core(i)))
        return out
    weight = symmetrize(mat_inverse(spec.pair_core(i, j)))
    cmat = spec.chain_direction(i, j)
    ib = (j - 1) * d
    out[ia:ia + d, ia:ia + d] = weight
    out[ia:ia + d, ib:ib + d] = -weight @ cmat.T
    out[ib:ib + d, ia:ia + d] = -cmat @ weight
    out[ib:ib + d, ib:ib + d] = cmat @ weight @ cmat.T
    return out


def phi_factor(spec: Spec, i: int, j: int) -> np.ndarray:
    """Tall factor F with ``F @ F.T == lambda_matrix(spec, i, j)``.

    Shape (n, 1) for scalar specs and (dn, d) for block specs; the block
    case takes the symmetric inverse square root of the pair core.
    """
    require_assumption(spec)
    n = spec.n
    if not (1 <= i <= n and i < j <= n + 1):
        raise ValueError(f"pair ({i}, {j}) outside 1 <= i < j <= {n + 1}")
    if isinstance(spec, FactorizableSpec):
        out = np.zeros((n, 1))
        if j == n + 1:
            out[i - 1, 0] = np.sqrt(1.0 / spec.uv(i, i))
            return out
        w = _scalar_pair_weight(spec, i, j)
        if not w > 0.0:
            raise AssumptionViolationError(
                f"pair ({i}, {j}) weight {w!r} is not positive")
        root = np.sqrt(w)
        out[i - 1, 0] = root
        out[j - 1, 0] = -root * _scalar_ratio(spec, i, j)
        return out
    d = spec.d
    out = np.zeros((spec.dim, d))
    ia = (i - 1) * d
    if j == n + 1:
        out[ia:ia + d] = sym_inv_sqrt(spec.diag_core(i))
        return out
    root = sym_inv_sqrt(spec.pair_core(i, j))
    cmat = spec.chain_direction(i, j)
    out[ia:ia + d] = root
    out[(j - 1) * d:j * d] = -cmat @ root
    return out


def lambda_table(spec: Spec) -> dict[tuple[int, int], np.ndarray]:
    """All (n+1 choose 2) pair matrices, keyed by (i, j).

    Entries are independent of each other, so a parallel fill would give
    identical results; this reference implementation fills them in order.
    """
    require_assumption(spec)
    n = spec.n
    return {(i, j): lambda_matrix(spec, i, j)
            for i in range(1, n + 1) for j in range(i + 1, n + 2)}


def quadratic_form(spec: Spec, x) -> float:
    """Value of x^T Q x for the materialized Q."""
    x = np.asarray(x, dtype=float)
    q = materialize(spec)
    return float(x @ q @ x)


def wrap_scalar_as_block(spec: FactorizableSpec) -> BlockFactorizableSpec:
    """View a scalar spec as a block spec with 1 x 1 blocks."""
    if spec.is_log_scaled:
        raise ValueError("log-scaled specs have no block representation")
    return BlockFactorizableSpec(
        spec.u.reshape(-1, 1, 1).copy(), spec.v.reshape(-1, 1, 1).copy())
