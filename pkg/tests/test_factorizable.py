import numpy as np
import pytest

from mpmiqp import (
    AssumptionViolationError,
    BlockFactorizableSpec,
    FactorizableSpec,
    check_assumption,
    check_assumption_block,
    check_assumption_scalar,
    inverse_decomposition,
    is_positive_definite,
    lambda_matrix,
    lambda_table,
    materialize,
    mat_inverse,
    phi_factor,
    submatrix_decomposition,
    submatrix_inverse,
)
from mpmiqp.factorizable import wrap_scalar_as_block
from mpmiqp.randgen import random_block_spec, random_scalar_spec

Q3 = np.array([[5.0, 4.0, 2.0], [4.0, 8.0, 4.0], [2.0, 4.0, 8.0]])
Q5 = np.array([
    [5.0, 4.0, 3.0, 2.0, 1.0],
    [4.0, 8.0, 6.0, 4.0, 2.0],
    [3.0, 6.0, 12.0, 8.0, 4.0],
    [2.0, 4.0, 8.0, 16.0, 8.0],
    [1.0, 2.0, 4.0, 8.0, 16.0],
])


def embedding(n, i, d=1):
    """Tall selector picking the d coordinates of period i (1-based)."""
    e = np.zeros((n * d, d))
    e[(i - 1) * d:i * d] = np.eye(d)
    return e


class TestAssumptionScalar:
    def test_pd_example_passes(self, spec3):
        assert check_assumption_scalar(spec3).passed

    def test_negative_diagonal(self):
        report = check_assumption_scalar(FactorizableSpec([1.0], [-1.0]))
        assert not report.passed
        assert "u_1 v_1" in report.first_violation

    def test_all_ones_singular(self):
        report = check_assumption_scalar(FactorizableSpec([1.0, 1.0], [1.0, 1.0]))
        assert not report.passed
        assert "(1, 2)" in report.first_violation

    def test_cached(self, spec3):
        assert check_assumption(spec3) is check_assumption(spec3)


class TestAssumptionBlock:
    def test_block_example_passes(self, block4):
        assert check_assumption_block(block4).passed

    def test_d1_reduction_matches_scalar(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            u = rng.uniform(-2, 2, size=4)
            u[u == 0] = 1.0
            v = rng.uniform(-2, 2, size=4)
            scalar = check_assumption_scalar(FactorizableSpec(u, v)).passed
            block = check_assumption_block(
                BlockFactorizableSpec(u.reshape(4, 1, 1), v.reshape(4, 1, 1))).passed
            assert scalar == block

    def test_indefinite_diagonal_block(self):
        u = np.eye(2).reshape(1, 2, 2)
        v = np.diag([1.0, -1.0]).reshape(1, 2, 2)
        report = check_assumption_block(BlockFactorizableSpec(u, v))
        assert not report.passed
        assert "diagonal block 1" in report.first_violation

    def test_singular_u_rejected_at_construction(self):
        from mpmiqp.linalg import SingularMatrixError

        with pytest.raises(SingularMatrixError):
            BlockFactorizableSpec(np.zeros((1, 2, 2)), np.ones((1, 2, 2)))


class TestMaterialize:
    def test_three_period(self, spec3):
        assert np.array_equal(materialize(spec3), Q3)

    def test_five_period(self, spec5):
        assert np.array_equal(materialize(spec5), Q5)

    def test_single(self):
        assert np.array_equal(materialize(FactorizableSpec([1.0], [1.0])), [[1.0]])

    def test_block(self, block4):
        q = materialize(block4)
        assert np.array_equal(q, q.T)
        assert np.array_equal(q[:2, :2], np.array([[5.0, 6.0], [6.0, 11.0]]))
        assert np.array_equal(q[:2, 6:], np.array([[2.0, 3.0], [3.0, 5.0]]))


class TestInverseDecomposition:
    def test_five_period_weights(self, spec5):
        dec = inverse_decomposition(spec5)
        weights = [t.weight for t in dec.terms]
        assert np.allclose(weights, [1 / 3, 1 / 5, 1 / 8, 1 / 12, 1 / 16],
                           rtol=0, atol=1e-15)
        assert all(t.direction == 0.5 for t in dec.terms[:-1])
        assert dec.terms[-1].direction is None

    def test_three_period_assembled(self, spec3):
        expected = np.array([[1 / 3, -1 / 6, 0.0],
                             [-1 / 6, 1 / 4, -1 / 12],
                             [0.0, -1 / 12, 1 / 6]])
        assert np.max(np.abs(inverse_decomposition(spec3).assembled - expected)) <= 1e-15

    def test_block_inverse_identity(self, block4):
        q = materialize(block4)
        inv = inverse_decomposition(block4).assembled
        assert np.max(np.abs(inv @ q - np.eye(8))) <= 1e-9

    def test_tridiagonal_zeros_exact(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            spec = random_scalar_spec(rng, 8)
            assembled = inverse_decomposition(spec).assembled
            for i in range(8):
                for j in range(8):
                    if abs(i - j) >= 2:
                        assert assembled[i, j] == 0.0
        bspec = random_block_spec(rng, 5, 2)
        assembled = inverse_decomposition(bspec).assembled
        for i in range(5):
            for j in range(5):
                if abs(i - j) >= 2:
                    assert np.all(assembled[2 * i:2 * i + 2, 2 * j:2 * j + 2] == 0.0)

    def test_requires_assumption(self):
        with pytest.raises(AssumptionViolationError):
            inverse_decomposition(FactorizableSpec([1.0, 1.0], [1.0, 1.0]))

    def test_random_inverse_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(1, 9))
            spec = random_scalar_spec(rng, n)
            resid = inverse_decomposition(spec).assembled @ materialize(spec) - np.eye(n)
            assert np.max(np.abs(resid)) <= 1e-9
        for _ in range(20):
            n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            spec = random_block_spec(rng, n, d)
            q = materialize(spec)
            resid = inverse_decomposition(spec).assembled @ q - np.eye(n * d)
            assert np.max(np.abs(resid)) <= 1e-9 * max(1.0, np.max(np.abs(q)))


class TestSubmatrixInverse:
    def test_example_pair(self, spec3):
        expected = np.array([[2 / 9, 0.0, -1 / 18],
                             [0.0, 0.0, 0.0],
                             [-1 / 18, 0.0, 5 / 36]])
        assert np.max(np.abs(submatrix_inverse(spec3, [1, 3]) - expected)) <= 1e-15

    def test_five_period_subset(self, spec5):
        dec = submatrix_decomposition(spec5, [1, 2, 4, 5])
        assert np.allclose([t.weight for t in dec.terms],
                           [1 / 3, 1 / 7, 1 / 12, 1 / 16], rtol=0, atol=1e-15)
        assert np.allclose([t.direction for t in dec.terms[:-1]],
                           [1 / 2, 1 / 4, 1 / 2], rtol=0, atol=1e-15)
        expected = np.array([
            [1 / 3, -1 / 6, 0.0, 0.0, 0.0],
            [-1 / 6, 1 / 12 + 1 / 7, 0.0, -1 / 28, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, -1 / 28, 0.0, 1 / 112 + 1 / 12, -1 / 24],
            [0.0, 0.0, 0.0, -1 / 24, 1 / 48 + 1 / 16],
        ])
        assert np.max(np.abs(dec.assembled - expected)) <= 1e-15

    def test_empty_set(self, spec3):
        assert np.array_equal(submatrix_inverse(spec3, []), np.zeros((3, 3)))

    def test_invalid_index(self, spec3):
        with pytest.raises(ValueError):
            submatrix_inverse(spec3, [0, 2])
        with pytest.raises(ValueError):
            submatrix_inverse(spec3, [2, 1])

    def test_restriction_closure_bit_exact(self, spec5, block4):
        sub = spec5.restrict([2, 4, 5])
        coords = [1, 3, 4]
        assert np.array_equal(materialize(sub), materialize(spec5)[np.ix_(coords, coords)])
        bsub = block4.restrict([1, 3])
        bcoords = [0, 1, 4, 5]
        assert np.array_equal(materialize(bsub),
                              materialize(block4)[np.ix_(bcoords, bcoords)])

    def test_consecutive_pair_sum_exhaustive(self, spec3, block4):
        for spec in (spec3, block4):
            n = spec.n
            for mask in range(2 ** n):
                sup = tuple(t + 1 for t in range(n) if mask >> t & 1)
                total = np.zeros((spec.dim, spec.dim))
                chain = (0,) + sup + (n + 1,)
                for i, j in zip(chain, chain[1:]):
                    if i >= 1:
                        total += lambda_matrix(spec, i, j)
                assert np.max(np.abs(total - submatrix_inverse(spec, sup))) <= 1e-10


class TestLambdaAndPhi:
    def test_five_period_pair(self, spec5):
        lam = lambda_matrix(spec5, 2, 4)
        expected = np.zeros((5, 5))
        expected[np.ix_([1, 3], [1, 3])] = (1 / 7) * np.array([[1.0, -0.25],
                                                               [-0.25, 0.0625]])
        assert np.max(np.abs(lam - expected)) <= 1e-15

    def test_terminal_unit_diagonal(self):
        spec = FactorizableSpec([1.0, 2.0], [1.0, 0.5])  # u_i v_i = 1
        lam = lambda_matrix(spec, 1, 3)
        assert np.array_equal(lam, np.outer([1.0, 0.0], [1.0, 0.0]))
        phi = phi_factor(spec, 1, 3)
        assert np.array_equal(phi, np.array([[1.0], [0.0]]))

    def test_block_pairs(self, block4):
        e1, e2, e3 = (embedding(4, i, 2) for i in (1, 2, 3))
        cases = {
            (1, 2): (2 / 29, e1 - 0.5 * e2, np.array([[13.0, -7.0], [-7.0, 6.0]])),
            (2, 3): (1 / 19, e2 - 0.5 * e3, np.array([[11.0, -6.0], [-6.0, 5.0]])),
            (1, 3): (4 / 229, e1 - 0.25 * e3, np.array([[37.0, -20.0], [-20.0, 17.0]])),
        }
        for (i, j), (scale, direction, inner) in cases.items():
            expected = scale * direction @ inner @ direction.T
            assert np.max(np.abs(lambda_matrix(block4, i, j) - expected)) <= 1e-10

    def test_scalar_terminal_phi(self, spec3):
        phi = phi_factor(spec3, 3, 4)
        assert np.allclose(phi[:, 0], [0.0, 0.0, 1 / np.sqrt(8.0)], atol=1e-15)

    def test_phi_reproduces_lambda(self, block4):
        for i in range(1, 5):
            for j in range(i + 1, 6):
                phi = phi_factor(block4, i, j)
                lam = lambda_matrix(block4, i, j)
                assert np.max(np.abs(phi @ phi.T - lam)) <= 1e-8 * max(1.0, np.max(np.abs(lam)))

    def test_lambda_table_complete(self, spec3):
        table = lambda_table(spec3)
        assert set(table) == {(i, j) for i in (1, 2, 3) for j in range(i + 1, 5)}
        for (i, j), lam in table.items():
            assert np.array_equal(lam, lambda_matrix(spec3, i, j))

    def test_index_validation(self, spec3):
        for bad in [(0, 1), (1, 1), (2, 5), (4, 5)]:
            with pytest.raises(ValueError):
                lambda_matrix(spec3, *bad)


class TestPositiveDefiniteEquivalence:
    def test_scalar_both_directions(self):
        rng = np.random.default_rng(17)
        checked = 0
        for _ in range(600):
            n = int(rng.integers(1, 11))
            u = rng.uniform(-2, 2, size=n)
            if np.any(np.abs(u) < 1e-3):
                continue
            v = rng.uniform(-2, 2, size=n)
            spec = FactorizableSpec(u, v)
            q = materialize(spec)
            smallest = float(np.linalg.eigvalsh(q)[0])
            if abs(smallest) <= 1e-10 * max(1.0, np.max(np.abs(q))):
                continue
            checked += 1
            assert check_assumption_scalar(spec).passed == (smallest > 0.0)
        assert checked >= 500

    def test_block_both_directions(self):
        rng = np.random.default_rng(19)
        checked = 0
        for _ in range(300):
            n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            U = np.stack([_nonsingular(rng, d) for _ in range(n)])
            V = np.empty_like(U)
            for k in range(n):
                s = rng.normal(size=(d, d))
                V[k] = (s + s.T) @ np.linalg.inv(U[k]).T
            spec = BlockFactorizableSpec(U, V)
            q = materialize(spec)
            smallest = float(np.linalg.eigvalsh(q)[0])
            if abs(smallest) <= 1e-10 * max(1.0, np.max(np.abs(q))):
                continue
            checked += 1
            assert check_assumption_block(spec).passed == (smallest > 0.0)
        assert checked >= 250


def _nonsingular(rng, d):
    while True:
        m = rng.normal(size=(d, d))
        if abs(np.linalg.det(m)) > 0.05:
            return m


class TestScalarBlockConsistency:
    def test_wrap_matches(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            n = int(rng.integers(1, 9))
            spec = random_scalar_spec(rng, n)
            wrapped = wrap_scalar_as_block(spec)
            assert np.max(np.abs(materialize(wrapped) - materialize(spec))) <= 1e-12
            ds, db = inverse_decomposition(spec), inverse_decomposition(wrapped)
            for ts, tb in zip(ds.terms, db.terms):
                assert abs(float(np.asarray(tb.weight).item()) - ts.weight) <= 1e-12
            assert np.max(np.abs(db.assembled - ds.assembled)) <= 1e-12
            for i in range(1, n + 1):
                for j in range(i + 1, n + 2):
                    diff = lambda_matrix(wrapped, i, j) - lambda_matrix(spec, i, j)
                    assert np.max(np.abs(diff)) <= 1e-12


class TestLogScaledSpecs:
    def test_matches_plain(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            plain = random_scalar_spec(rng, n)
            logspec = FactorizableSpec.from_signed_logs(
                np.sign(plain.u), np.log(np.abs(plain.u)),
                np.sign(plain.v), np.log(np.abs(plain.v)))
            assert logspec.is_log_scaled
            assert check_assumption_scalar(logspec).passed
            scale = np.max(np.abs(materialize(plain)))
            assert np.max(np.abs(materialize(logspec) - materialize(plain))) <= 1e-12 * scale
            sup = tuple(t + 1 for t in range(n) if t % 2 == 0)
            diff = submatrix_inverse(logspec, sup) - submatrix_inverse(plain, sup)
            assert np.max(np.abs(diff)) <= 1e-10

    def test_extreme_range_representable(self):
        # ratios far beyond plain float range: u_i = 3^(i-n) over 500 periods
        n = 500
        log_u = np.log(3.0) * (np.arange(1, n + 1) - n)
        # diagonal products u_i v_i = 1 and decreasing tails keep products moderate
        log_v = -log_u + np.log(np.linspace(2.0, 1.0, n))
        spec = FactorizableSpec.from_signed_logs(
            np.ones(n), log_u, np.ones(n), log_v)
        assert np.isfinite(spec.uv(1, n)) and np.isfinite(spec.uv_cross(1, n))
        q = materialize(spec)
        assert np.all(np.isfinite(q))
