import numpy as np
import pytest

from mpmiqp import (
    FactorizableSpec,
    ProjectedMIQP,
    SizeGuardError,
    enumerate_supports,
    mat_inverse,
    materialize,
    solve,
    solve_fixed_support,
    submatrix_inverse,
    verify_inverse,
    verify_path_polytope,
)
from mpmiqp.randgen import random_block_spec, random_scalar_spec


@pytest.fixture
def toy():
    return ProjectedMIQP(
        spec=FactorizableSpec(np.array([1.0, 1.0]), np.array([2.0, 1.0])),
        a=np.array([-2.0, -2.0]), c=np.array([0.5, 0.5]), constant=0.0)


class TestFixedSupport:
    def test_toy_single(self, toy):
        x, obj = solve_fixed_support(toy, [2])
        assert np.allclose(x, [0.0, 1.0], atol=1e-14)
        assert obj == pytest.approx(-0.5, abs=1e-14)

    def test_empty_support(self, toy):
        x, obj = solve_fixed_support(toy, [])
        assert np.array_equal(x, np.zeros(2))
        assert obj == 0.0

    def test_full_support_zero_linear(self, spec3):
        m = ProjectedMIQP(spec=spec3, a=np.zeros(3), c=np.array([1.0, 2.0, 4.0]),
                          constant=0.5)
        x, obj = solve_fixed_support(m, [1, 2, 3])
        assert np.array_equal(x, np.zeros(3))
        assert obj == pytest.approx(7.5, abs=0)

    def test_invalid_support(self, toy):
        with pytest.raises(ValueError):
            solve_fixed_support(toy, [0])
        with pytest.raises(ValueError):
            solve_fixed_support(toy, [1, 1])


class TestEnumerate:
    def test_toy(self, toy):
        result = enumerate_supports(toy, keep_table=True)
        assert result.best_support == (2,)
        assert result.best_objective == pytest.approx(-0.5, abs=1e-14)
        assert len(result.per_support) == 4
        assert result.second_objective == pytest.approx(0.0, abs=1e-14)

    def test_all_tie_returns_lexicographic_smallest(self, spec3):
        m = ProjectedMIQP(spec=spec3, a=np.zeros(3), c=np.zeros(3), constant=1.5)
        result = enumerate_supports(m)
        assert result.best_support == ()
        assert result.best_objective == 1.5
        assert result.second_objective == 1.5

    def test_cross_module_agreement(self, spec3):
        m = ProjectedMIQP(spec=spec3, a=np.array([-2.0, -2.0, -2.0]),
                          c=np.array([0.1, 0.1, 0.1]), constant=0.0)
        assert enumerate_supports(m).best_objective == pytest.approx(
            solve(m).objective, abs=1e-10)

    def test_size_guard(self):
        rng = np.random.default_rng(0)
        spec = random_scalar_spec(rng, 21)
        m = ProjectedMIQP(spec=spec, a=np.zeros(21), c=np.zeros(21), constant=0.0)
        with pytest.raises(SizeGuardError):
            enumerate_supports(m)


class TestVerifyInverse:
    def test_three_period_all_supports(self, spec3):
        for mask in range(8):
            sup = tuple(t + 1 for t in range(3) if mask >> t & 1)
            report = verify_inverse(spec3, sup, tol=1e-12)
            assert report.passed, (sup, report.max_error)

    def test_empty_support_zero_error(self, spec3):
        report = verify_inverse(spec3, [])
        assert report.max_error == 0.0 and report.passed

    def test_block_all_supports(self, block4):
        for mask in range(16):
            sup = tuple(t + 1 for t in range(4) if mask >> t & 1)
            report = verify_inverse(block4, sup, tol=1e-9)
            assert report.passed, (sup, report.max_error)


class TestPathPolytope:
    def test_alternating_support(self, spec3):
        w, W = verify_path_polytope(spec3, np.array([1.0, 0.0, 1.0]))
        expected_arcs = {(0, 1), (1, 3), (3, 4)}
        assert {(i, j) for i in range(5) for j in range(5) if w[i, j] == 1.0} \
            == expected_arcs
        assert np.max(np.abs(W - submatrix_inverse(spec3, [1, 3]))) <= 1e-12

    def test_empty_support(self, spec3):
        w, W = verify_path_polytope(spec3, np.zeros(3))
        assert w[0, 4] == 1.0 and w.sum() == 1.0
        assert np.array_equal(W, np.zeros((3, 3)))

    def test_full_support_gives_dense_inverse(self, spec3):
        _, W = verify_path_polytope(spec3, np.ones(3))
        dense = mat_inverse(materialize(spec3))
        assert np.max(np.abs(W - dense)) <= 1e-10

    def test_rejects_nonbinary(self, spec3):
        with pytest.raises(ValueError):
            verify_path_polytope(spec3, np.array([0.5, 0.0, 1.0]))

    def test_exhaustive_small(self):
        rng = np.random.default_rng(3)
        for n in (1, 2, 4, 6):
            spec = random_scalar_spec(rng, n)
            for mask in range(2 ** n):
                z = np.array([(mask >> t) & 1 for t in range(n)], dtype=float)
                w, W = verify_path_polytope(spec, z)
                assert np.all((w == 0.0) | (w == 1.0))
        bspec = random_block_spec(rng, 3, 2)
        for mask in range(8):
            z = np.array([(mask >> t) & 1 for t in range(3)], dtype=float)
            verify_path_polytope(bspec, z)
