import numpy as np
import pytest
import scipy.stats

from mpmiqp import (
    calcium_models,
    calcium_projected,
    check_assumption,
    gen_calcium,
    gen_hev,
    hev_models,
    hev_projected,
    materialize,
    model_stats,
    project_scalar,
    solve,
    write_instance,
)
from mpmiqp.casestudies import calcium_multiperiod, hev_side
from mpmiqp.projection import MultiPeriodProblem


class TestGenCalcium:
    def test_noiseless_spikeless_decay(self):
        inst = gen_calcium(n=10, mu=0.0, sigma=0.0, alpha=0.5, lam=1.0, seed=0,
                           beta0=2.0)
        expected = 2.0 * 0.5 ** np.arange(11)
        assert np.array_equal(inst.r, expected)
        assert np.array_equal(inst.true_spikes, np.zeros(10))

    def test_deterministic(self, tmp_path):
        a = gen_calcium(n=30, mu=0.05, sigma=0.1, alpha=0.96, lam=1.0, seed=42)
        b = gen_calcium(n=30, mu=0.05, sigma=0.1, alpha=0.96, lam=1.0, seed=42)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_instance(a, p1)
        write_instance(b, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_seed_changes_trace(self):
        a = gen_calcium(n=30, mu=0.5, sigma=0.1, alpha=0.96, lam=1.0, seed=1)
        b = gen_calcium(n=30, mu=0.5, sigma=0.1, alpha=0.96, lam=1.0, seed=2)
        assert not np.array_equal(a.r, b.r)

    def test_spike_count_statistics(self):
        n, mu = 50, 0.05
        counts = [np.count_nonzero(
            gen_calcium(n=n, mu=mu, sigma=0.1, alpha=0.96, lam=1.0, seed=s).true_spikes)
            for s in range(40)]
        lo, hi = scipy.stats.poisson.interval(0.999, n * mu)
        assert lo <= np.mean(counts) <= hi

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            gen_calcium(n=5, mu=0.1, sigma=0.1, alpha=1.5, lam=1.0, seed=0)
        with pytest.raises(ValueError):
            gen_calcium(n=5, mu=-0.1, sigma=0.1, alpha=0.9, lam=1.0, seed=0)


class TestCalciumProjected:
    def test_two_period_closed_form(self):
        inst = gen_calcium(n=2, mu=0.0, sigma=0.0, alpha=0.5, lam=1.0, seed=0)
        m = calcium_projected(inst)
        assert np.max(np.abs(materialize(m.spec)
                             - np.array([[0.625, 0.25], [0.25, 0.5]]))) <= 1e-15
        assert np.max(np.abs(m.a)) <= 1e-15
        assert abs(m.constant) <= 1e-15

    def test_last_tail_weight_is_half(self):
        for n in (1, 3, 17):
            inst = gen_calcium(n=n, mu=0.1, sigma=0.1, alpha=0.7, lam=1.0, seed=3)
            assert calcium_projected(inst).spec.v[-1] == pytest.approx(0.5, abs=1e-15)

    def test_matches_generic_projection(self):
        rng = np.random.default_rng(7)
        for trial in range(200):
            n = int(rng.integers(1, 30))
            alpha = float(rng.uniform(0.3, 0.99))
            inst = gen_calcium(n=n, mu=float(rng.uniform(0, 0.3)),
                               sigma=float(rng.uniform(0, 0.3)), alpha=alpha,
                               lam=float(rng.uniform(0.1, 2.0)), seed=trial)
            closed = calcium_projected(inst)
            generic = project_scalar(calcium_multiperiod(inst))
            scale = max(1.0, float(np.max(np.abs(generic.a))))
            assert np.max(np.abs(closed.spec.u - generic.spec.u)) <= 1e-10
            assert np.max(np.abs(closed.spec.v - generic.spec.v)) <= 1e-10 * max(
                1.0, float(np.max(np.abs(generic.spec.v))))
            assert np.max(np.abs(closed.a - generic.a)) <= 1e-10 * scale
            assert abs(closed.constant - generic.constant) <= 1e-10 * (
                1.0 + abs(generic.constant))


@pytest.fixture(scope="module")
def inst50():
    return gen_calcium(n=50, mu=0.05, sigma=0.1, alpha=0.96, lam=1.0, seed=7)


@pytest.fixture(scope="module")
def hev6():
    return gen_hev(n=6, lam=2.0, seed=3)


class TestCalciumModels:
    def test_relaxed_has_no_sign_rows(self, inst50):
        socp, _ = calcium_models(inst50, "relaxed")
        assert not any(r.name.startswith("xsign") for r in socp.rows)
        assert model_stats(socp)["binaryCount"] == 0

    def test_original_sign_rows(self, inst50):
        socp, miqp = calcium_models(inst50, "original")
        assert sum(1 for r in socp.rows if r.name.startswith("xsign")) == 50
        stats = model_stats(miqp)
        assert stats["binaryCount"] == 50
        assert stats["continuousCount"] == 101

    def test_capacity_adds_single_row(self, inst50):
        original, _ = calcium_models(inst50, "original")
        capacity, _ = calcium_models(inst50, "capacity")
        assert model_stats(capacity)["rowCount"] == model_stats(original)["rowCount"] + 1
        row = next(r for r in capacity.rows if r.name == "capacity")
        weights = np.array([coef for _, coef in row.terms])
        assert set(weights).issubset({1.0, 2.0, 3.0, 4.0, 5.0})
        assert row.rhs == pytest.approx(0.5 * weights.sum())
        assert row.sense == "<="

    def test_capacity_weights_deterministic(self, inst50):
        a, _ = calcium_models(inst50, "capacity")
        b, _ = calcium_models(inst50, "capacity")
        rows_a = next(r for r in a.rows if r.name == "capacity")
        rows_b = next(r for r in b.rows if r.name == "capacity")
        assert rows_a == rows_b

    def test_unknown_variant(self, inst50):
        with pytest.raises(ValueError):
            calcium_models(inst50, "bogus")

    def test_relaxed_spp_runs_large(self):
        inst = gen_calcium(n=300, mu=0.05, sigma=0.15, alpha=0.96, lam=1.0, seed=1)
        sol = solve(calcium_projected(inst))
        assert np.isfinite(sol.objective)


class TestGenHev:
    def test_control_cost_exact(self):
        inst = gen_hev(n=10, lam=2.0, seed=0)
        assert np.array_equal(inst.R, 0.1 * np.eye(3))

    def test_targets_range_and_rounding(self):
        inst = gen_hev(n=25, lam=4.0, seed=5)
        assert np.all(inst.r >= -2.0) and np.all(inst.r <= 2.0)
        for arr in (inst.r, inst.P, inst.A, inst.G, inst.k, inst.b0):
            assert np.allclose(arr * 10, np.round(arr * 10), atol=1e-9)

    def test_spectral_radius(self):
        # normalization puts the radius at 1; rounding the entries by up to
        # 0.05 can move eigenvalues of a non-normal matrix somewhat further
        for seed in range(30):
            inst = gen_hev(n=5, lam=2.0, seed=seed)
            radius = float(np.max(np.abs(np.linalg.eigvals(inst.A))))
            assert radius <= 1.15

    def test_gain_full_row_rank(self):
        for seed in range(20):
            assert np.linalg.matrix_rank(gen_hev(n=4, lam=2.0, seed=seed).G) == 2

    def test_deterministic(self, tmp_path):
        a, b = gen_hev(n=12, lam=6.0, seed=9), gen_hev(n=12, lam=6.0, seed=9)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_instance(a, p1)
        write_instance(b, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestHevProjected:
    def test_assumption_certified(self):
        for seed in range(10):
            m, _ = hev_projected(gen_hev(n=6, lam=2.0, seed=seed))
            assert check_assumption(m.spec).passed

    def test_deep_horizon_remains_solvable(self):
        # 20..70-period dynamics products are numerically singular, but the
        # chained representation keeps the whole pipeline accurate
        import numpy as np
        from mpmiqp import enumerate_supports, inverse_decomposition, solve

        for n, seed in ((20, 5), (70, 5)):
            m, _ = hev_projected(gen_hev(n=n, lam=4.0, seed=seed))
            assert check_assumption(m.spec).passed
            assert np.isfinite(solve(m).objective)
        m, _ = hev_projected(gen_hev(n=20, lam=4.0, seed=5))
        q = materialize(m.spec)
        resid = inverse_decomposition(m.spec).assembled @ q - np.eye(40)
        assert float(np.max(np.abs(resid))) <= 1e-9 * max(1.0, float(np.max(np.abs(q))))
        m12, _ = hev_projected(gen_hev(n=12, lam=3.0, seed=2))
        best = enumerate_supports(m12)
        assert abs(solve(m12).objective - best.best_objective) \
            <= 1e-8 * (1 + abs(best.best_objective))

    def test_state_bound_row_count(self):
        inst = gen_hev(n=7, lam=2.0, seed=1)
        m, cmap = hev_projected(inst)
        side = hev_side(inst, cmap, perspective=False)
        sbound = [r for r in side.rows if r.name.startswith("sbound")]
        assert len(sbound) == 2 * 2 * (7 + 1)

    def test_scalar_degenerate_matches_scalar_projection(self):
        # single-dimensional analogue: unit gain, no engagement offset
        rng = np.random.default_rng(2)
        n = 5
        p = MultiPeriodProblem.from_scalar(
            alpha=rng.uniform(0.5, 1.2, n), p=rng.uniform(0.5, 1.5, n + 1),
            r=rng.normal(size=n + 1), f=np.zeros(n), b=np.zeros(n + 1),
            c=np.full(n, 2.0))
        from mpmiqp import project_block

        ms, mb = project_scalar(p), project_block(p)
        assert np.max(np.abs(materialize(ms.spec) - materialize(mb.spec))) <= 1e-12
        assert np.max(np.abs(ms.a - mb.a)) <= 1e-12


class TestHevModels:
    def test_socp_has_control_structure(self, hev6):
        model = hev_models(hev6, "socp")
        names = {v.name for v in model.variables}
        assert "y[1,1]" in names and "y[6,3]" in names
        assert sum(1 for r in model.rows if r.name.startswith("input")) == 12
        assert sum(1 for r in model.rows if r.name.startswith("ybound")) == 36
        assert sum(1 for c in model.cones if c.name.startswith("pcone")) == 6

    def test_miqp_quadratic_covers_controls(self, hev6):
        model = hev_models(hev6, "miqp")
        assert model.quad.shape == (12 + 18, 12 + 18)
        block = model.quad[12:15, 12:15]
        assert np.array_equal(block, 0.1 * np.eye(3))
        assert len(model.cones) == 0

    def test_perspective_variant(self, hev6):
        model = hev_models(hev6, "miqp-p")
        assert model.quad.shape == (12, 12)
        assert sum(1 for c in model.cones if c.name.startswith("pcone")) == 6
        assert any(name.startswith("tp[") for name, _ in model.objective.terms)

    def test_unknown_formulation(self, hev6):
        with pytest.raises(ValueError):
            hev_models(hev6, "lp")
