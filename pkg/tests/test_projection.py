import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strmv.errors import ArgumentError, InfeasibleTargetError, NumericError
from strmv.oracle import project_exact
from strmv.projection import (
    FeasibleSet,
    ProjectionConfig,
    dykstra_project,
    project_feasible,
    project_halfspace,
    project_simplex,
)

TIGHT = ProjectionConfig(tol_scalar=1e-12)


class TestSimplex:
    def test_already_feasible(self):
        np.testing.assert_allclose(project_simplex(np.array([0.5, 0.5])), [0.5, 0.5])

    def test_threshold_cases(self):
        np.testing.assert_allclose(project_simplex(np.array([1.5, 0.5])), [1.0, 0.0])
        np.testing.assert_allclose(
            project_simplex(np.array([0.2, 0.1, 0.0])), [13 / 30, 10 / 30, 7 / 30]
        )

    def test_non_finite(self):
        with pytest.raises(NumericError):
            project_simplex(np.array([np.inf, 0.0]))

    def test_matches_oracle_small(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            v = rng.standard_normal(n) * 3
            # simplex-only instance: return target below anything attainable
            fs = FeasibleSet(mu=np.zeros(n) + 1.0, R_target=0.5)
            xe = project_exact(v, fs)
            np.testing.assert_allclose(project_simplex(v), xe, atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=12))
    def test_output_in_simplex(self, vals):
        x = project_simplex(np.asarray(vals))
        assert x.min() >= -1e-12
        assert abs(x.sum() - 1.0) <= 1e-12 * len(vals) + 1e-12


class TestHalfspace:
    def test_cases(self):
        fs = FeasibleSet(mu=np.array([1.0, 0.0]), R_target=0.5)
        np.testing.assert_allclose(
            project_halfspace(np.array([0.6, 0.4]), fs), [0.6, 0.4]
        )
        np.testing.assert_allclose(project_halfspace(np.zeros(2), fs), [0.5, 0.0])
        with pytest.warns(UserWarning):  # halfspace target above max(mu)
            fs2 = FeasibleSet(mu=np.array([1.0, 1.0]), R_target=2.0)
        np.testing.assert_allclose(project_halfspace(np.zeros(2), fs2), [1.0, 1.0])

    def test_shifted_point_on_boundary(self):
        rng = np.random.default_rng(0)
        fs = FeasibleSet(mu=rng.standard_normal(5), R_target=0.4)
        y = rng.standard_normal(5) - 2.0
        out = project_halfspace(y, fs)
        if fs.mu @ y < fs.R_target:
            assert fs.mu @ out == pytest.approx(fs.R_target, abs=1e-12)


class TestProjectFeasible:
    def test_inactive_path(self):
        fs = FeasibleSet(mu=np.array([1.0, 0.0]), R_target=0.3)
        x, diag = project_feasible(np.array([0.5, 0.5]), fs, TIGHT)
        np.testing.assert_allclose(x, [0.5, 0.5])
        assert not diag.constraint_active

    def test_active_path_scalar_search(self):
        fs = FeasibleSet(mu=np.array([1.0, 0.0]), R_target=0.9)
        x, diag = project_feasible(np.array([0.5, 0.5]), fs, TIGHT)
        np.testing.assert_allclose(x, [0.9, 0.1], atol=1e-9)
        assert diag.constraint_active
        assert diag.nu_star == pytest.approx(0.8, abs=1e-6)

    def test_infeasible_target(self):
        with pytest.warns(UserWarning):
            fs = FeasibleSet(mu=np.array([0.1, 0.2]), R_target=0.5)
        with pytest.raises(InfeasibleTargetError):
            project_feasible(np.array([0.5, 0.5]), fs, TIGHT)

    def test_oracle_agreement(self):
        rng = np.random.default_rng(10)
        for _ in range(60):
            n = int(rng.integers(3, 11))
            v = rng.standard_normal(n) * 2
            mu = rng.standard_normal(n)
            R = float(mu.min() + rng.uniform(0.1, 0.9) * (mu.max() - mu.min()))
            fs = FeasibleSet(mu=mu, R_target=R)
            x, _ = project_feasible(v, fs, TIGHT)
            np.testing.assert_allclose(x, project_exact(v, fs), atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            mu = rng.standard_normal(6)
            fs = FeasibleSet(mu=mu, R_target=float(np.quantile(mu, 0.6)))
            v = rng.standard_normal(6) * 2
            x1, _ = project_feasible(v, fs, TIGHT)
            x2, _ = project_feasible(x1, fs, TIGHT)
            assert np.linalg.norm(x2 - x1) <= 1e-10

    def test_nonexpansive(self):
        rng = np.random.default_rng(4)
        mu = rng.standard_normal(8)
        fs = FeasibleSet(mu=mu, R_target=float(np.quantile(mu, 0.5)))
        for _ in range(200):
            u = rng.standard_normal(8) * 3
            v = rng.standard_normal(8) * 3
            xu, _ = project_feasible(u, fs, TIGHT)
            xv, _ = project_feasible(v, fs, TIGHT)
            assert np.linalg.norm(xu - xv) <= np.linalg.norm(u - v) + 1e-10

    def test_phi_monotone_in_nu(self):
        rng = np.random.default_rng(5)
        mu = rng.standard_normal(7)
        v = rng.standard_normal(7)
        vals = [mu @ project_simplex(v + nu * mu) for nu in np.linspace(0, 20, 200)]
        diffs = np.diff(vals)
        assert diffs.min() >= -1e-12

    def test_output_feasibility(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(3, 9))
            mu = rng.standard_normal(n)
            R = float(mu.min() + rng.uniform(0.2, 0.8) * (mu.max() - mu.min()))
            fs = FeasibleSet(mu=mu, R_target=R)
            x, _ = project_feasible(rng.standard_normal(n) * 2, fs, TIGHT)
            assert x.min() >= -1e-12
            assert abs(x.sum() - 1.0) <= 1e-12 * n
            assert mu @ x >= R - TIGHT.tol_scalar * max(1.0, abs(R))


class TestDykstra:
    def test_feasible_point_one_sweep(self):
        fs = FeasibleSet(mu=np.array([1.0, 0.0]), R_target=0.3)
        v = np.array([0.5, 0.5])
        np.testing.assert_allclose(dykstra_project(v, fs, TIGHT), project_simplex(v))

    def test_matches_scalar_search(self):
        fs = FeasibleSet(mu=np.array([1.0, 0.0]), R_target=0.9)
        x = dykstra_project(np.array([0.5, 0.5]), fs, TIGHT)
        np.testing.assert_allclose(x, [0.9, 0.1], atol=1e-8)

    def test_matches_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            v = rng.standard_normal(5) * 4
            mu = rng.standard_normal(5)
            R = float(mu.min() + rng.uniform(0.2, 0.8) * (mu.max() - mu.min()))
            fs = FeasibleSet(mu=mu, R_target=R)
            np.testing.assert_allclose(
                dykstra_project(v, fs, TIGHT), project_exact(v, fs), atol=1e-8
            )


def test_config_validation():
    with pytest.raises(ArgumentError):
        ProjectionConfig(tol_scalar=0.0)
    with pytest.raises(ArgumentError):
        ProjectionConfig(dykstra_max_iters=0)
