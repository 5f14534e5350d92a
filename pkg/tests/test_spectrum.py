import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strmv.errors import ArgumentError, DegenerateSpectrumError, NumericError
from strmv.spectrum import (
    TruncationRule,
    cumulative_energy,
    energy_rank,
    report_from_singular_values,
    select_truncation_level,
    thin_svd,
    truncation_error_bound,
)


class TestThinSVD:
    def test_diagonal(self):
        out = thin_svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(out.S, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(out.U), np.eye(2), atol=1e-12)

    def test_zero_matrix(self):
        out = thin_svd(np.zeros((4, 3)))
        assert out.rank == 0
        assert out.U.shape == (4, 0) and out.S.shape == (0,)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((6, 4))
        out = thin_svd(A)
        recon = (out.U * out.S) @ out.V.T
        assert np.linalg.norm(recon - A, 2) <= 1e-10 * out.S[0]
        assert np.abs(out.U.T @ out.U - np.eye(out.rank)).max() <= 1e-10
        assert np.abs(out.V.T @ out.V - np.eye(out.rank)).max() <= 1e-10
        # cross-check singular values against a dense eigensolve of A^T A
        lam = np.linalg.eigvalsh(A.T @ A)[::-1]
        np.testing.assert_allclose(out.S**2, lam[: out.rank], rtol=1e-10)

    def test_rank_tolerance_discards(self):
        A = np.diag([1.0, 1e-14])
        out = thin_svd(A, rank_tol=1e-10)
        assert out.rank == 1

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            thin_svd(np.array([[1.0, np.nan]]))

    def test_restricted_condition_number(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((5, 8))
        out = thin_svd(A)
        M = out.U.T @ (A @ A.T) @ out.U
        lam = np.linalg.eigvalsh(M)
        kappa = lam[-1] / lam[0]
        expect = (out.S[0] / out.S[-1]) ** 2
        assert abs(kappa - expect) / expect <= 1e-8


class TestEnergy:
    def test_examples(self):
        np.testing.assert_allclose(cumulative_energy([3.0, 1.0]), [0.75, 1.0])
        np.testing.assert_allclose(cumulative_energy([5.0]), [1.0])
        np.testing.assert_allclose(
            cumulative_energy([1.0, 1.0, 1.0, 1.0]), [0.25, 0.5, 0.75, 1.0]
        )

    def test_all_zero_flagged(self):
        energy = cumulative_energy([0.0, 0.0])
        np.testing.assert_array_equal(energy, [0.0, 0.0])
        report = report_from_singular_values([0.0, 0.0])
        assert report.degenerate and report.numerical_rank == 0

    def test_energy_rank(self):
        assert energy_rank([0.75, 1.0], 0.8) == 2
        assert energy_rank([0.75, 1.0], 0.7) == 1
        assert energy_rank([0.75, 1.0], 0.999) == 2

    def test_energy_rank_bad_eta(self):
        with pytest.raises(ArgumentError):
            energy_rank([0.5, 1.0], 1.0)
        with pytest.raises(ArgumentError):
            energy_rank([0.5, 1.0], 0.0)

    def test_report_serializable(self):
        import json

        report = report_from_singular_values([2.0, 1.0, 0.5])
        payload = json.dumps(report.to_dict())
        assert "numerical_rank" in payload


class TestTruncationRule:
    def test_hand_cases(self):
        # eigenvalue sequences from the rule's head/knee definition
        rule = TruncationRule(tau=1e-3, rho=0.9)
        lam = np.array([1.0, 0.5, 0.4, 1e-5])
        assert select_truncation_level(np.sqrt(lam), rule) == 3
        lam = np.array([1.0, 0.99, 0.98])
        assert select_truncation_level(np.sqrt(lam), rule) == 3
        lam = np.array([1.0, 1e-6, 1e-7])
        assert select_truncation_level(np.sqrt(lam), rule) == 1

    def test_degenerate(self):
        with pytest.raises(DegenerateSpectrumError):
            select_truncation_level(np.zeros(3), TruncationRule())

    def test_no_interior_knee_falls_back_to_head(self):
        # slow decay: the knee test never fires before the head runs out
        sig = 0.999 ** np.arange(5000)
        ell = select_truncation_level(sig, TruncationRule(tau=1e-3, rho=0.9))
        lam = sig**2
        assert lam[ell - 1] / lam[0] >= 1e-3
        assert ell == int(np.sum(lam / lam[0] >= 1e-3))

    def test_rule_validation(self):
        with pytest.raises(ArgumentError):
            TruncationRule(tau=0.0)
        with pytest.raises(ArgumentError):
            TruncationRule(rho=1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=12),
        st.floats(0.1, 100.0),
    )
    def test_scale_invariance(self, values, scale):
        sig = np.sort(np.asarray(values))[::-1]
        rule = TruncationRule(tau=1e-3, rho=0.9)
        a = select_truncation_level(sig, rule)
        b = select_truncation_level(sig * scale, rule)
        assert a == b


class TestTruncationBound:
    def test_arithmetic(self):
        assert truncation_error_bound([4.0, 1.0, 0.1], ell=2, epsilon=0.5) == pytest.approx(0.2)
        assert truncation_error_bound([4.0, 1.0, 0.1], ell=3, epsilon=0.5) == 0.0
        assert truncation_error_bound([4.0, 1.0, 0.1], ell=1, epsilon=0.0) == pytest.approx(1.0)

    def test_epsilon_range(self):
        with pytest.raises(ArgumentError):
            truncation_error_bound([1.0], ell=0, epsilon=1.0)


def test_eckart_young_on_random_covariance():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((8, 8))
    Sigma = A @ A.T
    lam, Q = np.linalg.eigh(Sigma)
    lam, Q = lam[::-1], Q[:, ::-1]
    for ell in (1, 3, 6):
        Sl = (Q[:, :ell] * lam[:ell]) @ Q[:, :ell].T
        err = np.linalg.norm(Sigma - Sl, 2)
        assert abs(err - lam[ell]) <= 1e-8 * max(lam[ell], 1e-30)
