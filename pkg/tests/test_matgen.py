"""Tests for the matgen module."""

import numpy as np
import pytest

from kernels import svd_dense, sym_eig_dense
from matgen import (
    FLOP_KINDS,
    accuracy_report,
    expected_fraction,
    flop_estimate,
    gen_svd_test,
    gen_sym_eig_test,
)


class TestGenSymEigTest:
    """Tests for gen_sym_eig_test function."""

    def test_negative_count(self):
        """Test exactly k negative planted eigenvalues."""
        A, D = gen_sym_eig_test(8, 2, 1)
        assert int((D < 0).sum()) == 2
        assert np.all(D[:2] < 0)
        assert np.all(D[2:] >= 0.1 * 2)

    def test_spectrum_round_trip(self):
        """Test that the dense solver recovers the planted spectrum."""
        A, D = gen_sym_eig_test(8, 2, 1)
        values = sym_eig_dense(A)[0]
        assert np.allclose(values, np.sort(D), rtol=1e-12, atol=1e-12 * np.abs(D).max())

    def test_symmetric_and_deterministic(self):
        """Test exact symmetry and bitwise reproducibility."""
        A1, D1 = gen_sym_eig_test(30, 3, 5)
        A2, D2 = gen_sym_eig_test(30, 3, 5)
        assert np.array_equal(A1, A1.T)
        assert np.array_equal(A1, A2)
        assert np.array_equal(D1, D2)

    def test_invalid_k(self):
        """Test k outside [1, n)."""
        with pytest.raises(ValueError, match="'k' must be at least 1"):
            gen_sym_eig_test(4, 0, 1)
        with pytest.raises(ValueError, match="1 <= k < n"):
            gen_sym_eig_test(4, 4, 1)

    @pytest.mark.parametrize("seed", range(10))
    def test_positive_band(self, seed):
        """Test 0.1k ≤ D[i] ≤ n - 0.1k for every positive planted eigenvalue."""
        n, k = 10, 9
        _, D = gen_sym_eig_test(n, k, seed)
        assert np.all(D[k:] >= 0.1 * k)
        assert np.all(D[k:] <= n - 0.1 * k)
        assert np.all(D[:k] <= -0.1 * k)


class TestGenSvdTest:
    """Tests for gen_svd_test function."""

    def test_formula(self):
        """Test the first and last planted values."""
        A, D = gen_svd_test(100, 2)
        assert D[0] == 0.5
        assert D[-1] == pytest.approx(0.5**100)

    def test_round_trip(self):
        """Test that the dense SVD recovers the values above the noise floor."""
        A, D = gen_svd_test(64, 3)
        sigma = svd_dense(A)[1]
        assert np.max(np.abs(sigma - D)) <= 1e-12 * D[0]

    def test_count_matches_fraction(self):
        """Test the count of values above 0.1·σ₁ against expected_fraction."""
        n = 200
        _, D = gen_svd_test(n, 1)
        count = int((D > 0.1 * D[0]).sum())
        assert abs(count - n * expected_fraction(0.1)) <= 2

    def test_deterministic(self):
        """Test bitwise reproducibility."""
        assert np.array_equal(gen_svd_test(20, 4)[0], gen_svd_test(20, 4)[0])


class TestExpectedFraction:
    """Tests for expected_fraction function."""

    def test_values(self):
        """Test the closed form at the sweep thresholds."""
        assert expected_fraction(0.5) == 0.01
        assert expected_fraction(0.1) == pytest.approx(0.0332, abs=1e-4)
        assert expected_fraction(1e-4) == pytest.approx(0.1329, abs=1e-4)

    @pytest.mark.parametrize("n", [100, 256, 512])
    @pytest.mark.parametrize("s", [1e-1, 1e-2, 1e-3, 1e-4])
    def test_consistency(self, n, s):
        """Test |count/n - fraction| ≤ 2/n across sizes and thresholds."""
        _, D = gen_svd_test(n, 0)
        count = int((D > s * D[0]).sum())
        assert abs(count / n - expected_fraction(s)) <= 2 / n

    def test_invalid(self):
        """Test s outside (0, 1)."""
        with pytest.raises(ValueError, match=r"'s' must lie in \(0, 1\)"):
            expected_fraction(0.0)


class TestAccuracyReport:
    """Tests for accuracy_report function."""

    def test_exact_decomposition(self):
        """Test that an exact SVD reports zero errors."""
        A = np.diag([3.0, 2.0, 1.0])
        I = np.eye(3)
        report = accuracy_report(A, I, [3.0, 2.0, 1.0], I, [3.0, 2.0, 1.0])
        assert report.orth_left <= 1e-15
        assert report.orth_right <= 1e-15
        assert report.value_err == 0.0
        assert report.resid_right <= 1e-15
        assert report.resid_left <= 1e-15
        assert (report.n, report.k) == (3, 3)

    def test_perturbed_orthogonality(self):
        """Test the first-order effect of a perturbed U."""
        n = 4
        A = np.diag([4.0, 3.0, 2.0, 1.0])
        U = np.eye(n)
        U[0, 0] += 1e-8
        report = accuracy_report(A, U, [4.0, 3.0, 2.0, 1.0], np.eye(n))
        assert report.orth_left == pytest.approx(2e-8 / n, rel=1e-6)
        assert report.orth_right == 0.0

    def test_value_error_optional(self):
        """Test that value_err is None without a reference."""
        report = accuracy_report(np.eye(2), np.eye(2), [1.0, 1.0], np.eye(2))
        assert report.value_err is None

    def test_symmetric_residual(self):
        """Test the eigenpair residual with U = V."""
        A = np.array([[2.0, 1.0], [1.0, 2.0]])
        values, V = sym_eig_dense(A)
        report = accuracy_report(A, V, values, V)
        assert report.resid_right <= 1e-14
        assert report.resid_right == pytest.approx(report.resid_left, abs=1e-15)

    def test_strict_pairing(self):
        """Test the swapped pairing against the standard one."""
        A = np.array([[0.0, 2.0], [0.0, 0.0]])
        U = np.array([[1.0], [0.0]])
        V = np.array([[0.0], [1.0]])
        standard = accuracy_report(A, U, [2.0], V)
        strict = accuracy_report(A, U, [2.0], V, strict_residual=True)
        assert standard.resid_right == 0.0
        assert standard.resid_left == 0.0
        assert strict.resid_right > 0.0

    def test_strict_requires_square(self):
        """Test the swapped pairing on a tall matrix."""
        with pytest.raises(ValueError, match="square matrix"):
            accuracy_report(np.ones((3, 2)), np.ones((3, 1)), [1.0], np.ones((2, 1)), strict_residual=True)

    def test_empty(self):
        """Test k = 0."""
        report = accuracy_report(np.eye(3), np.zeros((3, 0)), [], np.zeros((3, 0)), [])
        assert report.k == 0
        assert report.value_err == 0.0

    def test_reference_length_mismatch(self):
        """Test a reference of the wrong length."""
        with pytest.raises(ValueError, match="Expected 2 reference values"):
            accuracy_report(np.eye(2), np.eye(2), [1.0, 1.0], np.eye(2), [1.0])

    def test_transposed_u_rejected(self):
        """Test that a kxm U is not silently reshaped into mxk."""
        A = np.diag([3.0, 2.0, 1.0, 0.5])
        U = np.eye(4)[:, :2]
        with pytest.raises(ValueError, match="Dimension mismatch: U must be 4x2, got 2x4"):
            accuracy_report(A, U.T, [3.0, 2.0], U)

    def test_wrong_v_shape(self):
        """Test a V with the wrong row count."""
        A = np.ones((5, 3))
        with pytest.raises(ValueError, match="Dimension mismatch: V must be 3x1, got 5x1"):
            accuracy_report(A, np.ones((5, 1)), [1.0], np.ones((5, 1)))

    def test_as_dict(self):
        """Test the serializable form."""
        report = accuracy_report(np.eye(2), np.eye(2), [1.0, 1.0], np.eye(2))
        assert set(report.as_dict()) == {
            "orth_left",
            "orth_right",
            "value_err",
            "resid_right",
            "resid_left",
            "n",
            "k",
        }


class TestFlopEstimate:
    """Tests for flop_estimate function."""

    def test_standard_solvers(self):
        """Test the dense EIG and SVD counts."""
        assert flop_estimate("std-eig", 1000).total == 9e9
        assert flop_estimate("std-svd", 1000).total == 17e9

    def test_partial_eig(self):
        """Test the partial EIG closed form term by term."""
        estimate = flop_estimate("partial-eig", 1000, n_s=100, it_chol=3)
        assert estimate.total == pytest.approx(13e9 + 4e9 / 3 + 1e8 + 2e7 + 9e6, rel=1e-12)
        assert [term for term, _ in estimate.breakdown] == ["qdwh_chol", "qr", "syrk", "gemm", "eig"]

    def test_partial_eig_limit(self):
        """Test the n_s → 0 limit of 14⅓ N³."""
        estimate = flop_estimate("partial-eig", 1000, n_s=0, it_chol=3)
        assert estimate.total / 1e9 == pytest.approx(13 + 4 / 3, rel=1e-12)

    def test_partial_svd_limit(self):
        """Test the n_s → 0 limit of 24 N³ with one QR and three Cholesky steps."""
        estimate = flop_estimate("partial-svd", 1000, n_s=0, it_qr=1, it_chol=3)
        assert estimate.total / 1e9 == pytest.approx(24.0, rel=1e-12)

    def test_total_is_sum(self):
        """Test total = sum(breakdown) and nonnegative terms for every kind."""
        for kind in FLOP_KINDS:
            estimate = flop_estimate(kind, 500, n_s=50, it_qr=2, it_chol=4)
            assert estimate.total == pytest.approx(sum(flops for _, flops in estimate.breakdown))
            assert all(flops >= 0 for _, flops in estimate.breakdown)

    def test_partial_cheaper_than_full(self):
        """Test that small subspaces beat the full QDWH solvers."""
        full_eig = flop_estimate("qdwh-eig-full", 1000, it_qr=3, it_chol=3)
        partial_eig = flop_estimate("partial-eig", 1000, n_s=100, it_chol=3)
        assert partial_eig.total < full_eig.total

        full_svd = flop_estimate("qdwh-svd-full", 1000, it_qr=3, it_chol=3)
        partial_svd = flop_estimate("partial-svd", 1000, n_s=100, it_qr=1, it_chol=3)
        assert partial_svd.total < full_svd.total

    def test_invalid(self):
        """Test unknown kinds and n_s > n."""
        with pytest.raises(ValueError, match="Unknown kind 'lu'"):
            flop_estimate("lu", 10)
        with pytest.raises(ValueError, match="n_s must not exceed n"):
            flop_estimate("partial-eig", 10, n_s=11)
