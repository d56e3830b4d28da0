"""Tests for the partial module."""

import numpy as np
import pytest

from kernels import gaussian_matrix, qr_factor, random_generator, svd_dense, sym_eig_dense
from matgen import accuracy_report, expected_fraction, gen_svd_test, gen_sym_eig_test
from partial import (
    EmptySpectrumError,
    ShiftPlan,
    UnsupportedPlanError,
    choose_shift,
    detect_deficiency_index,
    qdwh_partial_eig,
    qdwh_partial_svd,
    subspace_sin_angle,
    svd_plan,
    verify_pert_bound,
)
from polar import iterations_to_converge


class TestChooseShift:
    """Tests for choose_shift and ShiftPlan."""

    def test_three_iterations(self):
        """Test the recommended plan."""
        plan = choose_shift(3)
        assert plan.s == 0.2
        assert plan.qdwh_iters == 3
        assert plan.variant == "three-step"

    def test_two_iterations(self):
        """Test the two-step plan."""
        plan = choose_shift(2)
        assert plan.s == 0.875
        assert plan.variant == "two-step"

    def test_default_is_three(self):
        """Test the default iteration count."""
        assert choose_shift().s == 0.2

    def test_unsupported(self):
        """Test iteration counts without a tabulated shift."""
        for iters in (1, 4, 0):
            with pytest.raises(UnsupportedPlanError, match="Expected 2 or 3"):
                choose_shift(iters)

    def test_plan_validation(self):
        """Test mismatched shift and count."""
        with pytest.raises(ValueError, match="requires 3 iterations with s=0.2"):
            ShiftPlan(0.3, 3, "three-step")
        with pytest.raises(ValueError, match="Unknown plan variant"):
            ShiftPlan(0.2, 3, "four-step")
        with pytest.raises(ValueError, match=r"'s' must lie in \(0, 1\)"):
            ShiftPlan(1.2, 3, "svd-threshold")

    def test_svd_plan(self):
        """Test that the SVD plan takes its step count from the ℓ recurrence."""
        plan = svd_plan(1e-4)
        assert plan.qdwh_iters == iterations_to_converge(1e-4)
        assert plan.variant == "svd-threshold"


class TestDetectDeficiencyIndex:
    """Tests for detect_deficiency_index function."""

    def test_trailing_small(self):
        """Test the last entry below tol."""
        assert detect_deficiency_index(np.diag([5.0, 3.0, 0.5, 1e-8])) == 4

    def test_none_below(self):
        """Test a full-rank diagonal."""
        assert detect_deficiency_index(np.diag([2.0, 1.5, 1.1])) is None

    def test_first_entry(self, capsys):
        """Test ind = 1 and its no-savings warning."""
        assert detect_deficiency_index(np.diag([1e-9, 1.0, 1.0])) == 1
        assert "no savings" in capsys.readouterr().err

    def test_uses_absolute_value(self):
        """Test negative diagonal entries."""
        assert detect_deficiency_index(np.diag([-2.0, -1e-5, 3.0])) == 2

    def test_custom_tol(self):
        """Test a looser threshold."""
        R = np.diag([1.0, 0.05, 0.001])
        assert detect_deficiency_index(R) == 3
        assert detect_deficiency_index(R, tol=0.1) == 2

    def test_non_square(self):
        """Test rectangular R."""
        with pytest.raises(ValueError, match="square R"):
            detect_deficiency_index(np.ones((2, 3)))


class TestQdwhPartialEig:
    """Tests for qdwh_partial_eig function."""

    def test_single_negative_last(self):
        """Test one negative eigenvalue placed last on the diagonal."""
        result = qdwh_partial_eig(np.diag([3.0, 2.0, 1.0, -0.5]), choose_shift(3))
        assert result.Lambda_minus == pytest.approx([-0.5], rel=1e-12)
        assert np.allclose(np.abs(result.V[:, 0]), [0.0, 0.0, 0.0, 1.0], atol=1e-12)
        assert result.subspace_size == 1
        assert result.rank_index == 4
        assert result.mu < 0

    def test_single_negative_first(self, capsys):
        """Test that a negative eigenvalue first on the diagonal keeps the whole space."""
        result = qdwh_partial_eig(np.diag([-0.5, 1.0, 2.0, 3.0]))
        assert result.Lambda_minus == pytest.approx([-0.5], rel=1e-12)
        assert result.subspace_size == 4
        assert result.diagnostics["no_savings"] is True
        assert "no savings" in capsys.readouterr().err

    def test_two_step_plan(self):
        """Test the two-iteration plan on a well-separated spectrum."""
        A = np.diag([20.0, 30.0, 40.0, 50.0, -0.5, -1.0])
        result = qdwh_partial_eig(A, choose_shift(2))
        assert np.allclose(result.Lambda_minus, [-1.0, -0.5], rtol=1e-12)
        assert result.subspace_size == 2
        assert result.shift == 0.875

    def test_positive_definite_is_empty(self):
        """Test that an SPD matrix raises EmptySpectrumError with an empty result."""
        with pytest.raises(EmptySpectrumError, match="No negative eigenvalues") as excinfo:
            qdwh_partial_eig(np.diag(np.arange(1.0, 11.0)))
        result = excinfo.value.result
        assert result.k == 0
        assert result.V.shape == (10, 0)
        assert result.mu >= 0

    def test_scale_equivariance(self):
        """Test that scaling A by γ > 0 scales the eigenvalues by γ."""
        A, _ = gen_sym_eig_test(40, 4, 3)
        base = qdwh_partial_eig(A)
        scaled = qdwh_partial_eig(10.0 * A)
        assert np.allclose(scaled.Lambda_minus, 10.0 * base.Lambda_minus, rtol=1e-12)

    def test_randomized(self):
        """Test that sketching gives the same eigenvalues."""
        A, D = gen_sym_eig_test(64, 6, 4)
        result = qdwh_partial_eig(A, use_randomization=True, seed=9)
        assert np.allclose(result.Lambda_minus, np.sort(D[D < 0]), rtol=1e-12)
        assert result.diagnostics["randomized"] is True

    def test_randomized_matches_plain(self):
        """Test that the sketched and plain QR paths return the same eigenvalues."""
        A, _ = gen_sym_eig_test(64, 6, 4)
        plain = qdwh_partial_eig(A)
        sketched = qdwh_partial_eig(A, use_randomization=True, seed=9)
        assert sketched.k == plain.k
        assert np.allclose(sketched.Lambda_minus, plain.Lambda_minus, rtol=1e-12, atol=0.0)

    def test_count_sound_seeded(self):
        """Test subspace_size ≥ the number of negative eigenvalues over 100 seeded matrices."""
        for trial in range(100):
            A, _ = gen_sym_eig_test(32, 1 + trial % 6, trial)
            negatives = int(np.sum(sym_eig_dense(A)[0] < 0))
            result = qdwh_partial_eig(A, seed=trial)
            assert result.subspace_size >= negatives
            assert result.k == negatives

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_basis_contains_negative_eigenspace(self, seed):
        """Test that span(Q2) contains the dense solver's negative eigenvectors."""
        n, k = 64, 6
        A, _ = gen_sym_eig_test(n, k, seed)
        result = qdwh_partial_eig(A)
        Q2 = result.basis
        assert Q2.shape == (n, result.subspace_size)

        complement = qr_factor(Q2)[0][:, Q2.shape[1] :]
        V_minus = sym_eig_dense(A)[1][:, :k]
        assert subspace_sin_angle(V_minus, Q2, complement) <= 1e-10

    def test_nonsymmetric_rejected(self):
        """Test nonsymmetric input."""
        with pytest.raises(ValueError, match="not symmetric"):
            qdwh_partial_eig(np.array([[1.0, 2.0], [0.0, -1.0]]))

    @pytest.mark.parametrize(
        "n",
        [128, 256, pytest.param(512, marks=pytest.mark.slow)],
    )
    def test_matches_dense_oracle(self, n):
        """Test all k negative eigenpairs against the dense solver."""
        k = n // 10
        A, D = gen_sym_eig_test(n, k, 1)
        result = qdwh_partial_eig(A, choose_shift(3))
        reference = sym_eig_dense(A)[0][:k]
        norm = np.abs(D).max()

        assert result.k == k
        assert result.subspace_size >= k
        assert np.all(np.abs(result.Lambda_minus - reference) <= 1e-12 * np.abs(reference))

        report = accuracy_report(A, result.V, result.Lambda_minus, result.V, np.sort(D)[:k])
        assert report.value_err <= 1e-12
        assert report.orth_right <= 1e-13
        assert report.resid_right <= 1e-12 * norm


class TestQdwhPartialSvd:
    """Tests for qdwh_partial_svd function."""

    def test_diagonal(self):
        """Test that values below s·α are discarded."""
        result = qdwh_partial_svd(np.diag([1.0, 0.5, 0.05]), s=0.1)
        assert np.allclose(result.Sigma1, [1.0, 0.5], rtol=1e-12)
        assert result.threshold == 0.1
        assert 1.0 <= result.alpha <= 1.05 + 1e-12

    def test_identity_keeps_everything(self, capsys):
        """Test that I keeps all values with a no-savings warning."""
        result = qdwh_partial_svd(np.eye(6), s=0.5)
        assert result.k == 6
        assert np.allclose(result.Sigma1, 1.0)
        assert result.subspace_size == 6
        assert "no savings" in capsys.readouterr().err

    def test_wide_uses_transpose(self):
        """Test m < n through Aᵀ with the vector roles swapped."""
        A = gaussian_matrix(10, 30, 5)
        result = qdwh_partial_svd(A, s=0.3)
        assert result.U1.shape[0] == 10
        assert result.V1.shape[0] == 30
        assert result.diagnostics["transposed"] is True
        residual = np.linalg.norm(A @ result.V1 - result.U1 * result.Sigma1, axis=0).max()
        assert residual <= 1e-12 * result.alpha
        reference = svd_dense(A)[1]
        assert np.allclose(result.Sigma1, reference[: result.k], rtol=1e-12)

    def test_qr_first_step_for_small_s(self):
        """Test that thresholds below 1e-3 start with the QR form."""
        A, _ = gen_svd_test(64, 3)
        assert qdwh_partial_svd(A, s=1e-4).diagnostics["first_step"] == "qr"
        assert qdwh_partial_svd(A, s=1e-2).diagnostics["first_step"] == "cholesky"

    @pytest.mark.parametrize("gamma", [1e-3, 1e3])
    def test_scale_equivariance(self, gamma):
        """Test that scaling A by γ scales Σ1 by γ and keeps the count."""
        A, _ = gen_svd_test(64, 5)
        base = qdwh_partial_svd(A, s=0.01)
        scaled = qdwh_partial_svd(gamma * A, s=0.01)
        assert scaled.k == base.k
        assert scaled.subspace_size == base.subspace_size
        assert np.allclose(scaled.Sigma1, gamma * base.Sigma1, rtol=1e-12, atol=0.0)

    def test_randomized_matches_plain(self):
        """Test that the sketched and plain QR paths return the same singular values."""
        A, _ = gen_svd_test(64, 6)
        plain = qdwh_partial_svd(A, s=0.01)
        sketched = qdwh_partial_svd(A, s=0.01, use_randomization=True, seed=3)
        assert sketched.k == plain.k
        assert np.allclose(sketched.Sigma1, plain.Sigma1, rtol=1e-12, atol=0.0)

    def test_count_sound_seeded(self):
        """Test subspace_size ≥ the number of σ above s·α over 100 seeded matrices."""
        thresholds = (0.3, 0.1, 0.01)
        for trial in range(100):
            if trial % 2:
                A, _ = gen_svd_test(32, trial)
            else:
                A = gaussian_matrix(40, 30, trial)
            s = thresholds[trial % 3]
            result = qdwh_partial_svd(A, s=s, seed=trial)
            above = int(np.sum(svd_dense(A)[1] > s * result.alpha))
            assert result.subspace_size >= above

    def test_basis_contains_right_vectors(self):
        """Test that span(Q2) contains the dense solver's leading right singular vectors."""
        A, _ = gen_svd_test(64, 7)
        result = qdwh_partial_svd(A, s=0.01)
        Q2 = result.basis
        complement = qr_factor(Q2)[0][:, Q2.shape[1] :]
        V_lead = svd_dense(A)[2][:, : result.k]
        assert subspace_sin_angle(V_lead, Q2, complement) <= 1e-10

    def test_invalid_threshold(self):
        """Test s outside (0, 1)."""
        with pytest.raises(ValueError, match=r"'s' must lie in \(0, 1\)"):
            qdwh_partial_svd(np.eye(3), s=1.0)

    @pytest.mark.parametrize("s", [1e-1, 1e-2, 1e-3, 1e-4])
    def test_fraction_and_accuracy(self, s):
        """Test count, values, orthogonality and residuals on the geometric spectrum."""
        n = 256
        A, D = gen_svd_test(n, 2)
        result = qdwh_partial_svd(A, s=s)
        k = result.k

        assert abs(k - n * expected_fraction(s)) <= 2
        assert result.subspace_size >= k
        assert np.all(result.Sigma1 > s * result.alpha)
        assert np.max(np.abs(result.Sigma1 - D[:k])) <= 1e-12 * D[0]

        report = accuracy_report(A, result.U1, result.Sigma1, result.V1, D[:k])
        assert report.value_err <= 1e-12
        assert report.orth_left <= 1e-12
        assert report.orth_right <= 1e-12
        assert report.resid_right <= 1e-12 * D[0]
        assert report.resid_left <= 1e-12 * D[0]


class TestSubspaceSinAngle:
    """Tests for subspace_sin_angle function."""

    def test_contained(self):
        """Test a subspace inside span(Q2)."""
        I = np.eye(3)
        assert subspace_sin_angle(I[:, [0]], I[:, :2], I[:, [2]]) == 0.0

    def test_orthogonal(self):
        """Test a subspace orthogonal to span(Q2)."""
        I = np.eye(3)
        assert subspace_sin_angle(I[:, [2]], I[:, :2], I[:, [2]]) == pytest.approx(1.0)

    def test_known_angle(self):
        """Test a 30 degree rotation."""
        I = np.eye(2)
        v = np.array([[np.cos(np.pi / 6)], [np.sin(np.pi / 6)]])
        assert subspace_sin_angle(v, I[:, [0]], I[:, [1]]) == pytest.approx(0.5)

    def test_dimension_checks(self):
        """Test mismatched shapes."""
        I = np.eye(3)
        with pytest.raises(ValueError, match="need cols\\(V0\\) <= cols\\(Q2\\)"):
            subspace_sin_angle(I[:, :2], I[:, [0]], I[:, 1:])
        with pytest.raises(ValueError, match="Row counts differ"):
            subspace_sin_angle(np.eye(4)[:, [0]], I[:, :2], I[:, [2]])


class TestVerifyPertBound:
    """Tests for verify_pert_bound function."""

    def test_random_instances(self):
        """Test lhs ≤ rhs on seeded random instances."""
        rng = random_generator(17)
        for _ in range(20):
            m = int(rng.integers(4, 15))
            n = m + int(rng.integers(0, 5))
            ell = int(rng.integers(1, m))
            V0, _ = qr_factor(rng.standard_normal((m, m)))
            lhs, rhs = verify_pert_bound(rng.standard_normal((m, n)), V0[:, :1], ell)
            assert 0.0 <= lhs <= rhs + 1e-12

    def test_near_null_space(self):
        """Test a V0 spanning an exact null space of Bᵀ."""
        rng = random_generator(5)
        m, n, k = 10, 12, 3
        V0, _ = qr_factor(rng.standard_normal((m, m)))
        V0 = V0[:, :k]
        B = rng.standard_normal((m, n))
        B = B - V0 @ (V0.T @ B)
        lhs, rhs = verify_pert_bound(B, V0, k)
        assert lhs <= 1e-12
        assert lhs <= rhs + 1e-12

    def test_whole_space(self):
        """Test ℓ = m, where the complement is empty."""
        assert verify_pert_bound(gaussian_matrix(4, 4, 1), np.eye(4)[:, [0]], 4) == (0.0, 0.0)

    def test_singular_r11(self):
        """Test that a singular leading block gives an infinite bound."""
        lhs, rhs = verify_pert_bound(np.zeros((4, 5)), np.eye(4)[:, [0]], 2)
        assert rhs == float("inf")

    def test_invalid(self):
        """Test tall B and ℓ < k."""
        with pytest.raises(ValueError, match="m <= n"):
            verify_pert_bound(np.ones((5, 3)), np.eye(5)[:, [0]], 1)
        with pytest.raises(ValueError, match="k <= ell <= m"):
            verify_pert_bound(np.ones((3, 4)), np.eye(3)[:, :2], 1)
