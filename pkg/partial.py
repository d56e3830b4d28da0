# Partial-spectrum eigensolver and truncated SVD
"""Partial spectrum solvers built on a few QDWH steps.

Instead of converging to the full polar factor, both solvers run the
weighted Halley iteration from ℓ0 = s so that only the wanted part of the
spectrum is flattened to ±1. The wanted subspace is then contained in the
numerical null space of a derived matrix, found from the diagonal of an
(unpivoted or sketched) QR factorization, and extracted by Rayleigh-Ritz on
the much smaller projected problem.
"""
from dataclasses import dataclass, field

import click
import numpy as np

from kernels import (
    gaussian_matrix,
    lanczos_min_bound,
    qr_factor,
    svd_dense,
    sym_eig_dense,
    two_norm_estimate,
)
from polar import halley_weights, run_fixed_iterations, weight_schedule
from validators import (
    UNIT_ROUNDOFF,
    check_count,
    check_dense_matrix,
    check_open_unit,
    check_seed,
    check_symmetric,
)

# smallest shift with |r(x) + 1| = O(u) on [-1, 0], per iteration count
EIG_SHIFTS = {2: 0.875, 3: 0.2}
DEFAULT_EIG_ITERS = 3
DEFAULT_TOL = 0.01
# below this threshold the first SVD step uses the QR form
QR_FIRST_BELOW = 1e-3
PLAN_VARIANTS = ("two-step", "three-step", "svd-threshold")


class UnsupportedPlanError(ValueError):
    """Raised for an iteration count without a tabulated shift."""


class EmptySpectrumError(ValueError):
    """Raised when the requested part of the spectrum is empty.

    The `result` attribute still carries an empty result with the scale,
    shift and subspace size that were reached.
    """

    def __init__(self, message: str, result):
        super().__init__(message)
        self.result = result


class ShiftPlan:
    """Shift s and QDWH iteration count for a partial solve.

    Attributes:
        s (float): Shift (EIG) or relative threshold (SVD), in (0, 1).
        qdwh_iters (int): Number of QDWH steps.
        variant (str): 'two-step', 'three-step' or 'svd-threshold'.
    """

    def __init__(self, s: float, qdwh_iters: int, variant: str):
        if variant not in PLAN_VARIANTS:
            raise ValueError(
                f"Unknown plan variant '{variant}'. Expected one of: {', '.join(PLAN_VARIANTS)}"
            )
        self.s = check_open_unit(s, "s")
        self.qdwh_iters = check_count(qdwh_iters, "qdwh_iters")
        self.variant = variant

        if variant != "svd-threshold":
            expected = 2 if variant == "two-step" else 3
            if self.qdwh_iters != expected or self.s != EIG_SHIFTS[expected]:
                raise ValueError(
                    f"Plan '{variant}' requires {expected} iterations with s={EIG_SHIFTS[expected]}, "
                    f"got {self.qdwh_iters} iterations with s={self.s}"
                )

    def __repr__(self) -> str:
        return f"ShiftPlan(s={self.s}, qdwh_iters={self.qdwh_iters}, variant='{self.variant}')"


@dataclass(frozen=True)
class PartialEigResult:
    """Negative eigenpairs of a symmetric matrix.

    basis is the orthonormal Q2 the Rayleigh-Ritz problem was solved on;
    it is None for an empty result.
    """

    Lambda_minus: np.ndarray
    V: np.ndarray
    subspace_size: int
    mu: float
    shift: float
    rank_index: int | None
    diagnostics: dict = field(default_factory=dict)
    basis: np.ndarray | None = None

    @property
    def k(self) -> int:
        return int(self.Lambda_minus.size)


@dataclass(frozen=True)
class PartialSvdResult:
    """Truncated SVD keeping the singular values above s·α.

    basis is the orthonormal Q2 spanning the retained right singular
    vectors (the left ones when the solve ran on Aᵀ); None when empty.
    """

    U1: np.ndarray
    Sigma1: np.ndarray
    V1: np.ndarray
    subspace_size: int
    alpha: float
    threshold: float
    rank_index: int | None = None
    diagnostics: dict = field(default_factory=dict)
    basis: np.ndarray | None = None

    @property
    def k(self) -> int:
        return int(self.Sigma1.size)


def choose_shift(qdwh_iters: int = DEFAULT_EIG_ITERS) -> ShiftPlan:
    """Tabulated shift for a two- or three-step partial eigensolve.

    Three steps (s = 0.2) is the recommended default: the composed rational
    then returns to O(1) already for x ≳ 0.1, keeping the subspace small.

    Raises:
        UnsupportedPlanError: For any count other than 2 or 3.

    Examples:
        >>> choose_shift(3).s
        0.2
        >>> choose_shift(2).s
        0.875
    """
    if qdwh_iters not in EIG_SHIFTS:
        raise UnsupportedPlanError(
            f"No tabulated shift for {qdwh_iters} QDWH iterations. Expected 2 or 3."
        )
    variant = "two-step" if qdwh_iters == 2 else "three-step"
    return ShiftPlan(EIG_SHIFTS[qdwh_iters], qdwh_iters, variant)


def svd_plan(s: float) -> ShiftPlan:
    """Plan for a threshold-s partial SVD; the step count comes from the ℓ recurrence."""
    s = check_open_unit(s, "s")
    return ShiftPlan(s, len(weight_schedule(s)), "svd-threshold")


def detect_deficiency_index(R, tol: float = DEFAULT_TOL) -> int | None:
    """First (1-based) position where |R_ii| drops below tol.

    The extracted subspace size is ℓ = n - ind + 1. None means no diagonal
    entry is below tol, i.e. the detected null space is empty.

    Examples:
        >>> detect_deficiency_index(np.diag([5.0, 3.0, 0.5, 1e-8]))
        4
        >>> detect_deficiency_index(np.diag([2.0, 1.5, 1.1])) is None
        True
    """
    R = check_dense_matrix(R, "R")
    n, m = R.shape
    if n != m:
        raise ValueError(f"Expected a square R, got {n}x{m}")

    below = np.flatnonzero(np.abs(np.diag(R)) < tol)
    if below.size == 0:
        return None

    ind = int(below[0]) + 1
    if ind == 1:
        click.echo(
            f"Warning: |R_11| is already below tol={tol}; the whole space is kept (no savings)",
            err=True,
        )
    return ind


def _warn_no_savings(ell: int, n: int, ind: int) -> bool:
    no_savings = 2 * ell > n
    if no_savings and ind != 1:
        click.echo(
            f"Warning: subspace size {ell} exceeds n/2 = {n / 2:g}; no savings over a full solve",
            err=True,
        )
    return no_savings


def _ell_trace(ell0: float, iters: int) -> list[float]:
    trace = [float(ell0)]
    for _ in range(iters):
        trace.append(halley_weights(trace[-1]).ell_out)
    return trace


def _empty_eig(n: int, mu: float, s: float, ind, ell: int, diagnostics: dict) -> PartialEigResult:
    return PartialEigResult(
        Lambda_minus=np.zeros(0),
        V=np.zeros((n, 0), order="F"),
        subspace_size=ell,
        mu=mu,
        shift=s,
        rank_index=ind,
        diagnostics=diagnostics,
    )


def qdwh_partial_eig(
    A,
    plan: ShiftPlan | None = None,
    use_randomization: bool = False,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    lanczos_steps: int = 30,
) -> PartialEigResult:
    """Negative eigenvalues and eigenvectors of a symmetric matrix.

    1. μ ≲ λ_min(A) from a short Lanczos run; A := A/|μ|.
    2. r(Ã) for Ã = (1 - s)A - sI with plan.qdwh_iters Cholesky-form steps
       from ℓ0 = s.
    3. QR of B = (r(Ã) + I)/2, or of B·Ω with Gaussian Ω.
    4-5. ind from diag(R); Q2 = trailing ℓ = n - ind + 1 columns of Q.
    6. Rayleigh-Ritz on Q2ᵀAQ2, keeping the negative Ritz pairs.
    7. Rescale the values by |μ|.

    Args:
        A: Symmetric matrix.
        plan: Shift plan; defaults to choose_shift(3).
        use_randomization: Sketch with Ω before the QR so that it is rank
            revealing with high probability.
        tol: Threshold on |R_ii|.
        seed: Seed for Ω and the Lanczos start vector.
        lanczos_steps: Number of Lanczos steps for μ.

    Returns:
        PartialEigResult with the negative eigenvalues in ascending order.

    Raises:
        EmptySpectrumError: If A shows no negative eigenvalue.
    """
    A = check_symmetric(A)
    A = np.asfortranarray((A + A.T) / 2.0)
    plan = plan or choose_shift(DEFAULT_EIG_ITERS)
    seed = check_seed(seed)
    n = A.shape[0]
    s = plan.s

    diagnostics = {
        "ell_trace": _ell_trace(s, plan.qdwh_iters),
        "tol": float(tol),
        "randomized": bool(use_randomization),
        "qdwh_iters": plan.qdwh_iters,
        "borderline": 0,
        "no_savings": False,
    }

    mu = lanczos_min_bound(A, steps=lanczos_steps, seed=seed)
    if mu >= 0:
        raise EmptySpectrumError(
            f"No negative eigenvalues detected (Lanczos bound mu={mu:.3e})",
            _empty_eig(n, mu, s, None, 0, diagnostics),
        )

    scale = abs(mu)
    A_scaled = A / scale
    shifted = (1.0 - s) * A_scaled - s * np.eye(n)
    r_shifted, _ = run_fixed_iterations(
        shifted, s, plan.qdwh_iters, variant="cholesky", symmetric=True
    )

    B = (r_shifted + np.eye(n)) / 2.0
    if use_randomization:
        B = B @ gaussian_matrix(n, n, seed)
    Q, R = qr_factor(B)

    ind = detect_deficiency_index(R, tol)
    if ind is None:
        raise EmptySpectrumError(
            "No eigenvalue was mapped to -1; the matrix has no negative eigenvalues",
            _empty_eig(n, mu, s, None, 0, diagnostics),
        )
    ell = n - ind + 1
    diagnostics["no_savings"] = _warn_no_savings(ell, n, ind)

    Q2 = Q[:, ind - 1 :]
    projected = Q2.T @ A_scaled @ Q2
    ritz_values, ritz_vectors = sym_eig_dense((projected + projected.T) / 2.0)

    negative = ritz_values < 0
    borderline_cut = n * UNIT_ROUNDOFF * np.linalg.norm(A_scaled)
    diagnostics["borderline"] = int(np.sum(negative & (ritz_values >= -borderline_cut)))
    diagnostics["discarded"] = int(np.sum(~negative))

    if not np.any(negative):
        raise EmptySpectrumError(
            "Rayleigh-Ritz found no negative eigenvalue",
            _empty_eig(n, mu, s, ind, ell, diagnostics),
        )

    return PartialEigResult(
        Lambda_minus=scale * ritz_values[negative],
        V=np.asfortranarray(Q2 @ ritz_vectors[:, negative]),
        subspace_size=ell,
        mu=mu,
        shift=s,
        rank_index=ind,
        diagnostics=diagnostics,
        basis=np.asfortranarray(Q2),
    )


def _empty_svd(m: int, n: int, ell: int, alpha: float, s: float, ind, diagnostics: dict):
    return PartialSvdResult(
        U1=np.zeros((m, 0), order="F"),
        Sigma1=np.zeros(0),
        V1=np.zeros((n, 0), order="F"),
        subspace_size=ell,
        alpha=alpha,
        threshold=s,
        rank_index=ind,
        diagnostics=diagnostics,
    )


def _transposed(result: PartialSvdResult) -> PartialSvdResult:
    return PartialSvdResult(
        U1=result.V1,
        Sigma1=result.Sigma1,
        V1=result.U1,
        subspace_size=result.subspace_size,
        alpha=result.alpha,
        threshold=result.threshold,
        rank_index=result.rank_index,
        diagnostics={**result.diagnostics, "transposed": True},
        basis=result.basis,
    )


def qdwh_partial_svd(
    A,
    s: float,
    tol: float = DEFAULT_TOL,
    use_randomization: bool = False,
    seed: int = 0,
) -> PartialSvdResult:
    """Singular triplets with σ > s·‖A‖₂.

    1. α ≈ ‖A‖₂ from two_norm_estimate; Ã = A/α.
    2. QDWH from ℓ0 = s until |ℓ_k - 1| < 5u; the step count is read off
       the scalar ℓ recurrence before any matrix work. The first step uses
       the QR form when s < 1e-3.
    3. QR of I - r(Ã)ᵀr(Ã) (times Ω when randomizing).
    4-5. ind from diag(R); Q2 = trailing ℓ columns of Q.
    6. SVD of A·Q2.
    7-8. Keep σ > s·α; U1 = Ũ1, Σ1 = Σ̃1, V1 = Q2·Ṽ1.

    Wide matrices (m < n) are handled through Aᵀ.

    Raises:
        EmptySpectrumError: If no singular value exceeds the threshold.

    Examples:
        >>> result = qdwh_partial_svd(np.diag([1.0, 0.5, 0.05]), s=0.1)
        >>> result.k
        2
    """
    A = check_dense_matrix(A)
    s = check_open_unit(s, "s")
    seed = check_seed(seed)
    m, n = A.shape
    if m < n:
        try:
            return _transposed(qdwh_partial_svd(A.T, s, tol, use_randomization, seed))
        except EmptySpectrumError as e:
            raise EmptySpectrumError(str(e), _transposed(e.result)) from e

    alpha = two_norm_estimate(A, seed=seed)
    plan = svd_plan(s)
    variant = "qr-first" if s < QR_FIRST_BELOW else "cholesky"

    diagnostics = {
        "ell_trace": _ell_trace(s, plan.qdwh_iters),
        "tol": float(tol),
        "randomized": bool(use_randomization),
        "qdwh_iters": plan.qdwh_iters,
        "first_step": "qr" if variant == "qr-first" else "cholesky",
        "no_savings": False,
    }

    X, _ = run_fixed_iterations(A / alpha, s, plan.qdwh_iters, variant=variant, symmetric=False)

    M = np.eye(n) - X.T @ X
    M = (M + M.T) / 2.0
    if use_randomization:
        M = M @ gaussian_matrix(n, n, seed)
    Q, R = qr_factor(M)

    ind = detect_deficiency_index(R, tol)
    if ind is None:
        raise EmptySpectrumError(
            f"No singular value was mapped to 1 for threshold s={s}",
            _empty_svd(m, n, 0, alpha, s, None, diagnostics),
        )
    ell = n - ind + 1
    diagnostics["no_savings"] = _warn_no_savings(ell, n, ind)

    Q2 = Q[:, ind - 1 :]
    U, sigma, V = svd_dense(A @ Q2)
    keep = sigma > s * alpha
    diagnostics["discarded"] = int(np.sum(~keep))

    if not np.any(keep):
        raise EmptySpectrumError(
            f"No singular value exceeds s*alpha = {s * alpha:.3e}",
            _empty_svd(m, n, ell, alpha, s, ind, diagnostics),
        )

    return PartialSvdResult(
        U1=np.asfortranarray(U[:, keep]),
        Sigma1=sigma[keep],
        V1=np.asfortranarray(Q2 @ V[:, keep]),
        subspace_size=ell,
        alpha=alpha,
        threshold=s,
        rank_index=ind,
        diagnostics=diagnostics,
        basis=np.asfortranarray(Q2),
    )


def subspace_sin_angle(V0, Q2, Q1) -> float:
    """Sine of the largest canonical angle between span(V0) and span(Q2).

    Computed as σ_max(V0ᵀQ1) where Q1 is the orthogonal complement of Q2.

    Raises:
        ValueError: On mismatched row counts or more columns in V0 than Q2.
    """
    V0 = np.asarray(V0, dtype=np.float64)
    Q2 = np.asarray(Q2, dtype=np.float64)
    Q1 = np.asarray(Q1, dtype=np.float64)
    m = V0.shape[0]
    if Q2.shape[0] != m or Q1.shape[0] != m:
        raise ValueError(
            f"Row counts differ: V0 has {m}, Q2 has {Q2.shape[0]}, Q1 has {Q1.shape[0]}"
        )
    if V0.shape[1] > Q2.shape[1]:
        raise ValueError(
            f"V0 has {V0.shape[1]} columns but Q2 only {Q2.shape[1]}; need cols(V0) <= cols(Q2)"
        )
    if Q1.shape[1] + Q2.shape[1] != m:
        raise ValueError("[Q1 Q2] must be square")
    if Q1.shape[1] == 0 or V0.shape[1] == 0:
        return 0.0

    _, sigma, _ = svd_dense(V0.T @ Q1)
    return float(min(sigma[0], 1.0))


def verify_pert_bound(B, V0, ell: int) -> tuple[float, float]:
    """Both sides of sin∠(V0, Q2) ≤ ‖V0ᵀB‖₂ / σ_min(R11).

    B = [Q1 Q2]·[[R11, R12], [0, R22]] is a full QR with Q2 holding the last
    ℓ columns and R11 of size (m - ℓ)×(m - ℓ).

    Args:
        B: m×n matrix with m ≤ n.
        V0: m×k matrix with orthonormal columns, k ≤ ℓ.
        ell: Size of the trailing block.

    Returns:
        (lhs, rhs); rhs is +inf when R11 is singular.
    """
    B = check_dense_matrix(B, "B")
    V0 = check_dense_matrix(V0, "V0")
    m, n = B.shape
    if m > n:
        raise ValueError(f"verify_pert_bound needs m <= n, got {m}x{n}")
    if V0.shape[0] != m:
        raise ValueError(f"V0 must have {m} rows, got {V0.shape[0]}")
    k = V0.shape[1]
    ell = check_count(ell, "ell")
    if not k <= ell <= m:
        raise ValueError(f"Need k <= ell <= m, got k={k}, ell={ell}, m={m}")

    Q, R = qr_factor(B, wide=True)
    split = m - ell
    lhs = subspace_sin_angle(V0, Q[:, split:], Q[:, :split])

    if split == 0:
        return (lhs, 0.0)

    sigma_min = svd_dense(R[:split, :split])[1][-1]
    numerator = svd_dense(V0.T @ B)[1][0]
    if sigma_min == 0.0:
        return (lhs, float("inf"))
    return (lhs, float(numerator / sigma_min))
