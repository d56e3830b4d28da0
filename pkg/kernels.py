# Dense linear-algebra substrate
import numpy as np
import scipy.linalg

from validators import (
    UNIT_ROUNDOFF,
    check_count,
    check_dense_matrix,
    check_seed,
    check_symmetric,
)

NORM_SAFETY = 1.05
NORM_RTOL = 1e-3
NORM_MAX_STEPS = 100
LANCZOS_STEPS = 30
LANCZOS_INFLATION = 1.1


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot is not positive."""


def random_generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(check_seed(seed)))


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Draw an m×n matrix of i.i.d. standard normal entries.

    Uses a counter-based Philox generator so that the same seed gives the
    same matrix on every platform.

    Args:
        m: Number of rows (≥ 1).
        n: Number of columns (≥ 1).
        seed: 64-bit unsigned seed.

    Returns:
        Fortran-ordered float64 matrix.

    Examples:
        >>> np.array_equal(gaussian_matrix(2, 2, 0), gaussian_matrix(2, 2, 0))
        True
    """
    m = check_count(m, "m")
    n = check_count(n, "n")
    return np.asfortranarray(random_generator(seed).standard_normal((m, n)))


def qr_factor(
    A, wide: bool = False, economic: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR with the full orthogonal factor accumulated.

    No column pivoting and no sign normalization of diag(R); callers that
    read the diagonal look at |R_ii|.

    Args:
        A: m×n matrix with m ≥ n.
        wide: Also accept m < n (used by the subspace-angle checks, where a
            full QR of a wide matrix is needed).
        economic: Return only the leading n columns of Q and the n×n R
            (the QDWH step needs no trailing columns).

    Returns:
        (Q, R) with Q m×m orthogonal and R m×n upper triangular.

    Raises:
        ValueError: If A has non-finite entries or m < n without `wide`.
    """
    A = check_dense_matrix(A)
    m, n = A.shape
    if m < n and not wide:
        raise ValueError(f"qr_factor needs m >= n, got {m}x{n}")

    mode = "economic" if economic else "full"
    Q, R = scipy.linalg.qr(A, mode=mode, check_finite=False)
    return np.asfortranarray(Q), np.triu(R)


def cholesky(Z) -> np.ndarray:
    """Upper-triangular Cholesky factor W with Z = WᵀW.

    Raises:
        NotPositiveDefiniteError: If a pivot is not positive; the QDWH
            drivers use this to fall back to the QR-based step.
    """
    Z = check_dense_matrix(Z, "Z")
    n, m = Z.shape
    if n != m:
        raise ValueError(f"cholesky needs a square matrix, got {n}x{m}")

    try:
        W = scipy.linalg.cholesky(Z, lower=False, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"Matrix is not positive definite: {e}") from e

    if not np.all(np.diag(W) > 0):
        raise NotPositiveDefiniteError("Cholesky produced a non-positive pivot")
    return W


def sym_eig_dense(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthogonal eigenvectors of a symmetric matrix.

    Only the lower triangle is referenced after the symmetry check.
    """
    S = check_symmetric(S, "S")
    values, vectors = scipy.linalg.eigh(S, check_finite=False)
    return values, np.asfortranarray(vectors)


def svd_dense(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD of a dense matrix.

    Returns:
        (U, sigma, V) with sigma nonincreasing, U m×r and V n×r with
        orthonormal columns, r = min(m, n).
    """
    A = check_dense_matrix(A)
    U, sigma, Vt = scipy.linalg.svd(
        A, full_matrices=False, check_finite=False, lapack_driver="gesdd"
    )
    return np.asfortranarray(U), sigma, np.asfortranarray(Vt.T)


def two_norm_estimate(A, seed: int = 0) -> float:
    """Estimate ‖A‖₂ from above by power iteration on AᵀA.

    Iterates until the relative change of the estimate drops below 1e-3
    (at most 100 steps) and inflates the result by 5% so that
    σ_max(A/α) ≤ 1 in practice.

    Raises:
        ValueError: If A is the zero matrix.

    Examples:
        >>> 3.0 <= two_norm_estimate(np.diag([1.0, 2.0, 3.0])) <= 3.15
        True
    """
    A = check_dense_matrix(A)
    if not np.any(A):
        raise ValueError("Cannot estimate the norm of a zero matrix")

    v = gaussian_matrix(A.shape[1], 1, seed)[:, 0]
    v /= np.linalg.norm(v)
    estimate = 0.0

    for _ in range(NORM_MAX_STEPS):
        w = A @ v
        current = np.linalg.norm(w)
        z = A.T @ w
        z_norm = np.linalg.norm(z)
        if z_norm == 0.0:
            # start vector in the null space; restart from a basis vector
            v = np.zeros_like(v)
            v[np.argmax(np.linalg.norm(A, axis=0))] = 1.0
            continue
        v = z / z_norm
        if estimate > 0 and abs(current - estimate) <= NORM_RTOL * current:
            estimate = current
            break
        estimate = current

    # ‖Av‖ with ‖v‖ = 1 never exceeds ‖A‖₂, so the last step is the best lower bound
    estimate = max(estimate, np.linalg.norm(A @ v))
    return float(NORM_SAFETY * estimate)


def lanczos_min_bound(A, steps: int = LANCZOS_STEPS, seed: int = 0) -> float:
    """Approximate lower bound μ ≲ λ_min(A) from a short Lanczos run.

    Runs `steps` Lanczos steps (capped at n) with full reorthogonalization,
    takes the smallest Ritz value minus its residual bound β_m·|s_m|, and
    inflates a negative result by 10%.

    A nonnegative return value means the run found no negative eigenvalue
    evidence; callers treat it as "no negative spectrum".

    Examples:
        >>> -1.2 <= lanczos_min_bound(-np.eye(8)) <= -1.0
        True
    """
    A = check_symmetric(A)
    n = A.shape[0]
    steps = min(check_count(steps, "steps"), n)

    basis = np.zeros((n, steps), order="F")
    alphas = np.zeros(steps)
    betas = np.zeros(steps)

    q = gaussian_matrix(n, 1, seed)[:, 0]
    q /= np.linalg.norm(q)
    m = 0
    beta = 0.0
    for j in range(steps):
        basis[:, j] = q
        w = A @ q
        alphas[j] = q @ w
        # full reorthogonalization, applied twice
        for _ in range(2):
            w -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        beta = np.linalg.norm(w)
        betas[j] = beta
        m = j + 1
        if beta <= n * UNIT_ROUNDOFF * max(np.abs(alphas[: j + 1]).max(), 1e-300):
            beta = 0.0
            break
        q = w / beta

    if m == 1:
        theta = np.array([alphas[0]])
        last_components = np.array([1.0])
    else:
        theta, ritz = scipy.linalg.eigh_tridiagonal(alphas[:m], betas[: m - 1])
        last_components = ritz[-1, :]

    bound = theta[0] - beta * abs(last_components[0])
    if bound < 0:
        bound *= LANCZOS_INFLATION
    return float(bound)
