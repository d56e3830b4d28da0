# Test-matrix generators, accuracy metrics and the flop cost model
from dataclasses import dataclass, field
import math

import numpy as np

from kernels import qr_factor, random_generator
from validators import check_count, check_dense_matrix, check_open_unit

FLOP_KINDS = (
    "std-eig",
    "qdwh-eig-full",
    "partial-eig",
    "std-svd",
    "qdwh-svd-full",
    "partial-svd",
)
# positive eigenvalues are kept at least this many multiples of k above zero
POSITIVE_MARGIN = 0.1
# halving recursion: each level costs 2·(1/2)³ of its parent, summed geometrically
RECURSION_FACTOR = 4.0 / 3.0


@dataclass(frozen=True)
class AccuracyReport:
    """Orthogonality, value and residual metrics for k computed pairs.

    value_err is None when no reference spectrum was supplied.
    """

    orth_left: float
    orth_right: float
    value_err: float | None
    resid_right: float
    resid_left: float
    n: int
    k: int

    def as_dict(self) -> dict[str, float | int | None]:
        return {
            "orth_left": self.orth_left,
            "orth_right": self.orth_right,
            "value_err": self.value_err,
            "resid_right": self.resid_right,
            "resid_left": self.resid_left,
            "n": self.n,
            "k": self.k,
        }


@dataclass(frozen=True)
class FlopEstimate:
    """Closed-form operation count with its per-term breakdown."""

    kind: str
    n: int
    n_s: int
    it_qr: int
    it_chol: int
    total: float
    breakdown: list[tuple[str, float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "n_s": self.n_s,
            "it_qr": self.it_qr,
            "it_chol": self.it_chol,
            "total": self.total,
            "breakdown": [{"term": term, "flops": flops} for term, flops in self.breakdown],
        }


def _orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, _ = qr_factor(rng.standard_normal((n, n)))
    return Q


def _magnitudes(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.abs(rng.standard_normal(size)) + 0.1


def gen_sym_eig_test(n: int, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric test matrix with exactly k negative eigenvalues.

    D[i] = -k·g_i for i ≤ k and D[i] = n - k·g_i for i > k, where
    g_i = |N(0,1)| + 0.1; a positive entry is redrawn until it stays
    above 0.1·k. A = Q·diag(D)·Qᵀ with Q from the QR of a Gaussian matrix.

    Args:
        n: Matrix size.
        k: Number of negative eigenvalues, 1 ≤ k < n.
        seed: Generator seed.

    Returns:
        (A, D) with D in construction order (negatives first).

    Raises:
        ValueError: If k is outside [1, n).

    Examples:
        >>> A, D = gen_sym_eig_test(8, 2, 1)
        >>> int((D < 0).sum())
        2
    """
    n = check_count(n, "n", minimum=2)
    k = check_count(k, "k", minimum=1)
    if k >= n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")

    rng = random_generator(seed)
    negative = -k * _magnitudes(rng, k)
    positive = n - k * _magnitudes(rng, n - k)
    too_small = positive < POSITIVE_MARGIN * k
    while np.any(too_small):
        positive[too_small] = n - k * _magnitudes(rng, int(too_small.sum()))
        too_small = positive < POSITIVE_MARGIN * k

    D = np.concatenate([negative, positive])
    Q = _orthogonal(n, rng)
    A = (Q * D) @ Q.T
    A = np.asfortranarray((A + A.T) / 2.0)
    return A, D


def gen_svd_test(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Square test matrix with a geometric singular spectrum.

    σ_i = 0.5^(100·i/n) for i = 1..n and A = Q1·diag(σ)·Q2ᵀ with independent
    orthogonal Q1, Q2.

    Examples:
        >>> A, D = gen_svd_test(100, 2)
        >>> float(D[0])
        0.5
    """
    n = check_count(n, "n", minimum=2)
    rng = random_generator(seed)

    D = 0.5 ** (np.arange(1, n + 1) / n * 100.0)
    Q1 = _orthogonal(n, rng)
    Q2 = _orthogonal(n, rng)
    A = np.asfortranarray((Q1 * D) @ Q2.T)
    return A, D


def expected_fraction(s: float) -> float:
    """Fraction of the geometric test spectrum lying above s·σ₁.

    Examples:
        >>> expected_fraction(0.5)
        0.01
    """
    s = check_open_unit(s, "s")
    return min(math.log2(1.0 / s) / 100.0, 1.0)


def _conforming(M, shape: tuple[int, int], name: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.shape != shape:
        got = "x".join(str(d) for d in M.shape)
        raise ValueError(f"Dimension mismatch: {name} must be {shape[0]}x{shape[1]}, got {got}")
    return M


def _max_column_norm(M: np.ndarray) -> float:
    if M.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(M, axis=0).max())


def accuracy_report(
    A,
    U,
    Sigma,
    V,
    Delta=None,
    strict_residual: bool = False,
) -> AccuracyReport:
    """Accuracy metrics for k computed singular triplets or eigenpairs.

    - orthogonality: ‖I - UᵀU‖_F/n and ‖I - VᵀV‖_F/n (1/n scaling kept as
      the reference metrics define it; n is the column count of A)
    - value error: ‖Σ - Δ‖_F/‖Δ‖_F when the exact values Δ are supplied
    - residuals: maxᵢ‖A·V(:,i) - σᵢU(:,i)‖ and maxᵢ‖Aᵀ·U(:,i) - σᵢV(:,i)‖

    For a symmetric eigenproblem pass U = V and Sigma = eigenvalues; both
    residuals then reduce to maxᵢ‖A·V(:,i) - λᵢV(:,i)‖.

    Args:
        strict_residual: Use the swapped pairing A·U(:,i) - σᵢV(:,i) and
            A·V(:,i) - σᵢU(:,i) instead (square A only).

    Raises:
        ValueError: On non-conforming dimensions.
    """
    A = check_dense_matrix(A)
    m, n = A.shape
    Sigma = np.asarray(Sigma, dtype=np.float64).ravel()
    k = Sigma.size
    U = _conforming(U, (m, k), "U")
    V = _conforming(V, (n, k), "V")

    if k == 0:
        return AccuracyReport(0.0, 0.0, None if Delta is None else 0.0, 0.0, 0.0, n, 0)

    eye = np.eye(k)
    orth_left = float(np.linalg.norm(eye - U.T @ U) / n)
    orth_right = float(np.linalg.norm(eye - V.T @ V) / n)

    value_err = None
    if Delta is not None:
        Delta = np.asarray(Delta, dtype=np.float64).ravel()
        if Delta.size != k:
            raise ValueError(f"Expected {k} reference values, got {Delta.size}")
        value_err = float(np.linalg.norm(Sigma - Delta) / np.linalg.norm(Delta))

    if strict_residual:
        if m != n:
            raise ValueError("The swapped residual pairing needs a square matrix")
        resid_right = _max_column_norm(A @ U - V * Sigma)
        resid_left = _max_column_norm(A @ V - U * Sigma)
    else:
        resid_right = _max_column_norm(A @ V - U * Sigma)
        resid_left = _max_column_norm(A.T @ U - V * Sigma)

    return AccuracyReport(
        orth_left=orth_left,
        orth_right=orth_right,
        value_err=value_err,
        resid_right=resid_right,
        resid_left=resid_left,
        n=n,
        k=k,
    )


def _full_eig_terms(N: float, it_qr: int, it_chol: int) -> list[tuple[str, float]]:
    per_level = [
        ("qdwh_qr", (8 + 2 / 3) * N**3 * it_qr),
        ("qdwh_chol", (4 + 1 / 3) * N**3 * it_chol),
        ("sketch_gemm", 2 * N**3),
        ("subspace_qr", 4 / 3 * N**3),
        ("rayleigh_ritz", 2 * N**3),
        ("assembly", N**3),
    ]
    return [(term, RECURSION_FACTOR * flops) for term, flops in per_level]


def flop_estimate(
    kind: str, n: int, n_s: int = 0, it_qr: int = 0, it_chol: int = 0
) -> FlopEstimate:
    """Operation count of an EIG/SVD variant on an n×n matrix.

    Partial and standard variants follow the published closed forms term by
    term. The full QDWH variants are modelled per recursion level (polar
    iterations, sketch, subspace QR, Rayleigh-Ritz, assembly) and summed over
    the halving recursion, so their cost follows the supplied iteration mix.

    Args:
        kind: One of FLOP_KINDS.
        n: Matrix size N.
        n_s: Reduced problem size N_s (0 ≤ n_s ≤ n).
        it_qr: Number of QR-based QDWH iterations.
        it_chol: Number of Cholesky-based QDWH iterations.

    Raises:
        ValueError: For an unknown kind or out-of-range sizes.

    Examples:
        >>> flop_estimate("std-eig", 1000).total
        9000000000.0
    """
    if kind not in FLOP_KINDS:
        raise ValueError(f"Unknown kind '{kind}'. Expected one of: {', '.join(FLOP_KINDS)}")
    n = check_count(n, "n")
    n_s = check_count(n_s, "n_s", minimum=0)
    it_qr = check_count(it_qr, "it_qr", minimum=0)
    it_chol = check_count(it_chol, "it_chol", minimum=0)
    if n_s > n:
        raise ValueError(f"n_s must not exceed n, got n_s={n_s}, n={n}")

    N = float(n)
    Ns = float(n_s)

    if kind == "std-eig":
        breakdown = [("eig", 9 * N**3)]
    elif kind == "std-svd":
        breakdown = [("svd", 17 * N**3)]
    elif kind == "partial-eig":
        breakdown = [("qdwh_chol", (4 + 1 / 3) * N**3 * it_chol)]
        if it_qr:
            breakdown.append(("qdwh_qr", (8 + 2 / 3) * N**3 * it_qr))
        breakdown += [
            ("qr", 4 / 3 * N**3),
            ("syrk", Ns * N**2),
            ("gemm", 2 * Ns**2 * N),
            ("eig", 9 * Ns**3),
        ]
    elif kind == "partial-svd":
        breakdown = [
            ("qdwh_qr", (8 + 2 / 3) * N**3 * it_qr),
            ("qdwh_chol", (4 + 1 / 3) * N**3 * it_chol),
            ("qr", 4 / 3 * N**3),
            ("syrk", N**3),
            ("gemm", 4 * N * Ns**2),
            ("svd", 17 * Ns**3),
        ]
    elif kind == "qdwh-eig-full":
        breakdown = _full_eig_terms(N, it_qr, it_chol)
    else:
        breakdown = [
            ("polar_qr", (8 + 2 / 3) * N**3 * it_qr),
            ("polar_chol", (4 + 1 / 3) * N**3 * it_chol),
            ("form_h", 2 * N**3),
        ]
        breakdown += [(f"eig_{term}", flops) for term, flops in _full_eig_terms(N, it_qr, it_chol)]
        breakdown.append(("form_u", 2 * N**3))

    return FlopEstimate(
        kind=kind,
        n=n,
        n_s=n_s,
        it_qr=it_qr,
        it_chol=it_chol,
        total=float(sum(flops for _, flops in breakdown)),
        breakdown=breakdown,
    )
