# Full-spectrum QDWH baselines
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import click
import numpy as np

from kernels import gaussian_matrix, qr_factor, sym_eig_dense
from polar import NotConvergedError, PolarConfig, polar_decompose
from validators import check_count, check_dense_matrix, check_seed, check_symmetric

BASE_SIZE = 32
SPLIT_ATTEMPTS = 3
# allowed distance of trace(C) from an integer before the split is retried
TRACE_SLACK = 0.01
# singular values below this multiple of ell0·α are not mapped to 1 by the
# polar iteration; their U columns are rebuilt
RANK_CUTOFF = 10.0
SEED_MASK = 2**64 - 1


@dataclass(frozen=True)
class EigResult:
    """Full symmetric eigendecomposition A = V·diag(Lambda)·Vᵀ."""

    Lambda: np.ndarray
    V: np.ndarray
    depth: int


@dataclass(frozen=True)
class SvdResult:
    """Full SVD A = U·diag(Sigma)·Vᵀ with Sigma descending."""

    U: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray


def _child_seeds(seed: int) -> tuple[int, int]:
    return ((2 * seed + 1) & SEED_MASK, (2 * seed + 2) & SEED_MASK)


def _dense_block(A: np.ndarray) -> EigResult:
    values, vectors = sym_eig_dense(A)
    return EigResult(Lambda=values, V=vectors, depth=0)


def _spectral_split(A: np.ndarray, seed: int, cfg: PolarConfig):
    """Split span(A) into the invariant subspaces below/above the mean eigenvalue.

    Returns (V_minus, V_plus) or None when no clean split was found.
    """
    n = A.shape[0]
    sigma = np.trace(A) / n
    scale = np.linalg.norm(A)

    for attempt in range(SPLIT_ATTEMPTS):
        # nudge the shift off an eigenvalue that sits exactly on the mean;
        # a singular shifted block shows up as a non-orthonormal polar factor
        shift = sigma + attempt * 1e-3 * scale / n
        shifted = A - shift * np.eye(n)
        if not np.any(shifted):
            return None
        shifted = (shifted + shifted.T) / 2.0

        try:
            Up = polar_decompose(shifted, cfg).Up
        except NotConvergedError:
            continue
        C = (np.eye(n) - Up) / 2.0
        C = (C + C.T) / 2.0
        trace = np.trace(C)
        k = int(round(trace))

        if abs(trace - k) > TRACE_SLACK:
            continue
        if k == 0 or k == n:
            return None

        Q, _ = qr_factor(C @ gaussian_matrix(n, n, seed))
        return Q[:, :k], Q[:, k:]

    return None


def _project(A: np.ndarray, basis: np.ndarray) -> np.ndarray:
    block = basis.T @ A @ basis
    return (block + block.T) / 2.0


def _solve_block(
    A: np.ndarray,
    seed: int,
    base_size: int,
    cfg: PolarConfig,
    pool: ThreadPoolExecutor | None,
) -> EigResult:
    n = A.shape[0]
    if n <= base_size:
        return _dense_block(A)

    split = _spectral_split(A, seed, cfg)
    if split is None:
        click.echo(f"Warning: no spectral split for block of size {n}; using dense solver", err=True)
        return _dense_block(A)

    V_minus, V_plus = split
    seed_minus, seed_plus = _child_seeds(seed)
    blocks = [(_project(A, V_minus), seed_minus), (_project(A, V_plus), seed_plus)]

    if pool is not None:
        # halves are independent; only the top level fans out
        futures = [pool.submit(_solve_block, block, s, base_size, cfg, None) for block, s in blocks]
        lower, upper = (f.result() for f in futures)
    else:
        lower, upper = (_solve_block(block, s, base_size, cfg, None) for block, s in blocks)

    values = np.concatenate([lower.Lambda, upper.Lambda])
    vectors = np.hstack([V_minus @ lower.V, V_plus @ upper.V])
    order = np.argsort(values, kind="stable")

    return EigResult(
        Lambda=values[order],
        V=np.asfortranarray(vectors[:, order]),
        depth=max(lower.depth, upper.depth) + 1,
    )


def qdwh_eig_full(
    A,
    base_size: int = BASE_SIZE,
    seed: int = 0,
    threads: int = 1,
    cfg: PolarConfig | None = None,
) -> EigResult:
    """Full symmetric eigendecomposition by QDWH spectral divide and conquer.

    Each level shifts by σ = trace(A)/n, computes the polar factor Up of
    A - σI, and reads the projector C = (I - Up)/2 onto the eigenvectors
    below σ. k = round(trace(C)) columns of a randomized QR of C·Ω span that
    subspace; the two Rayleigh-Ritz blocks are solved recursively until
    they are no larger than base_size.

    Args:
        A: Symmetric matrix.
        base_size: Block size at which the dense solver takes over.
        seed: Seed for the Gaussian sketches.
        threads: Run the two top-level halves concurrently when > 1.
        cfg: Polar driver settings for each split.

    Returns:
        EigResult with ascending eigenvalues.

    Examples:
        >>> result = qdwh_eig_full(np.diag(np.arange(1.0, 9.0)), base_size=2)
        >>> result.Lambda.tolist()[0]
        1.0
    """
    A = check_symmetric(A)
    A = np.asfortranarray((A + A.T) / 2.0)
    base_size = check_count(base_size, "base_size")
    threads = check_count(threads, "threads")
    seed = check_seed(seed)
    cfg = cfg or PolarConfig()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return _solve_block(A, seed, base_size, cfg, pool)
    return _solve_block(A, seed, base_size, cfg, None)


def _complete_columns(U: np.ndarray, bad: np.ndarray, seed: int) -> np.ndarray:
    """Replace the columns U[:, bad] by an orthonormal completion of the others."""
    m = U.shape[0]
    n_bad = int(bad.sum())
    if n_bad == 0:
        return U
    n_good = U.shape[1] - n_bad
    basis = np.hstack([U[:, ~bad], gaussian_matrix(m, n_bad, seed)])
    Q, _ = qr_factor(basis, economic=True)
    U = U.copy()
    U[:, bad] = Q[:, n_good:]
    return U


def qdwh_svd_full(
    A,
    base_size: int = BASE_SIZE,
    seed: int = 0,
    threads: int = 1,
    cfg: PolarConfig | None = None,
) -> SvdResult:
    """Full SVD through the polar decomposition.

    A = Up·H, H = V·Σ·Vᵀ (by qdwh_eig_full), U = Up·V. Tiny negative
    eigenvalues of H are folded into the sign of the matching U column.
    For a rank-deficient A, Up is only a partial isometry and the columns
    of Up·V belonging to singular values below the polar iteration's reach
    (about cfg.ell0·α) are replaced by an orthonormal completion.

    Raises:
        ValueError: If m < n.
    """
    A = check_dense_matrix(A)
    m, n = A.shape
    if m < n:
        raise ValueError(f"qdwh_svd_full needs m >= n, got {m}x{n}; pass Aᵀ instead")

    cfg = cfg or PolarConfig()
    polar = polar_decompose(A, cfg, allow_rank_deficient=True)
    eig = qdwh_eig_full(polar.H, base_size=base_size, seed=seed, threads=threads, cfg=cfg)

    signs = np.where(eig.Lambda < 0, -1.0, 1.0)
    sigma = np.abs(eig.Lambda)
    U = (polar.Up @ eig.V) * signs
    if not polar.converged:
        U = _complete_columns(U, sigma <= RANK_CUTOFF * cfg.ell0 * polar.alpha, seed)
    order = np.argsort(-sigma, kind="stable")

    return SvdResult(
        U=np.asfortranarray(U[:, order]),
        Sigma=sigma[order],
        V=np.asfortranarray(eig.V[:, order]),
    )
