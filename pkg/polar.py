# QDWH polar decomposition
"""QR-based dynamically weighted Halley (QDWH) iteration.

Each step applies the odd rational r(x) = x(a + b x²)/(1 + c x²) to the
singular values of the iterate, with (a, b, c) chosen from the current lower
bound ℓ on those singular values so that r is the best type-(3, 2) rational
approximation to sign(x) on [-1, -ℓ] ∪ [ℓ, 1]. Compositions of such steps
stay optimal, which is what the partial solvers exploit: starting from
ℓ0 = s instead of 1/κ gives a low-degree rational that is already flat on
the part of the spectrum that matters.

Two algebraically equal forms of the step are provided. The QR form is
inverse-free and stable for ill-conditioned iterates; the Cholesky form is
cheaper and safe once c_k ≤ 100.
"""
from dataclasses import dataclass, field
import math

import click
import numpy as np
import scipy.linalg

from kernels import NotPositiveDefiniteError, cholesky, qr_factor, two_norm_estimate
from validators import UNIT_ROUNDOFF, check_count, check_dense_matrix

VARIANTS = ("auto", "qr", "cholesky")
FIXED_VARIANTS = ("qr-first", "cholesky")
# smallest ℓ for which b_k and c_k stay below the overflow threshold
ELL_MIN = 1e-230
# ‖UpᵀUp - I‖_F/√n above this means the iteration did not reach an isometry
ORTH_TOL = 1e-8


class NotConvergedError(ValueError):
    """Raised when the ℓ recurrence does not reach 1 within max_iters, or the
    polar factor it produced is not orthonormal."""

    def __init__(self, message: str, ell_trace: list[float]):
        super().__init__(message)
        self.ell_trace = ell_trace


@dataclass(frozen=True)
class WeightStep:
    """One set of dynamic Halley weights and the interval bound it moves."""

    a: float
    b: float
    c: float
    ell_in: float
    ell_out: float

    @property
    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class PolarResult:
    """Polar factors A = Up·H with iteration diagnostics."""

    Up: np.ndarray
    H: np.ndarray
    alpha: float
    iters_qr: int
    iters_chol: int
    ell_trace: list[float] = field(default_factory=list)
    converged: bool = True

    @property
    def iterations(self) -> int:
        return self.iters_qr + self.iters_chol


class PolarConfig:
    """Settings for the convergence-controlled QDWH driver.

    Attributes:
        ell0 (float): Lower bound on σ_min(A/α), i.e. an estimate of 1/κ₂(A).
        max_iters (int): Hard cap on the number of steps.
        conv_eps (float): Stop once |ℓ_k - 1| < 5·conv_eps.
        chol_switch_c (float): Use QR steps while c_k exceeds this value.
        force_variant (str): 'auto', 'qr' or 'cholesky'.
    """

    def __init__(
        self,
        ell0: float = 1e-15,
        max_iters: int = 60,
        conv_eps: float = UNIT_ROUNDOFF,
        chol_switch_c: float = 100.0,
        force_variant: str = "auto",
    ):
        ell0 = float(ell0)
        if not 0.0 < ell0 <= 1.0:
            raise ValueError(f"ell0 must lie in (0, 1], got {ell0}")
        if ell0 < ELL_MIN:
            raise ValueError(f"ell0 must be at least {ELL_MIN:g}, got {ell0}")
        if force_variant not in VARIANTS:
            raise ValueError(
                f"Unknown variant '{force_variant}'. Expected one of: {', '.join(VARIANTS)}"
            )
        if conv_eps <= 0:
            raise ValueError(f"conv_eps must be positive, got {conv_eps}")

        self.ell0 = ell0
        self.max_iters = check_count(max_iters, "max_iters")
        self.conv_eps = float(conv_eps)
        self.chol_switch_c = float(chol_switch_c)
        self.force_variant = force_variant


def halley_weights(ell: float) -> WeightStep:
    """Dynamic weights (a, b, c) for the current bound ℓ.

    Evaluated in real arithmetic; for ℓ in [ELL_MIN, 1] every intermediate
    quantity is real, nonnegative and finite.

    Raises:
        ValueError: If ℓ lies outside (0, 1] or below ELL_MIN.

    Examples:
        >>> halley_weights(1.0).as_tuple
        (3.0, 1.0, 3.0)
    """
    ell = float(ell)
    if not 0.0 < ell <= 1.0 or math.isnan(ell):
        raise ValueError(f"ell must lie in (0, 1], got {ell}")
    if ell < ELL_MIN:
        raise ValueError(f"ell must be at least {ELL_MIN:g}, got {ell}")

    # a = sqrt(1 + D) + sqrt(8 - 4D + 8(2 - ℓ²)/(ℓ² sqrt(1 + D)))/2 with
    # D = cbrt(4(1 - ℓ²)/ℓ⁴) = d/t², t = ℓ^(2/3); with t factored out no
    # intermediate under- or overflows for tiny ℓ
    l2 = ell * ell
    t = ell ** (2.0 / 3.0)
    d = float(np.cbrt(4.0 * (1.0 - l2)))
    s = math.sqrt(t * t + d)
    a = (s + math.sqrt(8.0 * t * t - 4.0 * d + 8.0 * (2.0 - l2) / s) / 2.0) / t
    b = (a - 1.0) ** 2 / 4.0
    c = a + b - 1.0
    ell_out = min(ell * (a + b * ell * ell) / (1.0 + c * ell * ell), 1.0)
    return WeightStep(a=float(a), b=float(b), c=float(c), ell_in=ell, ell_out=float(ell_out))


def weight_schedule(
    ell0: float, conv_eps: float = UNIT_ROUNDOFF, max_iters: int = 60
) -> list[WeightStep]:
    """Weights for every step until |ℓ_k - 1| < 5·conv_eps.

    The schedule depends only on ℓ0, so matrix loops driven by it have a
    fixed trip count.

    Raises:
        NotConvergedError: If max_iters steps do not reach the tolerance.
    """
    steps = []
    ell = float(ell0)
    while abs(ell - 1.0) >= 5.0 * conv_eps:
        if len(steps) >= max_iters:
            raise NotConvergedError(
                f"ℓ recurrence from {ell0} did not converge in {max_iters} steps",
                [ell0] + [w.ell_out for w in steps],
            )
        step = halley_weights(ell)
        steps.append(step)
        ell = step.ell_out
    return steps


def iterations_to_converge(ell0: float, conv_eps: float = UNIT_ROUNDOFF) -> int:
    """Number of QDWH steps the ℓ recurrence needs from ell0."""
    return len(weight_schedule(ell0, conv_eps))


def compose_rational(x, ell0: float, iters: int) -> np.ndarray:
    """Apply `iters` composed weighted-Halley rationals to scalars.

    The weights follow the ℓ recurrence from ell0, exactly as the matrix
    drivers use them.

    Examples:
        >>> float(compose_rational(1.0, 0.2, 3))
        1.0
    """
    values = np.asarray(x, dtype=np.float64)
    ell = float(ell0)
    for _ in range(check_count(iters, "iters")):
        w = halley_weights(ell)
        x2 = values * values
        values = values * (w.a + w.b * x2) / (1.0 + w.c * x2)
        ell = w.ell_out
    return values


def _symmetrize(X: np.ndarray) -> np.ndarray:
    return np.asfortranarray((X + X.T) / 2.0)


def qdwh_qr_step(X, w: WeightStep) -> np.ndarray:
    """One QDWH step in inverse-free QR form.

    [√c·X; I] = [Q1; Q2]·R,  X⁺ = (b/c)·X + (a - b/c)/√c · Q1·Q2ᵀ.
    """
    X = check_dense_matrix(X, "X")
    m, n = X.shape
    a, b, c = w.as_tuple
    sqrt_c = math.sqrt(c)

    stacked = np.vstack([sqrt_c * X, np.eye(n)])
    Q, _ = qr_factor(stacked, economic=True)
    Q1 = Q[:m, :n]
    Q2 = Q[m:, :n]

    e = b / c
    return np.asfortranarray(e * X + (a - e) / sqrt_c * (Q1 @ Q2.T))


def qdwh_chol_step(X, w: WeightStep) -> np.ndarray:
    """One QDWH step in Cholesky form.

    Z = I + c·XᵀX,  W = chol(Z),  X⁺ = (b/c)·X + (a - b/c)·(X W⁻¹) W⁻ᵀ.

    Raises:
        NotPositiveDefiniteError: If Z is numerically indefinite; callers
            retry with qdwh_qr_step.
    """
    X = check_dense_matrix(X, "X")
    n = X.shape[1]
    a, b, c = w.as_tuple

    Z = np.eye(n) + c * (X.T @ X)
    W = cholesky(_symmetrize(Z))
    # (X W⁻¹) W⁻ᵀ = X Z⁻¹, computed as two triangular solves on Xᵀ
    Y = scipy.linalg.solve_triangular(W, X.T, trans="T", lower=False, check_finite=False)
    Y = scipy.linalg.solve_triangular(W, Y, trans="N", lower=False, check_finite=False)

    e = b / c
    return np.asfortranarray(e * X + (a - e) * Y.T)


def _step(X: np.ndarray, w: WeightStep, use_qr: bool) -> tuple[np.ndarray, bool]:
    """Apply one step; returns (X⁺, used_qr). Falls back to QR on Cholesky failure."""
    if use_qr:
        return qdwh_qr_step(X, w), True
    try:
        return qdwh_chol_step(X, w), False
    except NotPositiveDefiniteError:
        click.echo(
            f"Warning: Cholesky step failed at ell={w.ell_in:.3e}; retrying with QR step",
            err=True,
        )
        return qdwh_qr_step(X, w), True


def polar_orthogonality(Up) -> float:
    """Departure of the polar factor from an isometry, ‖UpᵀUp - I‖_F/√n."""
    Up = np.asarray(Up, dtype=np.float64)
    n = Up.shape[1]
    return float(np.linalg.norm(Up.T @ Up - np.eye(n)) / math.sqrt(n))


def polar_decompose(
    A, cfg: PolarConfig | None = None, allow_rank_deficient: bool = False
) -> PolarResult:
    """Polar decomposition A = Up·H by the QDWH iteration.

    X0 = A/α with α from two_norm_estimate. QR steps are used while
    c_k > cfg.chol_switch_c, Cholesky steps afterwards; the loop stops when
    |ℓ_k - 1| < 5·cfg.conv_eps. H is the symmetrized UpᵀA.

    The ℓ schedule is scalar, so the loop also ends for a rank-deficient A;
    its singular values at zero stay at zero and Up is only a partial
    isometry. This is detected afterwards from polar_orthogonality(Up).

    Args:
        A: m×n matrix with m ≥ n and full column rank.
        cfg: Driver settings; defaults to PolarConfig().
        allow_rank_deficient: Return the partial isometry with
            converged=False instead of raising.

    Returns:
        PolarResult with Up, H and the ℓ trace.

    Raises:
        ValueError: If m < n.
        NotConvergedError: If the ℓ recurrence does not converge in
            cfg.max_iters steps, or Up is not orthonormal to ORTH_TOL
            (A numerically rank deficient, or σ_min(A)/α below cfg.ell0).

    Examples:
        >>> result = polar_decompose(np.diag([2.0, 3.0]))
        >>> bool(np.allclose(result.Up, np.eye(2)))
        True
    """
    A = check_dense_matrix(A)
    cfg = cfg or PolarConfig()
    m, n = A.shape
    if m < n:
        raise ValueError(f"polar_decompose needs m >= n, got {m}x{n}; pass Aᵀ instead")

    alpha = two_norm_estimate(A)
    X = np.asfortranarray(A / alpha)
    symmetric = m == n and np.array_equal(A, A.T)

    schedule = weight_schedule(cfg.ell0, cfg.conv_eps, cfg.max_iters)
    ell_trace = [cfg.ell0]
    iters_qr = 0
    iters_chol = 0

    for w in schedule:
        if cfg.force_variant == "auto":
            use_qr = w.c > cfg.chol_switch_c
        else:
            use_qr = cfg.force_variant == "qr"
        X, used_qr = _step(X, w, use_qr)
        if symmetric:
            X = _symmetrize(X)
        iters_qr += used_qr
        iters_chol += not used_qr
        ell_trace.append(w.ell_out)

    Up = X
    H = Up.T @ A
    H = _symmetrize(H)

    orth = polar_orthogonality(Up)
    converged = orth <= ORTH_TOL
    if not converged and not allow_rank_deficient:
        raise NotConvergedError(
            f"Polar factor is not orthonormal after {len(schedule)} steps "
            f"(‖UpᵀUp - I‖_F/√n = {orth:.3e}); A is numerically rank deficient "
            f"or its smallest singular value lies below ell0·‖A‖₂",
            ell_trace,
        )

    return PolarResult(
        Up=Up,
        H=H,
        alpha=alpha,
        iters_qr=iters_qr,
        iters_chol=iters_chol,
        ell_trace=ell_trace,
        converged=converged,
    )


def run_fixed_iterations(
    X0,
    ell0: float,
    iters: int,
    variant: str = "cholesky",
    symmetric: bool | None = None,
) -> tuple[np.ndarray, float]:
    """Apply a fixed number of weighted-Halley steps starting from ℓ0.

    Produces r(X0) where r is the composition of `iters` steps, a rational
    of type (3^iters, 3^iters - 1). Symmetric inputs are re-symmetrized
    after each step.

    Args:
        X0: Starting matrix (square symmetric for the eigensolver path).
        ell0: Initial bound in (0, 1] (the shift s for the partial solvers).
        iters: Number of steps (≥ 1).
        variant: 'qr-first' uses the QR form for the first step only,
            'cholesky' uses the Cholesky form throughout.
        symmetric: Force symmetry restoration on or off; by default it is
            on when X0 equals its transpose exactly.

    Returns:
        (Xk, ell_k): the iterate and the composed ℓ update.
    """
    X = check_dense_matrix(X0, "X0")
    iters = check_count(iters, "iters")
    if variant not in FIXED_VARIANTS:
        raise ValueError(
            f"Unknown variant '{variant}'. Expected one of: {', '.join(FIXED_VARIANTS)}"
        )
    ell = float(ell0)
    if not 0.0 < ell <= 1.0:
        raise ValueError(f"ell0 must lie in (0, 1], got {ell}")

    if symmetric is None:
        symmetric = X.shape[0] == X.shape[1] and np.array_equal(X, X.T)
    for k in range(iters):
        w = halley_weights(ell)
        X, _ = _step(X, w, use_qr=(variant == "qr-first" and k == 0))
        if symmetric:
            X = _symmetrize(X)
        ell = w.ell_out
    return X, ell
