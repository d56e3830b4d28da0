# Input validation rules
import numpy as np

UNIT_ROUNDOFF = float(np.finfo(np.float64).eps)
SEED_MAX = 2**64 - 1


def validate_dense_matrix(value) -> tuple[bool, str | None]:
    """Validate a value against the dense-matrix contract.

    A dense matrix is a two-dimensional real float64 array with at least one
    row and one column and only finite entries.

    Args:
        value: The candidate matrix. Anything array-like is accepted.

    Returns:
        A tuple of (is_valid, error_message). If valid, error_message is None.

    Examples:
        >>> validate_dense_matrix(np.eye(2))
        (True, None)
        >>> validate_dense_matrix(np.array([1.0, 2.0]))
        (False, 'Expected a 2-D matrix, got 1 dimension(s)')
    """
    if value is None:
        return (False, "Matrix is empty")

    array = np.asarray(value)

    if array.ndim != 2:
        return (False, f"Expected a 2-D matrix, got {array.ndim} dimension(s)")
    if array.shape[0] < 1 or array.shape[1] < 1:
        return (False, f"Matrix must have at least one row and column, got {array.shape}")
    if np.iscomplexobj(array):
        return (False, "Complex matrices are not supported - real input only")
    if not np.issubdtype(array.dtype, np.number) and array.dtype != bool:
        return (False, f"Matrix entries must be numeric, got dtype {array.dtype}")
    if not np.all(np.isfinite(array)):
        return (False, "Matrix contains NaN or Inf entries")

    return (True, None)


def validate_symmetric(value, tol_factor: float = 50.0) -> tuple[bool, str | None]:
    """Check that a square matrix is symmetric within c·n·u·‖S‖_F.

    Args:
        value: Candidate symmetric matrix.
        tol_factor: The constant c in the tolerance.

    Returns:
        A tuple of (is_valid, error_message).
    """
    is_valid, message = validate_dense_matrix(value)
    if not is_valid:
        return (is_valid, message)

    array = np.asarray(value, dtype=np.float64)
    n, m = array.shape
    if n != m:
        return (False, f"Expected a square matrix, got {n}x{m}")

    scale = np.linalg.norm(array)
    asymmetry = np.linalg.norm(array - array.T)
    if asymmetry > tol_factor * n * UNIT_ROUNDOFF * max(scale, np.finfo(np.float64).tiny):
        return (False, f"Matrix is not symmetric (‖S - Sᵀ‖_F = {asymmetry:.3e})")

    return (True, None)


def validate_seed(value) -> tuple[bool, str | None]:
    """Validate a generator seed (64-bit unsigned integer)."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        return (False, f"Seed must be an integer, got {type(value).__name__}")
    if value < 0 or value > SEED_MAX:
        return (False, f"Seed must lie in [0, 2^64 - 1], got {value}")
    return (True, None)


def check_dense_matrix(value, name: str = "A") -> np.ndarray:
    """Return `value` as a float64 Fortran-ordered matrix or raise.

    Raises:
        ValueError: If the value breaks the dense-matrix contract.
    """
    is_valid, message = validate_dense_matrix(value)
    if not is_valid:
        raise ValueError(f"Invalid matrix '{name}': {message}")
    return np.asfortranarray(value, dtype=np.float64)


def check_symmetric(value, name: str = "A") -> np.ndarray:
    """Return `value` as a float64 symmetric matrix or raise ValueError."""
    is_valid, message = validate_symmetric(value)
    if not is_valid:
        raise ValueError(f"Invalid matrix '{name}': {message}")
    return np.asfortranarray(value, dtype=np.float64)


def check_seed(value) -> int:
    """Return `value` as a plain int seed or raise ValueError."""
    is_valid, message = validate_seed(value)
    if not is_valid:
        raise ValueError(message)
    return int(value)


def check_count(value, name: str, minimum: int = 1) -> int:
    """Return `value` as an int no smaller than `minimum` or raise ValueError."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"'{name}' must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"'{name}' must be at least {minimum}, got {value}")
    return int(value)


def check_open_unit(value, name: str) -> float:
    """Return `value` as a float strictly inside (0, 1) or raise ValueError."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"'{name}' must lie in (0, 1), got {value}")
    return value
