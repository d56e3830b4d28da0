# Invariant checks behind the `verify` command
from dataclasses import dataclass

import numpy as np

from kernels import qr_factor, random_generator
from partial import EIG_SHIFTS, verify_pert_bound
from polar import (
    compose_rational,
    halley_weights,
    polar_decompose,
    polar_orthogonality,
    weight_schedule,
)
from validators import UNIT_ROUNDOFF, check_count, check_open_unit, check_seed

PROPERTIES = ("weights", "flatten", "pert_bound", "polar")
DEFAULT_PROPERTIES = ("weights", "flatten", "pert_bound")
FLATTEN_POINTS = 10001
FLATTEN_TOL = 1e-12
PERT_SLACK = 1e-12
POLAR_TOL = 1e-13
POLAR_MAX_ITERS = 6
POLAR_CONDITIONS = (1e2, 1e6, 1e12)


@dataclass(frozen=True)
class PropertyResult:
    """Outcome of one property: passing cases out of total, plus the worst value seen."""

    name: str
    passed: int
    total: int
    worst: float
    detail: str

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def check_weights() -> PropertyResult:
    """Fixed point (3, 1, 3) at ℓ = 1 and convergence from 1e-15 in at most six steps."""
    a, b, c = halley_weights(1.0).as_tuple
    deviation = max(abs(a - 3.0), abs(b - 1.0), abs(c - 3.0))
    fixed_point = deviation <= 4 * UNIT_ROUNDOFF * 3.0

    steps = len(weight_schedule(1e-15))
    fast = steps <= POLAR_MAX_ITERS

    return PropertyResult(
        name="weights",
        passed=int(fixed_point) + int(fast),
        total=2,
        worst=float(deviation),
        detail=f"(a, b, c) at ell=1 = ({a:.17g}, {b:.17g}, {c:.17g}); {steps} steps from 1e-15",
    )


def flatten_error(s: float, iters: int, points: int = FLATTEN_POINTS) -> float:
    """max |r((1 - s)x - s) + 1| over x equispaced in [-1, 0]."""
    s = check_open_unit(s, "s")
    x = np.linspace(-1.0, 0.0, check_count(points, "points", minimum=2))
    return float(np.max(np.abs(compose_rational((1.0 - s) * x - s, s, iters) + 1.0)))


def check_flatten(s: float | None = None, iters: int | None = None) -> PropertyResult:
    """Flatness of the shifted composed rational on [-1, 0].

    With neither s nor iters given, both tabulated plans are checked.
    Given only iters, the tabulated shift for it is used.
    """
    if s is None and iters is None:
        cases = [(shift, count) for count, shift in sorted(EIG_SHIFTS.items())]
    elif s is None:
        if iters not in EIG_SHIFTS:
            raise ValueError(f"No tabulated shift for {iters} iterations; pass s explicitly")
        cases = [(EIG_SHIFTS[iters], iters)]
    else:
        cases = [(s, iters if iters is not None else 3)]

    errors = [flatten_error(shift, count) for shift, count in cases]
    detail = ", ".join(
        f"s={shift} iters={count}: max error {err:.3e}"
        for (shift, count), err in zip(cases, errors)
    )
    return PropertyResult(
        name="flatten",
        passed=sum(err <= FLATTEN_TOL for err in errors),
        total=len(cases),
        worst=max(errors),
        detail=detail,
    )


def _pert_instance(rng: np.random.Generator, trial: int):
    m = int(rng.integers(4, 25))
    n = m + int(rng.integers(0, 8))
    ell = int(rng.integers(1, m))
    k = int(rng.integers(1, ell + 1))

    V0, _ = qr_factor(rng.standard_normal((m, m)))
    V0 = V0[:, :k]
    B = rng.standard_normal((m, n))

    # every other trial: V0 spans a near-null space of Bᵀ
    if trial % 2 == 1:
        eps = 10.0 ** -rng.integers(4, 13)
        B = B - V0 @ (V0.T @ B) + eps * (V0 @ rng.standard_normal((k, n)))
    return B, V0, ell


def check_pert_bound(trials: int = 100, seed: int = 0) -> PropertyResult:
    """Subspace-angle bound on seeded random and near-null-space instances."""
    trials = check_count(trials, "trials")
    rng = random_generator(check_seed(seed))

    passed = 0
    worst = -np.inf
    for trial in range(trials):
        B, V0, ell = _pert_instance(rng, trial)
        lhs, rhs = verify_pert_bound(B, V0, ell)
        gap = lhs - rhs
        worst = max(worst, gap)
        passed += gap <= PERT_SLACK

    return PropertyResult(
        name="pert_bound",
        passed=passed,
        total=trials,
        worst=float(worst),
        detail=f"max lhs - rhs = {worst:.3e}",
    )


def _conditioned_matrix(n: int, kappa: float, rng: np.random.Generator) -> np.ndarray:
    U, _ = qr_factor(rng.standard_normal((n, n)))
    V, _ = qr_factor(rng.standard_normal((n, n)))
    sigma = np.logspace(0.0, -np.log10(kappa), n)
    return (U * sigma) @ V.T


def check_polar(trials: int = 6, n: int = 60, seed: int = 0) -> PropertyResult:
    """Backward error and orthogonality of polar_decompose over a range of condition numbers."""
    trials = check_count(trials, "trials")
    rng = random_generator(check_seed(seed))

    passed = 0
    worst = 0.0
    for trial in range(trials):
        A = _conditioned_matrix(n, POLAR_CONDITIONS[trial % len(POLAR_CONDITIONS)], rng)
        result = polar_decompose(A)
        backward = np.linalg.norm(A - result.Up @ result.H) / np.linalg.norm(A)
        orth = polar_orthogonality(result.Up)
        metric = max(backward, orth)
        worst = max(worst, metric)
        passed += metric <= POLAR_TOL and result.iterations <= POLAR_MAX_ITERS

    return PropertyResult(
        name="polar",
        passed=passed,
        total=trials,
        worst=float(worst),
        detail=f"max backward/orthogonality error = {worst:.3e}",
    )


def run_properties(
    properties: list[str] | None = None,
    s: float | None = None,
    iters: int | None = None,
    trials: int = 100,
    seed: int = 0,
) -> list[PropertyResult]:
    """Run the selected properties (DEFAULT_PROPERTIES when none are named)."""
    properties = list(properties or DEFAULT_PROPERTIES)
    unknown = [name for name in properties if name not in PROPERTIES]
    if unknown:
        raise ValueError(
            f"Unknown property: {', '.join(unknown)}. Expected one of: {', '.join(PROPERTIES)}"
        )

    results = []
    for name in properties:
        if name == "weights":
            results.append(check_weights())
        elif name == "flatten":
            results.append(check_flatten(s, iters))
        elif name == "pert_bound":
            results.append(check_pert_bound(trials, seed))
        else:
            results.append(check_polar(seed=seed))
    return results


def format_verify_output(results: list[PropertyResult]) -> str:
    """One summary line per property followed by its detail line.

    Examples:
        >>> print(format_verify_output([PropertyResult("weights", 2, 2, 0.0, "ok")]))
        weights: 2/2 pass
          ok
    """
    output = ""
    for result in results:
        verdict = "pass" if result.ok else "fail"
        output += f"{result.name}: {result.passed}/{result.total} {verdict}\n"
        output += f"  {result.detail}\n"
    return output.rstrip("\n")
