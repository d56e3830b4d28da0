# Solve and benchmark pipelines behind the CLI
from dataclasses import dataclass, field
import time

import click
import numpy as np
import pandas as pd

from fullsolve import qdwh_eig_full, qdwh_svd_full
from kernels import svd_dense, sym_eig_dense
from matgen import accuracy_report, flop_estimate, gen_svd_test, gen_sym_eig_test
from partial import (
    DEFAULT_TOL,
    QR_FIRST_BELOW,
    EmptySpectrumError,
    choose_shift,
    qdwh_partial_eig,
    qdwh_partial_svd,
)
from polar import PolarConfig, polar_decompose, polar_orthogonality, weight_schedule
from validators import check_count, check_open_unit, check_seed, check_symmetric
from writer import TABLE_COLUMNS

SCHEMA_VERSION = 1
EIG_SOLVERS = ("std-eig", "qdwh-eig-full", "partial-eig")
SVD_SOLVERS = ("std-svd", "qdwh-svd-full", "partial-svd")
SOLVERS = EIG_SOLVERS + SVD_SOLVERS + ("polar",)
OUTPUT_FORMATS = ("json", "csv")
DEFAULT_S = 0.1


class RunConfig:
    """Parameters of one solve (or one bench cell).

    Attributes:
        solver (str): One of SOLVERS.
        qdwh_iters (int): Iteration count for partial-eig (2 or 3).
        s (float): Threshold for partial-svd, in (0, 1).
        tol (float): Threshold on |R_ii| for the deficiency index.
        seed (int): Seed for sketches and estimators.
        randomize (bool): Sketch before the subspace QR.
        threads (int): Workers for the full divide-and-conquer solvers.
        output_format (str): 'json' report or 'csv' spectrum.
        timing (bool): Record wall time; off gives bitwise reproducible output.
        strict_residual (bool): Swapped residual pairing in the accuracy report.
    """

    def __init__(
        self,
        solver: str,
        qdwh_iters: int = 3,
        s: float = DEFAULT_S,
        tol: float = DEFAULT_TOL,
        seed: int = 0,
        randomize: bool = False,
        threads: int = 1,
        output_format: str = "json",
        timing: bool = True,
        strict_residual: bool = False,
    ):
        if solver not in SOLVERS:
            raise ValueError(f"Unknown solver '{solver}'. Expected one of: {', '.join(SOLVERS)}")
        if output_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"Unknown output format '{output_format}'. Expected one of: {', '.join(OUTPUT_FORMATS)}"
            )
        tol = float(tol)
        if not tol > 0:
            raise ValueError(f"tol must be positive, got {tol}")

        self.solver = solver
        self.qdwh_iters = check_count(qdwh_iters, "qdwh_iters")
        self.s = check_open_unit(s, "s")
        self.tol = tol
        self.seed = check_seed(seed)
        self.randomize = bool(randomize)
        self.threads = check_count(threads, "threads")
        self.output_format = output_format
        self.timing = bool(timing)
        self.strict_residual = bool(strict_residual)

    @property
    def params(self) -> dict:
        """Solver parameters as recorded in the report."""
        params = {"seed": self.seed, "tol": self.tol, "randomize": self.randomize}
        if self.solver == "partial-eig":
            params["qdwh_iters"] = self.qdwh_iters
        if self.solver == "partial-svd":
            params["s"] = self.s
        if self.solver in ("qdwh-eig-full", "qdwh-svd-full"):
            params["threads"] = self.threads
        return params


@dataclass(frozen=True)
class SolveOutcome:
    """Everything one solver run produced, before it is shaped into a report."""

    solver: str
    status: str
    values: np.ndarray
    subspace_size: int | None
    trace: dict = field(default_factory=dict)
    accuracy: dict | None = None
    flops: dict | None = None
    seconds: float | None = None
    message: str | None = None


def polar_iteration_mix(cfg: PolarConfig | None = None) -> tuple[int, int]:
    """(QR steps, Cholesky steps) the polar driver takes from cfg.ell0."""
    cfg = cfg or PolarConfig()
    schedule = weight_schedule(cfg.ell0, cfg.conv_eps, cfg.max_iters)
    it_qr = sum(w.c > cfg.chol_switch_c for w in schedule)
    return it_qr, len(schedule) - it_qr


def _reference_values(truth, solver: str, k: int) -> np.ndarray | None:
    if truth is None:
        return None
    truth = np.asarray(truth, dtype=np.float64).ravel()

    if solver in EIG_SOLVERS:
        reference = np.sort(truth)
        if solver == "partial-eig":
            reference = reference[reference < 0]
    else:
        reference = np.sort(np.abs(truth))[::-1][:k]

    if reference.size != k:
        click.echo(
            f"Warning: reference spectrum has {reference.size} matching values, "
            f"solver returned {k}; value error not reported",
            err=True,
        )
        return None
    return reference


def _timed(func, timing: bool):
    start = time.perf_counter()
    result = func()
    elapsed = time.perf_counter() - start
    return result, (elapsed if timing else None)


def _solve_eig(A: np.ndarray, cfg: RunConfig, truth) -> SolveOutcome:
    A = check_symmetric(A)
    n = A.shape[0]
    trace = {}
    status = "ok"
    message = None

    if cfg.solver == "std-eig":
        (values, V), seconds = _timed(lambda: sym_eig_dense(A), cfg.timing)
        subspace_size = n
        flops = flop_estimate("std-eig", n)
    elif cfg.solver == "qdwh-eig-full":
        result, seconds = _timed(
            lambda: qdwh_eig_full(A, seed=cfg.seed, threads=cfg.threads), cfg.timing
        )
        values, V = result.Lambda, result.V
        subspace_size = n
        trace["depth"] = result.depth
        it_qr, it_chol = polar_iteration_mix()
        flops = flop_estimate("qdwh-eig-full", n, it_qr=it_qr, it_chol=it_chol)
    else:
        plan = choose_shift(cfg.qdwh_iters)
        start = time.perf_counter()
        try:
            result = qdwh_partial_eig(
                A, plan, use_randomization=cfg.randomize, tol=cfg.tol, seed=cfg.seed
            )
        except EmptySpectrumError as e:
            result = e.result
            status = "empty"
            message = str(e)
        seconds = time.perf_counter() - start if cfg.timing else None
        values, V = result.Lambda_minus, result.V
        subspace_size = result.subspace_size
        trace = {"mu": result.mu, "shift": result.shift, "rank_index": result.rank_index}
        trace.update(result.diagnostics)
        flops = flop_estimate(
            "partial-eig", n, n_s=subspace_size, it_chol=plan.qdwh_iters
        )

    reference = _reference_values(truth, cfg.solver, values.size)
    accuracy = accuracy_report(A, V, values, V, reference, strict_residual=cfg.strict_residual)
    return SolveOutcome(
        solver=cfg.solver,
        status=status,
        values=values,
        subspace_size=subspace_size,
        trace=trace,
        accuracy=accuracy.as_dict(),
        flops=flops.as_dict(),
        seconds=seconds,
        message=message,
    )


def _solve_svd(A: np.ndarray, cfg: RunConfig, truth) -> SolveOutcome:
    m, n = A.shape
    size = max(m, n)
    trace = {}
    status = "ok"
    message = None

    if cfg.solver == "std-svd":
        (U, values, V), seconds = _timed(lambda: svd_dense(A), cfg.timing)
        subspace_size = min(m, n)
        flops = flop_estimate("std-svd", size)
    elif cfg.solver == "qdwh-svd-full":
        result, seconds = _timed(
            lambda: qdwh_svd_full(A, seed=cfg.seed, threads=cfg.threads), cfg.timing
        )
        U, values, V = result.U, result.Sigma, result.V
        subspace_size = n
        it_qr, it_chol = polar_iteration_mix()
        flops = flop_estimate("qdwh-svd-full", size, it_qr=it_qr, it_chol=it_chol)
    else:
        start = time.perf_counter()
        try:
            result = qdwh_partial_svd(
                A, cfg.s, tol=cfg.tol, use_randomization=cfg.randomize, seed=cfg.seed
            )
        except EmptySpectrumError as e:
            result = e.result
            status = "empty"
            message = str(e)
        seconds = time.perf_counter() - start if cfg.timing else None
        U, values, V = result.U1, result.Sigma1, result.V1
        subspace_size = result.subspace_size
        trace = {"alpha": result.alpha, "threshold": result.threshold, "rank_index": result.rank_index}
        trace.update(result.diagnostics)
        iters = result.diagnostics["qdwh_iters"]
        it_qr = 1 if cfg.s < QR_FIRST_BELOW else 0
        flops = flop_estimate(
            "partial-svd",
            size,
            n_s=min(subspace_size, size),
            it_qr=it_qr,
            it_chol=iters - it_qr,
        )

    reference = _reference_values(truth, cfg.solver, values.size)
    accuracy = accuracy_report(A, U, values, V, reference, strict_residual=cfg.strict_residual)
    return SolveOutcome(
        solver=cfg.solver,
        status=status,
        values=values,
        subspace_size=subspace_size,
        trace=trace,
        accuracy=accuracy.as_dict(),
        flops=flops.as_dict(),
        seconds=seconds,
        message=message,
    )


def _solve_polar(A: np.ndarray, cfg: RunConfig) -> SolveOutcome:
    result, seconds = _timed(lambda: polar_decompose(A), cfg.timing)
    backward = np.linalg.norm(A - result.Up @ result.H) / np.linalg.norm(A)
    orth = polar_orthogonality(result.Up)
    trace = {
        "alpha": result.alpha,
        "iters_qr": result.iters_qr,
        "iters_chol": result.iters_chol,
        "ell_trace": result.ell_trace,
        "backward_error": float(backward),
        "orth": float(orth),
    }
    return SolveOutcome(
        solver="polar",
        status="ok",
        values=np.zeros(0),
        subspace_size=None,
        trace=trace,
        seconds=seconds,
    )


def run_solver(A, cfg: RunConfig, truth=None) -> SolveOutcome:
    """Run one solver on A and collect values, diagnostics, accuracy and cost.

    An empty partial spectrum is not an error here: the outcome has
    status 'empty' and carries the sizes reached.

    Args:
        A: Input matrix.
        cfg: Run configuration.
        truth: Optional reference spectrum (e.g. a generator sidecar).
    """
    if cfg.solver in EIG_SOLVERS:
        return _solve_eig(A, cfg, truth)
    if cfg.solver in SVD_SOLVERS:
        return _solve_svd(A, cfg, truth)
    return _solve_polar(A, cfg)


def build_report(A, outcome: SolveOutcome, cfg: RunConfig) -> dict:
    """Shape a solve outcome into the versioned JSON report."""
    m, n = np.shape(A)
    report = {
        "schema_version": SCHEMA_VERSION,
        "solver": outcome.solver,
        "status": outcome.status,
        "rows": int(m),
        "cols": int(n),
        "params": cfg.params,
        "k": int(outcome.values.size),
        "spectrum": [float(v) for v in outcome.values],
        "subspace_size": outcome.subspace_size,
        "trace": outcome.trace,
        "accuracy": outcome.accuracy,
        "flops": outcome.flops,
        "seconds": outcome.seconds,
    }
    if outcome.message is not None:
        report["message"] = outcome.message
    return report


def solve_matrix(A, cfg: RunConfig, truth=None) -> dict:
    """Run a solver and return its report dictionary."""
    return build_report(A, run_solver(A, cfg, truth), cfg)


def _table_row(outcome: SolveOutcome, n: int, k_or_s) -> dict:
    accuracy = outcome.accuracy or {}
    return {
        "solver": outcome.solver,
        "n": n,
        "k_or_s": k_or_s,
        "subspace_size": outcome.subspace_size,
        "value_err": accuracy.get("value_err"),
        "orth": max(accuracy.get("orth_left", 0.0), accuracy.get("orth_right", 0.0)),
        "resid": max(accuracy.get("resid_right", 0.0), accuracy.get("resid_left", 0.0)),
        "flops_model": outcome.flops["total"] if outcome.flops else None,
        "seconds": outcome.seconds,
    }


def bench_sweep(
    sizes: list[int],
    solvers: list[str],
    s_values: list[float] | None = None,
    k_fraction: float = 0.1,
    iters: int = 3,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    threads: int = 1,
    timing: bool = True,
    quiet: bool = False,
) -> pd.DataFrame:
    """Run every solver on generated test matrices of each size.

    EIG solvers run on gen_sym_eig_test(n, k, seed) with k = k_fraction·n,
    SVD solvers on gen_svd_test(n, seed); partial-svd gives one row per
    threshold in s_values. Errors against the planted spectra fill value_err.

    Returns:
        DataFrame with TABLE_COLUMNS; header-only when sizes is empty.
    """
    unknown = [name for name in solvers if name not in EIG_SOLVERS + SVD_SOLVERS]
    if unknown:
        raise ValueError(f"Unknown bench solver(s): {', '.join(unknown)}")
    s_values = list(s_values or [DEFAULT_S])
    k_fraction = check_open_unit(k_fraction, "k_fraction")

    rows = []
    for n in sizes:
        n = check_count(n, "n", minimum=2)
        k = max(1, int(round(k_fraction * n)))
        eig_matrix = svd_matrix = None

        for solver in solvers:
            if solver in EIG_SOLVERS:
                if eig_matrix is None:
                    eig_matrix = gen_sym_eig_test(n, k, seed)
                A, D = eig_matrix
                cells = [(k, {})]
            else:
                if svd_matrix is None:
                    svd_matrix = gen_svd_test(n, seed)
                A, D = svd_matrix
                cells = [(s, {"s": s}) for s in s_values] if solver == "partial-svd" else [("", {})]

            for k_or_s, extra in cells:
                cfg = RunConfig(
                    solver,
                    qdwh_iters=iters,
                    tol=tol,
                    seed=seed,
                    threads=threads,
                    timing=timing,
                    **extra,
                )
                if not quiet:
                    click.echo(f"bench: {solver} n={n} {k_or_s}".rstrip(), err=True)
                rows.append(_table_row(run_solver(A, cfg, D), n, k_or_s))

    return pd.DataFrame(rows, columns=TABLE_COLUMNS)
