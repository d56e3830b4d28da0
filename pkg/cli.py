# Entry point, argument parsing
import sys
from pathlib import Path

import click

from matgen import gen_svd_test, gen_sym_eig_test
from reader import read_matrix, read_spectrum
from runner import EIG_SOLVERS, SOLVERS, SVD_SOLVERS, RunConfig, bench_sweep, solve_matrix
from verifier import PROPERTIES, format_verify_output, run_properties
from writer import format_report, write_matrix, write_report, write_spectrum, write_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY = 2


def _sidecar_path(output: Path) -> Path:
    return output.with_name(output.stem + ".spectrum.csv")


def _parse_list(raw: str, convert, name: str) -> list:
    if not raw.strip():
        return []
    try:
        return [convert(item) for item in raw.split(",") if item.strip()]
    except ValueError as e:
        raise click.BadParameter(f"Cannot parse '{raw}' as a comma-separated list", param_hint=name) from e


@click.group()
def cli():
    """QDWH Tool - Partial spectrum EIG and SVD via a few QDWH iterations.

    Generates test matrices, runs the partial and full-spectrum solvers,
    and reports accuracy and modelled cost.

    Use 'gen' to create matrices, 'solve' to run one solver, 'bench' for
    sweeps and 'verify' to check the numerical invariants.
    """
    pass


@cli.command()
@click.option(
    "--kind",
    type=click.Choice(["eig", "svd"]),
    required=True,
    help="Symmetric matrix with k negative eigenvalues, or geometric singular spectrum",
)
@click.option("--n", "n", type=int, required=True, help="Matrix size")
@click.option("--k", "k", type=int, default=None, help="Number of negative eigenvalues (eig)")
@click.option("--seed", type=int, default=0, show_default=True, help="Generator seed")
@click.option("--out", "-o", type=click.Path(), required=True, help="Output .qdwh file")
def gen(kind: str, n: int, k: int | None, seed: int, out: str):
    """Generate a test matrix and its planted spectrum.

    Writes the matrix in the binary .qdwh format and a sidecar
    <name>.spectrum.csv with columns index,value.

    Examples:
        \\b
        Symmetric matrix with 26 negative eigenvalues:
        $ qdwh-tool gen --kind eig --n 256 --k 26 --seed 1 --out a.qdwh

        \\b
        Matrix with geometric singular values 0.5^(100 i/n):
        $ qdwh-tool gen --kind svd --n 100 --seed 2 --out g.qdwh
    """
    try:
        if kind == "eig":
            if k is None:
                raise ValueError("--k is required for --kind eig")
            A, D = gen_sym_eig_test(n, k, seed)
        else:
            A, D = gen_svd_test(n, seed)

        output = Path(out)
        write_matrix(A, output)
        write_spectrum(D, _sidecar_path(output))
        click.echo(f"Successfully wrote {n}x{n} matrix to {out}")

    except ValueError as e:
        click.echo(f"Validation Error:\n{e}", err=True)
        sys.exit(EXIT_ERROR)

    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)


@cli.command()
@click.argument("solver", type=click.Choice(list(SOLVERS)))
@click.option("--in", "input_path", type=click.Path(exists=True), required=True, help="Input matrix (.qdwh, .csv, .xlsx, .xls)")
@click.option("--iters", type=int, default=3, show_default=True, help="QDWH iterations for partial-eig (2 or 3)")
@click.option("--s", "s", type=float, default=0.1, show_default=True, help="Relative threshold for partial-svd")
@click.option("--tol", type=float, default=0.01, show_default=True, help="Threshold on |R_ii|")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for sketches and estimators")
@click.option("--randomize", is_flag=True, help="Sketch with a Gaussian matrix before the subspace QR")
@click.option("--threads", type=int, default=1, show_default=True, envvar="QDWH_THREADS", help="Workers for the full solvers; output is bitwise identical across runs only with --no-timing")
@click.option("--out", "-o", type=click.Path(), default=None, help="Output file (stdout when omitted)")
@click.option("--format", "output_format", type=click.Choice(["json", "csv"]), default="json", show_default=True, help="JSON report or index,value spectrum CSV")
@click.option("--truth", type=click.Path(exists=True), default=None, help="Reference spectrum sidecar for the value error")
@click.option("--timing/--no-timing", default=True, show_default=True, help="Record wall time; pass --no-timing for bitwise-reproducible output")
@click.option("--strict-residual", is_flag=True, help="Pair A·U with σV instead of A·V with σU (square input)")
@click.option("--quiet", "-q", is_flag=True, help="Suppress informational messages")
def solve(
    solver: str,
    input_path: str,
    iters: int,
    s: float,
    tol: float,
    seed: int,
    randomize: bool,
    threads: int,
    out: str | None,
    output_format: str,
    truth: str | None,
    timing: bool,
    strict_residual: bool,
    quiet: bool,
):
    """Run one solver and report spectrum, accuracy and modelled cost.

    Exit code 0 on success, 2 when the requested part of the spectrum is
    empty (the empty report is still written) and 1 on errors.

    Examples:
        \\b
        Negative eigenpairs with the three-iteration plan:
        $ qdwh-tool solve partial-eig --in a.qdwh --iters 3 --truth a.spectrum.csv

        \\b
        Singular triplets above 0.1*||A||:
        $ qdwh-tool solve partial-svd --in g.qdwh --s 0.1 -o report.json
    """
    try:
        cfg = RunConfig(
            solver,
            qdwh_iters=iters,
            s=s,
            tol=tol,
            seed=seed,
            randomize=randomize,
            threads=threads,
            output_format=output_format,
            timing=timing,
            strict_residual=strict_residual,
        )
        A = read_matrix(input_path)
        reference = read_spectrum(truth) if truth else None
        report = solve_matrix(A, cfg, reference)

        if output_format == "csv":
            if out is None:
                raise ValueError("--format csv requires --out")
            write_spectrum(report["spectrum"], Path(out))
        elif out is None:
            click.echo(format_report(report), nl=False)
        else:
            write_report(report, Path(out))

        if out is not None and not quiet:
            click.echo(f"{solver}: {report['k']} values, subspace size {report['subspace_size']}; wrote {out}", err=True)

        if report["status"] == "empty":
            click.echo(f"Empty spectrum: {report.get('message', '')}", err=True)
            sys.exit(EXIT_EMPTY)

    except ValueError as e:
        click.echo(f"Validation Error:\n{e}", err=True)
        sys.exit(EXIT_ERROR)

    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)


@cli.command()
@click.option("--sizes", default="64,128,256", show_default=True, help="Comma-separated matrix sizes")
@click.option(
    "--solvers",
    default="partial-eig,partial-svd",
    show_default=True,
    help=f"Comma-separated solvers from: {', '.join(EIG_SOLVERS + SVD_SOLVERS)}",
)
@click.option("--s-values", default="0.1,0.01,0.001,0.0001", show_default=True, help="Thresholds for partial-svd")
@click.option("--k-fraction", type=float, default=0.1, show_default=True, help="Negative eigenvalues as a fraction of n")
@click.option("--iters", type=int, default=3, show_default=True, help="QDWH iterations for partial-eig")
@click.option("--tol", type=float, default=0.01, show_default=True, help="Threshold on |R_ii|")
@click.option("--seed", type=int, default=0, show_default=True, help="Generator and sketch seed")
@click.option("--threads", type=int, default=1, show_default=True, envvar="QDWH_THREADS", help="Workers for the full solvers; output is bitwise identical across runs only with --no-timing")
@click.option("--out", "-o", type=click.Path(), required=True, help="Output CSV table")
@click.option("--timing/--no-timing", default=True, show_default=True, help="Record wall time; pass --no-timing for bitwise-reproducible output")
@click.option("--quiet", "-q", is_flag=True, help="Suppress progress messages")
def bench(
    sizes: str,
    solvers: str,
    s_values: str,
    k_fraction: float,
    iters: int,
    tol: float,
    seed: int,
    threads: int,
    out: str,
    timing: bool,
    quiet: bool,
):
    """Sweep solvers over generated matrices and write a CSV table.

    Columns: solver,n,k_or_s,subspace_size,value_err,orth,resid,flops_model,seconds.
    An empty --sizes list writes the header only.

    Examples:
        \\b
        Partial SVD at four thresholds on three sizes:
        $ qdwh-tool bench --sizes 64,128,256 --solvers partial-svd -o sweep.csv
    """
    try:
        table = bench_sweep(
            _parse_list(sizes, int, "--sizes"),
            _parse_list(solvers, str.strip, "--solvers"),
            s_values=_parse_list(s_values, float, "--s-values"),
            k_fraction=k_fraction,
            iters=iters,
            tol=tol,
            seed=seed,
            threads=threads,
            timing=timing,
            quiet=quiet,
        )
        write_table(table, Path(out))
        if not quiet:
            click.echo(f"Successfully wrote {len(table)} rows to {out}")

    except click.BadParameter:
        raise

    except ValueError as e:
        click.echo(f"Validation Error:\n{e}", err=True)
        sys.exit(EXIT_ERROR)

    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)


@cli.command()
@click.option(
    "--property",
    "properties",
    type=click.Choice(list(PROPERTIES)),
    multiple=True,
    help="Property to check (repeatable); default weights, flatten and pert_bound",
)
@click.option("--s", "s", type=float, default=None, help="Shift for the flatten check")
@click.option("--iters", type=int, default=None, help="Iterations for the flatten check")
@click.option("--trials", type=int, default=100, show_default=True, help="Trials for pert_bound")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for random trials")
def verify(properties: tuple, s: float | None, iters: int | None, trials: int, seed: int):
    """Check the numerical invariants and print per-property counts.

    Exits nonzero if any property fails.

    Examples:
        \\b
        $ qdwh-tool verify
        $ qdwh-tool verify --property flatten --s 0.2 --iters 3
    """
    try:
        results = run_properties(list(properties), s=s, iters=iters, trials=trials, seed=seed)
    except ValueError as e:
        click.echo(f"Validation Error:\n{e}", err=True)
        sys.exit(EXIT_ERROR)

    click.echo(format_verify_output(results))
    if not all(result.ok for result in results):
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    cli()
