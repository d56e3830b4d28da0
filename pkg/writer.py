# Matrix, spectrum, report and sweep-table output
from pathlib import Path
import json

import numpy as np
import pandas as pd

from reader import FORMAT_VERSION, HEADER, MAGIC
from validators import check_dense_matrix

TABLE_COLUMNS = [
    "solver",
    "n",
    "k_or_s",
    "subspace_size",
    "value_err",
    "orth",
    "resid",
    "flops_model",
    "seconds",
]


def _write_bytes(output_path: Path, data: bytes) -> None:
    output_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        output_path.write_bytes(data)
    except PermissionError as e:
        raise PermissionError(f"Permission denied writing to '{output_path}': {e}") from e
    except OSError as e:
        raise OSError(f"Error writing output file '{output_path}': {e}") from e


def _write_frame(df: pd.DataFrame, output_path: Path) -> None:
    output_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        df.to_csv(output_path, index=False, encoding="utf-8", lineterminator="\n")
    except PermissionError as e:
        raise PermissionError(f"Permission denied writing to '{output_path}': {e}") from e
    except OSError as e:
        raise OSError(f"Error writing output file '{output_path}': {e}") from e


def encode_matrix(A) -> bytes:
    """Binary matrix encoding: header followed by the column-major float64 payload."""
    A = check_dense_matrix(A)
    rows, cols = A.shape
    payload = np.asarray(A, dtype="<f8").tobytes(order="F")
    return HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols) + payload


def write_matrix(A, output_path: Path) -> None:
    """Write a matrix in the binary .qdwh format.

    Creates parent directories as needed. Reading the file back returns the
    same matrix bit for bit.

    Raises:
        ValueError: If A is not a finite 2-D real matrix.
        PermissionError: If lacking write permissions to the output location.
        OSError: For other file system errors.
    """
    _write_bytes(Path(output_path), encode_matrix(A))


def write_spectrum(values, output_path: Path) -> None:
    """Write a spectrum as an `index,value` CSV sidecar (1-based index).

    Values are written with full round-trip precision; an empty spectrum
    gives a header-only file.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    df = pd.DataFrame({"index": np.arange(1, values.size + 1), "value": values})
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        df.to_csv(
            output_path,
            index=False,
            encoding="utf-8",
            lineterminator="\n",
            float_format="%.17g",
        )
    except PermissionError as e:
        raise PermissionError(f"Permission denied writing to '{output_path}': {e}") from e
    except OSError as e:
        raise OSError(f"Error writing output file '{output_path}': {e}") from e


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def format_report(report: dict) -> str:
    """Serialize a solve report to JSON text with stable key order."""
    return json.dumps(report, indent=2, default=_json_default, allow_nan=True) + "\n"


def write_report(report: dict, output_path: Path) -> None:
    """Write a solve report as UTF-8 JSON with Unix line endings."""
    _write_bytes(Path(output_path), format_report(report).encode("utf-8"))


def write_table(df: pd.DataFrame, output_path: Path) -> None:
    """Write a benchmark sweep table as CSV.

    The columns are always written in TABLE_COLUMNS order, so an empty sweep
    still produces the header row.

    Raises:
        ValueError: If the table lacks one of the expected columns.
    """
    missing = [column for column in TABLE_COLUMNS if column not in df.columns]
    if missing:
        raise ValueError(f"Sweep table is missing column(s): {', '.join(missing)}")
    _write_frame(df[TABLE_COLUMNS], Path(output_path))
