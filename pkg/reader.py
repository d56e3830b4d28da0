# Matrix and spectrum input (binary, CSV, Excel)
from pathlib import Path
import struct

import chardet
import numpy as np
import pandas as pd

from validators import check_dense_matrix

MAGIC = b"QDWH"
FORMAT_VERSION = 1
# magic, u8 version, u64 rows, u64 cols; little-endian, no padding
HEADER = struct.Struct("<4sBQQ")
MATRIX_EXTENSIONS = (".qdwh", ".csv", ".xlsx", ".xls")


def _detect_encoding(file_path: str) -> str:
    """Pick an encoding for a text file, trying UTF-8 first and chardet second."""
    with open(file_path, "rb") as f:
        raw_data = f.read(10000)

    for encoding in ("utf-8-sig", "utf-8"):
        try:
            raw_data.decode(encoding)
            return encoding
        except UnicodeDecodeError:
            continue

    detected = chardet.detect(raw_data)
    encoding = detected["encoding"]
    confidence = detected["confidence"]
    if encoding and confidence > 0.7:
        return encoding
    raise ValueError(
        f"Unable to detect encoding of '{file_path}' with confidence. "
        f"Detected: {encoding} (confidence: {confidence:.2f}). "
        f"Please save the file as UTF-8 and try again."
    )


def _read_binary_matrix(file_path: str) -> np.ndarray:
    try:
        with open(file_path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise OSError(f"Error reading matrix file '{file_path}': {e}") from e

    if len(data) < HEADER.size:
        raise ValueError(f"Corrupt matrix file '{file_path}': header is truncated")

    magic, version, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"Corrupt matrix file '{file_path}': bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"Unsupported matrix format version {version} in '{file_path}' "
            f"(expected {FORMAT_VERSION})"
        )

    payload = data[HEADER.size :]
    expected = 8 * rows * cols
    if len(payload) != expected:
        raise ValueError(
            f"Corrupt matrix file '{file_path}': expected {expected} payload bytes "
            f"for {rows}x{cols}, found {len(payload)}"
        )

    values = np.frombuffer(payload, dtype="<f8")
    return np.asfortranarray(values.reshape((rows, cols), order="F").astype(np.float64))


def _frame_to_matrix(df: pd.DataFrame, file_path: str) -> np.ndarray:
    try:
        values = df.apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise ValueError(f"Non-numeric entry in matrix file '{file_path}': {e}") from e
    return check_dense_matrix(values)


def read_matrix(file_path: str) -> np.ndarray:
    """Read a dense matrix with automatic format detection.

    Formats:
        .qdwh  binary: b"QDWH", u8 version, u64 rows, u64 cols (little-endian),
               then rows·cols little-endian float64 values in column-major order
        .csv   headerless comma-separated rows, encoding auto-detected
        .xlsx  first sheet, headerless (openpyxl)
        .xls   first sheet, headerless (xlrd)

    Args:
        file_path: Path to the matrix file.

    Returns:
        Fortran-ordered float64 matrix.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: For unsupported extensions, corrupt headers or
            non-numeric and non-finite entries.

    Examples:
        >>> A = read_matrix('a.qdwh')
        >>> A = read_matrix('a.csv')
    """
    path_obj = Path(file_path)

    if not path_obj.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    extension = path_obj.suffix.lower()

    if extension == ".qdwh":
        return check_dense_matrix(_read_binary_matrix(file_path))
    elif extension == ".csv":
        encoding = _detect_encoding(file_path)
        df = pd.read_csv(file_path, header=None, encoding=encoding)
    elif extension == ".xlsx":
        df = pd.read_excel(file_path, header=None, engine="openpyxl")
    elif extension == ".xls":
        df = pd.read_excel(file_path, header=None, engine="xlrd")
    else:
        raise ValueError(f"Unsupported file format: {extension}")

    return _frame_to_matrix(df, file_path)


def read_spectrum(file_path: str) -> np.ndarray:
    """Read an `index,value` spectrum sidecar and return the values in index order.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the columns are missing or the values are not numeric.
    """
    path_obj = Path(file_path)
    if not path_obj.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    df = pd.read_csv(file_path, encoding=_detect_encoding(file_path))
    missing = [name for name in ("index", "value") if name not in df.columns]
    if missing:
        raise ValueError(
            f"Spectrum file '{file_path}' is missing column(s): {', '.join(missing)}"
        )

    try:
        df = df.astype({"index": np.int64, "value": np.float64})
    except (ValueError, TypeError) as e:
        raise ValueError(f"Non-numeric entry in spectrum file '{file_path}': {e}") from e

    return df.sort_values("index", kind="stable")["value"].to_numpy()
