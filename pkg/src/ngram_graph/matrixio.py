"""Binary matrix container shared by embedding and feature files.

Layout: 8-byte magic ``NGGMATv1``, uint32 little-endian JSON header length,
UTF-8 JSON header, then the row-major little-endian payload. The header
carries shape, dtype and arbitrary metadata (provenance, manifests), so a
file is self-describing and round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NGGMATv1"

_DTYPES = {"float64": "<f8", "int64": "<i8"}


class MatrixFormatError(ValueError):
    """Raised for unreadable or corrupt matrix files."""


def write_matrix(path, matrix: np.ndarray, meta: dict | None = None) -> None:
    matrix = np.asarray(matrix)
    if matrix.dtype == np.float64:
        dtype = "float64"
    elif matrix.dtype == np.int64:
        dtype = "int64"
    else:
        matrix = matrix.astype(np.float64)
        dtype = "float64"
    header = dict(meta or {})
    header["shape"] = list(matrix.shape)
    header["dtype"] = dtype
    blob = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(matrix, dtype=_DTYPES[dtype]).tobytes())


def read_matrix(path):
    """Return ``(matrix, meta)``; raises MatrixFormatError on corruption."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise MatrixFormatError(f"{path}: not a matrix file (bad magic)")
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    try:
        meta = json.loads(data[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MatrixFormatError(f"{path}: corrupt header ({exc})") from exc
    off += hlen
    shape = tuple(meta.get("shape", ()))
    dtype = meta.get("dtype", "float64")
    if dtype not in _DTYPES:
        raise MatrixFormatError(f"{path}: unsupported dtype {dtype!r}")
    count = int(np.prod(shape)) if shape else 0
    itemsize = np.dtype(_DTYPES[dtype]).itemsize
    if len(data) - off < count * itemsize:
        raise MatrixFormatError(f"{path}: truncated payload")
    flat = np.frombuffer(data, dtype=_DTYPES[dtype], count=count, offset=off)
    matrix = flat.reshape(shape).copy()
    return matrix, meta


def write_csv(path, matrix: np.ndarray, header: list[str], row_ids=None) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(matrix.shape[0]):
            cells = [repr(float(x)) for x in matrix[i]]
            if row_ids is not None:
                cells = [str(row_ids[i])] + cells
            fh.write(",".join(cells) + "\n")
