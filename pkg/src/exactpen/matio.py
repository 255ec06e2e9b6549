"""Dense matrix files.

CSV layout::

    rows,cols
    3,4
    <row 0 values>
    ...

Binary layout: the 5-byte magic ``EPSK1``, rows and cols as little-endian
uint64, then rows*cols little-endian float64 values in row-major order.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DomainError

MAGIC = b"EPSK1"
_DIMS = struct.Struct("<QQ")


def write_csv(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rows, cols = X.shape
    with open(path, "w") as fh:
        fh.write("rows,cols\n")
        fh.write(f"{rows},{cols}\n")
        for row in X:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DomainError(f"{path}: empty matrix file")
    if lines[0].replace(" ", "").lower() == "rows,cols":
        lines = lines[1:]
    try:
        rows, cols = (int(v) for v in lines[0].split(","))
        data = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    except ValueError as exc:
        raise DomainError(f"{path}: malformed matrix CSV ({exc})") from None
    X = np.array(data, dtype=float).reshape(len(data), -1) if data else np.zeros((0, cols))
    if X.shape != (rows, cols):
        raise DimensionMismatch(f"{path}: header says {rows}x{cols}, found {X.shape}")
    return X


def write_binary(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype="<f8"))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_DIMS.pack(*X.shape))
        fh.write(np.ascontiguousarray(X).tobytes())


def read_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise DomainError(f"{path}: bad magic, not an EPSK1 file")
    off = len(MAGIC)
    rows, cols = _DIMS.unpack_from(raw, off)
    off += _DIMS.size
    expected = rows * cols * 8
    if len(raw) - off != expected:
        raise DimensionMismatch(f"{path}: expected {expected} data bytes, found {len(raw) - off}")
    return np.frombuffer(raw, dtype="<f8", offset=off).reshape(rows, cols).astype(float)


def read_matrix(path) -> np.ndarray:
    """Dispatch on content: binary if the magic matches, CSV otherwise."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return read_binary(path) if head == MAGIC else read_csv(path)


def write_matrix(path, X, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_csv(path, X)
    elif fmt in ("bin", "binary"):
        write_binary(path, X)
    else:
        raise DomainError(f"unknown matrix format {fmt!r}")
