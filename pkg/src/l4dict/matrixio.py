"""Plain-text matrix files used across the package.

Layout: first line ``rows cols``, then ``rows`` lines of ``cols`` numbers
separated by single spaces.  Values are written with 17 significant digits,
which round-trips float64 exactly, so ``load(save(m)) == m`` bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import MatrixFormatError
from .linalg import as_matrix


def format_float(x: float) -> str:
    return f"{x:.17g}"


def save_matrix(path: str | os.PathLike, m) -> None:
    m = as_matrix(m)
    rows, cols = m.shape
    lines = [f"{rows} {cols}"]
    for i in range(rows):
        lines.append(" ".join(format_float(v) for v in m[i]))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MatrixFormatError(f"{path}: header must be 'rows cols'")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: non-integer header {header}") from exc
        if rows < 1 or cols < 1:
            raise MatrixFormatError(f"{path}: invalid shape {rows}x{cols}")
        data = np.empty((rows, cols))
        for i in range(rows):
            line = fh.readline()
            if not line:
                raise MatrixFormatError(f"{path}: expected {rows} rows, file ended at row {i}")
            parts = line.split()
            if len(parts) != cols:
                raise MatrixFormatError(
                    f"{path}: row {i} has {len(parts)} values, expected {cols}"
                )
            try:
                data[i] = [float(v) for v in parts]
            except ValueError as exc:
                raise MatrixFormatError(f"{path}: row {i} has a non-numeric value") from exc
    return data
