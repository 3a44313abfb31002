"""CSV and Matrix Market writers (17 significant digits throughout)."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_matrix_market(path, A, comment: str = "") -> Path:
    """Coordinate real general format, 1-based indices."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with path.open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        for line in comment.splitlines():
            fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{i + 1} {j + 1} {format(float(v), '.17g')}\n")
    return path
