"""Binary ``.lspf`` field files and CSV export.

Layout: ``b"LSPF"``, ``uint32 n``, ``float64 L`` (16 bytes, little-endian),
then ``n*n`` little-endian float64 values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Field2D, Grid2D

MAGIC = b"LSPF"
_HEADER = struct.Struct("<4sId")


def write_field(path, u: Field2D) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, u.grid.n, u.grid.L))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_field(path) -> Field2D:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: file too short for an LSPF header")
    magic, n, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for n={n}, got {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    grid = Grid2D(L, n)
    field = Field2D(grid, values)
    if not np.array_equal(field.values, values):
        raise ValueError(f"{path}: boundary ring is not zero")
    return field


def export_csv(path, u: Field2D) -> None:
    X, Y = u.grid.mesh
    table = np.column_stack([X.ravel(), Y.ravel(), u.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
