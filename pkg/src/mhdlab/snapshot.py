"""
Binary field snapshots.

Layout (little-endian throughout):

    magic   4 bytes   b"MHDP"
    version u32       format version (currently 1)
    n       u32       points per axis
    L       f64       box side
    count   u32       number of fields
    per field:
        name    16 bytes ASCII, NUL-padded
        payload n*n f64, row-major
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Grid, ScalarField

MAGIC = b"MHDP"
VERSION = 1
_HEADER = struct.Struct("<4sIIdI")


def write_snapshot(path, grid: Grid, fields: dict[str, ScalarField]) -> None:
    for name in fields:
        if len(name.encode("ascii")) > 16:
            raise ValueError(f"field name {name!r} exceeds 16 ASCII bytes")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.n, grid.length, len(fields)))
        for name, f in fields.items():
            if f.grid.n != grid.n:
                raise ValueError("all fields must live on the snapshot grid")
            fh.write(name.encode("ascii").ljust(16, b"\0"))
            fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[Grid, dict[str, ScalarField]]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, version, n, length, count = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        grid = Grid(n, length)
        fields: dict[str, ScalarField] = {}
        for _ in range(count):
            name = fh.read(16).rstrip(b"\0").decode("ascii")
            raw = fh.read(8 * n * n)
            if len(raw) < 8 * n * n:
                raise ValueError(f"truncated payload for field {name!r}")
            values = np.frombuffer(raw, dtype="<f8").reshape(n, n).copy()
            fields[name] = ScalarField(grid, values).check_finite(f"snapshot field {name!r}")
    return grid, fields
