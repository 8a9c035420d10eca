"""Binary and CSV serialization of fields.

Binary layout (all little-endian)::

    b"FNLS" | version u32 | dim u32 | points_per_axis u32 | box_half_length f64
    values f64[points_per_axis ** dim], row-major
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidFieldError
from .spectral import Field, GridDescriptor

MAGIC = b"FNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")


def field_to_bytes(u: Field) -> bytes:
    g = u.grid
    header = _HEADER.pack(MAGIC, VERSION, g.dim, g.points_per_axis, g.box_half_length)
    return header + np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C")


def field_from_bytes(data: bytes) -> Field:
    if len(data) < _HEADER.size:
        raise InvalidFieldError("truncated field header")
    magic, version, dim, m, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidFieldError(f"bad magic {magic!r}")
    if version != VERSION:
        raise InvalidFieldError(f"unsupported field format version {version}")
    grid = GridDescriptor(dim, m, L)
    n = m**dim
    payload = data[_HEADER.size:]
    if len(payload) != 8 * n:
        raise InvalidFieldError(f"expected {8 * n} payload bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    return Field(grid, values)


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, u: Field) -> None:
    atomic_write_bytes(path, field_to_bytes(u))


def read_field(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(path, u: Field, precision: int = 10) -> None:
    """Lossy export: one row per grid point with coordinates and value."""
    g = u.grid
    coords = [c.ravel() for c in g.coordinates()]
    names = ["x", "y", "z"][: g.dim]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["u"])
        for row in zip(*coords, u.values.ravel()):
            w.writerow([f"{v:.{precision}g}" for v in row])
