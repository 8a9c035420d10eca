import csv
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracnls import Field, GridDescriptor, InvalidFieldError, read_field, write_field, write_field_csv
from fracnls.fieldio import field_from_bytes, field_to_bytes


@given(
    values=arrays(np.float64, (8, 8), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)),
    L=st.floats(0.1, 100.0),
)
def test_bytes_round_trip_is_bit_exact(values, L):
    u = Field(GridDescriptor(2, 8, L), values)
    v = field_from_bytes(field_to_bytes(u))
    assert v.grid == u.grid
    assert v.values.tobytes() == u.values.tobytes()


@pytest.mark.filterwarnings("ignore:N = 1 grids")
@pytest.mark.parametrize("dim, m", [(1, 16), (2, 8), (3, 4)])
def test_file_round_trip(tmp_path, rng, dim, m):
    g = GridDescriptor(dim, m, 3.5)
    u = Field(g, rng.standard_normal(g.shape))
    write_field(tmp_path / "sub" / "u.field", u)
    v = read_field(tmp_path / "sub" / "u.field")
    assert v.grid == g and np.array_equal(v.values, u.values)
    assert not [p for p in (tmp_path / "sub").iterdir() if p.name.startswith(".")]


def test_header_layout():
    u = Field(GridDescriptor(2, 4, 1.5), np.arange(16.0).reshape(4, 4))
    data = field_to_bytes(u)
    assert struct.unpack_from("<4sIIId", data) == (b"FNLS", 1, 2, 4, 1.5)
    assert len(data) == 24 + 16 * 8
    assert np.frombuffer(data[24:], "<f8")[5] == 5.0


def test_bad_magic():
    data = bytearray(field_to_bytes(Field.zeros(GridDescriptor(2, 4, 1.0))))
    data[:4] = b"XXXX"
    with pytest.raises(InvalidFieldError, match="magic"):
        field_from_bytes(bytes(data))


def test_bad_version_and_truncation():
    data = field_to_bytes(Field.zeros(GridDescriptor(2, 4, 1.0)))
    with pytest.raises(InvalidFieldError, match="version"):
        field_from_bytes(data[:4] + struct.pack("<I", 9) + data[8:])
    with pytest.raises(InvalidFieldError):
        field_from_bytes(data[:-8])
    with pytest.raises(InvalidFieldError):
        field_from_bytes(data[:10])


def test_csv_export(tmp_path):
    g = GridDescriptor(2, 4, 2.0)
    u = Field(g, np.arange(16.0).reshape(4, 4))
    write_field_csv(tmp_path / "u.csv", u)
    rows = list(csv.reader((tmp_path / "u.csv").open()))
    assert rows[0] == ["x", "y", "u"]
    assert len(rows) == 17
    assert [float(v) for v in rows[2]] == [-2.0, -1.0, 1.0]
