"""Snapshot format and CSV/JSON writers."""

import json
import struct

import numpy as np
import pytest

from binls import io
from binls.errors import ConfigurationError
from binls.evolution import EvolutionConfig, evolve
from binls.spectral import Field, Grid


def test_snapshot_exact_bytes():
    g = Grid(1.5, 8)
    vals = np.arange(8) + 1j * np.arange(8)[::-1]
    data = io.snapshot_bytes(Field(g, vals), a=-2.0, b=3.0, alpha=8.0, t=0.25)
    assert data[:6] == b"B4NLS\x00"
    assert struct.unpack_from("<I", data, 6) == (1,)
    assert struct.unpack_from("<5d", data, 10) == (1.5, -2.0, 3.0, 8.0, 0.25)
    assert struct.unpack_from("<Q", data, 50) == (8,)
    body = np.frombuffer(data[58:], dtype="<f8")
    assert list(body[:4]) == [0.0, 7.0, 1.0, 6.0]
    assert len(data) == 58 + 16 * 8


def test_snapshot_round_trip(tmp_path, rng):
    g = Grid(3.0, 64)
    f = Field(g, rng.standard_normal(64) + 1j * rng.standard_normal(64))
    path = io.write_snapshot(tmp_path / "s.b4nls", f, a=1.0, b=2.0, alpha=6.0, t=0.5)
    s = io.read_snapshot(path)
    assert s.grid == g
    assert np.array_equal(s.field.values, f.values)
    assert (s.a, s.b, s.alpha, s.t) == (1.0, 2.0, 6.0, 0.5)


@pytest.mark.parametrize("mutate", ["magic", "version", "truncate", "short"])
def test_snapshot_corruption(mutate):
    g = Grid(1.0, 8)
    data = bytearray(io.snapshot_bytes(Field(g, np.ones(8)), a=0, b=1, alpha=2))
    if mutate == "magic":
        data[0:1] = b"X"
    elif mutate == "version":
        data[6:10] = struct.pack("<I", 9)
    elif mutate == "truncate":
        data = data[:-8]
    else:
        data = data[:20]
    with pytest.raises(ConfigurationError):
        io.parse_snapshot(bytes(data))


def test_trace_csv_round_trip(tmp_path):
    g = Grid(5.0, 128)
    u0 = Field.from_function(g, lambda x: np.exp(-x * x))
    tr = evolve(u0, EvolutionConfig(2.0, 0.0, g, (0.0, 0.1), 20, monitor_stride=5))
    path = io.write_trace_csv(tr, tmp_path / "trace.csv")
    back = io.read_trace_csv(path)
    assert np.array_equal(back["t"], tr.t)
    assert np.array_equal(back["energy"], tr.column("energy"))


def test_write_json_handles_numpy(tmp_path):
    p = io.write_json(tmp_path / "x.json", {"a": np.float64(1.5), "b": np.arange(3), "c": np.int64(2)})
    assert json.loads(p.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": 2}
    with pytest.raises(TypeError):
        io.write_json(tmp_path / "y.json", {"a": object()})
