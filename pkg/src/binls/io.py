"""File formats: field snapshots, diagnostic CSVs and resolved-config echoes.

Snapshot layout (little endian)::

    6 bytes   magic  b"B4NLS\\0"
    u32       version (1)
    f64 x 5   L, a, b, alpha, t
    u64       N
    f64 x 2N  (re, im) pairs of the physical-space samples, grid order
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .evolution import TRACE_COLUMNS, EvolutionTrace
from .spectral import Field, Grid

MAGIC = b"B4NLS\0"
VERSION = 1
_HEADER = struct.Struct("<6sI5dQ")


@dataclass(frozen=True)
class Snapshot:
    field: Field
    a: float
    b: float
    alpha: float
    t: float

    @property
    def grid(self) -> Grid:
        return self.field.grid


def snapshot_bytes(f: Field, *, a: float, b: float, alpha: float, t: float = 0.0) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.L, a, b, alpha, t, g.N)
    body = np.ascontiguousarray(np.asarray(f.values, dtype="<c16")).view("<f8").tobytes()
    return head + body


def write_snapshot(path, f: Field, *, a: float, b: float, alpha: float, t: float = 0.0) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(f, a=a, b=b, alpha=alpha, t=t))
    return path


def parse_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise ConfigurationError("snapshot too short")
    magic, version, L, a, b, alpha, t, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ConfigurationError("not a snapshot file (bad magic)")
    if version != VERSION:
        raise ConfigurationError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 16 * n
    if len(data) != expected:
        raise ConfigurationError(f"snapshot has {len(data)} bytes, expected {expected}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).view("<c16")
    return Snapshot(Field(Grid(L, int(n)), vals), a, b, alpha, t)


def read_snapshot(path) -> Snapshot:
    return parse_snapshot(Path(path).read_bytes())


def write_trace_csv(trace: EvolutionTrace, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([repr(float(v)) for v in r])
    return path


def read_trace_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in TRACE_COLUMNS}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"{type(o).__name__} is not JSON serialisable")
