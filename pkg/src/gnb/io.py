"""Snapshot binaries, JSON reports and plot data."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import grid_of

MAGIC = b"GNBF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


def write_snapshot(path, u, s: float, t: float):
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, g.d, g.n, float(s), float(t)))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[np.ndarray, float, float]:
    """Returns (u, s, t)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, ver, d, n, s, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if ver != VERSION:
        raise ValueError(f"{path}: unsupported version {ver}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n**d:
        raise ValueError(f"{path}: expected {n**d} values, found {len(body) // 8}")
    u = np.frombuffer(body, dtype="<f8").astype(float).reshape((n,) * d)
    return u, s, t


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)
        fh.write("\n")


def emit_plot(csv_path, col: str, out=None) -> str:
    """Two-column 't value' text from a diagnostics CSV."""
    from .diagnostics import read_csv

    data = read_csv(csv_path)
    if col not in data:
        raise KeyError(f"column {col!r} not in {sorted(data)}")
    lines = [f"# t {col}"] + ["%.17g %.17g" % (a, b) for a, b in zip(data["t"], data[col])]
    text = "\n".join(lines) + "\n"
    if out is not None:
        Path(out).write_text(text)
    return text
