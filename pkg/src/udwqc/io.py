"""Output files: CSV with shortest round-trip floats, 16-bit P5 greymaps,
JSON reports.  Every file is written to a temporary sibling and renamed."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["atomic_write", "fmt", "csv_text", "write_csv", "grid_csv_text",
           "pgm_bytes", "signed_pgm_bytes", "write_json", "read_pgm"]


def atomic_write(path, data: bytes | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x) -> str:
    """Shortest decimal string that round-trips the float."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def grid_csv_text(grid: np.ndarray, meta: dict) -> str:
    """One comment line with ``meta``, then rows ``y = 0 .. ny-1`` of ``nx`` cells."""
    head = "# " + " ".join(f"{k}={fmt(v)}" for k, v in meta.items())
    body = [",".join(fmt(v) for v in row) for row in grid]
    return "\n".join([head] + body) + "\n"


def _p5(levels: np.ndarray) -> bytes:
    # first image row is the top of the device (largest y)
    img = np.ascontiguousarray(levels[::-1]).astype(">u2")
    ny, nx = img.shape
    return f"P5\n{nx} {ny}\n65535\n".encode("ascii") + img.tobytes()


def pgm_bytes(grid: np.ndarray) -> bytes:
    """Non-negative grid, linear scale with the largest cell at 65535."""
    g = np.asarray(grid, dtype=float)
    if (g < 0).any():
        raise ValueError("greymap input must be non-negative")
    peak = g.max() if g.size else 0.0
    levels = np.zeros(g.shape) if peak == 0 else np.rint(g / peak * 65535)
    return _p5(levels)


def signed_pgm_bytes(grid: np.ndarray) -> bytes:
    """Signed grid: zero at 32768, largest magnitude at 0 or 65535."""
    g = np.asarray(grid, dtype=float)
    peak = np.abs(g).max() if g.size else 0.0
    scaled = np.zeros(g.shape) if peak == 0 else g / peak
    levels = np.clip(np.rint(32768 + scaled * 32767), 0, 65535)
    return _p5(levels)


def read_pgm(data: bytes) -> np.ndarray:
    """Inverse of the writers: rows returned bottom (y = 0) first."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary greymap")
    nx, ny = map(int, parts[1].split())
    img = np.frombuffer(parts[3], dtype=">u2").reshape(ny, nx)
    return img[::-1].astype(np.int64)


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
