"""VSF1: a small versioned binary container for sampled fields.

Layout::

    VSF1
    kind vector|scalar
    grid nx ny nz nt
    xrange a b
    yrange a b
    zrange a b
    trange a b
    meta <single line>
    end
    <raw little-endian float64 samples, (t, z, y, x[, component]) row-major>

Floats in the header are written with ``repr`` so they parse back to the same
double; together with the raw payload this makes write -> read -> write
byte-identical.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import FieldFileError
from .fields import Grid4, ScalarField, VectorField

MAGIC = "VSF1"
_DTYPE = np.dtype("<f8")


def header_bytes(field: Union[VectorField, ScalarField]) -> bytes:
    g = field.grid
    kind = "vector" if isinstance(field, VectorField) else "scalar"
    lines = [
        MAGIC,
        f"kind {kind}",
        f"grid {g.nx} {g.ny} {g.nz} {g.nt}",
        *(f"{label} {float(lo)!r} {float(hi)!r}"
          for label, (lo, hi) in zip(("xrange", "yrange", "zrange", "trange"),
                                     (*g.ranges, g.trange))),
        f"meta {field.metadata}",
        "end",
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def atomic_write_bytes(path: Union[str, Path], chunks) -> None:
    """Write ``chunks`` (bytes-like objects) to a temp file, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            for c in chunks:
                fh.write(c)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path: Union[str, Path], field: Union[VectorField, ScalarField]) -> None:
    payload = np.ascontiguousarray(field.samples, dtype=_DTYPE)
    try:
        atomic_write_bytes(path, [header_bytes(field), memoryview(payload).cast("B")])
    except OSError as exc:
        raise FieldFileError(f"cannot write {path}: {exc}") from exc


def _expect(line: str, key: str, count: int, path) -> list:
    parts = line.split(" ")
    if parts[0] != key or len(parts) != count + 1:
        raise FieldFileError(f"{path}: expected '{key}' with {count} values, got {line!r}")
    return parts[1:]


def read_field(path: Union[str, Path]) -> Union[VectorField, ScalarField]:
    """Parse a VSF1 file; malformed input raises :class:`FieldFileError`."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise FieldFileError(f"cannot open {path}: {exc}") from exc
    with fh:
        def line() -> str:
            raw = fh.readline()
            if not raw.endswith(b"\n"):
                raise FieldFileError(f"{path}: truncated header")
            try:
                return raw[:-1].decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FieldFileError(f"{path}: header is not UTF-8") from exc

        if line() != MAGIC:
            raise FieldFileError(f"{path}: not a VSF1 file")
        (kind,) = _expect(line(), "kind", 1, path)
        if kind not in ("vector", "scalar"):
            raise FieldFileError(f"{path}: unknown kind {kind!r}")
        try:
            nx, ny, nz, nt = (int(s) for s in _expect(line(), "grid", 4, path))
            ranges = [tuple(float(s) for s in _expect(line(), key, 2, path))
                      for key in ("xrange", "yrange", "zrange", "trange")]
        except ValueError as exc:
            raise FieldFileError(f"{path}: bad numeric header field: {exc}") from exc
        meta = line()
        if meta == "meta":
            meta = ""
        elif meta.startswith("meta "):
            meta = meta[5:]
        else:
            raise FieldFileError(f"{path}: expected 'meta' line")
        if line() != "end":
            raise FieldFileError(f"{path}: expected 'end' line")
        try:
            grid = Grid4(nx, ny, nz, nt, *ranges)
        except ValueError as exc:
            raise FieldFileError(f"{path}: invalid grid: {exc}") from exc
        shape = grid.shape + ((3,) if kind == "vector" else ())
        count = int(np.prod(shape))
        data = np.fromfile(fh, dtype=_DTYPE, count=count)
        if data.size != count or fh.read(1):
            raise FieldFileError(f"{path}: payload has wrong length for grid {shape}")
    data = data.astype(np.float64, copy=False).reshape(shape)
    cls = VectorField if kind == "vector" else ScalarField
    return cls(grid, data, meta)
