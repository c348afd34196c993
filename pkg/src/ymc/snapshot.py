"""Binary field snapshots.

Layout (little-endian throughout, documented in docs/format.md):

    magic   4 bytes  b"YMC1"
    version u32      currently 1
    N       u32
    K       u32
    L_box   f64
    g       f64
    t       f64
    kind    u8       0=potential 1=momentum 2=auxiliary
    data    N^3*K*3 f64, C-order over (site, color, direction),
            site index flattened C-order over (x1, x2, x3)
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lattice import FIELD_KINDS, Grid, LatticeField

__all__ = ["write_snapshot", "read_snapshot", "SnapshotMeta"]

MAGIC = b"YMC1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdddB")

_KIND_CODE = {name: code for code, name in enumerate(FIELD_KINDS)}
_CODE_KIND = {code: name for name, code in _KIND_CODE.items()}


@dataclass(frozen=True)
class SnapshotMeta:
    n: int
    k: int
    box: float
    g: float
    t: float
    kind: str


def write_snapshot(path, field: LatticeField, *, g: float, t: float = 0.0) -> None:
    header = _HEADER.pack(
        MAGIC, VERSION, field.grid.n, field.k, field.grid.box, g, t,
        _KIND_CODE[field.kind],
    )
    payload = field.data.reshape(field.grid.sites, field.k, 3).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path):
    """Read a snapshot; returns (LatticeField, SnapshotMeta)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path}: truncated snapshot header", where="snapshot.read_snapshot")
    magic, version, n, k, box, g, t, kind_code = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}", where="snapshot.read_snapshot")
    if version != VERSION:
        raise DomainError(f"{path}: unsupported version {version}",
                          where="snapshot.read_snapshot")
    if kind_code not in _CODE_KIND:
        raise DomainError(f"{path}: unknown kind code {kind_code}",
                          where="snapshot.read_snapshot")
    expected = _HEADER.size + n**3 * k * 3 * 8
    if len(raw) != expected:
        raise DomainError(
            f"{path}: payload size {len(raw) - _HEADER.size} does not match header",
            where="snapshot.read_snapshot",
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, n, n, k, 3)
    grid = Grid(n, box)
    field = LatticeField(grid, data.astype(float), _CODE_KIND[kind_code])
    return field, SnapshotMeta(n=n, k=k, box=box, g=g, t=t, kind=_CODE_KIND[kind_code])
