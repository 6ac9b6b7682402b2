"""Binary snapshot files and the diagnostics CSV stream.

Snapshot layout (all little-endian)::

    magic      4 bytes  b"SLLG"
    version    uint16
    dim        uint8
    n          uint32   points per axis
    t, lam, eps  float64
    seed       int64    (-1 when the run had no noise path)
    scheme     32 bytes ASCII tag, NUL padded
    payload    3 * n**dim float64, component-major, axis 1 fastest
    crc32      uint32   over everything above
"""

from __future__ import annotations

import csv
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .diagnostics import RECORD_FIELDS, DiagnosticsRecord
from .errors import ChecksumError, SnapshotVersionError, TruncatedSnapshotError, SnapshotFormatError
from .spectral import TorusGrid, VectorField

MAGIC = b"SLLG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBIdddq32s")
_CRC = struct.Struct("<I")
CSV_SCHEMA = "sllg-diagnostics v1"


@dataclass
class SnapshotFile:
    field: VectorField
    t: float
    lam: float
    eps: float
    seed: Optional[int]
    scheme: str

    def to_bytes(self) -> bytes:
        grid = self.field.grid
        tag = self.scheme.encode("ascii")
        if len(tag) > 32:
            raise ValueError("scheme tag longer than 32 bytes")
        header = _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            grid.dim,
            grid.n,
            float(self.t),
            float(self.lam),
            float(self.eps),
            -1 if self.seed is None else int(self.seed),
            tag,
        )
        payload = b"".join(
            np.ravel(c, order="F").astype("<f8").tobytes() for c in self.field.values
        )
        body = header + payload
        return body + _CRC.pack(zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "SnapshotFile":
        if len(data) < 6:
            raise TruncatedSnapshotError("file shorter than the magic and version fields")
        if data[:4] != MAGIC:
            raise SnapshotFormatError(f"bad magic {data[:4]!r}")
        (version,) = struct.unpack_from("<H", data, 4)
        if version != FORMAT_VERSION:
            raise SnapshotVersionError(f"unsupported snapshot version {version}")
        if len(data) < _HEADER.size:
            raise TruncatedSnapshotError("file shorter than the header")
        _, _, dim, n, t, lam, eps, seed, tag = _HEADER.unpack_from(data)
        if dim not in (1, 2, 3) or n < 4 or n % 2:
            raise SnapshotFormatError(f"invalid grid dim={dim} n={n}")
        npts = n**dim
        expected = _HEADER.size + 3 * npts * 8 + _CRC.size
        if len(data) < expected:
            raise TruncatedSnapshotError(f"expected {expected} bytes, got {len(data)}")
        if len(data) > expected:
            raise SnapshotFormatError(f"{len(data) - expected} trailing bytes")
        body = data[: expected - _CRC.size]
        (crc,) = _CRC.unpack_from(data, expected - _CRC.size)
        if zlib.crc32(body) != crc:
            raise ChecksumError("snapshot checksum mismatch")
        flat = np.frombuffer(body, dtype="<f8", offset=_HEADER.size).astype(float)
        grid = TorusGrid(dim, n)
        values = np.stack([c.reshape(grid.shape, order="F") for c in flat.reshape(3, npts)])
        return cls(
            VectorField(grid, values),
            t,
            lam,
            eps,
            None if seed < 0 else seed,
            tag.rstrip(b"\0").decode("ascii"),
        )

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path) -> "SnapshotFile":
        return cls.from_bytes(Path(path).read_bytes())


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


class DiagnosticsCSV:
    """Appendable CSV of :class:`DiagnosticsRecord` rows.

    The first line is a comment carrying the schema version, the second the
    column names. Opening an existing file checks both and appends.
    """

    def __init__(self, path):
        self.path = Path(path)
        if self.path.exists() and self.path.stat().st_size > 0:
            with self.path.open() as fh:
                first = fh.readline().strip()
                cols = fh.readline().strip()
            if first != f"# {CSV_SCHEMA}" or cols != ",".join(RECORD_FIELDS):
                raise SnapshotFormatError(f"{self.path} is not a {CSV_SCHEMA} file")
        else:
            with self.path.open("w", newline="") as fh:
                fh.write(f"# {CSV_SCHEMA}\n")
                csv.writer(fh, lineterminator="\n").writerow(RECORD_FIELDS)

    def append(self, records: Iterable[DiagnosticsRecord]) -> None:
        with self.path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for rec in records:
                row = rec.as_row()
                w.writerow([_fmt(row[k]) for k in RECORD_FIELDS])


def read_diagnostics_csv(path) -> list:
    with Path(path).open() as fh:
        first = fh.readline().strip()
        if first != f"# {CSV_SCHEMA}":
            raise SnapshotFormatError(f"missing schema row in {path}")
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            kw = {k: (None if row[k] == "" else float(row[k])) for k in RECORD_FIELDS}
            out.append(DiagnosticsRecord(**kw))
    return out
