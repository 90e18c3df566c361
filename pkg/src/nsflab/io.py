"""Binary snapshots, diagnostics CSV and run manifests."""

import csv
import json
import math
import platform
import struct
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .errors import BadMagic, LengthMismatch, NormViolation, SnapshotError
from .grid import TorusGrid

MAGIC = b"NSF1"
VERSION = 1
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: TorusGrid
    t: float
    eps: float
    values: np.ndarray


def encode_snapshot(values, grid, t, eps):
    m = grid.m
    header = struct.pack(f"<4sII{m}I{m}ddd", MAGIC, VERSION, m, *grid.n, *grid.L, float(t), float(eps))
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape + (3,):
        raise ValueError(f"values have shape {values.shape}, expected {grid.shape + (3,)}")
    return header + np.ascontiguousarray(values, dtype="<f8").tobytes()


def write_snapshot(path, values, grid, t, eps):
    with open(path, "wb") as fh:
        fh.write(encode_snapshot(values, grid, t, eps))


def decode_snapshot(data, ambient=False):
    """Parse snapshot bytes; the unit-norm check is skipped for ambient states."""
    if len(data) < 12 or data[:4] != MAGIC:
        raise BadMagic(f"not a snapshot: leading bytes {data[:4]!r}, expected {MAGIC!r}")
    version, m = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if m not in (1, 2):
        raise SnapshotError(f"snapshot grid dimension {m} is not 1 or 2")
    fmt = f"<{m}I{m}ddd"
    head = 12 + struct.calcsize(fmt)
    if len(data) < head:
        raise LengthMismatch(head, len(data))
    fields = struct.unpack_from(fmt, data, 12)
    grid = TorusGrid(fields[:m], fields[m : 2 * m])
    t, eps = fields[2 * m], fields[2 * m + 1]
    expected = 24 * math.prod(grid.n)
    actual = len(data) - head
    if actual != expected:
        raise LengthMismatch(expected, actual)
    values = np.frombuffer(data, dtype="<f8", offset=head).astype(float).reshape(grid.shape + (3,))
    if not ambient:
        norms = np.sqrt(np.einsum("...i,...i->...", values, values)).ravel()
        bad = np.flatnonzero(~(np.abs(norms - 1.0) <= NORM_TOL))
        if bad.size:
            raise NormViolation(int(bad[0]), float(norms[bad[0]]))
    return Snapshot(grid, t, eps, values)


def read_snapshot(path, ambient=False):
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read(), ambient)


# -- diagnostics CSV -------------------------------------------------------------------


def csv_columns(kmax, ambient=False, residuals=False):
    cols = ["t", "E_f"]
    cols += [f"Hkf_{k}" for k in range(1, kmax + 1)]
    cols += [f"Hk_{k}" for k in range(1, kmax + 1)]
    cols += ["unit_err", "max_tau_f"]
    if ambient:
        cols.append("tube_E")
    if residuals:
        cols += ["energy_residual", "commuted_residual"]
    return cols


def _cell(v):
    if v is None:
        return "nan"
    return repr(float(v))


def csv_row(rec, ambient=False, residuals=False):
    row = [rec.t, rec.energy, *rec.weighted, *rec.plain, rec.unit_err, rec.max_tau_f]
    if ambient:
        row.append(rec.tube_energy)
    if residuals:
        row += [rec.residuals.get("energy"), rec.residuals.get("commuted")]
    return [_cell(v) for v in row]


def write_csv(path, records, kmax, ambient=False, residuals=False):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_columns(kmax, ambient, residuals))
        for rec in records:
            writer.writerow(csv_row(rec, ambient, residuals))


def read_csv(path):
    """Columns of a diagnostics CSV as {name: float array}."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(v) for v in row])


# -- manifest --------------------------------------------------------------------------


def build_id():
    return f"nsflab-{__version__}+{BACKEND}-py{platform.python_version()}-numpy{np.__version__}"


def write_manifest(path, config_text, wall_time, **extra):
    doc = {"config": config_text, "build": build_id(), "wall_time_s": wall_time}
    doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
