"""Diagnostics CSV, binary field snapshots and radially binned spectra."""

from __future__ import annotations

import csv
import os
import struct
import tempfile

import numpy as np

from .diagnostics import COLUMNS, DiagnosticsRecord
from .dynamics import SimState
from .errors import BadMagic, InvariantViolation, NonFinite, ParseError, VersionMismatch
from .fields import TOL_EVOLVE, DirectorField, Grid2D
from .spectral import rfft

FLOAT_FORMAT = "{:.17g}"

MAGIC = b"HFLD"
VERSION = 1
COMPONENTS = 5
HEADER = struct.Struct("<4sIIddI")


def _atomic_write(path, payload: bytes | str, mode: str):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode, **({"newline": ""} if "b" not in mode else {})) as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- diagnostics CSV -----------------------------------------------------------


def format_row(rec: DiagnosticsRecord) -> list[str]:
    return [FLOAT_FORMAT.format(v) for v in rec.row()]


class DiagnosticsWriter:
    """Streams records to a CSV file, writing the header first unless appending."""

    def __init__(self, path, append: bool = False):
        self._fh = open(path, "a" if append else "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        if not append:
            self._writer.writerow(COLUMNS)

    def write(self, rec: DiagnosticsRecord):
        self._writer.writerow(format_row(rec))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_diagnostics(records, path):
    lines = [",".join(COLUMNS)] + [",".join(format_row(r)) for r in records]
    _atomic_write(path, "\n".join(lines) + "\n", "w")


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    """Read a diagnostics CSV written by :func:`write_diagnostics`.

    Raises:
        ParseError: header differs from the fixed column order, or a data row
            is malformed (row numbers count the header as row 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty diagnostics file")
    if tuple(rows[0]) != COLUMNS:
        raise ParseError(f"{path} row 1: header must be {','.join(COLUMNS)}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(COLUMNS):
            raise ParseError(f"{path} row {i}: expected {len(COLUMNS)} fields, got {len(row)}")
        try:
            out.append(DiagnosticsRecord.from_row(row))
        except ValueError:
            raise ParseError(f"{path} row {i}: non-numeric field") from None
    return out


# -- snapshots -----------------------------------------------------------------


def snapshot_bytes(state: SimState) -> bytes:
    grid = state.grid
    header = HEADER.pack(MAGIC, VERSION, grid.n, grid.length, state.t, COMPONENTS)
    data = np.concatenate([state.u, state.d.values]).astype("<f8", copy=False)
    return header + np.ascontiguousarray(data).tobytes()


def write_snapshot(state: SimState, path):
    """Write ``state`` atomically: no partially written file is ever visible at ``path``."""
    _atomic_write(path, snapshot_bytes(state), "wb")


def parse_snapshot(blob: bytes, source: str = "snapshot") -> SimState:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{source}: missing HFLD magic")
    if len(blob) < HEADER.size:
        raise ParseError(f"{source}: truncated header ({len(blob)} bytes)")
    _, version, n, length, t, count = HEADER.unpack_from(blob)
    if version != VERSION:
        raise VersionMismatch(f"{source}: format version {version}, expected {VERSION}")
    if count != COMPONENTS:
        raise ParseError(f"{source}: {count} components, expected {COMPONENTS}")
    try:
        grid = Grid2D(n, length)
    except ValueError as exc:
        raise ParseError(f"{source}: invalid grid ({exc})") from None
    expected = HEADER.size + COMPONENTS * n * n * 8
    if len(blob) != expected:
        raise ParseError(f"{source}: size {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=HEADER.size).reshape(COMPONENTS, n, n).astype(float)
    if not np.isfinite(t) or not np.all(np.isfinite(data)):
        raise InvariantViolation(f"{source}: non-finite values")
    d = DirectorField(grid, data[2:], tol=TOL_EVOLVE)
    try:
        return SimState(t, data[:2], d)
    except NonFinite as exc:
        raise InvariantViolation(f"{source}: {exc}") from None


def read_snapshot(path) -> SimState:
    """Read and validate a snapshot.

    Raises:
        BadMagic, VersionMismatch: wrong file type or format version.
        ParseError: truncated or inconsistent file.
        InvariantViolation: director off the sphere beyond ``TOL_EVOLVE``, or
            velocity not divergence-free.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    return parse_snapshot(blob, os.fspath(path))


# -- spectra -------------------------------------------------------------------

SPECTRUM_COLUMNS = ("shell", "k", "E_u", "E_grad_d")


def shell_spectra(state: SimState) -> np.ndarray:
    """Radially binned spectra, one row per integer shell ``m`` (``|k_int|`` rounded).

    ``E_u`` sums to ``0.5 ||u||^2`` and ``E_grad_d`` to ``0.5 ||grad d||^2``.
    ``k`` is the physical wavenumber ``2 pi m / L``.
    """
    grid = state.grid
    area = grid.length**2
    w = grid.rfft_weights
    scale = area / grid.n**4
    uh = rfft(state.u)
    dh = rfft(state.d.values)
    e_u = 0.5 * scale * w * np.sum(np.abs(uh) ** 2, axis=0)
    dksq = grid.dk1**2 + grid.dk2**2
    e_g = 0.5 * scale * w * dksq * np.sum(np.abs(dh) ** 2, axis=0)
    kint = np.rint(grid.kabs * grid.length / (2 * np.pi)).astype(int)
    shells = int(kint.max()) + 1
    out = np.zeros((shells, 4))
    out[:, 0] = np.arange(shells)
    out[:, 1] = 2 * np.pi * out[:, 0] / grid.length
    out[:, 2] = np.bincount(kint.ravel(), e_u.ravel(), shells)
    out[:, 3] = np.bincount(kint.ravel(), e_g.ravel(), shells)
    return out


def write_spectrum(state: SimState, path):
    rows = shell_spectra(state)
    lines = [",".join(SPECTRUM_COLUMNS)]
    lines += [",".join([str(int(r[0]))] + [FLOAT_FORMAT.format(v) for v in r[1:]]) for r in rows]
    _atomic_write(path, "\n".join(lines) + "\n", "w")
