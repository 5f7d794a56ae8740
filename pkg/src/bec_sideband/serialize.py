"""Binary field checkpoints and spectrum files."""

from __future__ import annotations

import csv
import json
import struct

import numpy as np

from .core import ComplexField, Grid
from .spectra import Spectrum, SpectrumLine

MAGIC = b"BECW"
VERSION = 1
_HEADER = struct.Struct("<4sH3I3dd")


class CheckpointError(ValueError):
    """Malformed checkpoint file."""


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


def _header_grid(grid: Grid):
    dims = tuple(grid.dims) + (1,) * (3 - grid.ndim)
    spacing = tuple(grid.spacing) + (0.0,) * (3 - grid.ndim)
    return dims, spacing


def checkpoint_bytes(field: ComplexField) -> bytes:
    dims, spacing = _header_grid(field.grid)
    head = _HEADER.pack(MAGIC, VERSION, *dims, *spacing, float(field.norm_target))
    # x runs fastest in the payload.
    payload = np.asarray(field.values, dtype="<c16").ravel(order="F").tobytes()
    return head + payload


def checkpoint_from_bytes(data: bytes) -> ComplexField:
    if len(data) < _HEADER.size:
        raise CheckpointError(f"file too short for a header ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    magic, version, nx, ny, nz, dx, dy, dz, norm = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported checkpoint version {version}")
    count = nx * ny * nz
    payload = data[_HEADER.size:]
    if len(payload) != 16 * count:
        raise CheckpointError(f"payload has {len(payload)} bytes, expected {16 * count}")
    if ny == 1 and nz == 1 and dy == 0.0 and dz == 0.0:
        grid = Grid((nx,), (dx,))
    else:
        grid = Grid((nx, ny, nz), (dx, dy, dz))
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.shape, order="F")
    return ComplexField(grid, values.astype(complex), norm)


def write_checkpoint(field: ComplexField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(field))


def read_checkpoint(path) -> ComplexField:
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_spectrum(spec: Spectrum, path, fmt: str = "csv", config: dict | None = None) -> None:
    """CSV: ``detuning_hz,amplitude``. JSON additionally carries lines and config."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["detuning_hz", "amplitude"])
            for d, a in zip(spec.detunings, spec.amplitude):
                w.writerow([_fmt(d), _fmt(a)])
        return
    if fmt != "json":
        raise ValueError(f"unknown format {fmt!r}")
    doc = {
        "normalization": spec.normalization,
        "detuning_hz": [float(x) for x in spec.detunings],
        "amplitude": [float(x) for x in spec.amplitude],
        "lines": [{"detuning_hz": ln.detuning, "weight": ln.weight,
                   "alpha": ln.alpha, "beta": ln.beta} for ln in spec.lines],
        "config": config or {},
    }
    failures = spec.meta.get("failures") if spec.meta else None
    if failures:
        doc["failures"] = {_fmt(k): v for k, v in failures.items()}
    # json writes floats with repr, which round-trips exactly (17 digits at most).
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_spectrum(path) -> Spectrum:
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        lines = tuple(SpectrumLine(d["detuning_hz"], d["weight"], d["alpha"], d["beta"])
                      for d in doc["lines"])
        return Spectrum(lines, np.asarray(doc["detuning_hz"], dtype=float),
                        np.asarray(doc["amplitude"], dtype=float), doc["normalization"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Spectrum((), data[:, 0], data[:, 1], "raw")
