"""PSG v1 grid files and small CSV helpers.

PSG v1 layout: the ASCII header lines ``PSG 1``, ``rows <int>``,
``cols <int>``, ``channels <int>``, ``data binary-f64-le``, one blank line,
then rows*cols*channels little-endian float64 values in row-major order.
Masks are stored as 1-channel grids of 0.0/1.0.
"""

from __future__ import annotations

import io as _io
from pathlib import Path

import numpy as np

from .errors import BadParamsError
from .grid import PixelGrid

_MAGIC = b"PSG 1"


def write_psg(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[..., None]
    if values.ndim != 3:
        raise BadParamsError("PSG stores (rows, cols[, channels]) arrays")
    rows, cols, channels = values.shape
    header = (
        _MAGIC
        + f"\nrows {rows}\ncols {cols}\nchannels {channels}\ndata binary-f64-le\n\n".encode()
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.astype("<f8").tobytes(order="C"))


def read_psg(path) -> np.ndarray:
    """Read a PSG file; returns (rows, cols) for 1 channel else (rows, cols, channels)."""
    raw = Path(path).read_bytes()
    head, sep, payload = raw.partition(b"\n\n")
    if not sep:
        raise BadParamsError(f"{path}: missing PSG header terminator")
    lines = head.split(b"\n")
    if lines[0] != _MAGIC:
        raise BadParamsError(f"{path}: not a PSG v1 file")
    fields = {}
    for line in lines[1:]:
        key, _, value = line.partition(b" ")
        fields[key.decode()] = value.decode()
    if fields.get("data") != "binary-f64-le":
        raise BadParamsError(f"{path}: unsupported data encoding")
    rows, cols, channels = (int(fields[k]) for k in ("rows", "cols", "channels"))
    expected = rows * cols * channels * 8
    if len(payload) != expected:
        raise BadParamsError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols, channels)
    return values[..., 0].copy() if channels == 1 else values.copy()


def write_mask_psg(path, mask: np.ndarray) -> None:
    write_psg(path, np.asarray(mask, dtype=bool).astype(np.float64))


def read_mask_psg(path) -> np.ndarray:
    return read_psg(path) != 0.0


def write_grid_psg(values_path, mask_path, grid: PixelGrid) -> None:
    write_psg(values_path, grid.values)
    write_mask_psg(mask_path, grid.mask)


def write_matrix_csv(path, matrix: np.ndarray, header: list[str] | None = None) -> None:
    """Deterministic CSV: shortest round-trip float representation."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_matrix_csv(path, skip_header: bool = False) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if skip_header:
        lines = lines[1:]
    return np.array([[float(x) for x in ln.split(",")] for ln in lines])


def write_rows_csv(path, header: list[str], rows: list[list]) -> None:
    """CSV with mixed str/number cells; floats use repr for byte stability."""

    def cell(x):
        if isinstance(x, float):
            return repr(x)
        return str(x)

    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(x) for x in row) + "\n")
