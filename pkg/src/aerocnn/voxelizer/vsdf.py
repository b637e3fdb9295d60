"""
VSDF grid files.

Little-endian layout: magic "VSDF", u32 version, u32 nx/ny/nz, f64 origin[3],
f64 spacing[3], u8 sign convention (1 = positive inside), 3 zero padding
bytes, then nx*ny*nz f32 values with x fastest.
"""

import struct
from pathlib import Path

import numpy as np

from .sdf import SdfGrid

MAGIC = b"VSDF"
VERSION = 1
HEADER = struct.Struct("<4sI3I3d3dB3x")
# payload ceiling (cells) so a corrupt header can't request absurd reads
MAX_CELLS = 1 << 30


class VsdfFormatError(ValueError):
    pass


def write_vsdf(grid: SdfGrid, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = HEADER.pack(
        MAGIC,
        VERSION,
        *grid.dims,
        *grid.origin.tolist(),
        *grid.spacing.tolist(),
        1 if grid.positive_inside else 0,
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes())
    return path


def read_vsdf(path) -> SdfGrid:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise VsdfFormatError(f"bad magic in {path}: {data[:4]!r}")
    if len(data) < HEADER.size:
        raise VsdfFormatError(f"truncated header in {path}: {len(data)} bytes")

    _, version, nx, ny, nz, ox, oy, oz, sx, sy, sz, convention = HEADER.unpack_from(data)
    if version != VERSION:
        raise VsdfFormatError(f"version mismatch in {path}: file {version}, reader {VERSION}")
    if min(nx, ny, nz) < 1 or nx * ny * nz > MAX_CELLS:
        raise VsdfFormatError(f"dimension overflow in {path}: {nx}x{ny}x{nz}")

    n_cells = nx * ny * nz
    payload = len(data) - HEADER.size
    if payload < 4 * n_cells:
        raise VsdfFormatError(
            f"truncated payload in {path}: {payload} bytes, expected {4 * n_cells}"
        )
    if payload > 4 * n_cells:
        raise VsdfFormatError(
            f"trailing bytes in {path}: {payload} bytes, expected {4 * n_cells}"
        )
    values = np.frombuffer(data, dtype="<f4", count=n_cells, offset=HEADER.size)
    return SdfGrid(
        dims=(nx, ny, nz),
        origin=(ox, oy, oz),
        spacing=(sx, sy, sz),
        values=values.astype(np.float32),
        positive_inside=convention == 1,
    )
