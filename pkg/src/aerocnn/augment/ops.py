"""
Online SDF augmentations. Every operator returns a new grid with the same
dims, origin, spacing and sign convention; inputs are never mutated.

Each operator draws its strength from `rng` unless the strength is passed
explicitly, which is how tests pin a draw.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates, zoom

from ..voxelizer import SdfGrid

NOISE_KINDS = ("gaussian", "uniform", "impulse")


def _f64(g: SdfGrid) -> np.ndarray:
    return g.values.astype(np.float64)


def clamp_aug(g: SdfGrid, rng: np.random.Generator, u_range=(1e-5, 1.0), u: float | None = None) -> SdfGrid:
    """Clip to +/- t with t = max|value| * u (narrow-band SDF)."""
    if u is None:
        u = rng.uniform(*u_range)
    t = float(np.abs(_f64(g)).max()) * u
    return g.with_values(np.clip(_f64(g), -t, t))


def shift_x(values: np.ndarray, k: int) -> np.ndarray:
    """Shift along x (last array axis) by k cells, replicating edge slabs."""
    nx = values.shape[-1]
    src = np.clip(np.arange(nx) - k, 0, nx - 1)
    return np.take(values, src, axis=-1)


def translate_aug(g: SdfGrid, rng: np.random.Generator, fraction: float = 0.04, k: int | None = None) -> SdfGrid:
    if k is None:
        k_max = math.floor(fraction * g.dims[0])
        k = int(rng.integers(-k_max, k_max + 1))
    return g.with_values(shift_x(g.values, k))


def impulse_count(n_cells: int, fraction: float) -> int:
    return max(1, int(round(fraction * n_cells)))


def noise_aug(
    g: SdfGrid,
    rng: np.random.Generator,
    kinds=NOISE_KINDS,
    strength_range=(0.001, 0.05),
    impulse_range=(1e-4, 1e-3),
    kind: str | None = None,
    strength: float | None = None,
) -> SdfGrid:
    if kind is None:
        kind = kinds[int(rng.integers(len(kinds)))]
    values = _f64(g)

    if kind == "impulse":
        fraction = rng.uniform(*impulse_range) if strength is None else strength
        count = impulse_count(values.size, fraction)
        cells = rng.choice(values.size, size=count, replace=False)
        signs = rng.choice(np.array([-1.0, 1.0]), size=count)
        out = values.reshape(-1).copy()
        out[cells] = signs * np.abs(values).max()
        return g.with_values(out)

    s = rng.uniform(*strength_range) if strength is None else strength
    scale = s * float(values.std())
    if kind == "gaussian":
        return g.with_values(values + rng.normal(0.0, 1.0, values.shape) * scale)
    if kind == "uniform":
        return g.with_values(values + rng.uniform(-1.0, 1.0, values.shape) * scale)
    raise ValueError(f"unknown noise kind {kind!r}")


def warp(values: np.ndarray, displacement: np.ndarray) -> np.ndarray:
    """
    Sample `values` at (index + displacement) by trilinear interpolation,
    clamping at the edges. displacement: (3, nz, ny, nx) in cells.
    """
    coords = np.indices(values.shape, dtype=np.float64) + displacement
    return map_coordinates(values.astype(np.float64), coords, order=1, mode="nearest")


def elastic_aug(
    g: SdfGrid,
    rng: np.random.Generator,
    sigma: float = 4.0,
    alpha_range=(0.1, 0.5),
    alpha: float | None = None,
) -> SdfGrid:
    if alpha is None:
        alpha = rng.uniform(*alpha_range)
    shape = g.values.shape
    noise = rng.standard_normal((3,) + shape)
    displacement = np.stack([gaussian_filter(n, sigma, mode="nearest") for n in noise])
    peak = float(np.sqrt((displacement**2).sum(axis=0)).max())
    if peak > 0.0:
        displacement *= alpha / peak
    else:
        displacement[:] = 0.0
    return g.with_values(warp(g.values, displacement))


def resample(values: np.ndarray, factors) -> np.ndarray:
    """Corner-aligned linear down- then up-sampling. factors are (fx, fy, fz)."""
    full = values.shape
    fz_fy_fx = tuple(reversed([float(f) for f in factors]))
    coarse = tuple(max(2, math.ceil(n / f)) for n, f in zip(full, fz_fy_fx))
    small = zoom(
        values.astype(np.float64),
        [m / n for m, n in zip(coarse, full)],
        order=1,
        mode="nearest",
        grid_mode=False,
    )
    return zoom(small, [n / m for n, m in zip(full, small.shape)], order=1, mode="nearest", grid_mode=False)


def aniso_resample_aug(
    g: SdfGrid,
    rng: np.random.Generator,
    factor_range=(1.2, 2.0),
    factors=None,
) -> SdfGrid:
    if factors is None:
        factors = rng.uniform(*factor_range, size=3)
    return g.with_values(resample(g.values, factors))


def sample_box(dims, rng: np.random.Generator, volume_range=(0.01, 0.05)):
    """
    Random axis-aligned box of cells. Returns ((x0, y0, z0), (sx, sy, sz)),
    the cell count kept within the volume range of the grid.
    """
    dims = np.asarray(dims, dtype=np.int64)
    total = int(dims.prod())
    lo_cells = math.ceil(volume_range[0] * total)
    hi_cells = math.floor(volume_range[1] * total)

    target = rng.uniform(*volume_range)
    aspect = np.exp(rng.uniform(-0.3, 0.3, size=3))
    aspect /= aspect.prod() ** (1.0 / 3.0)
    sizes = np.clip(np.round(dims * target ** (1.0 / 3.0) * aspect), 1, dims).astype(np.int64)

    if hi_cells < 1:
        sizes[:] = 1
    else:
        # one-cell steps change the volume by at most 2x, the band is 5x wide
        while sizes.prod() < lo_cells:
            room = np.where(sizes < dims, sizes / dims, np.inf)
            sizes[int(np.argmin(room))] += 1
        while sizes.prod() > hi_cells:
            room = np.where(sizes > 1, sizes / dims, -np.inf)
            sizes[int(np.argmax(room))] -= 1

    start = np.array([rng.integers(0, d - s + 1) for d, s in zip(dims, sizes)])
    return tuple(int(v) for v in start), tuple(int(v) for v in sizes)


def zero_box(values: np.ndarray, start, size) -> np.ndarray:
    out = values.copy()
    (x0, y0, z0), (sx, sy, sz) = start, size
    out[z0 : z0 + sz, y0 : y0 + sy, x0 : x0 + sx] = 0.0
    return out


def dropout_box_aug(
    g: SdfGrid,
    rng: np.random.Generator,
    count_range=(1, 4),
    volume_range=(0.01, 0.05),
    boxes=None,
) -> SdfGrid:
    if boxes is None:
        n = int(rng.integers(count_range[0], count_range[1] + 1))
        boxes = [sample_box(g.dims, rng, volume_range) for _ in range(n)]
    values = g.values
    for start, size in boxes:
        values = zero_box(values, start, size)
    return g.with_values(values)
