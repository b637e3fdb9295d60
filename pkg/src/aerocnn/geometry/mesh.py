"""
Triangle meshes, bounding boxes and the fixed voxelization domain.

Axis convention: X is the vehicle length axis, Y the width, Z the height.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXIS_NAMES = ("X", "Y", "Z")


class MeshFormatError(ValueError):
    pass


class DegenerateMeshError(ValueError):
    pass


class DomainOverflowError(ValueError):
    pass


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.array(self.min, dtype=np.float64).reshape(3))
        hi = _frozen(np.array(self.max, dtype=np.float64).reshape(3))
        if np.any(lo > hi):
            raise ValueError(f"invalid box: min {lo.tolist()} exceeds max {hi.tolist()}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def center(self) -> np.ndarray:
        return (self.min + self.max) * 0.5

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def contains(self, other: "Aabb") -> bool:
        return bool(np.all(other.min >= self.min) and np.all(other.max <= self.max))


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle soup. Vertices in meters, triangles as vertex-index triples."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = ""

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64)
        triangles = np.array(self.triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshFormatError(f"{self.name or 'mesh'}: vertices must be an (n, 3) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshFormatError(f"{self.name or 'mesh'}: triangles must be an (m, 3) array")
        if len(vertices) < 3 or len(triangles) < 1:
            raise MeshFormatError(f"{self.name or 'mesh'}: empty mesh")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshFormatError(f"{self.name or 'mesh'}: triangle index out of range")
        repeated = (
            (triangles[:, 0] == triangles[:, 1])
            | (triangles[:, 1] == triangles[:, 2])
            | (triangles[:, 0] == triangles[:, 2])
        )
        if np.any(repeated):
            first = int(np.flatnonzero(repeated)[0])
            raise DegenerateMeshError(
                f"{self.name or 'mesh'}: triangle {first} repeats a vertex index"
            )
        object.__setattr__(self, "vertices", _frozen(vertices))
        object.__setattr__(self, "triangles", _frozen(triangles))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The three (m, 3) corner arrays a, b, c of every triangle."""
        tri = self.vertices[self.triangles]
        return tri[:, 0], tri[:, 1], tri[:, 2]

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.triangles, self.name)


@dataclass(frozen=True)
class DomainSpec:
    """Fixed voxelization box plus the number of cells per axis (nx, ny, nz)."""

    box: Aabb
    dims: tuple[int, int, int] = field(default=(128, 32, 32))

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 2:
            raise ValueError(f"dims must be three integers >= 2, got {self.dims}")
        if np.any(self.box.extent <= 0):
            raise ValueError("domain box needs a strictly positive extent on every axis")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_bounds(cls, bounds, dims=(128, 32, 32)) -> "DomainSpec":
        bounds = [float(b) for b in bounds]
        if len(bounds) != 6:
            raise ValueError(f"domain needs six numbers x0,y0,z0,x1,y1,z1, got {len(bounds)}")
        return cls(Aabb(bounds[:3], bounds[3:]), tuple(dims))

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def spacing(self) -> np.ndarray:
        return self.box.extent / np.asarray(self.dims, dtype=np.float64)

    @property
    def origin(self) -> np.ndarray:
        """Center of cell (0, 0, 0)."""
        return self.box.min + self.spacing * 0.5

    def cell_centers(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Cell centers for flat indices [start, stop) in x-fastest order."""
        nx, ny, _ = self.dims
        stop = self.n_cells if stop is None else stop
        flat = np.arange(start, stop, dtype=np.int64)
        ijk = np.stack([flat % nx, (flat // nx) % ny, flat // (nx * ny)], axis=1)
        return self.origin + ijk * self.spacing


def parse_dims(text: str) -> tuple[int, int, int]:
    """'128x32x32' -> (128, 32, 32)."""
    parts = text.lower().replace(",", "x").split("x")
    if len(parts) != 3:
        raise ValueError(f"dims must look like 128x32x32, got {text!r}")
    return tuple(int(p) for p in parts)


def parse_bounds(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 6:
        raise ValueError(f"domain must be x0,y0,z0,x1,y1,z1, got {text!r}")
    return [float(p) for p in parts]


def compute_bbox(mesh: TriMesh) -> Aabb:
    used = mesh.vertices[np.unique(mesh.triangles)]
    return Aabb(used.min(axis=0), used.max(axis=0))


def center_in_domain(mesh: TriMesh, domain: DomainSpec) -> TriMesh:
    bbox = compute_bbox(mesh)
    for axis in range(3):
        if bbox.extent[axis] > domain.box.extent[axis]:
            raise DomainOverflowError(
                f"domain overflow on {AXIS_NAMES[axis]}: mesh {mesh.name!r} spans "
                f"{bbox.extent[axis]:.4f} m, domain {domain.box.extent[axis]:.4f} m"
            )
    offset = domain.box.center - bbox.center
    # residuals below float resolution would break bit-exact idempotence
    offset[np.abs(offset) <= 1e-12 * domain.box.diagonal] = 0.0
    if not np.any(offset):
        return mesh
    return mesh.translated(offset)
