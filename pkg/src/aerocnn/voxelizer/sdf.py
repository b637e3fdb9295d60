"""
Signed distance fields on the cell-centered Cartesian grid.

Sign convention defaults to positive inside the geometry. Distances are
computed in float64 and rounded once to float32.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..geometry import AXIS_NAMES, Aabb, DomainOverflowError, DomainSpec, TriMesh, compute_bbox
from .bvh import TriBvh, build_bvh, nearest_sqdist, ray_parity
from .distance import point_triangle_sqdist, ray_crossings

logger = logging.getLogger(__name__)

# ray origins are nudged off grid-aligned features; the two factors differ
# so a nudged origin never lands on a face diagonal
RAY_JITTER = (1e-7, 2e-7)

ORACLE_MAX_TRIANGLES = 10_000
ORACLE_MAX_CELLS = 32**3
CHUNK_CELLS = 4096


class OracleGuardError(ValueError):
    pass


@dataclass(frozen=True)
class SdfGrid:
    """
    Dense scalar field. `values` has shape (nz, ny, nx), so the flat index is
    x + nx * (y + ny * z). `origin` is the center of cell (0, 0, 0).
    """

    dims: tuple[int, int, int]
    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    positive_inside: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        nx, ny, nz = dims
        values = np.asarray(self.values, dtype=np.float32)
        if values.size != nx * ny * nz:
            raise ValueError(f"values hold {values.size} cells, dims {dims} need {nx * ny * nz}")
        values = values.reshape(nz, ny, nx)
        spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3)
        if np.any(spacing <= 0):
            raise ValueError(f"spacing must be positive, got {spacing.tolist()}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "positive_inside", bool(self.positive_inside))

    @classmethod
    def from_domain(cls, domain: DomainSpec, values, positive_inside: bool = True) -> "SdfGrid":
        return cls(domain.dims, domain.origin, domain.spacing, values, positive_inside)

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def diagonal(self) -> float:
        """Diagonal of the domain the cell centers tile."""
        return float(np.linalg.norm(self.spacing * np.asarray(self.dims)))

    def with_values(self, values) -> "SdfGrid":
        return dataclasses.replace(self, values=values)

    def flipped(self) -> "SdfGrid":
        """Same field under the opposite sign convention."""
        return dataclasses.replace(
            self, values=-self.values, positive_inside=not self.positive_inside
        )

    def domain(self) -> DomainSpec:
        lo = self.origin - self.spacing * 0.5
        hi = lo + self.spacing * np.asarray(self.dims)
        return DomainSpec(Aabb(lo, hi), self.dims)


def _check_inside(mesh: TriMesh, domain: DomainSpec):
    bbox = compute_bbox(mesh)
    for axis in range(3):
        if bbox.min[axis] < domain.box.min[axis] or bbox.max[axis] > domain.box.max[axis]:
            raise DomainOverflowError(
                f"domain overflow on {AXIS_NAMES[axis]}: mesh {mesh.name!r} spans "
                f"[{bbox.min[axis]:.4f}, {bbox.max[axis]:.4f}], domain "
                f"[{domain.box.min[axis]:.4f}, {domain.box.max[axis]:.4f}]"
            )


def _ray_origins(points: np.ndarray, axis: int, spacing) -> np.ndarray:
    spacing = np.broadcast_to(np.asarray(spacing, dtype=np.float64), (3,))
    u = (axis + 1) % 3
    v = (axis + 2) % 3
    origins = points.copy()
    origins[:, u] += RAY_JITTER[0] * spacing[u]
    origins[:, v] += RAY_JITTER[1] * spacing[v]
    return origins


def _majority(votes: list[np.ndarray]) -> np.ndarray:
    return np.sum([(v % 2) == 1 for v in votes], axis=0) >= 2


def unsigned_distances(bvh: TriBvh, points: np.ndarray) -> np.ndarray:
    return np.sqrt(nearest_sqdist(bvh, points))


def inside_mask(bvh: TriBvh, points: np.ndarray, spacing=1.0) -> np.ndarray:
    """Majority vote of ray parity along +X, +Y and +Z."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return _majority([ray_parity(bvh, _ray_origins(points, axis, spacing), axis) for axis in range(3)])


def unsigned_distance(bvh: TriBvh, mesh: TriMesh, x) -> float:
    return float(unsigned_distances(bvh, np.asarray(x, dtype=np.float64)[None])[0])


def inside_test(bvh: TriBvh, mesh: TriMesh, x, spacing=1.0) -> int:
    """+1 when x is classified inside the mesh, -1 otherwise."""
    return 1 if inside_mask(bvh, np.asarray(x, dtype=np.float64)[None], spacing)[0] else -1


def _signed(distance: np.ndarray, inside: np.ndarray, positive_inside: bool) -> np.ndarray:
    sign = np.where(inside, 1.0, -1.0)
    if not positive_inside:
        sign = -sign
    return (sign * distance).astype(np.float32)


def generate_sdf(
    mesh: TriMesh,
    domain: DomainSpec,
    workers: int | None = None,
    positive_inside: bool = True,
    bvh: TriBvh | None = None,
) -> SdfGrid:
    """
    Sample the signed distance at every cell center.

    Cells are split into fixed-size chunks independent of `workers`, so the
    output is bit-identical for any degree of parallelism.
    """
    _check_inside(mesh, domain)
    bvh = build_bvh(mesh) if bvh is None else bvh
    spacing = domain.spacing
    out = np.empty(domain.n_cells, dtype=np.float32)

    def run(bounds: tuple[int, int]):
        s, e = bounds
        points = domain.cell_centers(s, e)
        dist = unsigned_distances(bvh, points)
        out[s:e] = _signed(dist, inside_mask(bvh, points, spacing), positive_inside)

    chunks = [(s, min(s + CHUNK_CELLS, domain.n_cells)) for s in range(0, domain.n_cells, CHUNK_CELLS)]
    if workers == 1:
        for bounds in chunks:
            run(bounds)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))

    logger.debug(
        "SDF of %s (%d triangles, %d BVH nodes) on %s grid",
        mesh.name, mesh.n_triangles, bvh.n_nodes, "x".join(map(str, domain.dims)),
    )
    return SdfGrid.from_domain(domain, out, positive_inside)


def sdf_oracle(mesh: TriMesh, domain: DomainSpec, positive_inside: bool = True) -> SdfGrid:
    """Exhaustive all-triangle search per cell. Test oracle only."""
    if mesh.n_triangles > ORACLE_MAX_TRIANGLES:
        raise OracleGuardError(
            f"oracle guard: {mesh.n_triangles} triangles exceeds {ORACLE_MAX_TRIANGLES}"
        )
    if domain.n_cells > ORACLE_MAX_CELLS:
        raise OracleGuardError(f"oracle guard: {domain.n_cells} cells exceeds 32^3")
    _check_inside(mesh, domain)

    a, b, c = (t[None] for t in mesh.corners())
    points = domain.cell_centers()
    spacing = domain.spacing
    step = max(1, (1 << 18) // mesh.n_triangles)
    out = np.empty(domain.n_cells, dtype=np.float32)
    for s in range(0, len(points), step):
        p = points[s : s + step]
        dist = np.sqrt(point_triangle_sqdist(p[:, None, :], a, b, c).min(axis=1))
        votes = [
            ray_crossings(_ray_origins(p, axis, spacing)[:, None, :], a, b, c, axis).sum(axis=1)
            for axis in range(3)
        ]
        out[s : s + step] = _signed(dist, _majority(votes), positive_inside)
    return SdfGrid.from_domain(domain, out, positive_inside)
