import numpy as np
import pytest
import trimesh

from aerocnn.geometry import DomainSpec, TriMesh
from aerocnn.synthfleet import ShapeParams, build_shape_mesh
from aerocnn.voxelizer import SdfGrid


def unit_cube(offset=(0.0, 0.0, 0.0), name="cube") -> TriMesh:
    """Closed [0, 1]^3 cube, 8 vertices, 12 outward-wound triangles."""
    box = trimesh.creation.box(extents=(1.0, 1.0, 1.0))
    return TriMesh(box.vertices + 0.5 + np.asarray(offset), box.faces, name)


def icosphere(subdivisions=3, radius=0.5, center=(0.0, 0.0, 0.0)) -> TriMesh:
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    return TriMesh(sphere.vertices + np.asarray(center), sphere.faces, f"ico{subdivisions}")


def ramp_grid(dims=(8, 6, 4), axis=0) -> SdfGrid:
    """values = cell index along `axis` (x, y or z)."""
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    values = (x, y, z)[axis].astype(np.float32)
    return SdfGrid(dims, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), values)


def random_grid(dims=(16, 8, 8), seed=0) -> SdfGrid:
    rng = np.random.default_rng(seed)
    nx, ny, nz = dims
    return SdfGrid(dims, (0.0, 0.0, 0.0), (0.1, 0.1, 0.1), rng.normal(0.0, 1.0, (nz, ny, nx)))


@pytest.fixture
def cube():
    return unit_cube()


@pytest.fixture
def open_cube():
    """Unit cube with one triangle of its -X face removed."""
    mesh = unit_cube(name="open_cube")
    on_face = np.all(mesh.vertices[mesh.triangles][:, :, 0] == 0.0, axis=1)
    keep = np.ones(mesh.n_triangles, dtype=bool)
    keep[np.flatnonzero(on_face)[0]] = False
    return TriMesh(mesh.vertices, mesh.triangles[keep], "open_cube")


@pytest.fixture
def sphere():
    return icosphere(3, 0.5)


@pytest.fixture
def car():
    return build_shape_mesh(ShapeParams(), "car")


@pytest.fixture
def cube_domain():
    """(-1..2)^3 with 9 cells per axis; the middle cell center is the cube center."""
    return DomainSpec.from_bounds([-1.0, -1.0, -1.0, 2.0, 2.0, 2.0], (9, 9, 9))


@pytest.fixture
def fleet_domain():
    return DomainSpec.from_bounds([-3.0, -1.2, -1.2, 3.0, 1.2, 1.2], (32, 12, 12))
