from .mesh import (
    AXIS_NAMES,
    Aabb,
    DegenerateMeshError,
    DomainOverflowError,
    DomainSpec,
    MeshFormatError,
    TriMesh,
    center_in_domain,
    compute_bbox,
    parse_bounds,
    parse_dims,
)
from .io import load_mesh, write_stl

__all__ = [
    "AXIS_NAMES",
    "Aabb",
    "DegenerateMeshError",
    "DomainOverflowError",
    "DomainSpec",
    "MeshFormatError",
    "TriMesh",
    "center_in_domain",
    "compute_bbox",
    "load_mesh",
    "parse_bounds",
    "parse_dims",
    "write_stl",
]
