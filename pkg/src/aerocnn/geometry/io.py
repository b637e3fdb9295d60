import logging
from pathlib import Path

import numpy as np
from stl import Mode
from stl import mesh as stl_mesh

from .mesh import DegenerateMeshError, MeshFormatError, TriMesh

logger = logging.getLogger(__name__)


def _weld(corners: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge exactly equal corner coordinates. corners: (m, 3, 3)."""
    flat = corners.reshape(-1, 3)
    vertices, inverse = np.unique(flat, axis=0, return_inverse=True)
    return vertices.astype(np.float64), inverse.reshape(-1, 3)


def _read_stl(path: Path) -> np.ndarray:
    try:
        data = stl_mesh.Mesh.from_file(str(path))
    except Exception as e:
        raise MeshFormatError(f"unreadable STL file {path}: {e}") from e
    return np.asarray(data.vectors, dtype=np.float32)


def _read_obj(path: Path, fix_degenerate: bool) -> tuple[np.ndarray, np.ndarray]:
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    try:
        lines = path.read_text().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise MeshFormatError(f"unreadable OBJ file {path}: {e}") from e

    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if tokens[0] == "v":
            try:
                vertices.append([float(t) for t in tokens[1:4]])
            except ValueError as e:
                raise MeshFormatError(f"{path}:{lineno}: bad vertex record") from e
        elif tokens[0] == "f":
            try:
                # 'a', 'a/b', 'a//c', 'a/b/c'; negative indices are relative
                idx = [int(t.split("/")[0]) for t in tokens[1:]]
            except ValueError as e:
                raise MeshFormatError(f"{path}:{lineno}: bad face record") from e
            idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
            if len(idx) < 3:
                raise MeshFormatError(f"{path}:{lineno}: face with fewer than 3 vertices")
            if len(idx) > 3:
                if not fix_degenerate:
                    raise MeshFormatError(f"{path}:{lineno}: non-triangular face")
                faces.extend([idx[0], idx[k], idx[k + 1]] for k in range(1, len(idx) - 1))
            else:
                faces.append(idx)

    if not vertices or not faces:
        raise MeshFormatError(f"empty mesh in {path}")
    verts = np.asarray(vertices, dtype=np.float64)
    tris = np.asarray(faces, dtype=np.int64)
    if tris.min() < 0 or tris.max() >= len(verts):
        raise MeshFormatError(f"{path}: face index out of range")
    return verts, tris


def _degenerate_mask(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
    repeated = (
        (triangles[:, 0] == triangles[:, 1])
        | (triangles[:, 1] == triangles[:, 2])
        | (triangles[:, 0] == triangles[:, 2])
    )
    return repeated | (area2 == 0.0)


def load_mesh(path, fix_degenerate: bool = False) -> TriMesh:
    """
    Read a binary/ASCII STL or a triangle OBJ.

    STL corners are welded by exact coordinate equality. Zero-area triangles
    are dropped when fix_degenerate is set, otherwise loading fails.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshFormatError(f"unreadable mesh file {path}: no such file")

    suffix = path.suffix.lower()
    if suffix == ".stl":
        corners = _read_stl(path)
        if len(corners) == 0:
            raise MeshFormatError(f"empty mesh in {path}")
        vertices, triangles = _weld(corners)
    elif suffix == ".obj":
        vertices, triangles = _read_obj(path, fix_degenerate)
    else:
        raise MeshFormatError(f"unsupported mesh format {suffix!r} ({path})")

    bad = _degenerate_mask(vertices, triangles)
    if np.any(bad):
        if not fix_degenerate:
            raise DegenerateMeshError(
                f"{path}: {int(bad.sum())} degenerate triangle(s), first at index {int(np.flatnonzero(bad)[0])}"
            )
        logger.warning("Dropped %d degenerate triangle(s) from %s", int(bad.sum()), path)
        triangles = triangles[~bad]
        if len(triangles) == 0:
            raise MeshFormatError(f"empty mesh in {path} after dropping degenerate triangles")

    return TriMesh(vertices, triangles, name=path.stem)


def write_stl(mesh: TriMesh, path) -> Path:
    """Write a binary STL, facets in triangle order with the stored winding."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = stl_mesh.Mesh(np.zeros(mesh.n_triangles, dtype=stl_mesh.Mesh.dtype))
    data.vectors[:] = mesh.vertices[mesh.triangles].astype(np.float32)
    data.update_normals()
    data.save(str(path), mode=Mode.BINARY)
    return path
