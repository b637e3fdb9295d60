import logging

import numpy as np
import pytest

from aerocnn.geometry import (
    Aabb,
    DegenerateMeshError,
    DomainOverflowError,
    DomainSpec,
    MeshFormatError,
    TriMesh,
    center_in_domain,
    compute_bbox,
    load_mesh,
    parse_bounds,
    parse_dims,
    write_stl,
)

from .conftest import unit_cube

ASCII_FACET = """solid tri
  facet normal 0 0 1
    outer loop
      vertex 0 0 0
      vertex 1 0 0
      vertex 0 1 0
    endloop
  endfacet
endsolid tri
"""


class TestLoadMesh:
    def test_ascii_stl_single_facet(self, tmp_path):
        path = tmp_path / "tri.stl"
        path.write_text(ASCII_FACET)
        mesh = load_mesh(path)
        assert mesh.n_vertices == 3
        assert mesh.n_triangles == 1
        assert mesh.name == "tri"

    def test_binary_stl_cube_is_welded(self, tmp_path, cube):
        path = write_stl(cube, tmp_path / "cube.stl")
        mesh = load_mesh(path)
        assert mesh.n_vertices == 8
        assert mesh.n_triangles == 12

    def test_stl_keeps_winding(self, tmp_path, cube):
        mesh = load_mesh(write_stl(cube, tmp_path / "cube.stl"))
        np.testing.assert_array_equal(
            mesh.vertices[mesh.triangles], cube.vertices[cube.triangles]
        )

    def test_obj_quad_face_rejected(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshFormatError, match="non-triangular face"):
            load_mesh(path)

    def test_obj_quad_face_split_when_fixing(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = load_mesh(path, fix_degenerate=True)
        assert mesh.n_triangles == 2

    def test_obj_slash_and_negative_indices(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf -3//1 -2//1 -1//1\n")
        mesh = load_mesh(path)
        np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2]])

    def test_degenerate_triangle(self, tmp_path, caplog):
        path = tmp_path / "degen.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n")
        with pytest.raises(DegenerateMeshError):
            load_mesh(path)
        with caplog.at_level(logging.WARNING):
            mesh = load_mesh(path, fix_degenerate=True)
        assert mesh.n_triangles == 1
        assert "degenerate" in caplog.text

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "mesh.ply"
        path.write_text("ply\n")
        with pytest.raises(MeshFormatError, match="unsupported mesh format"):
            load_mesh(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MeshFormatError, match="no such file"):
            load_mesh(tmp_path / "nothing.stl")

    def test_empty_obj(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("# nothing here\n")
        with pytest.raises(MeshFormatError, match="empty mesh"):
            load_mesh(path)


class TestTriMesh:
    def test_index_out_of_range(self):
        with pytest.raises(MeshFormatError, match="out of range"):
            TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])

    def test_repeated_index(self):
        with pytest.raises(DegenerateMeshError):
            TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])

    def test_arrays_are_read_only(self, cube):
        with pytest.raises(ValueError):
            cube.vertices[0, 0] = 3.0


class TestBoundingBox:
    def test_unit_cube(self, cube):
        box = compute_bbox(cube)
        np.testing.assert_array_equal(box.min, [0, 0, 0])
        np.testing.assert_array_equal(box.max, [1, 1, 1])

    def test_translated_cube(self):
        box = compute_bbox(unit_cube(offset=(5, 0, 0)))
        np.testing.assert_array_equal(box.min, [5, 0, 0])
        np.testing.assert_array_equal(box.max, [6, 1, 1])

    def test_two_disjoint_cubes(self):
        a, b = unit_cube(), unit_cube(offset=(3, 0, 0))
        both = TriMesh(
            np.concatenate([a.vertices, b.vertices]),
            np.concatenate([a.triangles, b.triangles + a.n_vertices]),
        )
        box = compute_bbox(both)
        np.testing.assert_array_equal(box.min, [0, 0, 0])
        np.testing.assert_array_equal(box.max, [4, 1, 1])

    def test_unreferenced_vertices_ignored(self):
        mesh = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [9, 9, 9]], [[0, 1, 2]])
        np.testing.assert_array_equal(compute_bbox(mesh).max, [1, 1, 0])

    def test_invalid_box(self):
        with pytest.raises(ValueError):
            Aabb([1, 0, 0], [0, 1, 1])


class TestCenterInDomain:
    def test_cube_centered(self, cube):
        domain = DomainSpec.from_bounds([-2, -2, -2, 2, 2, 2], (8, 8, 8))
        centered = center_in_domain(cube, domain)
        np.testing.assert_allclose(compute_bbox(centered).center, [0, 0, 0], atol=1e-12)

    def test_idempotent(self, car, fleet_domain):
        once = center_in_domain(car, fleet_domain)
        twice = center_in_domain(once, fleet_domain)
        np.testing.assert_array_equal(once.vertices, twice.vertices)

    def test_center_matches_domain(self, car, fleet_domain):
        centered = center_in_domain(car, fleet_domain)
        gap = np.abs(compute_bbox(centered).center - fleet_domain.box.center).max()
        assert gap <= 1e-9 * fleet_domain.box.diagonal

    def test_overflow_names_axis(self):
        proxy = TriMesh(unit_cube().vertices * [5.0, 1.0, 1.0], unit_cube().triangles, "proxy")
        domain = DomainSpec.from_bounds([-2, -2, -2, 2, 2, 2], (8, 8, 8))
        with pytest.raises(DomainOverflowError, match="on X"):
            center_in_domain(proxy, domain)


class TestDomainSpec:
    def test_defaults(self):
        domain = DomainSpec.from_bounds([-3, -1.2, -1.2, 3, 1.2, 1.2])
        assert domain.dims == (128, 32, 32)
        np.testing.assert_allclose(domain.spacing, [0.046875, 0.075, 0.075])

    def test_cell_centers_x_fastest(self):
        domain = DomainSpec.from_bounds([0, 0, 0, 4, 2, 2], (4, 2, 2))
        centers = domain.cell_centers()
        np.testing.assert_allclose(centers[0], [0.5, 0.5, 0.5])
        np.testing.assert_allclose(centers[1], [1.5, 0.5, 0.5])
        np.testing.assert_allclose(centers[4], [0.5, 1.5, 0.5])
        np.testing.assert_allclose(centers[8], [0.5, 0.5, 1.5])

    @pytest.mark.parametrize("dims", [(1, 4, 4), (4, 4)])
    def test_bad_dims(self, dims):
        with pytest.raises(ValueError):
            DomainSpec(Aabb([0, 0, 0], [1, 1, 1]), dims)

    def test_flat_box(self):
        with pytest.raises(ValueError, match="positive extent"):
            DomainSpec(Aabb([0, 0, 0], [1, 1, 0]), (4, 4, 4))

    def test_parse(self):
        assert parse_dims("64x16x16") == (64, 16, 16)
        assert parse_bounds("-3,-1.2,-1.2,3,1.2,1.2") == [-3, -1.2, -1.2, 3, 1.2, 1.2]
        with pytest.raises(ValueError):
            parse_dims("64x16")
        with pytest.raises(ValueError):
            parse_bounds("0,0,0,1,1")
