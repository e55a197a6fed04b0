import logging

import numpy as np
import pytest
import scipy.sparse as sp

from tecsim import (Mesh, MeshError, Region, Surface, build_box_mesh,
                    compute_edge_geometry, extract_line_cut, read_mesh_file,
                    write_mesh_file)
from tecsim.mesh import MeshFormatError


def edge_laplacian(mesh):
    """Assemble the Laplacian from the edge weights alone."""
    g = mesh.geometry
    i, j, w = g.edges[:, 0], g.edges[:, 1], g.edge_weights
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(mesh.num_vertices,) * 2).tocsr()


def element_laplacian(mesh):
    g = mesh.geometry
    local = g.volumes[:, None, None] * np.einsum("tid,tjd->tij", g.grads, g.grads)
    rows = np.repeat(mesh.tets, 4, axis=1).ravel()
    cols = np.tile(mesh.tets, (1, 4)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(mesh.num_vertices,) * 2).tocsr()


class TestBoxMesh:
    def test_single_cube_counts(self, unit_cube):
        assert unit_cube.num_vertices == 8
        assert unit_cube.num_tets == 6
        assert (unit_cube.tet_regions == Region.ACTIVE).all()

    @pytest.mark.parametrize("n", [2, 3])
    def test_counts_match_enumeration(self, n):
        mesh = build_box_mesh((1, 1, 1), (n, n, n))
        assert mesh.num_vertices == (n + 1) ** 3
        assert mesh.num_tets == 6 * n ** 3

    def test_layer_breaks_select_active_band(self):
        mesh = build_box_mesh((1e-8, 1e-8, 1e-8), (4, 4, 10), (3e-9, 7e-9))
        zc = mesh.tet_centroids[:, 2]
        active = mesh.tet_regions == Region.ACTIVE
        assert ((zc[active] > 3e-9) & (zc[active] < 7e-9)).all()
        assert (zc[mesh.tet_regions == Region.BOTTOM] < 3e-9).all()
        assert (zc[mesh.tet_regions == Region.TOP] > 7e-9).all()
        # interfaces exist and sit on the break planes
        for label, plane in ((Surface.GAMMA_B, 3e-9), (Surface.GAMMA_T, 7e-9)):
            faces = mesh.faces_for(label)
            assert len(faces) == 2 * 4 * 4
            assert np.allclose(mesh.vertices[faces][:, :, 2], plane)

    def test_break_off_grid_rejected(self):
        with pytest.raises(MeshError, match="grid plane"):
            build_box_mesh((1, 1, 1), (2, 2, 3), (0.5, 0.9))

    def test_bad_extents_and_divisions(self):
        with pytest.raises(MeshError, match="positive"):
            build_box_mesh((0, 1, 1), (2, 2, 2))
        with pytest.raises(MeshError, match="positive"):
            build_box_mesh((1, 1, 1), (2, 0, 2))

    def test_degenerate_layers_alias_contact_faces(self, box_mesh):
        gamma_b = box_mesh.faces_for(Surface.GAMMA_B)
        sigma_b = box_mesh.faces_for(Surface.SIGMA_B)
        assert np.array_equal(np.sort(gamma_b, axis=None),
                              np.sort(sigma_b, axis=None))

    def test_boundary_areas_match_box(self):
        lx, ly, lz = 2e-8, 3e-8, 5e-8
        mesh = build_box_mesh((lx, ly, lz), (3, 4, 5))
        for surface, expected in ((Surface.SIGMA_B, lx * ly),
                                  (Surface.SIGMA_T, lx * ly),
                                  (Surface.SIGMA_LAT, 2 * (lx + ly) * lz)):
            faces = mesh.faces_for(surface)
            assert mesh.face_areas(faces).sum() == pytest.approx(
                expected, rel=1e-12)

    def test_lateral_active_faces(self):
        mesh = build_box_mesh((1e-8, 1e-8, 1e-8), (2, 2, 10), (3e-9, 7e-9))
        faces = mesh.faces_for(Surface.SIGMA_LAT_A)
        z = mesh.vertices[faces][:, :, 2]
        assert len(faces) > 0
        assert (z.min(axis=1) >= 3e-9 - 1e-15).all()
        assert (z.max(axis=1) <= 7e-9 + 1e-15).all()


class TestEdgeGeometry:
    def test_kuhn_weights_nonnegative(self):
        for extents in ((1, 1, 1), (1e-8, 3e-8, 2e-9)):
            mesh = build_box_mesh(extents, (3, 2, 4))
            geom = compute_edge_geometry(mesh)
            assert geom.negative_edge_count == 0
            assert geom.weights.min() >= -1e-16

    def test_lumped_volumes_partition(self, box_mesh):
        geom = compute_edge_geometry(box_mesh)
        assert geom.lumped_volumes.sum() == pytest.approx(
            box_mesh.total_volume, rel=1e-12)

    def test_edge_assembly_reproduces_stiffness(self, box_mesh):
        diff = (edge_laplacian(box_mesh) - element_laplacian(box_mesh))
        scale = np.abs(element_laplacian(box_mesh).data).max()
        assert np.abs(diff.data).max() if diff.nnz else 0.0 <= 1e-13 * scale

    def test_distorted_mesh_reports_negative_edges(self, caplog):
        # shear one interior vertex hard enough to create obtuse pairs
        base = build_box_mesh((1, 1, 1), (2, 2, 2))
        vertices = base.vertices.copy()
        interior = np.flatnonzero(
            ~np.isin(np.arange(base.num_vertices), np.unique(base.boundary_faces)))
        vertices[interior[0]] += (0.35, 0.3, 0.2)
        mesh = Mesh(vertices, base.tets, base.tet_regions,
                    base.boundary_faces, base.boundary_labels)
        with caplog.at_level(logging.WARNING, logger="tecsim"):
            geom = compute_edge_geometry(mesh)
        assert geom.negative_edge_count >= 1
        assert "negative" in caplog.text

    def test_zero_volume_rejected(self, unit_cube):
        vertices = unit_cube.vertices.copy()
        tets = unit_cube.tets.copy()
        tets[0] = [0, 1, 2, 2]  # repeated vertex
        with pytest.raises(MeshError):
            Mesh(vertices, tets, unit_cube.tet_regions,
                 unit_cube.boundary_faces, unit_cube.boundary_labels)


class TestMeshFile:
    def test_round_trip(self, tmp_path):
        mesh = build_box_mesh((1e-8, 1e-8, 1e-8), (2, 2, 5), (2e-9, 8e-9))
        path = tmp_path / "box.tetmesh"
        write_mesh_file(mesh, path)
        loaded = read_mesh_file(path)
        assert np.array_equal(loaded.vertices, mesh.vertices)
        assert np.array_equal(loaded.tets, mesh.tets)
        assert np.array_equal(loaded.tet_regions, mesh.tet_regions)
        order = lambda f, l: (np.lexsort(np.sort(f, axis=1).T),)
        fa = np.sort(loaded.boundary_faces, axis=1)
        fb = np.sort(mesh.boundary_faces, axis=1)
        assert np.array_equal(fa[np.lexsort(fa.T)], fb[np.lexsort(fb.T)])

    def test_unit_cube_file_matches_builder(self, tmp_path, unit_cube):
        path = tmp_path / "cube.tetmesh"
        write_mesh_file(unit_cube, path)
        loaded = read_mesh_file(path)
        assert loaded.num_vertices == 8 and loaded.num_tets == 6
        assert np.array_equal(loaded.tets, unit_cube.tets)

    def test_vertex_index_out_of_range_names_tet(self, tmp_path):
        text = ("tetmesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                "1\n0 1 2 9 active\n0\n")
        path = tmp_path / "bad.tetmesh"
        path.write_text(text)
        with pytest.raises(MeshFormatError, match="tetrahedron 0"):
            read_mesh_file(path)

    def test_three_tets_sharing_a_face_rejected(self, tmp_path):
        text = ("tetmesh 1\n6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 0 -1\n1 1 1\n"
                "3\n0 1 2 3 active\n0 1 2 4 active\n0 1 2 5 active\n0\n")
        path = tmp_path / "nonconf.tetmesh"
        path.write_text(text)
        with pytest.raises(MeshError, match="non-conforming"):
            read_mesh_file(path)

    def test_unlabeled_boundary_face_rejected(self, tmp_path):
        text = ("tetmesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                "1\n0 1 2 3 active\n"
                "3\n0 1 2 sigma_b\n0 1 3 sigma_lat\n0 2 3 sigma_lat\n")
        path = tmp_path / "miss.tetmesh"
        path.write_text(text)
        with pytest.raises(MeshError, match="no surface label"):
            read_mesh_file(path)

    def test_bad_header_and_region(self, tmp_path):
        path = tmp_path / "h.tetmesh"
        path.write_text("trimesh 1\n")
        with pytest.raises(MeshFormatError, match="line 1"):
            read_mesh_file(path)
        path.write_text("tetmesh 1\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                        "1\n0 1 2 3 core\n0\n")
        with pytest.raises(MeshFormatError, match="unknown region"):
            read_mesh_file(path)


class TestLineCut:
    def test_constant_field(self, box_mesh):
        values = np.full(box_mesh.num_vertices, 7.5)
        _, sampled = extract_line_cut(box_mesh, values, "z", (5e-9, 5e-9), 11)
        assert np.allclose(sampled, 7.5)

    def test_linear_field_exact(self, box_mesh):
        values = box_mesh.vertices[:, 2].copy()
        coords, sampled = extract_line_cut(box_mesh, values, "z",
                                           (4.3e-9, 6.1e-9), 17)
        assert np.allclose(sampled, coords, rtol=1e-12, atol=1e-22)

    def test_sample_coordinates(self):
        mesh = build_box_mesh((1e-8, 1e-8, 1e-8), (2, 2, 2))
        coords, _ = extract_line_cut(mesh, np.zeros(mesh.num_vertices), "z",
                                     (5e-9, 5e-9), 21)
        assert np.allclose(coords, np.linspace(0.0, 1e-8, 21))

    def test_anchor_outside_returns_empty(self, box_mesh):
        coords, values = extract_line_cut(
            box_mesh, np.zeros(box_mesh.num_vertices), "z", (5e-8, 5e-9), 11)
        assert len(coords) == 0 and len(values) == 0

    def test_axis_x(self, box_mesh):
        values = box_mesh.vertices[:, 0].copy()
        coords, sampled = extract_line_cut(box_mesh, values, "x",
                                           (5e-9, 5e-9), 9)
        assert np.allclose(sampled, coords, rtol=1e-12, atol=1e-22)
