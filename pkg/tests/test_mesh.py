import numpy as np
import pytest

from fvproj import mesh as meshmod
from fvproj.mesh import (Mesh, MeshFormatError, MeshOrientationError,
                         MeshTopologyError, load_mesh, refine_uniform,
                         save_mesh, square_two_triangles, unit_square_acute,
                         unit_square_crisscross, validate_mesh)


class TestGeometry:
    def test_equilateral_closed_forms(self, equilateral):
        # circumcircle of a unit equilateral triangle: center at the
        # centroid, radius 1/sqrt(3)
        assert abs(equilateral.tri_area[0] - np.sqrt(3) / 4) < 1e-14
        assert np.allclose(equilateral.tri_center[0], [0.5, np.sqrt(3) / 6],
                           atol=1e-14)
        assert abs(equilateral.tri_diameter[0] - 2 / np.sqrt(3)) < 1e-14
        assert abs(equilateral.h - 2 / np.sqrt(3)) < 1e-14

    def test_right_triangle_circumcenter_on_hypotenuse(self, right_triangle):
        assert abs(right_triangle.tri_area[0] - 0.5) < 1e-14
        assert np.allclose(right_triangle.tri_center[0], [0.5, 0.5], atol=1e-14)

    def test_edges_sorted_lexicographically(self, family):
        for mesh in family:
            order = np.lexsort((mesh.edges[:, 1], mesh.edges[:, 0]))
            assert np.array_equal(order, np.arange(mesh.num_edges))

    def test_interior_edge_counts(self, pair):
        assert len(pair.interior_edges) == 1
        assert len(pair.boundary_edges) == 4

    def test_normal_points_owner_to_neighbor(self, family):
        for mesh in family:
            ii = mesh.interior_edges
            toward = (mesh.tri_center[mesh.edge_neighbor[ii]]
                      - mesh.tri_center[mesh.edge_owner[ii]])
            dots = np.einsum("ed,ed->e", mesh.edge_normal[ii], toward)
            assert np.all(dots > 0)

    def test_neighbor_side_normal_is_negated(self, family):
        mesh = family[1]
        for e in mesh.interior_edges[:20]:
            L = mesh.edge_neighbor[e]
            va, vb = mesh.vertices[mesh.edges[e]]
            t = vb - va
            n = np.array([t[1], -t[0]])
            n /= np.linalg.norm(n)
            opp = [v for v in mesh.triangles[L] if v not in mesh.edges[e]][0]
            if n @ (0.5 * (va + vb) - mesh.vertices[opp]) < 0:
                n = -n
            assert np.allclose(n, -mesh.edge_normal[e], atol=1e-14)

    def test_divergence_theorem_closure(self, family):
        # sum of length-weighted outward normals vanishes per triangle
        for mesh in family:
            acc = np.zeros((mesh.num_triangles, 2))
            sign = np.where(mesh.edge_owner[mesh.tri_edges]
                            == np.arange(mesh.num_triangles)[:, None], 1.0, -1.0)
            for j in range(3):
                e = mesh.tri_edges[:, j]
                acc += (sign[:, j] * mesh.edge_length[e])[:, None] * mesh.edge_normal[e]
            assert np.abs(acc).max() < 1e-13

    def test_area_matches_boundary_polygon(self, family):
        for mesh in family:
            assert abs(mesh.area - mesh.boundary_polygon_area()) < 1e-12

    def test_transmissibility_positive_on_admissible(self, family):
        for mesh in family:
            assert np.all(mesh.edge_d > 0)
            assert np.all(np.isfinite(mesh.edge_tau))
            assert np.all(mesh.edge_tau > 0)


class TestValidation:
    def test_equilateral_admissible(self, equilateral):
        report = validate_mesh(equilateral)
        assert abs(report.min_angle - np.pi / 3) < 1e-12
        assert report.admissible

    def test_square_diagonal_rejected(self):
        report = validate_mesh(square_two_triangles())
        assert abs(report.max_angle - np.pi / 2) < 1e-12
        assert abs(report.min_angle - np.pi / 4) < 1e-12
        assert not report.admissible

    def test_crisscross_rejected(self):
        mesh = unit_square_crisscross(2)
        report = validate_mesh(mesh)
        angles = mesh.angles().ravel()
        assert np.all((np.abs(angles - np.pi / 4) < 1e-12)
                      | (np.abs(angles - np.pi / 2) < 1e-12))
        assert not report.admissible

    def test_family_admissible_at_all_levels(self):
        for level in range(5):
            report = validate_mesh(unit_square_acute(level))
            assert report.admissible, f"level {level}: {report}"
            assert report.max_angle < np.pi / 2 - 0.25  # frozen base margin

    def test_family_quality_ratios_level_independent(self):
        reports = [validate_mesh(unit_square_acute(level)) for level in range(4)]
        taus = [r.min_tau for r in reports]
        # congruent refinement: tau spectrum varies only through the new
        # interior edges, never degenerates
        assert max(taus) / min(taus) < 2.0
        ratios = [r.min_edge_over_h for r in reports]
        assert np.allclose(ratios, ratios[0], rtol=1e-9)

    def test_require_admissible(self):
        meshmod.require_admissible(unit_square_acute(0))
        with pytest.raises(MeshTopologyError):
            meshmod.require_admissible(square_two_triangles())
        with pytest.warns(UserWarning):
            meshmod.require_admissible(square_two_triangles(),
                                       allow_degenerate=True)


class TestIO:
    def test_single_file_roundtrip(self, tmp_path):
        mesh = unit_square_acute(0)
        path = tmp_path / "m.mesh"
        save_mesh(mesh, path)
        back = load_mesh(path)
        assert np.allclose(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_single_file_parse_error(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("2 1\n0 0\n1 0\n")  # missing triangle line + vertex
        with pytest.raises(MeshFormatError):
            load_mesh(path)

    def test_vertex_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("3 1\n0 0\n1 0\n0 1\n0 1 7\n")
        with pytest.raises(MeshTopologyError):
            load_mesh(path)

    def test_duplicate_triangle_rejected(self):
        verts = [[0, 0], [1, 0], [0, 1]]
        with pytest.raises(MeshTopologyError):
            Mesh(verts, [[0, 1, 2], [1, 2, 0]])

    def test_nonmanifold_edge_rejected(self):
        # edge (0, 1) shared by three CCW triangles
        verts = [[0, 0], [1, 0], [0.5, 1], [0.5, -1], [0.5, 2]]
        with pytest.raises(MeshTopologyError):
            Mesh(verts, [[0, 1, 2], [0, 3, 1], [0, 1, 4]])

    def test_negative_orientation_rejected(self):
        with pytest.raises(MeshOrientationError):
            Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])

    def test_node_ele(self, tmp_path):
        (tmp_path / "m.node").write_text(
            "4 2 0 1\n1 0.0 0.0 1\n2 1.0 0.0 1\n3 0.5 0.9 1\n4 0.5 -0.9 1\n")
        (tmp_path / "m.ele").write_text("2 3 0\n1 1 2 3\n2 2 1 4\n")
        mesh = load_mesh(tmp_path / "m.node", fmt="node-ele")
        assert mesh.num_triangles == 2
        assert mesh.num_vertices == 4
        assert len(mesh.interior_edges) == 1

    def test_node_ele_zero_based_ids(self, tmp_path):
        # the leading id column is honored, whatever its base
        (tmp_path / "m.node").write_text("3 2 0 0\n0 0.0 0.0\n1 1.0 0.0\n2 0.5 0.9\n")
        (tmp_path / "m.ele").write_text("1 3 0\n0 0 1 2\n")
        mesh = load_mesh(tmp_path / "m.node", fmt="node-ele")
        assert mesh.num_triangles == 1

    def test_node_ele_unknown_vertex_id(self, tmp_path):
        (tmp_path / "m.node").write_text("3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n")
        (tmp_path / "m.ele").write_text("1 3 0\n1 1 2 9\n")
        with pytest.raises(MeshTopologyError):
            load_mesh(tmp_path / "m.ele", fmt="node-ele")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_mesh(tmp_path / "x", fmt="exodus")


class TestRefinement:
    def test_single_triangle_split(self, equilateral):
        fine = refine_uniform(equilateral)
        assert fine.num_triangles == 4
        assert abs(fine.h - equilateral.h / 2) < 1e-14
        assert abs(fine.area - equilateral.area) < 1e-14

    def test_area_conserved(self):
        mesh = unit_square_acute(1)
        fine = refine_uniform(mesh)
        assert fine.num_triangles == 4 * mesh.num_triangles
        assert abs(fine.area - mesh.area) < 1e-12

    def test_angles_preserved(self):
        mesh = unit_square_acute(0)
        fine = refine_uniform(mesh)
        a0 = np.sort(np.unique(np.round(mesh.angles(), 9)))
        a1 = np.sort(np.unique(np.round(fine.angles(), 9)))
        assert np.allclose(a0, a1)

    def test_admissibility_preserved(self):
        mesh = unit_square_acute(0)
        for _ in range(3):
            mesh = refine_uniform(mesh)
            assert validate_mesh(mesh).admissible

    def test_double_refinement_consistent(self, equilateral):
        a = refine_uniform(refine_uniform(equilateral))
        b = refine_uniform(refine_uniform(equilateral))
        key_a = np.sort(np.round(a.vertices[a.triangles].reshape(-1, 6), 12), axis=0)
        key_b = np.sort(np.round(b.vertices[b.triangles].reshape(-1, 6), 12), axis=0)
        assert np.array_equal(key_a, key_b)
        assert abs(a.h - equilateral.h / 4) < 1e-14


def test_resolve_mesh_selector(tmp_path):
    mesh = meshmod.resolve_mesh("acute:1")
    assert mesh.num_triangles == 104
    path = tmp_path / "m.mesh"
    save_mesh(mesh, path)
    assert meshmod.resolve_mesh(str(path)).num_triangles == 104


def test_equilateral_pair_taus(pair):
    # interior edge: circumcenters sit 1/(2 sqrt(3)) on each side
    e = pair.interior_edges[0]
    assert abs(pair.edge_d[e] - 1 / np.sqrt(3)) < 1e-14
    assert abs(pair.edge_tau[e] - np.sqrt(3)) < 1e-14
    for e in pair.boundary_edges:
        assert abs(pair.edge_tau[e] - 2 * np.sqrt(3)) < 1e-13
