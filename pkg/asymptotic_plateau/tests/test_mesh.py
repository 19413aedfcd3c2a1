import numpy as np
import pytest

from asymptotic_plateau.exceptions import DegenerateMeshError, DomainError
from asymptotic_plateau.services.mesh import (
    TriMesh,
    boundary_loops,
    disjoint_union,
    mesh_topology,
    ray_triangle_hits,
    stitch_rows,
    submesh,
)

SQUARE = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
SQUARE_TRIS = np.array([[0, 1, 2], [0, 2, 3]])


def square(offset=0.0):
    return TriMesh(SQUARE + [offset, 0.0, 0.0], SQUARE_TRIS, eps=0.1)


def tetrahedron():
    verts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.3, 0.3, 2.0]])
    tris = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]])
    return TriMesh(verts, tris, eps=0.1)


# ===========================================
# REGION: Validation
# ===========================================
def test_degenerate_triangle_is_rejected():
    verts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [2.0, 0.0, 1.0]])
    with pytest.raises(DegenerateMeshError):
        TriMesh(verts, [[0, 1, 2]], eps=0.1)


def test_repeated_corner_is_rejected():
    with pytest.raises(DegenerateMeshError):
        TriMesh(SQUARE, [[0, 0, 1]], eps=0.1)


def test_vertex_below_truncation_is_rejected():
    with pytest.raises(DomainError):
        TriMesh(SQUARE, SQUARE_TRIS, eps=1.5)


def test_boundary_vertices_must_sit_on_eps():
    with pytest.raises(DomainError):
        TriMesh(SQUARE, SQUARE_TRIS, boundary=[True, False, False, False], eps=0.1)


def test_non_manifold_edge_is_rejected():
    verts = np.vstack([SQUARE, [[0.5, -1.0, 1.0], [0.5, 0.5, 2.0]]])
    tris = [[0, 1, 2], [0, 1, 4], [0, 1, 5]]
    with pytest.raises(DegenerateMeshError):
        TriMesh(verts, tris, eps=0.1)


def test_boundary_vertices_are_fully_frozen():
    verts = SQUARE.copy()
    verts[0, 2] = 0.1
    mesh = TriMesh(verts, SQUARE_TRIS, boundary=[True, False, False, False], eps=0.1)
    assert mesh.get_frozen[0].all()
    assert mesh.free.tolist() == [False, True, True, True]


# ===========================================
# REGION: Topology
# ===========================================
def test_square_is_a_disk():
    assert mesh_topology(square()) == (1, 1, 0)


def test_closed_tetrahedron_is_a_sphere():
    assert mesh_topology(tetrahedron()) == (2, 0, 0)


def test_union_of_two_disks():
    union = disjoint_union([square(), square(offset=3.0)])
    assert mesh_topology(union) == (2, 2, 0)
    assert union.component_labels()[0] == 2


def test_union_needs_common_height():
    other = TriMesh(SQUARE, SQUARE_TRIS, eps=0.2)
    with pytest.raises(DomainError):
        disjoint_union([square(), other])


def test_square_boundary_is_one_loop():
    loops = boundary_loops(square())
    assert len(loops) == 1
    assert sorted(loops[0].tolist()) == [0, 1, 2, 3]


def test_submesh_drops_unused_vertices():
    sub, remap = submesh(square(), np.array([True, True, True, False]))
    assert sub.n_triangles == 1
    assert sub.n_vertices == 3
    assert remap.tolist() == [0, 1, 2, -1]


# ===========================================
# REGION: Orientation
# ===========================================
def test_orient_repairs_a_flipped_triangle():
    mesh = TriMesh(SQUARE, [[0, 1, 2], [0, 3, 2]], eps=0.1).orient()
    normals = mesh.face_normals()
    assert np.sign(normals[0, 2]) == np.sign(normals[1, 2])


def test_flipped_reverses_normals():
    mesh = square()
    np.testing.assert_allclose(mesh.flipped().face_normals(), -mesh.face_normals())


# ===========================================
# REGION: Ray casting
# ===========================================
def test_ray_through_a_triangle_counts_once():
    corners = SQUARE[SQUARE_TRIS[:1]]
    counts, grazing = ray_triangle_hits(np.array([[0.7, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]), corners)
    assert counts.tolist() == [1]
    assert not grazing[0]


def test_ray_beside_a_triangle_misses():
    corners = SQUARE[SQUARE_TRIS[:1]]
    counts, _ = ray_triangle_hits(np.array([[0.2, 0.7, 0.0]]), np.array([[0.0, 0.0, 1.0]]), corners)
    assert counts.tolist() == [0]


def test_segment_stops_before_the_triangle():
    corners = SQUARE[SQUARE_TRIS[:1]]
    counts, _ = ray_triangle_hits(np.array([[0.7, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]), corners, t_max=0.5)
    assert counts.tolist() == [0]


def test_ray_along_the_diagonal_is_grazing():
    corners = SQUARE[SQUARE_TRIS]
    _, grazing = ray_triangle_hits(np.array([[0.5, 0.5, 0.0]]), np.array([[0.0, 0.0, 1.0]]), corners)
    assert grazing[0]


# ===========================================
# REGION: Builders
# ===========================================
def test_closed_rows_of_equal_size():
    tris = stitch_rows(range(4), range(4, 8), np.arange(4) / 4, np.arange(4) / 4, closed=True)
    assert len(tris) == 8


def test_open_rows_of_different_sizes():
    tris = stitch_rows([0, 1, 2], [3, 4], np.linspace(0, 1, 3), np.linspace(0, 1, 2), closed=False)
    assert len(tris) == 3


def test_fan_to_a_single_apex():
    tris = stitch_rows([0], [1, 2, 3, 4, 5], np.array([0.0]), np.arange(5) / 5, closed=True)
    assert len(tris) == 5
    assert all(0 in t for t in tris)


def test_mesh_file_keeps_geometry(tmp_path):
    path = tmp_path / "square.mesh"
    square().save(str(path))
    loaded = TriMesh.load(str(path), eps=0.1)
    np.testing.assert_array_equal(loaded.get_vertices, SQUARE)
    np.testing.assert_array_equal(loaded.get_triangles, SQUARE_TRIS)
    assert loaded.digest() == square().digest()
