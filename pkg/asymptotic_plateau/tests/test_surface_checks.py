import numpy as np
import pytest

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.mesh import TriMesh
from asymptotic_plateau.services.meshing import hemisphere_mesh
from asymptotic_plateau.services.minimizer import normal_offset
from asymptotic_plateau.services.surface_checks import (
    closest_points_on_triangles,
    convex_hull_check,
    normal_graph_decompose,
    radial_graph_check,
)


@pytest.fixture(scope="module")
def hemisphere():
    return hemisphere_mesh((0.0, 0.0), float(np.hypot(1.0, 0.1)), 0.1, 48)


def vertical_wall(n=12):
    """Grid in the plane y = 0 over |x| ≤ 1, 0.1 ≤ z ≤ 1."""
    x, z = np.meshgrid(np.linspace(-1.0, 1.0, n), np.linspace(0.1, 1.0, n))
    verts = np.column_stack([x.ravel(), np.zeros(n * n), z.ravel()])
    tris = []
    for i in range(n - 1):
        for j in range(n - 1):
            a = i * n + j
            tris += [[a, a + 1, a + n + 1], [a, a + n + 1, a + n]]
    return TriMesh(verts, tris, eps=0.1)


# ===========================================
# REGION: Convex hull
# ===========================================
def test_hemisphere_stays_in_the_hull(hemisphere):
    report = convex_hull_check(hemisphere)
    assert report.passed
    assert report.violating_vertices == 0


def test_raised_apex_leaves_the_hull(hemisphere):
    verts = hemisphere.get_vertices.copy()
    top = int(np.argmax(verts[:, 2]))
    verts[top, 2] = 3.0
    report = convex_hull_check(hemisphere.with_vertices(verts))
    assert not report.passed
    assert report.violating_vertices >= 1


def test_hull_needs_fixed_vertices():
    with pytest.raises(DomainError):
        convex_hull_check(vertical_wall())


# ===========================================
# REGION: Normal graphs
# ===========================================
def test_closest_point_inside_and_outside_a_triangle():
    a, b, c = np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    p = np.array([[0.2, 0.2, 1.0], [2.0, -1.0, 0.0]])
    q = closest_points_on_triangles(p, a, b, c)
    np.testing.assert_allclose(q, [[0.2, 0.2, 0.0], [1.0, 0.0, 0.0]])


def test_surface_is_a_zero_graph_over_itself(hemisphere):
    graph = normal_graph_decompose(hemisphere, hemisphere, radius=1.0)
    assert graph.sup_f == pytest.approx(0.0, abs=1e-12)
    assert graph.sup_grad == pytest.approx(0.0, abs=1e-9)


def test_normal_offset_is_a_positive_graph(hemisphere):
    graph = normal_graph_decompose(normal_offset(hemisphere, 0.01), hemisphere, radius=1.0)
    assert graph.sup_f == pytest.approx(0.01, rel=0.2)
    assert np.all(graph.f > 0.0)


def test_graph_needs_vertices_in_the_ball(hemisphere):
    with pytest.raises(DomainError):
        normal_graph_decompose(hemisphere, hemisphere, radius=0.1, center=(50.0, 50.0, 1.0))


# ===========================================
# REGION: Radial graphs
# ===========================================
def test_wall_is_crossed_once():
    report = radial_graph_check(vertical_wall(), (0.0, -3.0, 0.0), rays=500)
    assert report.passed
    assert report.normal_positive


def test_hemisphere_is_not_a_radial_graph_from_outside(hemisphere):
    report = radial_graph_check(hemisphere, (0.0, -3.0, 0.0), rays=500)
    assert report.max_count >= 2
    assert not report.passed


@pytest.mark.parametrize("base", [(0.0, 1.0, 0.0), (0.5, -1.0, 0.0), (0.0, -1.0, 0.2)])
def test_base_point_must_be_on_the_negative_y_axis(base):
    with pytest.raises(DomainError):
        radial_graph_check(vertical_wall(), base)
