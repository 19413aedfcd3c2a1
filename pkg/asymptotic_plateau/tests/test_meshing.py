import numpy as np
import pytest

from asymptotic_plateau.exceptions import ConstructionError, DomainError
from asymptotic_plateau.services.boundary import IdealArc, IdealCurveSet, RegionK
from asymptotic_plateau.services.mesh import mesh_topology
from asymptotic_plateau.services.meshing import (
    InitialSurfaceFactory,
    annulus_mesh,
    attach_band,
    curve_lengths,
    dome_mesh,
    hemisphere_mesh,
    region_mesh,
    revolution_mesh,
    strip_band_mesh,
)


@pytest.fixture(scope="module")
def hemisphere():
    return hemisphere_mesh((0.0, 0.0), float(np.hypot(1.0, 0.1)), 0.1, 64)


@pytest.fixture(scope="module")
def thin_hemisphere():
    return hemisphere_mesh((0.0, 0.0), float(np.hypot(1.0, 0.02)), 0.02, 160)


# ===========================================
# REGION: Hemispheres and domes
# ===========================================
def test_hemisphere_vertices_lie_on_the_sphere(hemisphere):
    radius = np.linalg.norm(hemisphere.get_vertices, axis=1)
    np.testing.assert_allclose(radius, np.hypot(1.0, 0.1), rtol=1e-12)


def test_hemisphere_boundary_is_the_unit_circle(hemisphere):
    ring = hemisphere.get_vertices[hemisphere.get_boundary]
    assert len(ring) == 64
    np.testing.assert_allclose(np.hypot(ring[:, 0], ring[:, 1]), 1.0, rtol=1e-12)
    np.testing.assert_allclose(ring[:, 2], 0.1)


def test_hemisphere_is_a_disk(hemisphere):
    assert mesh_topology(hemisphere) == (1, 1, 0)


def test_hemisphere_normals_point_up_at_the_top(hemisphere):
    normals = hemisphere.face_normals()
    top = int(np.argmax(hemisphere.corners().mean(axis=1)[:, 2]))
    assert normals[top, 2] > 0.0


def test_hemisphere_rejects_eps_above_radius():
    with pytest.raises(DomainError):
        hemisphere_mesh((0.0, 0.0), 0.1, 0.2, 32)


def test_hemisphere_rejects_coarse_resolution():
    with pytest.raises(DomainError):
        hemisphere_mesh((0.0, 0.0), 1.0, 0.1, 8)


def test_boundary_length_of_the_inscribed_polygon(hemisphere):
    assert curve_lengths(hemisphere)[0] == pytest.approx(128.0 * np.sin(np.pi / 64.0), rel=1e-9)


@pytest.mark.parametrize("profile", ["hemisphere", "cylinder", "flat"])
def test_dome_profiles_are_disks(profile):
    phi = 2.0 * np.pi * np.arange(256) / 256
    ring = np.column_stack([1.5 * np.cos(phi), np.sin(phi)])
    mesh = dome_mesh(ring, eps=0.1, resolution=48, profile=profile)
    assert mesh_topology(mesh) == (1, 1, 0)


def test_unknown_dome_profile_lists_choices():
    ring = IdealCurveSet.circle((0.0, 0.0), 1.0, 64).get_components[0]
    with pytest.raises(ValueError, match="Choose from"):
        dome_mesh(ring, profile="cone")


# ===========================================
# REGION: Annuli and bands
# ===========================================
def test_annulus_has_two_boundary_curves():
    assert mesh_topology(annulus_mesh((0.0, 0.0), 0.5, 1.0, eps=0.1, resolution=32)) == (0, 2, 0)


def test_surface_of_revolution_is_an_annulus():
    t = np.linspace(0.0, np.pi, 17)
    mesh = revolution_mesh((0.0, 0.0), 1.5 - 0.5 * np.cos(t), 0.1 + 0.4 * np.sin(t), 0.1, resolution=32)
    assert mesh_topology(mesh) == (0, 2, 0)


def test_strip_band_ends_slide_in_x_only():
    mesh = strip_band_mesh(eps=0.1, length=0.5, resolution=24)
    frozen = mesh.get_frozen
    assert frozen[:24, 1].all()
    assert not frozen[1:23, 0].any()
    assert mesh_topology(mesh) == (1, 1, 0)


def test_exact_strip_band_starts_on_the_profile():
    semicircle = strip_band_mesh(eps=0.1, resolution=24)
    exact = strip_band_mesh(eps=0.1, resolution=24, profile="exact")
    assert exact.get_vertices[:, 2].max() > semicircle.get_vertices[:, 2].max()


def test_band_turns_the_disk_into_an_annulus(thin_hemisphere):
    diameter = IdealArc.segment((-1.0, 0.0), (1.0, 0.0), samples=129)
    banded = attach_band(thin_hemisphere, diameter, 0.1)
    assert mesh_topology(banded) == (0, 2, 0)
    rails = banded.get_vertices[banded.get_boundary]
    np.testing.assert_allclose(rails[:, 2], 0.02)


def test_band_narrower_than_twice_eps_is_rejected(thin_hemisphere):
    diameter = IdealArc.segment((-1.0, 0.0), (1.0, 0.0), samples=129)
    with pytest.raises(ConstructionError):
        attach_band(thin_hemisphere, diameter, 0.03)


def test_band_on_a_short_arc_is_rejected(thin_hemisphere):
    chord = IdealArc.segment((1.0, 0.0), (np.cos(0.3), np.sin(0.3)), samples=17)
    with pytest.raises(ConstructionError):
        attach_band(thin_hemisphere, chord, 0.1)


# ===========================================
# REGION: Regions and factory
# ===========================================
def test_region_with_a_hole_gets_an_arch():
    curves = IdealCurveSet.circles([((0.0, 0.0), 1.0), ((0.0, 0.0), 0.5)], samples=128)
    mesh = region_mesh(RegionK(curves), eps=0.1, resolution=48)
    assert mesh_topology(mesh) == (0, 2, 0)


def test_two_disks_give_two_domes():
    curves = IdealCurveSet.circles([((-2.0, 0.0), 1.0), ((2.0, 0.0), 1.0)], samples=128)
    mesh = region_mesh(RegionK(curves), eps=0.1, resolution=64)
    assert mesh.component_labels()[0] == 2


def test_region_containing_infinity_has_no_default_surface():
    region = RegionK(IdealCurveSet.circle((0.0, 0.0), 1.0), contains_infinity=True)
    with pytest.raises(ConstructionError):
        region_mesh(region)


def test_unknown_side_lists_choices():
    with pytest.raises(ValueError, match="Choose from"):
        region_mesh(RegionK.disk(), side="middle")


def test_factory_builds_the_requested_surface():
    builder = InitialSurfaceFactory.get_builder("region", region=RegionK.disk(), eps=0.1, resolution=32)
    assert mesh_topology(builder.build()) == (1, 1, 0)


def test_factory_rejects_unknown_kind():
    with pytest.raises(ValueError, match="Choose from"):
        InitialSurfaceFactory.get_builder("torus")


def test_factory_validates_eps():
    with pytest.raises(DomainError):
        InitialSurfaceFactory.get_builder("strip", eps=0.5)
