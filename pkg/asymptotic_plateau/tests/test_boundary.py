from dataclasses import replace

import numpy as np
import pytest
from shapely.geometry import Polygon

from asymptotic_plateau.exceptions import BoundaryError, DomainError
from asymptotic_plateau.services.boundary import (
    BridgeSpec,
    IdealArc,
    IdealCurveSet,
    RegionK,
    check_nicely_shrinking,
    convergence_rate,
    distances_converge,
    find_orthogonal_chord,
    lift_to_height,
    make_bridge_family,
    measured_width,
    orthogonality_check,
    skillet_boundary,
    symmetric_difference,
    windowed_hausdorff,
)
from asymptotic_plateau.services.hypgeom import IdealPoint


@pytest.fixture(scope="module")
def unit_circle():
    return IdealCurveSet.circle((0.0, 0.0), 1.0, samples=512)


@pytest.fixture(scope="module")
def diameter():
    return IdealArc.segment((-1.0, 0.0), (1.0, 0.0), samples=64)


@pytest.fixture(scope="module")
def diameter_family(unit_circle, diameter):
    return make_bridge_family(unit_circle, diameter, [0.2, 0.1, 0.05])


def outer_arch():
    # circle of radius 1 about (1, 1): orthogonal to the unit circle at (1, 0) and (0, 1)
    def curve(t):
        theta = -0.5 * np.pi + 1.5 * np.pi * t
        return 1.0 + np.cos(theta), 1.0 + np.sin(theta)
    return IdealArc.from_function(curve, samples=256)


# ===========================================
# REGION: Curve sets and regions
# ===========================================
def test_disk_membership(unit_circle):
    region = RegionK(unit_circle)
    assert region.contains(np.array([[0.0, 0.0], [2.0, 0.0]])).tolist() == [True, False]


def test_infinity_flag_flips_membership(unit_circle):
    region = RegionK(unit_circle, contains_infinity=True)
    assert region.contains(np.array([[0.0, 0.0], [2.0, 0.0]])).tolist() == [False, True]


def test_disk_is_closure_of_interior(unit_circle):
    assert RegionK(unit_circle).is_closure_of_interior(spacing=0.05)


def test_test_points_cover_both_sides(unit_circle):
    tags = [inside for _, inside in RegionK(unit_circle).test_points()]
    assert sorted(tags) == [False, True]


def test_json_document_restores_the_curves(unit_circle):
    restored = IdealCurveSet.from_json(unit_circle.to_json())
    np.testing.assert_allclose(restored.get_components[0], unit_circle.get_components[0], atol=1e-12)
    assert restored.get_singular_points == [[]]


def test_rectangle_corners_are_singular():
    rect = IdealCurveSet.rectangle(0.0, 0.0, 2.0, 1.0, spacing=0.1)
    assert len(rect.get_singular_points[0]) == 4


def test_crossing_components_are_rejected():
    crossing = IdealCurveSet.circles([((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0)], samples=128)
    with pytest.raises(BoundaryError):
        crossing.validate()


# ===========================================
# REGION: Lifting
# ===========================================
def test_lift_unit_circle(unit_circle):
    (loop,) = lift_to_height(unit_circle, 0.1, samples=100)
    assert loop.shape == (100, 3)
    assert np.all(loop[:, 2] == 0.1)
    np.testing.assert_allclose(np.linalg.norm(loop[:, :2], axis=1), 1.0, atol=1e-4)


def test_lift_empty_set():
    assert lift_to_height(IdealCurveSet(), 0.1, samples=100) == []


def test_lift_splits_samples_by_length():
    curves = IdealCurveSet.circles([((0.0, 0.0), 1.0), ((5.0, 0.0), 2.0)], samples=512)
    small, large = lift_to_height(curves, 0.1, samples=300)
    assert (len(small), len(large)) == (100, 200)


def test_lift_rejects_nonpositive_height(unit_circle):
    with pytest.raises(DomainError):
        lift_to_height(unit_circle, 0.0)


# ===========================================
# REGION: Orthogonality
# ===========================================
def test_diameter_is_orthogonal(unit_circle, diameter):
    angles = orthogonality_check(diameter, unit_circle)
    np.testing.assert_allclose(angles, [0.5 * np.pi, 0.5 * np.pi], atol=1e-6)


def test_skewed_chord_angles(unit_circle):
    chord = IdealArc.segment((1.0, 0.0), (0.0, 1.0))
    np.testing.assert_allclose(orthogonality_check(chord, unit_circle), [0.25 * np.pi, 0.25 * np.pi], atol=1e-6)


def test_detached_arc_is_rejected(unit_circle):
    with pytest.raises(BoundaryError):
        orthogonality_check(IdealArc.segment((2.0, 0.0), (3.0, 0.0)), unit_circle)


def test_orthogonal_chord_search_near_hint(unit_circle):
    chord = find_orthogonal_chord(unit_circle, hint=(-1.0, 0.0))
    np.testing.assert_allclose(chord.start, [-1.0, 0.0], atol=1e-2)
    np.testing.assert_allclose(chord.end, [1.0, 0.0], atol=1e-2)
    a0, a1 = orthogonality_check(chord, unit_circle)
    assert abs(a0 - 0.5 * np.pi) < 1e-3 and abs(a1 - 0.5 * np.pi) < 1e-3


# ===========================================
# REGION: Bridges
# ===========================================
def test_diameter_bridges_split_the_circle(diameter_family):
    assert [len(b.curves) for b in diameter_family] == [2, 2, 2]
    for bridge in diameter_family:
        bridge.curves.validate()


def test_bridge_widths_match_declared(diameter_family):
    for bridge in diameter_family:
        assert measured_width(bridge) == pytest.approx(bridge.width, rel=0.1)


def test_peninsula_on_a_straight_edge():
    edge = IdealCurveSet.rectangle(-5.0, -5.0, 5.0, 0.0, spacing=0.01)
    arc = IdealArc.segment((0.0, 0.0), (0.0, 1.0), samples=32)
    (bridge,) = make_bridge_family(edge, arc, [0.1])
    assert len(bridge.curves) == 1
    inside = bridge.curves.parity(np.array([[0.0, 0.5], [0.5, 0.5], [0.0, -1.0]]))
    assert inside.tolist() == [True, False, True]


def test_outer_arch_gives_nested_curves(unit_circle):
    (bridge,) = make_bridge_family(unit_circle, outer_arch(), [0.1])
    assert len(bridge.curves) == 2
    polygons = sorted((Polygon(c) for c in bridge.curves.get_components), key=lambda p: p.area)
    assert polygons[1].contains(polygons[0])
    inside = bridge.curves.parity(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 1.0]]))
    assert inside.tolist() == [True, False, True]


def test_zero_width_is_rejected(unit_circle, diameter):
    with pytest.raises(BoundaryError):
        make_bridge_family(unit_circle, diameter, [0.0])
    with pytest.raises(BoundaryError):
        BridgeSpec(diameter, 0.0)


def test_widths_must_decrease(unit_circle, diameter):
    with pytest.raises(BoundaryError):
        make_bridge_family(unit_circle, diameter, [0.1, 0.2])


def test_skewed_junction_is_rejected(unit_circle):
    with pytest.raises(BoundaryError):
        make_bridge_family(unit_circle, IdealArc.segment((1.0, 0.0), (0.0, 1.0)), [0.05])


def test_detached_bridge_is_rejected(unit_circle):
    with pytest.raises(BoundaryError):
        make_bridge_family(unit_circle, IdealArc.segment((2.0, 0.0), (3.0, 0.0)), [0.05])


# ===========================================
# REGION: Nicely shrinking families
# ===========================================
def test_mid_bridge_converges_to_parallel_lines(diameter_family):
    report = check_nicely_shrinking(diameter_family, [IdealPoint(0.0, 0.0)])
    assert report.passed
    assert report.samples[0]["classification"] == "parallel lines"


def test_bridge_end_converges_to_skillet(diameter_family):
    report = check_nicely_shrinking(diameter_family, [IdealPoint(-1.0, 0.0)])
    sample = report.samples[0]
    assert sample["classification"] == "skillet boundary"
    assert all(b < a for a, b in zip(sample["distances"], sample["distances"][1:]))
    assert report.passed


def test_constant_width_family_fails(diameter_family):
    report = check_nicely_shrinking([diameter_family[0], diameter_family[0]], [IdealPoint(0.0, 0.0)])
    assert not report.passed


def test_family_that_stops_shrinking_fails(diameter_family):
    frozen = [replace(diameter_family[0], spec=b.spec) for b in diameter_family]
    report = check_nicely_shrinking(frozen, [IdealPoint(0.0, 0.0)])
    assert not report.passed
    assert not report.samples[0]["converging"]


def test_distances_at_a_fixed_offset_do_not_converge():
    assert not distances_converge([0.2, 0.1, 0.05], [0.3, 0.3, 0.3], tol=0.05)
    assert convergence_rate([0.2, 0.1, 0.05], [0.3, 0.3, 0.3]) == pytest.approx(0.0, abs=1e-12)


def test_distances_levelling_off_do_not_converge():
    assert not distances_converge([0.2, 0.1, 0.05], [0.32, 0.31, 0.305], tol=0.05)


def test_distances_proportional_to_width_converge():
    assert convergence_rate([0.2, 0.1, 0.05], [0.4, 0.2, 0.1]) == pytest.approx(1.0)
    assert distances_converge([0.2, 0.1, 0.05], [0.4, 0.2, 0.1], tol=0.05)


# ===========================================
# REGION: Symmetric differences
# ===========================================
def test_difference_with_itself_is_empty(unit_circle):
    assert symmetric_difference(unit_circle, unit_circle).is_empty


def test_disjoint_sets_are_united(unit_circle):
    other = IdealCurveSet.circle((5.0, 0.0), 1.0, samples=512)
    assert len(symmetric_difference(unit_circle, other)) == 2


def test_crossing_circles_keep_parity(rng):
    a = IdealCurveSet.circle((0.0, 0.0), 1.0, samples=256)
    b = IdealCurveSet.circle((1.0, 0.0), 1.0, samples=256)
    result = symmetric_difference(a, b)
    assert len(result) == 2
    pts = rng.uniform(-1.5, 2.5, size=(500, 2))
    pts = pts[(a.distance(pts) > 1e-3) & (b.distance(pts) > 1e-3)]
    np.testing.assert_array_equal(result.parity(pts), a.parity(pts) ^ b.parity(pts))


def test_difference_is_an_involution(unit_circle):
    other = IdealCurveSet.circle((5.0, 0.0), 1.0, samples=512)
    back = symmetric_difference(symmetric_difference(unit_circle, other), other)
    assert len(back) == 1
    assert windowed_hausdorff([np.vstack([c, c[:1]]) for c in back.get_components],
                              [np.vstack([c, c[:1]]) for c in unit_circle.get_components], window=2.0) < 1e-2


def test_tangential_overlap_is_rejected(unit_circle):
    shifted = IdealCurveSet.circle((1e-8, 0.0), 1.0, samples=512)
    with pytest.raises(BoundaryError):
        symmetric_difference(unit_circle, shifted)


# ===========================================
# REGION: Skillets
# ===========================================
def test_skillet_profile_values():
    skillet = skillet_boundary(2.0, 1.0)
    assert skillet.u(2.0) == 0.0 and skillet.u(-2.0) == 0.0
    assert np.isinf(skillet.u(0.0)) and np.isinf(skillet.u(1.0))
    x = np.linspace(1.01, 1.99, 50)
    assert np.all(np.isfinite(skillet.u(x)))


def test_skillet_finite_part_is_convex():
    skillet = skillet_boundary(2.0, 1.0)
    x = np.linspace(1.02, 1.98, 200)
    second = np.diff(skillet.u(x), 2)
    assert np.all(second > 0.0)
    assert np.all(skillet.d2u(x) > 0.0)


def test_skillet_is_mirror_symmetric():
    skillet = skillet_boundary(2.0, 1.0)
    x = np.linspace(-3.0, 3.0, 301)
    np.testing.assert_array_equal(skillet.u(x), skillet.u(-x))


def test_skillet_support_must_exceed_one():
    with pytest.raises(DomainError):
        skillet_boundary(1.0, 1.0)
