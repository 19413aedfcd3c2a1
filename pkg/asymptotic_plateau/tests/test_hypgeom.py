import numpy as np
import pytest

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.hypgeom import (
    Dilation,
    GeodesicPlane,
    HPoint,
    IdealPoint,
    Inversion,
    Isometry,
    Rotation,
    Translation,
    apply_isometry,
    ball_distance,
    convert_model,
    distance_to_plane,
    geodesic_exp,
    geodesic_midpoint,
    hyp_distance,
    hyp_distance_many,
    ideal_to_sphere,
    random_isometry,
    side_of_geodesic_plane,
)


def random_points(rng, n):
    return np.column_stack([rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), rng.uniform(0.2, 3.0, n)])


# ===========================================
# REGION: Distances
# ===========================================
def test_vertical_distance_is_log_ratio():
    assert hyp_distance(HPoint(0, 0, 1), HPoint(0, 0, np.e)) == pytest.approx(1.0, abs=1e-14)


def test_distance_to_itself_is_zero():
    assert hyp_distance(HPoint(0, 0, 1), HPoint(0, 0, 1)) == 0.0


def test_horizontal_distance_matches_closed_form():
    assert hyp_distance(HPoint(0, 0, 1), HPoint(1, 0, 1)) == pytest.approx(np.arccosh(1.5), abs=1e-12)


def test_distance_is_symmetric(rng):
    p, q = random_points(rng, 50), random_points(rng, 50)
    np.testing.assert_allclose(hyp_distance_many(p, q), hyp_distance_many(q, p), rtol=0, atol=1e-14)


def test_nonpositive_height_is_rejected():
    with pytest.raises(DomainError):
        hyp_distance(HPoint(0, 0, 0), HPoint(0, 0, 1))


# ===========================================
# REGION: Isometries
# ===========================================
def test_dilation_scales_height():
    g = Isometry((Dilation(2.0),))
    assert apply_isometry(g, HPoint(0, 0, 1)) == HPoint(0, 0, 2)


def test_identity_word_fixes_points():
    assert apply_isometry(Isometry.identity(), HPoint(3, 4, 5)) == HPoint(3, 4, 5)


def test_dilation_preserves_distance():
    g = Isometry((Dilation(2.0),))
    before = hyp_distance(HPoint(0, 0, 1), HPoint(1, 0, 1))
    after = hyp_distance(g.apply(HPoint(0, 0, 1)), g.apply(HPoint(1, 0, 1)))
    assert after == pytest.approx(before, rel=1e-14)


def test_random_words_preserve_distance(rng):
    p, q = random_points(rng, 1000), random_points(rng, 1000)
    d = hyp_distance_many(p, q)
    for k in range(20):
        g = random_isometry(rng, length=int(rng.integers(1, 5)))
        gp, gq = g.apply_many(p), g.apply_many(q)
        assert np.all(gp[:, 2] > 0.0)
        np.testing.assert_allclose(hyp_distance_many(gp, gq), d, rtol=0, atol=1e-10)


def test_inverse_word_undoes_the_word(rng):
    p = random_points(rng, 100)
    g = random_isometry(rng, length=4)
    np.testing.assert_allclose(g.inverse().apply_many(g.apply_many(p)), p, rtol=1e-9, atol=1e-10)


def test_compose_applies_self_first():
    g = Isometry((Dilation(2.0),)).compose(Isometry((Translation(1.0, 0.0),)))
    assert g.apply(HPoint(0, 0, 1)) == HPoint(1, 0, 2)


def test_inversion_swaps_center_and_infinity():
    g = Isometry((Inversion((1.0, 0.0), 2.0),))
    assert g.apply_to_ideal(IdealPoint.infinity()) == IdealPoint(1.0, 0.0)
    assert g.apply_to_ideal(IdealPoint(1.0, 0.0)).is_infinity


def test_rotation_fixes_its_axis():
    g = Isometry((Rotation(0.7, (1.0, 2.0)),))
    np.testing.assert_allclose(g.apply_many(np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0], atol=1e-15)


def test_nonpositive_dilation_factor_is_rejected():
    with pytest.raises(DomainError):
        Dilation(0.0)


# ===========================================
# REGION: Model conversion
# ===========================================
def test_base_point_maps_to_ball_center():
    np.testing.assert_allclose(convert_model(HPoint(0, 0, 1)), [0.0, 0.0, 0.0], atol=1e-15)


def test_ball_center_maps_to_base_point():
    np.testing.assert_allclose(convert_model([0.0, 0.0, 0.0], "ball_to_half"), [0.0, 0.0, 1.0], atol=1e-15)


def test_round_trip_is_identity():
    p = np.array([0.3, -0.2, 0.7])
    np.testing.assert_allclose(convert_model(convert_model(p), "ball_to_half"), p, atol=1e-12)


def test_conversion_is_an_isometry(rng):
    p, q = random_points(rng, 200), random_points(rng, 200)
    np.testing.assert_allclose(ball_distance(convert_model(p), convert_model(q)), hyp_distance_many(p, q),
                               rtol=1e-10, atol=1e-10)


def test_images_lie_in_the_unit_ball(rng):
    b = convert_model(random_points(rng, 200))
    assert np.all(np.linalg.norm(b, axis=1) < 1.0)


def test_invalid_direction_lists_choices():
    with pytest.raises(ValueError, match="Choose from"):
        convert_model([0.0, 0.0, 1.0], "sideways")


def test_ball_point_outside_is_rejected():
    with pytest.raises(DomainError):
        convert_model([0.0, 0.0, 1.0], "ball_to_half")


def test_ideal_points_land_on_the_sphere():
    assert np.linalg.norm(ideal_to_sphere(IdealPoint(0.4, -1.3))) == pytest.approx(1.0)
    np.testing.assert_allclose(ideal_to_sphere(IdealPoint.infinity()), [0.0, 0.0, 1.0])


# ===========================================
# REGION: Geodesic planes
# ===========================================
def test_hemisphere_side_values():
    plane = GeodesicPlane.hemisphere((0.0, 0.0), 1.0)
    assert side_of_geodesic_plane(plane, HPoint(0, 0, 2)) == pytest.approx(3.0)
    assert side_of_geodesic_plane(plane, HPoint(0, 0, 1)) == pytest.approx(0.0)


def test_vertical_plane_side_is_signed_offset():
    plane = GeodesicPlane.vertical((0.0, 0.0), (0.0, 1.0))
    assert side_of_geodesic_plane(plane, HPoint(-1, 0, 1)) == pytest.approx(-1.0)


def test_side_sign_survives_plane_preserving_isometries(rng):
    plane = GeodesicPlane.vertical((0.0, 0.0), (0.0, 1.0))
    g = Isometry((Translation(0.0, 2.5), Dilation(3.0, (0.0, 1.0)),
                  Rotation(np.pi, (0.0, 4.0)), Rotation(np.pi, (0.0, 0.0))))
    p = random_points(rng, 200)
    p = p[np.abs(plane.side_many(p)) > 1e-6]
    assert np.array_equal(np.sign(plane.side_many(p)), np.sign(plane.side_many(g.apply_many(p))))


def test_distance_to_plane_along_normal_geodesic():
    plane = GeodesicPlane.hemisphere((0.0, 0.0), 1.0)
    assert distance_to_plane(plane, HPoint(0, 0, 2)) == pytest.approx(np.log(2.0), rel=1e-12)
    vertical = GeodesicPlane.vertical((0.0, 0.0), (0.0, 1.0))
    assert distance_to_plane(vertical, HPoint(1, 0, 1)) == pytest.approx(np.arcsinh(1.0), rel=1e-12)


def test_invalid_hemisphere_radius_is_rejected():
    with pytest.raises(DomainError):
        GeodesicPlane.hemisphere((0.0, 0.0), 0.0)


# ===========================================
# REGION: Geodesics
# ===========================================
def test_geodesic_exp_walks_the_requested_distance(rng):
    p = random_points(rng, 100)
    v = rng.normal(size=(100, 3))
    t = rng.uniform(-2.0, 2.0, 100)
    q = geodesic_exp(p, v, t)
    np.testing.assert_allclose(hyp_distance_many(p, q), np.abs(t), rtol=1e-9, atol=1e-12)


def test_geodesic_exp_vertical_direction():
    np.testing.assert_allclose(geodesic_exp([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0), [0.0, 0.0, np.e])


def test_geodesic_exp_stays_on_the_unit_hemisphere():
    q = geodesic_exp(np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]), np.array([0.5]))
    assert np.linalg.norm(q[0]) == pytest.approx(1.0, abs=1e-14)


def test_midpoint_is_equidistant(rng):
    p, q = random_points(rng, 1)[0], random_points(rng, 1)[0]
    m = geodesic_midpoint(p, q)
    assert hyp_distance(m, p) == pytest.approx(hyp_distance(m, q), rel=1e-9)
    assert hyp_distance(m, p) == pytest.approx(0.5 * hyp_distance(p, q), rel=1e-9)
