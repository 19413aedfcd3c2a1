import time

import numpy as np
import pytest
from scipy.special import beta

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.strip import (
    first_integral_residual,
    matched_strip_height,
    peak_height,
    solve_strip_profile,
    strip_curvature_sq,
    strip_landing_point,
    strip_profile_from_quadrature,
    w_star,
)


@pytest.fixture(scope="module")
def profile():
    return solve_strip_profile(4096)


# ===========================================
# REGION: Peak height
# ===========================================
def test_peak_height_value():
    assert peak_height() == pytest.approx(1.66925, abs=1e-4)


def test_peak_height_matches_beta_function():
    assert peak_height() * beta(0.75, 0.5) / 4.0 == pytest.approx(1.0, abs=1e-12)


def test_peak_height_consistency_with_rounded_integral():
    assert peak_height() * 0.599070 == pytest.approx(1.0, abs=1e-6)


# ===========================================
# REGION: Shooting
# ===========================================
def test_profile_peak_and_runtime():
    start = time.perf_counter()
    prof = solve_strip_profile(4096)
    assert time.perf_counter() - start < 1.0
    assert float(prof.u_at(0.0)) == pytest.approx(1.66925, abs=1e-4)


def test_profile_is_even(profile):
    assert np.max(np.abs(profile.u - profile.u[::-1])) < 1e-9
    np.testing.assert_allclose(profile.x, -profile.x[::-1], atol=0)


def test_profile_is_concave(profile):
    assert np.all(np.diff(profile.u, 2) < 0.0)


def test_first_integral_holds(profile):
    assert first_integral_residual(profile) < 1e-8


def test_profile_lands_at_one(profile):
    assert abs(profile.landing - 1.0) < 1e-6
    assert profile.u[-1] < 0.15


def test_endpoint_follows_the_cube_root_law(profile):
    expected = np.cbrt(3.0 * profile.u0 ** 2 * 1e-3)
    assert float(profile.u_at(1.0 - 1e-3)) == pytest.approx(expected, rel=1e-3)
    assert float(profile.u_at(-(1.0 - 1e-3))) == pytest.approx(expected, rel=1e-3)


def test_small_grid_is_accepted():
    prof = solve_strip_profile(16)
    assert len(prof.x) == 16
    assert first_integral_residual(prof) < 1e-8


def test_tiny_grid_is_rejected():
    with pytest.raises(DomainError):
        solve_strip_profile(8)


def test_landing_error_shrinks_with_refinement():
    coarse = abs(strip_landing_point(64) - 1.0)
    fine = abs(strip_landing_point(1024) - 1.0)
    assert fine <= coarse + 1e-13


# ===========================================
# REGION: Oracles
# ===========================================
def test_perturbed_node_raises_residual(profile):
    u = profile.u.copy()
    u[len(u) // 2] += 1e-3
    perturbed = type(profile)(profile.x, u, profile.du, profile.u0, profile.landing, profile.nodes)
    assert first_integral_residual(perturbed) > 1e-4


def test_quadrature_profile_is_exact():
    reference = strip_profile_from_quadrature(64)
    assert first_integral_residual(reference) < 1e-10


def test_shooting_agrees_with_quadrature():
    reference = strip_profile_from_quadrature(64)
    shot = solve_strip_profile(64)
    np.testing.assert_allclose(shot.u, reference.u, rtol=1e-8, atol=1e-10)


def test_curvature_is_two_at_the_peak_and_vanishes_at_the_ends(profile):
    a2 = strip_curvature_sq(profile)
    np.testing.assert_allclose(a2, 2.0 / (1.0 + profile.du ** 2), rtol=1e-12)
    assert a2[len(a2) // 2] == pytest.approx(2.0, abs=1e-5)
    assert a2[0] < 1e-4


def test_matched_height_passes_through_the_truncation(profile):
    assert float(matched_strip_height(profile, 0.1, 1.0)) == pytest.approx(0.1, abs=1e-9)
    assert float(matched_strip_height(profile, 0.1, 0.0)) > profile.u0


# ===========================================
# REGION: Jacobi field w*
# ===========================================
def test_w_star_is_one_at_the_center(profile):
    assert w_star(profile, 0.0) == 1.0


def test_w_star_is_even(profile):
    x = np.linspace(0.0, 0.99, 50)
    assert np.max(np.abs(w_star(profile, x) - w_star(profile, -x))) < 1e-9


def test_w_star_grows_towards_the_ends(profile):
    x = np.linspace(0.9, 0.9999, 200)
    values = w_star(profile, x)
    assert np.all(values > 0.0)
    assert np.all(np.diff(values) > 0.0)
    assert values[-1] > 5.0


def test_w_star_outside_the_strip_is_rejected(profile):
    with pytest.raises(DomainError):
        w_star(profile, 1.0)


def test_csv_frame_columns(profile):
    frame = profile.to_frame()
    assert list(frame.columns) == ["x", "u", "du", "wstar"]
    assert len(frame) == 4096
