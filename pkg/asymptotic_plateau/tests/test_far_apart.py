import numpy as np
import pytest

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.far_apart import (
    area_gap,
    connected_profile,
    disconnected_area,
    far_apart_threshold,
    profile_area,
    two_circle_collapse,
)
from asymptotic_plateau.services.mesh import mesh_topology


# ===========================================
# REGION: Profile area
# ===========================================
def test_vertical_cylinder_area():
    z = np.linspace(1.0, 2.0, 11)
    assert profile_area(np.ones_like(z), z) == pytest.approx(np.pi, rel=1e-8)


def test_horizontal_annulus_area():
    rho = np.linspace(1.0, 2.0, 5)
    assert profile_area(rho, np.ones_like(rho)) == pytest.approx(3.0 * np.pi, rel=1e-12)


def test_disconnected_caps():
    expected = 2.0 * np.pi * (np.hypot(1.0, 0.1) / 0.1 - 1.0) + 2.0 * np.pi * (np.hypot(2.0, 0.1) / 0.1 - 1.0)
    assert disconnected_area(1.0, 2.0, 0.1) == pytest.approx(expected)


# ===========================================
# REGION: Connected candidate
# ===========================================
@pytest.mark.parametrize("r, big_r, eps", [(1.0, 1.0, 0.1), (2.0, 1.0, 0.1), (0.0, 1.0, 0.1), (1.0, 2.0, 0.0)])
def test_profile_needs_ordered_radii(r, big_r, eps):
    with pytest.raises(DomainError):
        connected_profile(r, big_r, eps)


def test_close_circles_prefer_the_annulus():
    profile = connected_profile(0.9, 1.1, 0.01)
    assert profile.connected_wins
    assert profile.rho[0] == pytest.approx(1.1)
    assert profile.rho[-1] == pytest.approx(0.9)
    assert profile.z[[0, -1]] == pytest.approx([0.01, 0.01])
    assert np.all(profile.z >= 0.01 - 1e-12)


def test_profile_revolves_to_an_annulus():
    mesh = connected_profile(0.9, 1.1, 0.02).to_mesh(resolution=48)
    assert mesh_topology(mesh) == (0, 2, 0)


def test_area_gap_is_dilation_invariant():
    assert area_gap(1.5, 0.1, scale=10.0) == pytest.approx(area_gap(1.5, 0.1), rel=1e-6, abs=1e-6)


# ===========================================
# REGION: Experiments
# ===========================================
@pytest.mark.slow
def test_far_apart_threshold_is_bracketed():
    report = far_apart_threshold(0.1)
    assert 1.0 < report.threshold < 100.0
    assert report.dilation_consistent
    assert area_gap(report.threshold * 1.5, 0.1) > 0.0


@pytest.mark.slow
def test_collapsing_annulus_shrinks_with_the_gap():
    report = two_circle_collapse()
    assert report.passed
    assert np.all(np.diff([row["distance"] for row in report.rows]) < 0.0)
