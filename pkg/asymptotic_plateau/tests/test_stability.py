import numpy as np
import pytest
from scipy.sparse import csr_matrix

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.hypgeom import IdealPoint
from asymptotic_plateau.services.meshing import hemisphere_mesh
from asymptotic_plateau.services.stability import (
    JacobiOperator,
    apply_jacobi,
    assemble_jacobi,
    curvature_sq,
    dilation_field,
    ladder_masks,
    smallest_eigenvalue,
    spectral_lower_bound,
    spectrum_ladder,
    translation_field,
)


@pytest.fixture(scope="module")
def hemisphere():
    return hemisphere_mesh((0.0, 0.0), float(np.hypot(1.0, 0.1)), 0.1, 48)


@pytest.fixture(scope="module")
def jacobi(hemisphere):
    return assemble_jacobi(hemisphere)


# ===========================================
# REGION: Operator
# ===========================================
def test_stiffness_is_symmetric_and_kills_constants(jacobi):
    k = jacobi.get_stiffness
    assert abs(k - k.T).max() < 1e-12
    np.testing.assert_allclose(k @ np.ones(k.shape[0]), 0.0, atol=1e-9)


def test_boundary_is_dirichlet(hemisphere, jacobi):
    np.testing.assert_array_equal(jacobi.get_dirichlet, hemisphere.get_boundary)
    assert jacobi.size == hemisphere.n_vertices - int(hemisphere.get_boundary.sum())


def test_geodesic_plane_has_no_curvature(hemisphere):
    curv = curvature_sq(hemisphere)
    high = hemisphere.get_vertices[:, 2] > 0.5
    assert np.all(np.abs(curv[high]) < 0.05)


def test_residual_vanishes_on_dirichlet_vertices(hemisphere, jacobi):
    out = apply_jacobi(jacobi, hemisphere.get_vertices[:, 2])
    assert np.all(out[hemisphere.get_boundary] == 0.0)


def test_residual_needs_one_value_per_vertex(jacobi):
    with pytest.raises(DomainError):
        apply_jacobi(jacobi, np.ones(3))


# ===========================================
# REGION: Spectrum
# ===========================================
def test_totally_geodesic_disk_is_strictly_stable(hemisphere, jacobi):
    report = smallest_eigenvalue(jacobi)
    assert report.lambda1 > 2.0
    assert report.residual < 1e-8
    phi = report.eigenfunction
    assert np.all(phi[hemisphere.get_boundary] == 0.0)
    assert np.all(phi >= -1e-8)


def diagonal_operator(potential):
    potential = np.asarray(potential, dtype=float)
    n = len(potential)
    return JacobiOperator(csr_matrix((n, n)), np.ones(n), 2.0 - potential, np.zeros(n, dtype=bool))


def test_large_negative_mode_is_found_before_small_positive_one():
    report = smallest_eigenvalue(diagonal_operator([-10.0, 0.5, 3.0]))
    assert report.lambda1 == pytest.approx(-10.0)
    assert abs(report.eigenfunction[0]) == pytest.approx(1.0)


def test_negative_mode_is_found_on_a_large_system():
    potential = np.concatenate([[0.5, -10.0], np.linspace(1.0, 5.0, 98)])
    report = smallest_eigenvalue(diagonal_operator(potential))
    assert report.lambda1 == pytest.approx(-10.0, rel=1e-8)
    assert int(np.argmax(np.abs(report.eigenfunction))) == 1
    assert report.residual < 1e-8


def test_lower_bound_sits_below_the_first_eigenvalue(jacobi):
    assert spectral_lower_bound(jacobi) <= smallest_eigenvalue(jacobi).lambda1


def test_no_free_vertex_is_rejected(jacobi):
    with pytest.raises(DomainError):
        smallest_eigenvalue(jacobi.restricted(np.ones(len(jacobi.get_mass), dtype=bool)))


def test_smaller_rungs_have_larger_eigenvalues(hemisphere):
    report = spectrum_ladder(hemisphere, [1.0, 2.0])
    inner, outer = report.ladder
    assert inner["lambda1"] >= outer["lambda1"] - 1e-9
    assert outer["lambda1"] >= report.lambda1 - 1e-9


def test_unknown_ladder_region_lists_choices(hemisphere):
    with pytest.raises(ValueError, match="Choose from"):
        ladder_masks(hemisphere, [1.0], region="cube")


def test_slab_rungs_are_nested(hemisphere):
    small, large = ladder_masks(hemisphere, [0.5, 0.2], region="slab")
    assert np.all(large[small])
    assert large.sum() > small.sum()


# ===========================================
# REGION: Killing fields
# ===========================================
def test_dilation_field_is_positive_on_the_hemisphere(hemisphere):
    assert np.all(dilation_field(hemisphere, IdealPoint(0.0, 0.0)) > 0.0)


def test_dilation_about_infinity_is_rejected(hemisphere):
    with pytest.raises(DomainError):
        dilation_field(hemisphere, IdealPoint.infinity())


def test_translation_must_be_horizontal(hemisphere):
    with pytest.raises(DomainError):
        translation_field(hemisphere, (0.0, 0.0, 1.0))
