import numpy as np
import pytest

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.boundary import IdealCurveSet
from asymptotic_plateau.services.construct import initial_state
from asymptotic_plateau.services.exhaustion import HANDLE, PANTS, SurfaceSpec, build_simple_exhaustion
from asymptotic_plateau.services.layouts import (
    covering_distance,
    dense_parameters,
    dense_plan,
    slab_block,
    slab_plan,
    slab_stabilization,
)

INFINITE = SurfaceSpec(genus=None, ends=None)


@pytest.fixture(scope="module")
def disk_state():
    return initial_state(build_simple_exhaustion(SurfaceSpec(genus=0, ends=None), 2), eps=0.1, resolution=32)


# ===========================================
# REGION: Dense plans
# ===========================================
def test_dense_parameters_shrink_with_n():
    params = dense_parameters(2)
    assert params["pitch"] == pytest.approx(0.25)
    assert params["disk_radius"] == pytest.approx(0.1)
    assert 2.0 * params["disk_radius"] < params["pitch"]
    assert params["width"] == pytest.approx(params["pitch"] / 8.0)


def test_dense_index_must_be_positive():
    with pytest.raises(DomainError):
        dense_parameters(0)


def test_unit_circle_leaves_its_center_uncovered():
    assert covering_distance(IdealCurveSet.circle((0.0, 0.0), 1.0), window=1.0) == pytest.approx(1.0, abs=0.02)


def test_window_must_contain_the_curves(disk_state):
    with pytest.raises(DomainError):
        dense_plan(disk_state, 1, window=0.5)


def test_first_dense_stage_covers_the_window(disk_state):
    config = dense_plan(disk_state, 1)
    assert config.case == "dense-disk"
    assert config.stage == 2
    assert config.checks["covering"]["passed"]
    assert len(config.bridges) >= 1
    assert len(config.boundary) > len(disk_state.curves)


# ===========================================
# REGION: Slab plans
# ===========================================
def test_annulus_block_has_two_curves():
    curves, cx = slab_block(2, PANTS)
    assert cx == pytest.approx(2.5)
    assert len(curves) == 2


def test_torus_block_has_one_curve():
    curves, cx = slab_block(2, HANDLE)
    assert cx == pytest.approx(3.5)
    assert len(curves) == 1


def test_unknown_block_lists_choices():
    with pytest.raises(DomainError, match="Choose from"):
        slab_block(2, "annulus")


def test_slab_layout_needs_infinite_topology():
    with pytest.raises(DomainError):
        slab_plan(SurfaceSpec(genus=1, ends=1), 2)
    with pytest.raises(DomainError):
        slab_plan(INFINITE, 0)


def test_first_slab_stage_is_a_disk():
    config = slab_plan(INFINITE, 1)
    assert config.case == "disk"
    assert len(config.boundary) == 1
    assert config.width == 0.0


def test_connecting_arc_stays_in_the_slabs():
    config = slab_plan(INFINITE, 2)
    assert config.case == "slab-A_n"
    assert config.checks["arc_in_slabs"]
    assert config.checks["arc_min_abs_y"] > 0.0


def test_later_stages_leave_the_left_slabs_alone():
    second, third = slab_plan(INFINITE, 2), slab_plan(INFINITE, 3)
    assert third.case == "slab-T_n"
    stable, distance = slab_stabilization(second.boundary, third.boundary, x_max=2.0)
    assert stable
    assert distance <= 1e-3


def test_bridged_stage_differs_from_the_disk():
    first, second = slab_plan(INFINITE, 1), slab_plan(INFINITE, 2)
    stable, distance = slab_stabilization(first.boundary, second.boundary, x_max=2.0)
    assert not stable
    assert distance > 1e-3
