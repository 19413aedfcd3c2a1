import os
from dataclasses import replace

import numpy as np
import pytest
from shapely.geometry import Point

from asymptotic_plateau.exceptions import ConstructionError, DomainError
from asymptotic_plateau.services.construct import (
    CROSS_WIDTH,
    StageConfig,
    ball_topology,
    check_budget,
    eps_budget,
    graph_bound,
    initial_state,
    limit_set_disjointness,
    plan_stage,
    run_construction,
    stage_one_report,
)
from asymptotic_plateau.services.exhaustion import (
    ANNULUS,
    PANTS,
    Component,
    ExhaustionStep,
    SurfaceSpec,
    build_simple_exhaustion,
)


def state_for(spec, stages=3, eps=0.02, resolution=64):
    return initial_state(build_simple_exhaustion(spec, stages), eps=eps, resolution=resolution)


@pytest.fixture(scope="module")
def pants_state():
    return state_for(SurfaceSpec(genus=0, ends=2))


# ===========================================
# REGION: Budgets
# ===========================================
def test_budget_series_stays_below_one_half():
    assert eps_budget(1) == pytest.approx(3.0 / np.pi ** 2)
    assert check_budget(1000) < 0.5


def test_graph_bound_sums_the_later_budgets():
    assert graph_bound(1, 3) == pytest.approx(eps_budget(2) + eps_budget(3))
    assert graph_bound(3, 3) == 0.0


def test_budget_of_one_is_rejected():
    with pytest.raises(ConstructionError):
        check_budget(2, scale=1.0)


# ===========================================
# REGION: Stage one
# ===========================================
def test_first_stage_is_the_geodesic_disk(pants_state):
    assert pants_state.stage == 1
    assert pants_state.radii == (0.5,)
    assert tuple(ball_topology(pants_state.mesh, 0.5)) == (1, 1, 0)
    assert len(pants_state.limit_disks) == 1


def test_first_stage_passes_its_checks(pants_state):
    report = stage_one_report(pants_state)
    assert report.passed
    assert report.checks["stable"]["lambda1"] > 0.0


def test_initial_state_validates_eps():
    with pytest.raises(DomainError):
        state_for(SurfaceSpec(), eps=0.3)


def test_empty_ball_has_no_topology(pants_state):
    assert ball_topology(pants_state.mesh, 0.5, anchor=(50.0, 0.0, 1.0)) is None


# ===========================================
# REGION: Planning
# ===========================================
def test_pants_step_is_one_bridge(pants_state):
    config = plan_stage(pants_state, pants_state.plan.steps[0])
    assert config.case == "pants"
    assert config.expected == (0, 0, 2)
    assert len(config.bridges) == 1
    assert 2.0 * pants_state.eps < config.width <= 0.2
    assert config.eps_n == pytest.approx(eps_budget(2))
    assert config.disk_region is not None


def test_handle_step_crosses_the_first_bridge():
    state = state_for(SurfaceSpec(genus=1, ends=1))
    config = plan_stage(state, state.plan.steps[0])
    assert config.case == "handle"
    assert config.expected == (-1, 1, 1)
    first, cross = config.bridges
    assert cross.width == pytest.approx(CROSS_WIDTH * first.width)


def test_annular_step_needs_no_bridge():
    state = state_for(SurfaceSpec(genus=0, ends=1), stages=2)
    config = plan_stage(state, state.plan.steps[0])
    assert config.case == "annuli-only"
    assert config.bridges == ()
    assert config.expected == (1, 0, 1)


def test_two_pieces_in_one_stage_are_rejected(pants_state):
    step = ExhaustionStep((Component(PANTS, 0), Component(PANTS, 0)))
    with pytest.raises(ConstructionError):
        plan_stage(pants_state, step)


def test_planning_past_the_last_stage(pants_state):
    short = replace(pants_state, plan=build_simple_exhaustion(SurfaceSpec(genus=0, ends=2), 1))
    with pytest.raises(ConstructionError):
        plan_stage(short, ExhaustionStep((Component(ANNULUS, 0),)))


def test_narrower_config_keeps_the_chord(pants_state):
    config = plan_stage(pants_state, pants_state.plan.steps[0])
    narrower = config.with_width(0.5 * config.width)
    assert narrower.chord is config.chord
    assert narrower.min_width == pytest.approx(0.5 * config.width)


def test_config_json_names_the_expected_topology():
    payload = StageConfig(2, "annuli-only", eps_budget(2), (1, 0, 1)).to_json()
    assert payload["expected"] == {"chi": 1, "genus": 0, "boundary": 1}
    assert payload["bridges"] == 0


# ===========================================
# REGION: Limit sets
# ===========================================
def test_single_end_passes_vacuously(pants_state):
    report = limit_set_disjointness(pants_state)
    assert report.passed
    assert report.reason == "single end"


def test_overlapping_limit_disks_fail(pants_state):
    disks = (Point(0.0, 0.0).buffer(1.0), Point(0.5, 0.0).buffer(1.0))
    report = limit_set_disjointness(replace(pants_state, limit_disks=disks))
    assert not report.passed
    assert report.min_separation == 0.0


def test_separated_limit_disks_pass(pants_state):
    disks = (Point(0.0, 0.0).buffer(1.0), Point(3.0, 0.0).buffer(1.0))
    report = limit_set_disjointness(replace(pants_state, limit_disks=disks))
    assert report.passed
    assert report.min_separation == pytest.approx(1.0, rel=1e-3)


# ===========================================
# REGION: Pipeline
# ===========================================
@pytest.mark.slow
def test_construction_writes_every_stage(tmp_path):
    state, reports, _ = run_construction(SurfaceSpec(genus=0, ends=2), stages=2, eps=0.02, resolution=160,
                                         out_dir=str(tmp_path), tol=1e-3, max_iters=2000)
    assert reports[0].passed
    assert os.path.exists(tmp_path / "manifest.json")
    assert os.path.exists(tmp_path / "limit_sets.json")
    for i in range(1, state.stage + 1):
        assert os.path.exists(tmp_path / f"stage_{i}.mesh")
