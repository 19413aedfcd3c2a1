import numpy as np
import pytest

from asymptotic_plateau.exceptions import DomainError
from asymptotic_plateau.services.exhaustion import (
    ANNULUS,
    HANDLE,
    PANTS,
    Component,
    ExhaustionPlan,
    ExhaustionStep,
    SurfaceSpec,
    build_simple_exhaustion,
    euler_of_step,
    random_finite_specs,
    sweep_plans,
    validate_plan,
)


# ===========================================
# REGION: Specs
# ===========================================
@pytest.mark.parametrize("kwargs", [{"genus": -1}, {"ends": 0}, {"genus": None, "schedule": ("disk",)},
                                    {"genus": 1, "ends": 1, "schedule": (HANDLE,)},
                                    {"genus": 2, "ends": None, "schedule": (HANDLE, PANTS)},
                                    {"genus": 1, "prefix": (PANTS,)}])
def test_inconsistent_specs_are_rejected(kwargs):
    with pytest.raises(DomainError):
        SurfaceSpec(**kwargs)


def test_default_schedules():
    assert SurfaceSpec(genus=None, ends=None).schedule == (PANTS, HANDLE)
    assert SurfaceSpec(genus=None, ends=2).schedule == (HANDLE,)
    assert SurfaceSpec(genus=0, ends=None).schedule == (PANTS,)
    assert SurfaceSpec(genus=2, ends=3).prefix == (PANTS, PANTS, HANDLE, HANDLE)


def test_finite_spec_runs_out_of_pieces():
    pieces = SurfaceSpec(genus=1, ends=2).pieces()
    assert [next(pieces) for _ in range(4)] == [PANTS, HANDLE, None, None]


def test_component_kind_is_checked():
    with pytest.raises(DomainError, match="Choose from"):
        Component("torus", 0)


# ===========================================
# REGION: Simple exhaustions
# ===========================================
def test_genus_one_with_one_end():
    plan = build_simple_exhaustion(SurfaceSpec(genus=1, ends=1), 4)
    assert [chi for chi, _, _ in plan.stages] == [1, -1, -1, -1]
    assert plan.pieces() == [HANDLE, "annuli", "annuli"]
    assert plan.last_nonannular_stage() == 2


def test_infinite_genus_gains_a_handle_per_stage():
    plan = build_simple_exhaustion(SurfaceSpec(genus=None, ends=1), 5)
    assert [g for _, g, _ in plan.stages] == [0, 1, 2, 3, 4]
    assert [b for _, _, b in plan.stages] == [1] * 5
    assert validate_plan(plan).passed


def test_infinitely_many_ends_gain_a_circle_per_stage():
    plan = build_simple_exhaustion(SurfaceSpec(genus=0, ends=None), 5)
    assert [b for _, _, b in plan.stages] == [1, 2, 3, 4, 5]
    assert all(len(step.components) == b for step, (_, _, b) in zip(plan.steps, plan.stages))
    assert validate_plan(plan).passed


def test_alternating_schedule():
    plan = build_simple_exhaustion(SurfaceSpec(genus=None, ends=None), 4)
    assert plan.stages == [(1, 0, 1), (0, 0, 2), (-2, 1, 2), (-3, 1, 3)]


def test_every_stage_satisfies_euler():
    plan = build_simple_exhaustion(SurfaceSpec(genus=3, ends=2), 8)
    for n in range(1, len(plan) + 1):
        chi, g, b = euler_of_step(plan, n)
        assert chi == 2 - 2 * g - b


def test_stage_outside_the_plan():
    plan = build_simple_exhaustion(SurfaceSpec(), 3)
    with pytest.raises(IndexError):
        euler_of_step(plan, 4)
    with pytest.raises(IndexError):
        euler_of_step(plan, 0)


def test_at_least_one_stage():
    with pytest.raises(DomainError):
        build_simple_exhaustion(SurfaceSpec(), 0)


def test_plan_json_keeps_the_stages():
    plan = build_simple_exhaustion(SurfaceSpec(genus=2, ends=2), 6)
    loaded = ExhaustionPlan.from_json(plan.to_json())
    assert loaded == plan
    assert plan.to_json()["stages"][-1] == {"stage": 6, "chi": -4, "genus": 2, "boundary": 2}


# ===========================================
# REGION: Validation
# ===========================================
def test_plan_that_does_not_start_from_a_disk():
    plan = ExhaustionPlan((), None, initial=(0, 0, 2))
    assert validate_plan(plan).failed_items() == [1]


def test_shared_circle_breaks_item_two():
    step = ExhaustionStep((Component(ANNULUS, 0), Component(PANTS, 0)))
    plan = ExhaustionPlan((ExhaustionStep((Component(PANTS, 0),)), step), SurfaceSpec(genus=0, ends=None))
    assert 2 in validate_plan(plan).failed_items()


def test_two_pieces_in_one_step():
    first = ExhaustionStep((Component(PANTS, 0),))
    second = ExhaustionStep((Component(PANTS, 0), Component(HANDLE, 1)))
    plan = ExhaustionPlan((first, second), SurfaceSpec(genus=None, ends=None))
    assert validate_plan(plan).failed_items() == [3]
    assert validate_plan(plan, strict=False).passed


def test_piece_after_stabilization_breaks_item_four():
    steps = (ExhaustionStep((Component(HANDLE, 0),)), ExhaustionStep((Component(HANDLE, 0),)))
    report = validate_plan(ExhaustionPlan(steps, SurfaceSpec(genus=1, ends=1)))
    assert 4 in report.failed_items()
    assert not report.passed


def test_random_finite_plans_stabilize_on_time():
    specs = random_finite_specs(np.random.default_rng(7), 200)
    rows = sweep_plans(specs)
    assert all(row["passed"] for row in rows)
    assert all(row["stabilized_at"] == row["expected"] for row in rows)
