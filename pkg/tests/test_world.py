"""Kinematic world: predicates, preconditions, effects, goals, invariants."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from primseq.world import (
    APPROACH_DISTANCE,
    CONTACT_TOL,
    HOVER_CLEARANCE,
    NULL_ID,
    PROXIMITY_THRESHOLD,
    Action,
    AttributeVector,
    ObjectState,
    PreconditionCode,
    Primitive,
    RobotState,
    Task,
    TaskSpec,
    WorldState,
    aabb_overlap_topview,
    apply_primitive,
    check_preconditions,
    collision,
    container_of,
    distance_to,
    footprint_distance,
    object_directly_below,
    object_inside,
    task_goal_satisfied,
    validate_state,
    WorldError,
)

from reference import ref_overlap_topview
from scenes import bin_, box, cup, scene, shelf, table, water

OK = PreconditionCode.OK


# ---------------------------------------------------------------------------
# Value objects


def test_attribute_vector_from_dims():
    a = AttributeVector.from_dims((0.3, 0.4, 0.5), movable=True)
    assert a.height == 0.5
    assert a.max_wl == 0.4
    assert a.min_wl == 0.3
    assert a.volume == pytest.approx(0.06)
    assert a.min_over_max == pytest.approx(0.6)
    assert a.median_over_max == pytest.approx(0.8)
    assert a.movable and not a.container
    assert len(a.flags()) == 8


def test_attribute_vector_rejects_negative():
    with pytest.raises(ValueError):
        AttributeVector.from_dims((-0.1, 0.2, 0.2))


def test_object_state_validation():
    with pytest.raises(ValueError):
        box(0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ObjectState(1, (0, 0, 0), (0.0, 0.1, 0.1), AttributeVector.from_dims((0.1, 0.1, 0.1)))
    o = box(1, 1.0, 2.0, h=0.4, bottom=0.3)
    assert o.bottom == pytest.approx(0.3)
    assert o.top == pytest.approx(0.7)
    (x0, x1), (y0, y1) = o.footprint()
    assert (x0, x1) == (pytest.approx(0.85), pytest.approx(1.15))
    assert (y0, y1) == (pytest.approx(1.85), pytest.approx(2.15))


def test_world_state_validation():
    with pytest.raises(ValueError):
        WorldState({2: box(1, 0, 0)}, RobotState((0.0, 0.0)))
    with pytest.raises(ValueError):
        WorldState({1: box(1, 0, 0)}, RobotState((0.0, 0.0), gripper=9))
    st = scene([box(3, 0, 0), box(1, 1, 1), box(2, 2, 2)])
    assert st.ids() == [1, 2, 3]


def test_action_validation():
    with pytest.raises(ValueError):
        Action(Primitive.DONE, 1)
    with pytest.raises(ValueError):
        Action(Primitive.GRASP)
    with pytest.raises(ValueError):
        Action(Primitive.GRASP, 1, 2)
    with pytest.raises(ValueError):
        Action(Primitive.PLACE_ABOVE, 1)
    with pytest.raises(ValueError):
        Action(Primitive.PLACE_ABOVE, 1, 1)
    Action(Primitive.DONE)
    Action(Primitive.MOVE_CLOSE, 4)
    Action(Primitive.HOLD_ABOVE, 1, 2)


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec(Task.POUR, 1, 2)
    with pytest.raises(ValueError):
        TaskSpec(Task.POUR_TO, 1)
    with pytest.raises(ValueError):
        TaskSpec(Task.STIR, NULL_ID)
    TaskSpec(Task.PICK_AND_PLACE, 1, 2)
    TaskSpec(Task.THROW_AWAY, 3)


# ---------------------------------------------------------------------------
# Geometric predicates


def test_distance_to_examples():
    st = scene([box(1, 3.0, 4.0)], robot=(0.0, 0.0))
    assert distance_to(st, 1) == pytest.approx(5.0)


def test_distance_zero_after_grasp():
    st = scene([cup(1, 0.2, 0.0)], robot=(0.0, 0.0))
    nxt = apply_primitive(st, Action(Primitive.GRASP, 1))
    assert distance_to(nxt, 1) == pytest.approx(0.0)
    assert footprint_distance(nxt, 1) == pytest.approx(0.0)


def test_footprint_distance():
    st = scene([box(1, 1.0, 0.0)], robot=(0.0, 0.0))
    # footprint spans x in [0.85, 1.15]; nearest edge point is (0.85, 0)
    assert footprint_distance(st, 1) == pytest.approx(0.85)
    inside = scene([box(1, 0.0, 0.0)], robot=(0.05, -0.05))
    assert footprint_distance(inside, 1) == 0.0


def test_overlap_identical_and_separated():
    st = scene([box(1, 0, 0), box(2, 0, 0, bottom=0.2), box(3, 5, 5)])
    assert aabb_overlap_topview(st, 1, 2)
    assert not aabb_overlap_topview(st, 1, 3)
    # boxes sharing exactly one edge enclose zero area
    touching = scene([box(1, 0.0, 0.0), box(2, 0.3, 0.0, bottom=0.2)])
    assert not aabb_overlap_topview(touching, 1, 2)


def test_overlap_matches_interval_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        x1, y1, x2, y2 = rng.uniform(-1.0, 1.0, size=4)
        w1, l1, w2, l2 = rng.uniform(0.05, 1.2, size=4)
        a = box(1, x1, y1, w=w1, l=l1)
        b = box(2, x2, y2, w=w2, l=l2, bottom=0.5)
        st = scene([a, b])
        assert aabb_overlap_topview(st, 1, 2) == ref_overlap_topview(a, b)


def test_object_directly_below_stack():
    t = table(1, 0.0, 0.0)
    magazine = box(2, 0.3, 0.0, w=0.25, l=0.2, h=0.02, bottom=t.top, movable=True)
    mug = cup(3, 0.3, 0.0, bottom=magazine.top)
    st = scene([t, magazine, mug])
    assert object_directly_below(st, 3) == 2
    assert object_directly_below(st, 2) == 1
    assert object_directly_below(st, 1) == NULL_ID


def test_object_directly_below_held_is_null():
    t = table(1, 0.0, 0.0)
    st = scene([t, cup(2, 0.3, 0.0, bottom=t.top)], robot=(0.3, -0.55))
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    assert object_directly_below(held, 2) == NULL_ID


def test_object_directly_below_tie_prefers_lower_id():
    a = box(4, 0.0, 0.0, h=0.5)
    b = box(2, 0.25, 0.0, h=0.5)
    rider = box(7, 0.15, 0.0, w=0.4, l=0.2, h=0.1, bottom=0.5)
    st = scene([a, b, rider])
    assert object_directly_below(st, 7) == 2


def test_object_inside_and_container_of():
    b = bin_(1, 2.0, 2.0)
    trash = box(2, 2.0, 2.0, w=0.2, l=0.2, h=0.1, bottom=0.02, movable=True)
    st = scene([b, trash])
    assert object_inside(st, 2, 1)
    assert not object_inside(st, 1, 2)

    vessel = cup(3, 0.0, 0.0, holds=4)
    liq = water(4, 0.0, 0.0, bottom=0.01)
    st2 = scene([vessel, liq])
    assert container_of(st2, 4) == 3
    assert container_of(st2, 3) == NULL_ID


# ---------------------------------------------------------------------------
# Preconditions


def test_grasp_preconditions():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 0.3, 0.0, bottom=t.top)
    far = cup(3, 4.0, 4.0)
    st = scene([t, mug, far], robot=(0.3, -0.35))
    assert check_preconditions(st, Action(Primitive.GRASP, 2)) == (True, OK)
    assert check_preconditions(st, Action(Primitive.GRASP, 3)) == (False, PreconditionCode.TOO_FAR)
    assert check_preconditions(st, Action(Primitive.GRASP, 1)) == (False, PreconditionCode.NOT_MOVABLE)
    assert check_preconditions(st, Action(Primitive.GRASP, 9)) == (False, PreconditionCode.UNKNOWN_OBJECT)

    holding = dataclasses.replace(st, robot=RobotState(st.robot.position, gripper=3))
    assert check_preconditions(holding, Action(Primitive.GRASP, 2)) == (
        False,
        PreconditionCode.GRIPPER_FULL,
    )


def test_grasp_blocked_by_stacked_object():
    t = table(1, 0.0, 0.0)
    tray = box(2, 0.3, 0.0, w=0.3, l=0.3, h=0.05, bottom=t.top, movable=True)
    mug = cup(3, 0.3, 0.0, bottom=tray.top)
    st = scene([t, tray, mug], robot=(0.3, -0.4))
    assert check_preconditions(st, Action(Primitive.GRASP, 2)) == (
        False,
        PreconditionCode.OBSTRUCTED,
    )
    assert check_preconditions(st, Action(Primitive.GRASP, 3)) == (True, OK)


def test_release_and_place_preconditions():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 0.3, 0.0, bottom=t.top)
    st = scene([t, mug], robot=(0.3, -0.4))
    assert check_preconditions(st, Action(Primitive.RELEASE, 2)) == (
        False,
        PreconditionCode.NOT_GRASPED,
    )
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    assert check_preconditions(held, Action(Primitive.RELEASE, 2)) == (True, OK)
    assert check_preconditions(held, Action(Primitive.PLACE_ABOVE, 2, 1)) == (True, OK)
    assert check_preconditions(held, Action(Primitive.HOLD_ABOVE, 2, 1)) == (True, OK)

    far = scene([t, mug, cup(4, 6.0, 6.0)], robot=(0.3, -0.4))
    far_held = apply_primitive(far, Action(Primitive.GRASP, 2))
    assert check_preconditions(far_held, Action(Primitive.HOLD_ABOVE, 2, 4)) == (
        False,
        PreconditionCode.TOO_FAR,
    )


def test_pour_preconditions():
    t = table(1, 0.0, 0.0)
    src = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    dst = cup(3, 0.5, 0.1, bottom=t.top)
    plate = box(4, -0.6, 0.0, w=0.2, l=0.2, h=0.03, bottom=t.top, movable=True)
    st = scene([t, src, liq, dst, plate], robot=(0.3, -0.4))

    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    assert check_preconditions(held, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3)) == (
        False,
        PreconditionCode.NOT_HOVERING,
    )
    hover = apply_primitive(held, Action(Primitive.HOLD_ABOVE, 2, 3))
    assert check_preconditions(hover, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3)) == (True, OK)
    assert check_preconditions(hover, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 4)) == (
        False,
        PreconditionCode.NOT_CONTAINER,
    )
    assert check_preconditions(hover, Action(Primitive.FOLLOW_TRAJ_POUR, 3, 2)) == (
        False,
        PreconditionCode.NOT_GRASPED,
    )

    poured = apply_primitive(hover, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3))
    assert check_preconditions(poured, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3)) == (
        False,
        PreconditionCode.NO_LIQUID,
    )
    back = apply_primitive(poured, Action(Primitive.HOLD_ABOVE, 2, 3))
    assert check_preconditions(back, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3)) == (
        False,
        PreconditionCode.NO_LIQUID,
    )


def test_stir_preconditions():
    t = table(1, 0.0, 0.0)
    vessel = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    rod = box(3, -0.3, 0.0, w=0.02, l=0.02, h=0.25, bottom=t.top, movable=True, cylinder_shape=True)
    st = scene([t, vessel, liq, rod], robot=(-0.3, -0.4))

    assert check_preconditions(st, Action(Primitive.FOLLOW_TRAJ_CIRCLE, 2)) == (
        False,
        PreconditionCode.GRIPPER_EMPTY,
    )
    held = apply_primitive(st, Action(Primitive.GRASP, 3))
    assert check_preconditions(held, Action(Primitive.FOLLOW_TRAJ_CIRCLE, 2)) == (
        False,
        PreconditionCode.NOT_HOVERING,
    )
    assert check_preconditions(held, Action(Primitive.FOLLOW_TRAJ_CIRCLE, 3)) == (
        False,
        PreconditionCode.NOT_CONTAINER,
    )
    near = apply_primitive(held, Action(Primitive.MOVE_CLOSE, 2))
    hover = apply_primitive(near, Action(Primitive.HOLD_ABOVE, 3, 2))
    assert check_preconditions(hover, Action(Primitive.FOLLOW_TRAJ_CIRCLE, 2)) == (True, OK)


# ---------------------------------------------------------------------------
# Effects


def test_done_is_identity():
    st = scene([cup(1, 0.5, 0.5)])
    assert apply_primitive(st, Action(Primitive.DONE)) == st


def test_move_close_reaches_approach_distance():
    st = scene([cup(1, 3.0, 4.0)], robot=(0.0, 0.0))
    nxt = apply_primitive(st, Action(Primitive.MOVE_CLOSE, 1))
    assert footprint_distance(nxt, 1) <= APPROACH_DISTANCE + 1e-6
    assert nxt.step_index == st.step_index + 1


def test_move_close_carries_cargo():
    st = scene([cup(1, 0.2, 0.0), cup(2, 3.0, 0.0)], robot=(0.0, 0.0))
    held = apply_primitive(st, Action(Primitive.GRASP, 1))
    moved = apply_primitive(held, Action(Primitive.MOVE_CLOSE, 2))
    assert moved.obj(1).center[:2] == moved.robot.position
    assert moved.obj(1).center[2] == held.obj(1).center[2]


def test_grasp_lifts_and_release_drops():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 0.3, 0.0, bottom=t.top)
    st = scene([t, mug], robot=(0.3, -0.4))
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    assert held.robot.gripper == 2
    # lifted clear of its old base but never below comfortable carry height
    assert held.obj(2).bottom == pytest.approx(max(mug.bottom + 0.1, 1.0))
    assert held.obj(2).center[:2] == st.robot.position

    dropped = apply_primitive(held, Action(Primitive.RELEASE, 2))
    assert dropped.robot.gripper is None
    assert dropped.obj(2).bottom == pytest.approx(t.top)  # robot stands over the table
    assert validate_state(dropped) == []


def test_release_onto_floor():
    mug = cup(1, 0.2, 0.0)
    st = scene([mug], robot=(0.0, 0.0))
    held = apply_primitive(st, Action(Primitive.GRASP, 1))
    dropped = apply_primitive(held, Action(Primitive.RELEASE, 1))
    assert dropped.obj(1).bottom == pytest.approx(0.0)
    assert validate_state(dropped) == []


def test_place_above_rests_on_support_and_keeps_grip():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 1.4, 0.0)
    st = scene([t, mug], robot=(1.4, -0.3))
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    near = apply_primitive(held, Action(Primitive.MOVE_CLOSE, 1))
    placed = apply_primitive(near, Action(Primitive.PLACE_ABOVE, 2, 1))
    assert placed.robot.gripper == 2
    assert placed.obj(2).bottom == pytest.approx(t.top)
    assert object_directly_below(placed, 2) == 1
    settled = apply_primitive(placed, Action(Primitive.RELEASE, 2))
    assert settled.robot.gripper is None
    assert validate_state(settled) == []


def test_hold_above_geometry():
    t = table(1, 0.0, 0.0)
    src = cup(2, 0.3, 0.0, bottom=t.top)
    dst = cup(3, 0.5, 0.1, bottom=t.top)
    st = scene([t, src, dst], robot=(0.3, -0.4))
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    hover = apply_primitive(held, Action(Primitive.HOLD_ABOVE, 2, 3))
    assert hover.obj(2).center[:2] == (pytest.approx(0.5), pytest.approx(0.1))
    assert hover.obj(2).bottom == pytest.approx(hover.obj(3).top + HOVER_CLEARANCE)


def test_pour_moves_liquid():
    t = table(1, 0.0, 0.0)
    src = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    dst = cup(3, 0.5, 0.1, bottom=t.top)
    st = scene([t, src, liq, dst], robot=(0.3, -0.4))
    held = apply_primitive(st, Action(Primitive.GRASP, 2))
    hover = apply_primitive(held, Action(Primitive.HOLD_ABOVE, 2, 3))
    poured = apply_primitive(hover, Action(Primitive.FOLLOW_TRAJ_POUR, 2, 3))
    assert poured.obj(2).contained_liquid is None
    assert poured.obj(3).contained_liquid == 5
    assert container_of(poured, 5) == 3
    assert object_inside(poured, 5, 3)
    # exactly one object holds the liquid afterwards
    holders = [o.id for o in poured.objects.values() if o.contained_liquid == 5]
    assert holders == [3]


def test_stir_marks_liquid():
    t = table(1, 0.0, 0.0)
    vessel = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    rod = box(3, -0.3, 0.0, w=0.02, l=0.02, h=0.25, bottom=t.top, movable=True)
    st = scene([t, vessel, liq, rod], robot=(-0.3, -0.4))
    held = apply_primitive(st, Action(Primitive.GRASP, 3))
    near = apply_primitive(held, Action(Primitive.MOVE_CLOSE, 2))
    hover = apply_primitive(near, Action(Primitive.HOLD_ABOVE, 3, 2))
    stirred = apply_primitive(hover, Action(Primitive.FOLLOW_TRAJ_CIRCLE, 2))
    assert stirred.obj(5).stirred
    assert not hover.obj(5).stirred


def test_apply_blocked_raises():
    st = scene([cup(1, 5.0, 5.0)], robot=(0.0, 0.0))
    with pytest.raises(WorldError):
        apply_primitive(st, Action(Primitive.GRASP, 1))


def test_apply_unchecked_ignores_flags():
    # replay tolerates perturbed attribute flags: movable stripped off
    mug = cup(1, 0.2, 0.0)
    frozen = dataclasses.replace(
        mug, attributes=dataclasses.replace(mug.attributes, movable=False)
    )
    st = scene([frozen], robot=(0.0, 0.0))
    with pytest.raises(WorldError):
        apply_primitive(st, Action(Primitive.GRASP, 1))
    nxt = apply_primitive(st, Action(Primitive.GRASP, 1), check=False)
    assert nxt.robot.gripper == 1


# ---------------------------------------------------------------------------
# Task goals


def test_pour_goal_requires_open_surface():
    t = table(1, 0.0, 0.0)
    sh = shelf(2, 3.0, 0.0)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    on_table = cup(3, 0.3, 0.0, bottom=t.top, holds=5)
    st = scene([t, sh, on_table, liq])
    assert task_goal_satisfied(st, TaskSpec(Task.POUR, 5))

    liq_shelf = water(5, 3.0, 0.0, bottom=sh.top + 0.01)
    on_shelf = cup(3, 3.0, 0.0, bottom=sh.top, holds=5)
    st2 = scene([t, sh, on_shelf, liq_shelf])
    assert not task_goal_satisfied(st2, TaskSpec(Task.POUR, 5))


def test_pour_to_goal():
    t = table(1, 0.0, 0.0)
    src = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    dst = cup(3, 0.5, 0.1, bottom=t.top)
    st = scene([t, src, liq, dst])
    spec = TaskSpec(Task.POUR_TO, 5, 3)
    assert not task_goal_satisfied(st, spec)
    moved = dataclasses.replace(
        st,
        objects={
            1: t,
            2: dataclasses.replace(src, contained_liquid=None),
            3: dataclasses.replace(dst, contained_liquid=5),
            5: dataclasses.replace(liq, center=(0.5, 0.1, dst.bottom + 0.04)),
        },
    )
    assert task_goal_satisfied(moved, spec)


def test_stir_goal():
    t = table(1, 0.0, 0.0)
    vessel = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    calm = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    st = scene([t, vessel, calm])
    assert not task_goal_satisfied(st, TaskSpec(Task.STIR, 5))
    agitated = dataclasses.replace(st, objects={**st.objects, 5: dataclasses.replace(calm, stirred=True)})
    assert task_goal_satisfied(agitated, TaskSpec(Task.STIR, 5))


def test_pick_and_place_goal():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 0.3, 0.0, bottom=t.top)
    st = scene([t, mug])
    assert task_goal_satisfied(st, TaskSpec(Task.PICK_AND_PLACE, 2, 1))
    floor_mug = cup(2, 3.0, 3.0)
    assert not task_goal_satisfied(scene([t, floor_mug]), TaskSpec(Task.PICK_AND_PLACE, 2, 1))


def test_throw_away_goal():
    b = bin_(1, 2.0, 2.0)
    trash = box(2, 2.0, 2.0, w=0.2, l=0.2, h=0.1, bottom=0.02, movable=True)
    tiny = cup(3, 0.0, 0.0)  # a cup is a container but far too small to count
    st = scene([b, trash, tiny])
    assert task_goal_satisfied(st, TaskSpec(Task.THROW_AWAY, 2))
    outside = dataclasses.replace(
        st, objects={**st.objects, 2: dataclasses.replace(st.obj(2), center=(5.0, 5.0, 0.05))}
    )
    assert not task_goal_satisfied(outside, TaskSpec(Task.THROW_AWAY, 2))


# ---------------------------------------------------------------------------
# Invariants


def test_validate_state_clean_scene():
    t = table(1, 0.0, 0.0)
    mug = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    assert validate_state(scene([t, mug, liq])) == []


def test_validate_state_flags_problems():
    t = table(1, 0.0, 0.0)
    liq = water(5, 0.3, 0.0, bottom=t.top + 0.01)
    a = cup(2, 0.3, 0.0, bottom=t.top, holds=5)
    b = cup(3, 0.6, 0.0, bottom=t.top, holds=5)
    assert any("twice" in p for p in validate_state(scene([t, a, b, liq])))

    floater = cup(4, 2.0, 2.0, bottom=0.7)
    assert any("support" in p for p in validate_state(scene([floater])))

    wrong = dataclasses.replace(
        t, attributes=dataclasses.replace(t.attributes, volume=t.attributes.volume * 2)
    )
    assert any("volume" in p for p in validate_state(scene([wrong])))

    clash = scene([box(1, 0.0, 0.0, h=0.4), box(2, 0.1, 0.1, h=0.4)])
    assert collision(clash, 1, 2)
    assert any("penetrat" in p.lower() or "collid" in p.lower() for p in validate_state(clash))


def test_fuzz_preserves_invariants():
    from primseq.model import enumerate_actions

    t = table(1, 0.0, 0.0)
    objects = [
        t,
        cup(2, 0.3, 0.0, bottom=t.top, holds=5),
        water(5, 0.3, 0.0, bottom=t.top + 0.01),
        cup(3, 0.5, 0.1, bottom=t.top),
        box(4, -0.5, 0.1, w=0.02, l=0.02, h=0.25, bottom=t.top, movable=True),
        bin_(6, 2.0, 2.0),
    ]
    state = scene(objects, robot=(0.3, -0.4))
    assert validate_state(state) == []
    rng = np.random.default_rng(11)
    executed = 0
    for _ in range(500):
        candidates = enumerate_actions(state)
        action = candidates[rng.integers(len(candidates))]
        ok, _ = check_preconditions(state, action)
        if not ok:
            continue
        state = apply_primitive(state, action)
        executed += 1
        problems = validate_state(state)
        assert problems == [], f"after {executed} actions: {problems}"
    assert executed > 50
