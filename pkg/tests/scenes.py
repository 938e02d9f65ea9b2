"""Hand-built scene helpers shared by the test modules."""

from __future__ import annotations

from primseq.world import AttributeVector, ObjectState, RobotState, WorldState


def box(oid, x, y, *, w=0.3, l=0.3, h=0.2, bottom=0.0, holds=None, stirred=False, **flags):
    """Axis-aligned object resting with its base at the given height."""
    dims = (w, l, h)
    return ObjectState(
        oid, (x, y, bottom + h / 2.0), dims, AttributeVector.from_dims(dims, **flags), holds, stirred
    )


def scene(objects, robot=(0.0, 0.0), gripper=None):
    return WorldState({o.id: o for o in objects}, RobotState(robot, gripper))


def table(oid, x, y, *, w=2.0, l=1.0, h=1.0):
    return box(oid, x, y, w=w, l=l, h=h, large_horizontal_surface=True)


def shelf(oid, x, y):
    return box(
        oid, x, y, w=1.0, l=0.6, h=1.8,
        large_horizontal_surface=True, multiple_large_horizontal_surface=True,
    )


def cup(oid, x, y, *, bottom=0.0, holds=None):
    return box(
        oid, x, y, w=0.1, l=0.1, h=0.12, bottom=bottom,
        movable=True, container=True, cylinder_shape=True, holds=holds,
    )


def water(oid, x, y, *, bottom=0.0, stirred=False):
    return box(oid, x, y, w=0.06, l=0.06, h=0.05, bottom=bottom, liquid=True, stirred=stirred)


def bin_(oid, x, y):
    return box(oid, x, y, w=0.5, l=0.5, h=0.5, container=True)
