"""Attribute-based kinematic world: objects, robot, primitives, task goals.

Objects are axis-aligned boxes described by a fixed 14-entry attribute
vector (6 continuous, 8 binary flags). The robot is a point on the ground
plane with a single gripper slot. States are immutable values; applying a
primitive returns a new state.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

# Reserved object id for an absent argument.
NULL_ID = 0

# Geometry and reach constants (meters).
PROXIMITY_THRESHOLD = 0.6
APPROACH_DISTANCE = 0.3
HOVER_CLEARANCE = 0.15
CONTACT_TOL = 1e-6
GRASP_LIFT = 0.1
CARRY_BOTTOM_Z = 1.0
INSIDE_MARGIN = 0.01
SPOT_MARGIN = 0.01
SPOT_GRID = 9

# Containers at or above this volume are the disposal class.
GARBAGE_MIN_VOLUME = 0.05

ATTRIBUTE_NAMES = (
    "height",
    "max_wl",
    "min_wl",
    "volume",
    "min_over_max",
    "median_over_max",
    "cylinder_shape",
    "box_shape",
    "liquid",
    "container",
    "handle",
    "movable",
    "large_horizontal_surface",
    "multiple_large_horizontal_surface",
)

FLAG_NAMES = ATTRIBUTE_NAMES[6:]


class Primitive(enum.IntEnum):
    MOVE_CLOSE = 0
    GRASP = 1
    RELEASE = 2
    PLACE_ABOVE = 3
    HOLD_ABOVE = 4
    FOLLOW_TRAJ_CIRCLE = 5
    FOLLOW_TRAJ_POUR = 6
    DONE = 7

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {
    Primitive.MOVE_CLOSE: 1,
    Primitive.GRASP: 1,
    Primitive.RELEASE: 1,
    Primitive.PLACE_ABOVE: 2,
    Primitive.HOLD_ABOVE: 2,
    Primitive.FOLLOW_TRAJ_CIRCLE: 1,
    Primitive.FOLLOW_TRAJ_POUR: 2,
    Primitive.DONE: 0,
}

NUM_PRIMITIVES = len(Primitive)


class Task(enum.IntEnum):
    STIR = 0
    PICK_AND_PLACE = 1
    POUR = 2
    POUR_TO = 3
    THROW_AWAY = 4


NUM_TASKS = len(Task)

# Tasks whose specification names a second object.
BINARY_TASKS = (Task.PICK_AND_PLACE, Task.POUR_TO)


class PreconditionCode(enum.Enum):
    OK = "ok"
    UNKNOWN_OBJECT = "unknown_object"
    GRIPPER_FULL = "gripper_full"
    GRIPPER_EMPTY = "gripper_empty"
    NOT_MOVABLE = "not_movable"
    TOO_FAR = "too_far"
    OBSTRUCTED = "obstructed"
    NOT_GRASPED = "not_grasped"
    NO_SPACE = "no_space"
    NO_LIQUID = "no_liquid"
    NOT_CONTAINER = "not_container"
    TARGET_OCCUPIED = "target_occupied"
    NOT_HOVERING = "not_hovering"


class WorldError(Exception):
    """Raised when a primitive is applied in a state that forbids it."""


@dataclass(frozen=True)
class AttributeVector:
    height: float
    max_wl: float
    min_wl: float
    volume: float
    min_over_max: float
    median_over_max: float
    cylinder_shape: bool = False
    box_shape: bool = False
    liquid: bool = False
    container: bool = False
    handle: bool = False
    movable: bool = False
    large_horizontal_surface: bool = False
    multiple_large_horizontal_surface: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.min_over_max <= self.median_over_max <= 1.0):
            raise ValueError("dimension ratios must satisfy 0 <= min <= median <= 1")
        for name in ATTRIBUTE_NAMES[:4]:
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_dims(cls, dims: tuple[float, float, float], **flags: bool) -> "AttributeVector":
        w, l, h = dims
        ordered = sorted((w, l, h))
        return cls(
            height=h,
            max_wl=max(w, l),
            min_wl=min(w, l),
            volume=w * l * h,
            min_over_max=ordered[0] / ordered[2],
            median_over_max=ordered[1] / ordered[2],
            **flags,
        )

    def flags(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in FLAG_NAMES)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in ATTRIBUTE_NAMES}


@dataclass(frozen=True)
class ObjectState:
    id: int
    center: tuple[float, float, float]
    dims: tuple[float, float, float]
    attributes: AttributeVector
    contained_liquid: int | None = None
    stirred: bool = False

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ValueError("object ids are positive; 0 is reserved for NULL")
        if any(d <= 0 for d in self.dims):
            raise ValueError("dims must be positive")

    @property
    def bottom(self) -> float:
        return self.center[2] - self.dims[2] / 2.0

    @property
    def top(self) -> float:
        return self.center[2] + self.dims[2] / 2.0

    def aabb(self) -> tuple[tuple[float, float], tuple[float, float], tuple[float, float]]:
        (cx, cy, cz), (w, l, h) = self.center, self.dims
        return ((cx - w / 2, cx + w / 2), (cy - l / 2, cy + l / 2), (cz - h / 2, cz + h / 2))

    def footprint(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return self.aabb()[:2]


@dataclass(frozen=True)
class RobotState:
    position: tuple[float, float]
    gripper: int | None = None


@dataclass(frozen=True)
class WorldState:
    objects: dict[int, ObjectState]
    robot: RobotState
    step_index: int = 0

    def __post_init__(self) -> None:
        for oid, obj in self.objects.items():
            if oid != obj.id:
                raise ValueError("object map key must equal object id")
        if self.robot.gripper is not None and self.robot.gripper not in self.objects:
            raise ValueError("gripper refers to an unknown object")

    def obj(self, oid: int) -> ObjectState:
        return self.objects[oid]

    def ids(self) -> list[int]:
        return sorted(self.objects)


@dataclass(frozen=True)
class Action:
    primitive: Primitive
    a1: int = NULL_ID
    a2: int = NULL_ID

    def __post_init__(self) -> None:
        arity = self.primitive.arity
        if (self.a1 == NULL_ID) != (arity == 0):
            raise ValueError("a1 must be NULL exactly when arity is 0")
        if arity < 2 and self.a2 != NULL_ID:
            raise ValueError("a2 must be NULL when arity < 2")
        if arity == 2 and self.a2 == NULL_ID:
            raise ValueError("a2 required for binary primitives")
        if self.a1 == self.a2 and self.a1 != NULL_ID:
            raise ValueError("a1 and a2 must differ")


@dataclass(frozen=True)
class TaskSpec:
    task: Task
    g_a1: int
    g_a2: int = NULL_ID

    def __post_init__(self) -> None:
        if self.g_a1 == NULL_ID:
            raise ValueError("g_a1 is required for every task")
        needs_a2 = self.task in BINARY_TASKS
        if needs_a2 and self.g_a2 == NULL_ID:
            raise ValueError(f"{self.task.name} requires g_a2")
        if not needs_a2 and self.g_a2 != NULL_ID:
            raise ValueError(f"{self.task.name} takes no g_a2")


# ---------------------------------------------------------------------------
# Geometric predicates


def _interval_overlap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return min(a[1], b[1]) - max(a[0], b[0])


def distance_to(state: WorldState, oid: int) -> float:
    """Ground-plane distance from the robot to the object centroid."""
    obj = state.obj(oid)
    return math.hypot(obj.center[0] - state.robot.position[0], obj.center[1] - state.robot.position[1])


def footprint_distance(state: WorldState, oid: int) -> float:
    """Ground-plane distance from the robot to the object's xy bounding box."""
    (x0, x1), (y0, y1) = state.obj(oid).footprint()
    rx, ry = state.robot.position
    dx = max(x0 - rx, 0.0, rx - x1)
    dy = max(y0 - ry, 0.0, ry - y1)
    return math.hypot(dx, dy)


def aabb_overlap_topview(state: WorldState, a: int, b: int) -> bool:
    """True when the two xy bounding boxes intersect with positive area."""
    fa, fb = state.obj(a).footprint(), state.obj(b).footprint()
    return _interval_overlap(fa[0], fb[0]) > 0.0 and _interval_overlap(fa[1], fb[1]) > 0.0


def collision(state: WorldState, a: int, b: int) -> bool:
    """True when the two 3-D bounding boxes interpenetrate beyond tolerance."""
    ba, bb = state.obj(a).aabb(), state.obj(b).aabb()
    return all(_interval_overlap(ba[i], bb[i]) > CONTACT_TOL for i in range(3))


def object_directly_below(state: WorldState, oid: int) -> int:
    """Support object whose top face touches oid's bottom face, else NULL."""
    obj = state.obj(oid)
    best = NULL_ID
    best_top = -math.inf
    for other in state.objects.values():
        if other.id == oid:
            continue
        if abs(other.top - obj.bottom) <= CONTACT_TOL and aabb_overlap_topview(state, oid, other.id):
            if other.top > best_top or (other.top == best_top and other.id < best):
                best, best_top = other.id, other.top
    return best


def _resting_on(state: WorldState, oid: int, support: int) -> bool:
    return object_directly_below(state, oid) == support


def object_inside(state: WorldState, oid: int, container: int) -> bool:
    """True when oid sits within container's footprint and z-extent."""
    inner, outer = state.obj(oid), state.obj(container)
    if not outer.attributes.container:
        return False
    (ix0, ix1), (iy0, iy1) = inner.footprint()
    (ox0, ox1), (oy0, oy1) = outer.footprint()
    if ix0 < ox0 or ix1 > ox1 or iy0 < oy0 or iy1 > oy1:
        return False
    return outer.bottom - CONTACT_TOL <= inner.bottom <= outer.top


def container_of(state: WorldState, liquid_id: int) -> int:
    """Id of the object holding the given liquid, else NULL."""
    for obj in state.objects.values():
        if obj.contained_liquid == liquid_id:
            return obj.id
    return NULL_ID


def _objects_on_top(state: WorldState, oid: int) -> list[int]:
    return [
        other.id
        for other in state.objects.values()
        if other.id != oid
        and not other.attributes.liquid
        and other.id != state.robot.gripper
        and _resting_on(state, other.id, oid)
    ]


def _solids_inside(state: WorldState, oid: int) -> list[int]:
    return [
        other.id
        for other in state.objects.values()
        if other.id != oid
        and not other.attributes.liquid
        and other.id != state.robot.gripper
        and object_inside(state, other.id, oid)
    ]


# ---------------------------------------------------------------------------
# State surgery helpers (states are immutable, so edits build new dicts)


def _replace_object(state: WorldState, obj: ObjectState) -> WorldState:
    objects = dict(state.objects)
    objects[obj.id] = obj
    return dataclasses.replace(state, objects=objects)


def _moved(obj: ObjectState, center: tuple[float, float, float]) -> ObjectState:
    return dataclasses.replace(obj, center=center)


def _move_with_contents(state: WorldState, oid: int, center: tuple[float, float, float]) -> WorldState:
    """Move an object rigidly, dragging any contained liquid with it."""
    obj = state.obj(oid)
    delta = tuple(center[i] - obj.center[i] for i in range(3))
    state = _replace_object(state, _moved(obj, center))
    if obj.contained_liquid is not None:
        liq = state.obj(obj.contained_liquid)
        new_liq_center = tuple(liq.center[i] + delta[i] for i in range(3))
        state = _replace_object(state, _moved(liq, new_liq_center))
    return state


def _advance(state: WorldState) -> WorldState:
    return dataclasses.replace(state, step_index=state.step_index + 1)


def _carry_center(state: WorldState, obj: ObjectState) -> tuple[float, float, float]:
    bottom = max(obj.bottom + GRASP_LIFT, CARRY_BOTTOM_Z)
    return (state.robot.position[0], state.robot.position[1], bottom + obj.dims[2] / 2.0)


def _landing_bottom(state: WorldState, oid: int) -> tuple[float, int]:
    """Resting height for a drop at the current xy, plus the support id."""
    obj = state.obj(oid)
    support, support_top = NULL_ID, 0.0
    for other in state.objects.values():
        if other.id == oid or other.attributes.liquid or other.id == state.robot.gripper:
            continue
        if not aabb_overlap_topview(state, oid, other.id):
            continue
        if other.top <= obj.bottom + CONTACT_TOL and other.top > support_top:
            support, support_top = other.id, other.top
    if support == NULL_ID:
        return 0.0, NULL_ID
    sup = state.obj(support)
    if sup.attributes.container and _fits_inside(obj, sup):
        # Falls into the open container, stacking on anything already inside.
        floor = sup.bottom + INSIDE_MARGIN
        for other in state.objects.values():
            if other.id in (oid, support) or other.attributes.liquid:
                continue
            if object_inside(state, other.id, support) and aabb_overlap_topview(state, oid, other.id):
                floor = max(floor, other.top)
        return floor, support
    return support_top, support


def _fits_inside(inner: ObjectState, outer: ObjectState) -> bool:
    for axis in range(2):
        if inner.dims[axis] / 2.0 + INSIDE_MARGIN > outer.dims[axis] / 2.0:
            return False
    return True


def _would_collide_at(state: WorldState, obj: ObjectState, ignore: tuple[int, ...] = ()) -> bool:
    probe = _replace_object(state, obj)
    for other in state.objects.values():
        if other.id == obj.id or other.id in ignore or other.attributes.liquid:
            continue
        if other.id == state.robot.gripper:
            continue
        if object_inside(probe, obj.id, other.id) or object_inside(probe, other.id, obj.id):
            continue
        if collision(probe, obj.id, other.id):
            return True
    return False


def _dropped_object(state: WorldState, oid: int) -> ObjectState:
    bottom, _ = _landing_bottom(state, oid)
    obj = state.obj(oid)
    return _moved(obj, (obj.center[0], obj.center[1], bottom + obj.dims[2] / 2.0))


def _approach_point(state: WorldState, oid: int) -> tuple[float, float]:
    """Point on the ray toward the target where its footprint is APPROACH_DISTANCE away."""
    if footprint_distance(state, oid) <= APPROACH_DISTANCE:
        return state.robot.position
    obj = state.obj(oid)
    rx, ry = state.robot.position
    cx, cy = obj.center[0], obj.center[1]
    if rx == cx and ry == cy:  # bearing undefined, step off along +x
        return (cx + obj.dims[0] / 2.0 + APPROACH_DISTANCE, cy)

    def fp_dist(t: float) -> float:
        px, py = rx + t * (cx - rx), ry + t * (cy - ry)
        (x0, x1), (y0, y1) = obj.footprint()
        dx = max(x0 - px, 0.0, px - x1)
        dy = max(y0 - py, 0.0, py - y1)
        return math.hypot(dx, dy)

    lo, hi = 0.0, 1.0
    for _ in range(80):  # distance shrinks monotonically toward the centroid
        mid = (lo + hi) / 2.0
        if fp_dist(mid) > APPROACH_DISTANCE:
            lo = mid
        else:
            hi = mid
    return (rx + hi * (cx - rx), ry + hi * (cy - ry))


def _find_spot_on(state: WorldState, target: ObjectState, support: ObjectState) -> tuple[float, float] | None:
    """Deterministic free spot for target's footprint on support's top, nearest the robot."""
    hw, hl = target.dims[0] / 2.0, target.dims[1] / 2.0
    (sx0, sx1), (sy0, sy1) = support.footprint()
    x_lo, x_hi = sx0 + hw + SPOT_MARGIN, sx1 - hw - SPOT_MARGIN
    y_lo, y_hi = sy0 + hl + SPOT_MARGIN, sy1 - hl - SPOT_MARGIN
    if x_lo > x_hi or y_lo > y_hi:
        return None
    rx, ry = state.robot.position
    candidates = []
    for i in range(SPOT_GRID):
        for j in range(SPOT_GRID):
            x = x_lo + (x_hi - x_lo) * i / (SPOT_GRID - 1) if x_hi > x_lo else x_lo
            y = y_lo + (y_hi - y_lo) * j / (SPOT_GRID - 1) if y_hi > y_lo else y_lo
            candidates.append(((x - rx) ** 2 + (y - ry) ** 2, x, y))
    candidates.sort()
    bottom = support.top
    for _, x, y in candidates:
        probe = _moved(target, (x, y, bottom + target.dims[2] / 2.0))
        if not _would_collide_at(state, probe, ignore=(support.id,)):
            return (x, y)
    return None


# ---------------------------------------------------------------------------
# Preconditions and effects


def check_preconditions(state: WorldState, action: Action) -> tuple[bool, PreconditionCode]:
    """Whether the action can execute, with a reason code on failure."""
    p, a1, a2 = action.primitive, action.a1, action.a2
    for arg in (a1, a2):
        if arg != NULL_ID and arg not in state.objects:
            return False, PreconditionCode.UNKNOWN_OBJECT

    if p in (Primitive.MOVE_CLOSE, Primitive.DONE):
        return True, PreconditionCode.OK

    if p == Primitive.GRASP:
        if state.robot.gripper is not None:
            return False, PreconditionCode.GRIPPER_FULL
        if not state.obj(a1).attributes.movable:
            return False, PreconditionCode.NOT_MOVABLE
        if footprint_distance(state, a1) > PROXIMITY_THRESHOLD:
            return False, PreconditionCode.TOO_FAR
        # Moving a1 would strand anything it supports: objects resting on
        # its top face and solid objects sitting inside it.
        if _objects_on_top(state, a1) or _solids_inside(state, a1):
            return False, PreconditionCode.OBSTRUCTED
        return True, PreconditionCode.OK

    if p == Primitive.RELEASE:
        if state.robot.gripper != a1:
            return False, PreconditionCode.NOT_GRASPED
        landed = _dropped_object(state, a1)
        if _would_collide_at(state, landed):
            return False, PreconditionCode.NO_SPACE
        return True, PreconditionCode.OK

    if p == Primitive.PLACE_ABOVE:
        if state.robot.gripper != a1:
            return False, PreconditionCode.NOT_GRASPED
        if footprint_distance(state, a2) > PROXIMITY_THRESHOLD:
            return False, PreconditionCode.TOO_FAR
        if _find_spot_on(state, state.obj(a1), state.obj(a2)) is None:
            return False, PreconditionCode.NO_SPACE
        return True, PreconditionCode.OK

    if p == Primitive.HOLD_ABOVE:
        if state.robot.gripper != a1:
            return False, PreconditionCode.NOT_GRASPED
        if footprint_distance(state, a2) > PROXIMITY_THRESHOLD:
            return False, PreconditionCode.TOO_FAR
        return True, PreconditionCode.OK

    if p == Primitive.FOLLOW_TRAJ_CIRCLE:
        vessel = state.obj(a1)
        if not vessel.attributes.container:
            return False, PreconditionCode.NOT_CONTAINER
        if vessel.contained_liquid is None:
            return False, PreconditionCode.NO_LIQUID
        held = state.robot.gripper
        if held is None:
            return False, PreconditionCode.GRIPPER_EMPTY
        if not _hovering_above(state, held, a1):
            return False, PreconditionCode.NOT_HOVERING
        return True, PreconditionCode.OK

    if p == Primitive.FOLLOW_TRAJ_POUR:
        if state.robot.gripper != a1:
            return False, PreconditionCode.NOT_GRASPED
        if state.obj(a1).contained_liquid is None:
            return False, PreconditionCode.NO_LIQUID
        if not state.obj(a2).attributes.container:
            return False, PreconditionCode.NOT_CONTAINER
        if state.obj(a2).contained_liquid is not None:
            return False, PreconditionCode.TARGET_OCCUPIED
        if not _hovering_above(state, a1, a2):
            return False, PreconditionCode.NOT_HOVERING
        return True, PreconditionCode.OK

    raise ValueError(f"unhandled primitive {p!r}")


def _hovering_above(state: WorldState, upper: int, lower: int) -> bool:
    if not aabb_overlap_topview(state, upper, lower):
        return False
    return state.obj(upper).bottom >= state.obj(lower).top - CONTACT_TOL


def apply_primitive(state: WorldState, action: Action, *, check: bool = True) -> WorldState:
    """Successor state for an executable action; raises WorldError otherwise.

    check=False skips precondition enforcement so that a recorded action can
    be replayed on a state whose attribute flags were perturbed; effects only
    depend on geometry and containment records, which perturbation preserves.
    """
    if check:
        ok, code = check_preconditions(state, action)
        if not ok:
            raise WorldError(f"{action.primitive.name} blocked: {code.value}")
    p, a1, a2 = action.primitive, action.a1, action.a2

    if p == Primitive.DONE:
        return state

    if p == Primitive.MOVE_CLOSE:
        pos = _approach_point(state, a1)
        state = dataclasses.replace(state, robot=dataclasses.replace(state.robot, position=pos))
        held = state.robot.gripper
        if held is not None:
            ho = state.obj(held)  # carried cargo follows in xy, keeps its height
            state = _move_with_contents(state, held, (pos[0], pos[1], ho.center[2]))
        return _advance(state)

    if p == Primitive.GRASP:
        state = dataclasses.replace(state, robot=dataclasses.replace(state.robot, gripper=a1))
        return _advance(_move_with_contents(state, a1, _carry_center(state, state.obj(a1))))

    if p == Primitive.RELEASE:
        landed = _dropped_object(state, a1)
        state = _move_with_contents(state, a1, landed.center)
        return _advance(dataclasses.replace(state, robot=dataclasses.replace(state.robot, gripper=None)))

    if p == Primitive.PLACE_ABOVE:
        target, support = state.obj(a1), state.obj(a2)
        spot = _find_spot_on(state, target, support)
        assert spot is not None  # guarded by preconditions
        center = (spot[0], spot[1], support.top + target.dims[2] / 2.0)
        return _advance(_move_with_contents(state, a1, center))

    if p == Primitive.HOLD_ABOVE:
        target, under = state.obj(a1), state.obj(a2)
        bottom = under.top + HOVER_CLEARANCE
        center = (under.center[0], under.center[1], bottom + target.dims[2] / 2.0)
        return _advance(_move_with_contents(state, a1, center))

    if p == Primitive.FOLLOW_TRAJ_CIRCLE:
        vessel = state.obj(a1)
        liquid = state.obj(vessel.contained_liquid)
        return _advance(_replace_object(state, dataclasses.replace(liquid, stirred=True)))

    if p == Primitive.FOLLOW_TRAJ_POUR:
        source, dest = state.obj(a1), state.obj(a2)
        liquid = state.obj(source.contained_liquid)
        state = _replace_object(state, dataclasses.replace(source, contained_liquid=None))
        state = _replace_object(state, dataclasses.replace(state.obj(a2), contained_liquid=liquid.id))
        liq_center = (dest.center[0], dest.center[1], dest.bottom + INSIDE_MARGIN + liquid.dims[2] / 2.0)
        return _advance(_replace_object(state, _moved(state.obj(liquid.id), liq_center)))

    raise ValueError(f"unhandled primitive {p!r}")


# ---------------------------------------------------------------------------
# Task goals


def task_goal_satisfied(state: WorldState, spec: TaskSpec) -> bool:
    """Whether the state satisfies the task's goal condition."""
    if spec.g_a1 not in state.objects:
        return False

    if spec.task == Task.STIR:
        liquid = state.obj(spec.g_a1)
        holder = container_of(state, spec.g_a1)
        return liquid.stirred and holder != NULL_ID and _on_open_surface(state, holder)

    if spec.task == Task.PICK_AND_PLACE:
        return object_directly_below(state, spec.g_a1) == spec.g_a2

    if spec.task == Task.POUR:
        holder = container_of(state, spec.g_a1)
        if holder == NULL_ID or not state.obj(holder).attributes.container:
            return False
        return _on_open_surface(state, holder)

    if spec.task == Task.POUR_TO:
        return container_of(state, spec.g_a1) == spec.g_a2

    if spec.task == Task.THROW_AWAY:
        for obj in state.objects.values():
            if obj.attributes.container and obj.attributes.volume >= GARBAGE_MIN_VOLUME:
                if obj.id != spec.g_a1 and object_inside(state, spec.g_a1, obj.id):
                    return True
        return False

    raise ValueError(f"unhandled task {spec.task!r}")


def _on_open_surface(state: WorldState, oid: int) -> bool:
    below = object_directly_below(state, oid)
    if below == NULL_ID:
        return False
    attrs = state.obj(below).attributes
    return attrs.large_horizontal_surface and not attrs.multiple_large_horizontal_surface


# ---------------------------------------------------------------------------
# State validity (used by the generator and the fuzz suite)


def validate_state(state: WorldState) -> list[str]:
    """List of invariant violations; empty for a well-formed state."""
    problems: list[str] = []
    held = state.robot.gripper
    seen_liquids: dict[int, int] = {}
    for obj in state.objects.values():
        if obj.contained_liquid is not None:
            liq = state.objects.get(obj.contained_liquid)
            if liq is None or not liq.attributes.liquid:
                problems.append(f"obj {obj.id}: contained_liquid is not a liquid object")
            elif obj.contained_liquid in seen_liquids:
                problems.append(f"liquid {obj.contained_liquid} contained twice")
            else:
                seen_liquids[obj.contained_liquid] = obj.id
        expected = obj.dims[0] * obj.dims[1] * obj.dims[2]
        if abs(obj.attributes.volume - expected) > 1e-9 * max(1.0, expected):
            problems.append(f"obj {obj.id}: volume does not match dims")

    non_liquid = [o for o in state.objects.values() if not o.attributes.liquid]
    for i, a in enumerate(non_liquid):
        for b in non_liquid[i + 1 :]:
            if a.id == held or b.id == held:
                continue  # attached to the robot, not resting geometry
            if object_inside(state, a.id, b.id) or object_inside(state, b.id, a.id):
                continue
            if collision(state, a.id, b.id):
                problems.append(f"objects {a.id} and {b.id} interpenetrate")

    for obj in state.objects.values():
        if obj.id == held:
            continue
        if obj.attributes.liquid:
            holder = container_of(state, obj.id)
            if holder == NULL_ID:
                problems.append(f"liquid {obj.id} has no containing object")
            continue
        if abs(obj.bottom) <= CONTACT_TOL:
            continue  # on the floor
        if object_directly_below(state, obj.id) != NULL_ID:
            continue  # on another object's top face
        if any(object_inside(state, obj.id, c.id) for c in state.objects.values() if c.id != obj.id):
            continue  # sitting inside an open container
        problems.append(f"obj {obj.id} is unsupported")
    return problems
