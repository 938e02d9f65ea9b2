"""Demonstration corpus: environment generator, scripted expert, JSONL store.

Environments are tabletop scenes (tables, a shelf, a garbage can, vessels,
liquids, stirrers, clutter) built by seeded rejection sampling. A scripted
expert demonstrates each task with deterministic target selection, and the
resulting sequences round-trip through a line-oriented JSON format whose
serialization is byte-stable for a fixed seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np

from .world import (
    FLAG_NAMES,
    GARBAGE_MIN_VOLUME,
    NULL_ID,
    PROXIMITY_THRESHOLD,
    Action,
    AttributeVector,
    ObjectState,
    Primitive,
    RobotState,
    Task,
    TaskSpec,
    WorldError,
    WorldState,
    _objects_on_top,
    _on_open_surface,
    apply_primitive,
    check_preconditions,
    container_of,
    footprint_distance,
    object_directly_below,
    task_goal_satisfied,
    validate_state,
)

FORMAT_VERSION = 1
ARENA_HALF = 3.0
ROBOT_CLEARANCE = 1.0
FLOOR_MARGIN = 0.4
SUPPORT_MARGIN = 0.03
# Expert walks up whenever a needed object is farther than this, leaving a
# buffer under the reach threshold so later steps never sit on the boundary.
CLOSE_ENOUGH = PROXIMITY_THRESHOLD - 0.05
MIN_DEMO_STEPS = 4
MAX_DEMO_STEPS = 10


class CorpusFormatError(Exception):
    """Raised when a corpus file cannot be parsed or fails validation."""


class CorpusIntegrityError(Exception):
    """Raised when a stored sequence does not replay cleanly."""


class GenerationError(Exception):
    """Raised when the generator cannot satisfy its own constraints."""


class ExpertError(GenerationError):
    """Raised when the scripted expert cannot demonstrate a task."""


@dataclass(frozen=True)
class Sequence:
    scenario_id: str
    environment_id: str
    spec: TaskSpec
    initial_state: WorldState
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    environments: int = 13
    scenarios_per_environment: int = 12


# ---------------------------------------------------------------------------
# Object profiles


def _attrs(dims, **flags) -> AttributeVector:
    return AttributeVector.from_dims(dims, **flags)


def _uniform(rng, lo, hi) -> float:
    return float(rng.uniform(lo, hi))


def is_stirrer_profile(attrs: AttributeVector) -> bool:
    """Long thin graspable rod: the expert's tool filter for stirring."""
    return (
        attrs.movable
        and attrs.cylinder_shape
        and not attrs.container
        and not attrs.liquid
        and attrs.max_wl <= 0.04
    )


def is_garbage_profile(attrs: AttributeVector) -> bool:
    return attrs.container and attrs.volume >= GARBAGE_MIN_VOLUME


def _is_small_empty_container(obj: ObjectState) -> bool:
    a = obj.attributes
    return (
        a.container
        and not a.liquid
        and a.movable
        and a.volume < GARBAGE_MIN_VOLUME
        and obj.contained_liquid is None
    )


# ---------------------------------------------------------------------------
# Placement helpers


def _fp_gap(fa, fb) -> float:
    """Largest axis separation between two footprints; negative if overlapping."""
    (ax0, ax1), (ay0, ay1) = fa
    (bx0, bx1), (by0, by1) = fb
    return max(bx0 - ax1, ax0 - bx1, by0 - ay1, ay0 - by1)


def _footprint_at(x, y, dims):
    return ((x - dims[0] / 2, x + dims[0] / 2), (y - dims[1] / 2, y + dims[1] / 2))


class _Builder:
    """Accumulates objects for one environment with collision-free placement."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.objects: list[ObjectState] = []
        self.next_id = 1

    def add(self, center, dims, attrs, contained_liquid=None) -> ObjectState:
        obj = ObjectState(self.next_id, center, dims, attrs, contained_liquid)
        self.next_id += 1
        self.objects.append(obj)
        return obj

    def place_on_floor(self, dims, attrs, margin=FLOOR_MARGIN) -> ObjectState:
        hw, hl = dims[0] / 2, dims[1] / 2
        for _ in range(400):
            x = _uniform(self.rng, -(ARENA_HALF - hw - 0.05), ARENA_HALF - hw - 0.05)
            y = _uniform(self.rng, -(ARENA_HALF - hl - 0.05), ARENA_HALF - hl - 0.05)
            fp = _footprint_at(x, y, dims)
            if all(_fp_gap(fp, o.footprint()) >= margin for o in self.objects):
                return self.add((x, y, dims[2] / 2.0), dims, attrs)
        raise GenerationError("no free floor space")

    def place_on(self, support: ObjectState, dims, attrs, liquid_src=None) -> ObjectState:
        (sx0, sx1), (sy0, sy1) = support.footprint()
        hw, hl = dims[0] / 2, dims[1] / 2
        x_lo, x_hi = sx0 + hw + 0.02, sx1 - hw - 0.02
        y_lo, y_hi = sy0 + hl + 0.02, sy1 - hl - 0.02
        if x_lo > x_hi or y_lo > y_hi:
            raise GenerationError("object does not fit on its support")
        residents = [o for o in self.objects if abs(o.bottom - support.top) < 1e-9]
        for _ in range(400):
            x = _uniform(self.rng, x_lo, x_hi)
            y = _uniform(self.rng, y_lo, y_hi)
            fp = _footprint_at(x, y, dims)
            if all(_fp_gap(fp, o.footprint()) >= SUPPORT_MARGIN for o in residents):
                obj = self.add((x, y, support.top + dims[2] / 2.0), dims, attrs)
                if liquid_src is not None:
                    self._fill(obj)
                return obj
        raise GenerationError("no free spot on support")

    def stack_on(self, host: ObjectState, dims, attrs) -> ObjectState:
        center = (host.center[0], host.center[1], host.top + dims[2] / 2.0)
        return self.add(center, dims, attrs)

    def _fill(self, holder: ObjectState) -> None:
        dims = (holder.dims[0] * 0.55, holder.dims[1] * 0.55, holder.dims[2] * 0.5)
        attrs = _attrs(dims, liquid=True, cylinder_shape=holder.attributes.cylinder_shape)
        center = (holder.center[0], holder.center[1], holder.bottom + 0.01 + dims[2] / 2.0)
        liquid = self.add(center, dims, attrs)
        filled = dataclasses.replace(holder, contained_liquid=liquid.id)
        self.objects[self.objects.index(holder)] = filled

    def done(self) -> dict[int, ObjectState]:
        return {o.id: o for o in self.objects}


def _build_environment(rng: np.random.Generator, shelf_heavy: bool) -> dict[int, ObjectState]:
    b = _Builder(rng)
    tables = []
    for _ in range(2 + int(rng.random() < 0.5)):
        dims = (_uniform(rng, 0.9, 1.6), _uniform(rng, 0.9, 1.6), _uniform(rng, 0.65, 0.8))
        tables.append(
            b.place_on_floor(dims, _attrs(dims, box_shape=True, large_horizontal_surface=True))
        )
    shelf_dims = (_uniform(rng, 1.0, 1.3), _uniform(rng, 0.4, 0.55), _uniform(rng, 1.4, 1.8))
    shelf = b.place_on_floor(
        shelf_dims,
        _attrs(
            shelf_dims,
            box_shape=True,
            large_horizontal_surface=True,
            multiple_large_horizontal_surface=True,
        ),
    )
    gw = _uniform(rng, 0.36, 0.46)
    g_dims = (gw, gw, _uniform(rng, 0.5, 0.7))
    b.place_on_floor(g_dims, _attrs(g_dims, cylinder_shape=True, container=True))

    def table() -> ObjectState:
        return tables[int(rng.integers(len(tables)))]

    def empty_support() -> ObjectState:
        return shelf if shelf_heavy else table()

    # Pots hold the stirrable liquids; a handle marks the profile.
    for _ in range(1 + int(rng.random() < 0.5)):
        pw = _uniform(rng, 0.22, 0.28)
        dims = (pw, pw, _uniform(rng, 0.14, 0.2))
        attrs = _attrs(dims, cylinder_shape=True, container=True, movable=True, handle=True)
        b.place_on(shelf if rng.random() < 0.3 else table(), dims, attrs, liquid_src=True)

    for _ in range(1 + int(rng.random() < 0.5)):  # bottles: pour sources
        bw = _uniform(rng, 0.06, 0.09)
        dims = (bw, bw, _uniform(rng, 0.22, 0.3))
        attrs = _attrs(dims, cylinder_shape=True, movable=True)
        b.place_on(table(), dims, attrs, liquid_src=True)

    # Cups: pour targets, and sometimes one arrives half-drunk so liquids
    # can start out in glasses, not just in pots and bottles.
    filled_one = False
    for _ in range(2 + int(rng.integers(2))):
        cw = _uniform(rng, 0.07, 0.1)
        dims = (cw, cw, _uniform(rng, 0.09, 0.13))
        attrs = _attrs(dims, cylinder_shape=True, container=True, movable=True)
        fill = not filled_one and rng.random() < 0.7
        b.place_on(empty_support(), dims, attrs, liquid_src=fill or None)
        filled_one = filled_one or fill

    if rng.random() < 0.5:  # an optional bowl for variety
        ow = _uniform(rng, 0.16, 0.22)
        dims = (ow, ow, _uniform(rng, 0.06, 0.1))
        b.place_on(
            empty_support(), dims, _attrs(dims, cylinder_shape=True, container=True, movable=True)
        )

    for _ in range(2 + int(rng.integers(2))):  # stirring rods
        sw = _uniform(rng, 0.02, 0.035)
        dims = (sw, sw, _uniform(rng, 0.3, 0.5))
        b.place_on(table(), dims, _attrs(dims, cylinder_shape=True, movable=True))

    clutter = []
    for _ in range(1 + int(rng.integers(3))):  # books
        dims = (_uniform(rng, 0.12, 0.2), _uniform(rng, 0.09, 0.15), _uniform(rng, 0.02, 0.05))
        clutter.append(b.place_on(table(), dims, _attrs(dims, box_shape=True, movable=True)))
    for _ in range(int(rng.integers(3))):  # cans
        kw = _uniform(rng, 0.05, 0.07)
        dims = (kw, kw, _uniform(rng, 0.1, 0.15))
        clutter.append(b.place_on(table(), dims, _attrs(dims, cylinder_shape=True, movable=True)))

    if clutter and rng.random() < 0.7:  # stack a book on some clutter item
        host = clutter[int(rng.integers(len(clutter)))]
        dims = (host.dims[0] * 0.7, host.dims[1] * 0.7, _uniform(rng, 0.02, 0.04))
        b.stack_on(host, dims, _attrs(dims, box_shape=True, movable=True))

    objects = b.done()
    probe = WorldState(objects, RobotState((ARENA_HALF + 2.0, ARENA_HALF + 2.0)))
    problems = validate_state(probe)
    if problems:
        raise GenerationError(f"generated environment is invalid: {problems}")
    return objects


def _sample_robot(rng: np.random.Generator, objects: dict[int, ObjectState]) -> RobotState:
    for _ in range(500):
        x = _uniform(rng, -ARENA_HALF + 0.1, ARENA_HALF - 0.1)
        y = _uniform(rng, -ARENA_HALF + 0.1, ARENA_HALF - 0.1)
        probe = WorldState(objects, RobotState((x, y)))
        if all(footprint_distance(probe, oid) >= ROBOT_CLEARANCE for oid in objects):
            return RobotState((x, y))
    raise GenerationError("no free robot pose")


# ---------------------------------------------------------------------------
# Scripted expert


class _Teacher:
    """Executes a scripted plan step by step, verifying each precondition."""

    def __init__(self, state: WorldState):
        self.state = state
        self.actions: list[Action] = []

    def do(self, primitive: Primitive, a1: int = NULL_ID, a2: int = NULL_ID) -> None:
        action = Action(primitive, a1, a2)
        ok, code = check_preconditions(self.state, action)
        if not ok:
            raise ExpertError(f"{primitive.name} on ({a1},{a2}) blocked: {code.value}")
        self.state = apply_primitive(self.state, action)
        self.actions.append(action)

    def ensure_close(self, oid: int) -> None:
        if footprint_distance(self.state, oid) > CLOSE_ENOUGH:
            self.do(Primitive.MOVE_CLOSE, oid)

    def ensure_holding(self, oid: int) -> None:
        if self.state.robot.gripper == oid:
            return
        if self.state.robot.gripper is not None:
            self.stow()
        self.ensure_close(oid)
        self.do(Primitive.GRASP, oid)

    def stow(self) -> None:
        """Free the gripper by setting the held object on the nearest surface."""
        held = self.state.robot.gripper
        surfaces = sorted(
            (
                o
                for o in self.state.objects.values()
                if o.id != held and o.attributes.large_horizontal_surface
            ),
            key=lambda o: (footprint_distance(self.state, o.id), o.id),
        )
        for surface in surfaces:
            saved_state, saved_len = self.state, len(self.actions)
            try:
                self.ensure_close(surface.id)
                self.do(Primitive.PLACE_ABOVE, held, surface.id)
                self.do(Primitive.RELEASE, held)
                return
            except ExpertError:
                self.state = saved_state
                del self.actions[saved_len:]
        self.do(Primitive.RELEASE, held)  # last resort: drop in place


def _pick_stirrer(state: WorldState) -> int:
    cands = [o for o in state.objects.values() if is_stirrer_profile(o.attributes)]
    if not cands:
        raise ExpertError("no stirrer available")
    return max(cands, key=lambda o: (o.attributes.height, -o.id)).id


def _pick_garbage(state: WorldState, exclude: int) -> int:
    cands = [
        o
        for o in state.objects.values()
        if o.id != exclude and is_garbage_profile(o.attributes)
    ]
    if not cands:
        raise ExpertError("no garbage container")
    return min(o.id for o in cands)


def _pick_pour_target(state: WorldState, exclude: int) -> tuple[int, bool]:
    """Smallest empty vessel, preferring ones already on an open surface."""
    cands = [
        o for o in state.objects.values() if o.id != exclude and _is_small_empty_container(o)
    ]
    if not cands:
        raise ExpertError("no empty vessel to pour into")
    placed = [o for o in cands if _on_open_surface(state, o.id)]
    pool = placed if placed else cands
    best = min(pool, key=lambda o: (o.attributes.volume, o.id))
    return best.id, not placed


def _put_down(t: _Teacher, held: int, near: int) -> None:
    """Set the held object down beside `near` so the gripper ends empty."""
    table = object_directly_below(t.state, near)
    if table == NULL_ID:
        raise ExpertError("no surface to set the held object on")
    t.do(Primitive.PLACE_ABOVE, held, table)
    t.do(Primitive.RELEASE, held)


def _demo_stir(t: _Teacher, spec: TaskSpec) -> None:
    vessel = container_of(t.state, spec.g_a1)
    if vessel == NULL_ID or not t.state.obj(vessel).attributes.container:
        raise ExpertError("liquid is not in a stirrable vessel")
    rod = _pick_stirrer(t.state)
    if not _on_open_surface(t.state, vessel):
        table = object_directly_below(t.state, rod)
        if table == NULL_ID:
            raise ExpertError("stirrer has no support to relocate onto")
        t.ensure_holding(vessel)
        t.ensure_close(rod)
        t.do(Primitive.PLACE_ABOVE, vessel, table)
        t.do(Primitive.RELEASE, vessel)
    t.ensure_holding(rod)
    t.ensure_close(vessel)
    t.do(Primitive.HOLD_ABOVE, rod, vessel)
    t.do(Primitive.FOLLOW_TRAJ_CIRCLE, vessel)
    _put_down(t, rod, vessel)


def _demo_pour(t: _Teacher, spec: TaskSpec) -> None:
    source = container_of(t.state, spec.g_a1)
    if source == NULL_ID:
        raise ExpertError("liquid has no holder")
    target, needs_move = _pick_pour_target(t.state, source)
    if needs_move:
        if not _on_open_surface(t.state, source):
            raise ExpertError("neither source nor target is on an open surface")
        table = object_directly_below(t.state, source)
        t.ensure_holding(target)
        t.ensure_close(source)
        t.do(Primitive.PLACE_ABOVE, target, table)
        t.do(Primitive.RELEASE, target)
    t.ensure_holding(source)
    t.ensure_close(target)
    t.do(Primitive.HOLD_ABOVE, source, target)
    t.do(Primitive.FOLLOW_TRAJ_POUR, source, target)
    _put_down(t, source, target)


def _demo_pour_to(t: _Teacher, spec: TaskSpec) -> None:
    source = container_of(t.state, spec.g_a1)
    if source == NULL_ID:
        raise ExpertError("liquid has no holder")
    t.ensure_holding(source)
    t.ensure_close(spec.g_a2)
    t.do(Primitive.HOLD_ABOVE, source, spec.g_a2)
    t.do(Primitive.FOLLOW_TRAJ_POUR, source, spec.g_a2)
    _put_down(t, source, spec.g_a2)


def _demo_pick_and_place(t: _Teacher, spec: TaskSpec) -> None:
    target, dest = spec.g_a1, spec.g_a2
    tops = _objects_on_top(t.state, target)
    if tops:
        blocker = min(tops)
        table = object_directly_below(t.state, target)
        if table == NULL_ID:
            raise ExpertError("obstructed object has no support")
        t.ensure_holding(blocker)
        t.do(Primitive.PLACE_ABOVE, blocker, table)
        t.do(Primitive.RELEASE, blocker)
    t.ensure_holding(target)
    t.ensure_close(dest)
    t.do(Primitive.PLACE_ABOVE, target, dest)
    t.do(Primitive.RELEASE, target)


def _demo_throw_away(t: _Teacher, spec: TaskSpec) -> None:
    bin_id = _pick_garbage(t.state, spec.g_a1)
    t.ensure_holding(spec.g_a1)
    t.ensure_close(bin_id)
    t.do(Primitive.HOLD_ABOVE, spec.g_a1, bin_id)
    t.do(Primitive.RELEASE, spec.g_a1)


_DEMOS = {
    Task.STIR: _demo_stir,
    Task.PICK_AND_PLACE: _demo_pick_and_place,
    Task.POUR: _demo_pour,
    Task.POUR_TO: _demo_pour_to,
    Task.THROW_AWAY: _demo_throw_away,
}


def expert_plan(state: WorldState, spec: TaskSpec) -> tuple[Action, ...]:
    """Scripted plan ending in DONE with the goal satisfied; any start state."""
    t = _Teacher(state)
    _DEMOS[spec.task](t, spec)
    t.do(Primitive.DONE)
    if not task_goal_satisfied(t.state, spec):
        raise ExpertError(f"{spec.task.name} plan missed its goal")
    return tuple(t.actions)


def expert_demonstrate(state: WorldState, spec: TaskSpec) -> tuple[Action, ...]:
    """Deterministic demonstration ending in DONE with the goal satisfied."""
    if task_goal_satisfied(state, spec):
        raise ExpertError("goal already satisfied")
    actions = expert_plan(state, spec)
    if not MIN_DEMO_STEPS <= len(actions) <= MAX_DEMO_STEPS:
        raise ExpertError(f"demonstration length {len(actions)} out of range")
    return actions


# ---------------------------------------------------------------------------
# Scenario selection


def _choice(rng: np.random.Generator, items: list):
    return items[int(rng.integers(len(items)))]


def _movable_candidates(state: WorldState) -> list[ObjectState]:
    return [
        o
        for o in state.objects.values()
        if o.attributes.movable and not o.attributes.liquid
    ]


def _pick_task_args(state: WorldState, task: Task, rng: np.random.Generator) -> TaskSpec | None:
    liquids = [o for o in state.objects.values() if o.attributes.liquid]

    if task == Task.STIR:
        pool = [
            o
            for o in liquids
            if (h := container_of(state, o.id)) != NULL_ID
            and state.obj(h).attributes.container
        ]
        return TaskSpec(Task.STIR, _choice(rng, pool).id) if pool else None

    if task == Task.POUR:
        pool = [
            o
            for o in liquids
            if (h := container_of(state, o.id)) != NULL_ID
            and not state.obj(h).attributes.container
        ]
        return TaskSpec(Task.POUR, _choice(rng, pool).id) if pool else None

    if task == Task.POUR_TO:
        if not liquids:
            return None
        # Transfers between glasses are routine, so favor glass-held liquids
        # whenever a scene offers one.
        glassed = [
            o
            for o in liquids
            if (h := container_of(state, o.id)) != NULL_ID
            and (ho := state.obj(h)).attributes.container
            and ho.attributes.movable
            and not ho.attributes.handle
        ]
        pool = glassed if glassed and rng.random() < 0.5 else liquids
        liquid = _choice(rng, pool)
        holder = container_of(state, liquid.id)
        vessels = [
            o
            for o in state.objects.values()
            if o.id != holder and _is_small_empty_container(o)
        ]
        return TaskSpec(Task.POUR_TO, liquid.id, _choice(rng, vessels).id) if vessels else None

    if task == Task.PICK_AND_PLACE:
        surfaces = [
            o
            for o in state.objects.values()
            if o.attributes.large_horizontal_surface
        ]
        movables = _movable_candidates(state)
        obstructed = [o for o in movables if _objects_on_top(state, o.id)]
        if obstructed and rng.random() < 0.5:
            target = _choice(rng, obstructed)
        else:
            target = _choice(rng, movables)
        below = object_directly_below(state, target.id)
        dests = [s for s in surfaces if s.id not in (below, target.id)]
        if not dests:
            return None
        return TaskSpec(Task.PICK_AND_PLACE, target.id, _choice(rng, dests).id)

    if task == Task.THROW_AWAY:
        bins = [o for o in state.objects.values() if is_garbage_profile(o.attributes)]
        if not bins:
            return None
        width = min(o.dims[0] for o in bins)
        pool = [
            o
            for o in _movable_candidates(state)
            if o.contained_liquid is None
            and max(o.dims[0], o.dims[1]) + 0.04 < width
            and not _objects_on_top(state, o.id)
        ]
        return TaskSpec(Task.THROW_AWAY, _choice(rng, pool).id) if pool else None

    raise ValueError(f"unhandled task {task!r}")


_TASK_CYCLE = (Task.POUR, Task.PICK_AND_PLACE, Task.STIR, Task.THROW_AWAY, Task.POUR_TO)


def _demonstrate_some_task(
    objects: dict[int, ObjectState], cycle_at: int, rng: np.random.Generator
) -> Sequence | None:
    """First demonstrable task from the cycle starting at cycle_at, if any."""
    state = WorldState(objects, _sample_robot(rng, objects))
    for offset in range(len(_TASK_CYCLE)):
        task = _TASK_CYCLE[(cycle_at + offset) % len(_TASK_CYCLE)]
        spec = _pick_task_args(state, task, rng)
        if spec is None or task_goal_satisfied(state, spec):
            continue
        try:
            actions = expert_demonstrate(state, spec)
        except ExpertError:
            continue
        return Sequence("", "", spec, state, actions)
    return None


def generate_corpus(config: GeneratorConfig = GeneratorConfig()) -> list[Sequence]:
    """Seeded corpus of expert demonstrations over generated tabletop scenes.

    Every demonstration starts from the environment's pristine arrangement
    with a freshly sampled robot pose, mirroring a reset between recordings.
    """
    sequences: list[Sequence] = []
    for e in range(config.environments):
        objects = None
        for attempt in range(20):  # rare packing failures re-roll the scene
            env_rng = np.random.default_rng(np.random.SeedSequence([config.seed, e, attempt]))
            shelf_heavy = env_rng.random() < 0.4
            try:
                objects = _build_environment(env_rng, shelf_heavy)
                break
            except GenerationError:
                continue
        if objects is None:
            raise GenerationError(f"could not build environment {e}")
        env_id = f"env{e:02d}"
        for k in range(config.scenarios_per_environment):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, e, 100 + k]))
            seq = _demonstrate_some_task(objects, k + e, rng)
            if seq is None:
                raise GenerationError(f"no demonstrable task for {env_id} scenario {k}")
            seq = dataclasses.replace(seq, scenario_id=f"{env_id}-s{k:02d}", environment_id=env_id)
            sequences.append(seq)
    return sequences


# ---------------------------------------------------------------------------
# Replay and perturbation


def replay_sequence(seq: Sequence, *, check: bool = True) -> list[WorldState]:
    """States visited before each action; raises CorpusIntegrityError on failure."""
    states = [seq.initial_state]
    state = seq.initial_state
    for i, action in enumerate(seq.actions):
        try:
            state = apply_primitive(state, action, check=check)
        except WorldError as exc:
            raise CorpusIntegrityError(f"{seq.scenario_id} step {i}: {exc}") from exc
        if i + 1 < len(seq.actions):
            states.append(state)
    return states


def perturb_attributes(state: WorldState, p: float, rng: np.random.Generator) -> WorldState:
    """Flip each binary attribute flag independently with probability p."""
    objects = {}
    for oid in state.ids():
        obj = state.obj(oid)
        flips = {
            name: bool(getattr(obj.attributes, name)) ^ bool(rng.random() < p)
            for name in FLAG_NAMES
        }
        objects[oid] = dataclasses.replace(
            obj, attributes=dataclasses.replace(obj.attributes, **flips)
        )
    return dataclasses.replace(state, objects=objects)


# ---------------------------------------------------------------------------
# Serialization


def _object_to_dict(obj: ObjectState) -> dict:
    return {
        "id": obj.id,
        "center": list(obj.center),
        "dims": list(obj.dims),
        "attributes": obj.attributes.as_dict(),
        "contained_liquid": obj.contained_liquid,
        "stirred": obj.stirred,
    }


def _object_from_dict(d: dict) -> ObjectState:
    return ObjectState(
        id=int(d["id"]),
        center=tuple(float(v) for v in d["center"]),
        dims=tuple(float(v) for v in d["dims"]),
        attributes=AttributeVector(**d["attributes"]),
        contained_liquid=None if d["contained_liquid"] is None else int(d["contained_liquid"]),
        stirred=bool(d.get("stirred", False)),
    )


def action_to_dict(action: Action) -> dict:
    return {"primitive": action.primitive.name.lower(), "a1": action.a1, "a2": action.a2}


def action_from_dict(d: dict) -> Action:
    return Action(Primitive[d["primitive"].upper()], int(d["a1"]), int(d["a2"]))


def sequence_to_dict(seq: Sequence) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scenario_id": seq.scenario_id,
        "environment_id": seq.environment_id,
        "task": seq.spec.task.name.lower(),
        "task_args": {"g_a1": seq.spec.g_a1, "g_a2": seq.spec.g_a2},
        "environment": {
            "objects": [_object_to_dict(seq.initial_state.obj(i)) for i in seq.initial_state.ids()],
            "robot": {
                "position": list(seq.initial_state.robot.position),
                "gripper": seq.initial_state.robot.gripper,
            },
        },
        "steps": [action_to_dict(a) for a in seq.actions],
    }


def sequence_from_dict(d: dict) -> Sequence:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"unsupported format_version {version!r}")
    try:
        task = Task[d["task"].upper()]
        spec = TaskSpec(task, int(d["task_args"]["g_a1"]), int(d["task_args"]["g_a2"]))
        env = d["environment"]
        objects = {o["id"]: _object_from_dict(o) for o in env["objects"]}
        robot = RobotState(
            position=tuple(float(v) for v in env["robot"]["position"]),
            gripper=env["robot"]["gripper"],
        )
        actions = tuple(action_from_dict(s) for s in d["steps"])
        return Sequence(
            scenario_id=str(d["scenario_id"]),
            environment_id=str(d["environment_id"]),
            spec=spec,
            initial_state=WorldState(objects, robot),
            actions=actions,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusFormatError(f"bad sequence record: {exc}") from exc


def dumps_corpus(sequences: list[Sequence]) -> str:
    out = io.StringIO()
    for seq in sequences:
        json.dump(sequence_to_dict(seq), out, sort_keys=True, separators=(",", ":"))
        out.write("\n")
    return out.getvalue()


def save_corpus(path, sequences: list[Sequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_corpus(sequences))


def load_corpus(path) -> list[Sequence]:
    sequences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
            try:
                sequences.append(sequence_from_dict(record))
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    return sequences


def corpus_hash(sequences: list[Sequence]) -> str:
    return hashlib.sha256(dumps_corpus(sequences).encode("utf-8")).hexdigest()
