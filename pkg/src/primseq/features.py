"""Joint feature map over (state, task, action, action history).

The map is a fixed-layout concatenation of per-block features; every block
has a named, contiguous index range so learned weights can be traced back
to what they score. Continuous entries are normalized into [0, 1].
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .world import (
    NULL_ID,
    NUM_PRIMITIVES,
    NUM_TASKS,
    Action,
    AttributeVector,
    Primitive,
    Task,
    WorldState,
    collision,
    distance_to,
    aabb_overlap_topview,
    object_directly_below,
)

NUM_ATTRIBUTES = 14

# Normalization caps: heights/extents vs 2 m, volume vs 0.2 m^3, reach vs 10 m.
HEIGHT_CAP = 2.0
EXTENT_CAP = 2.0
VOLUME_CAP = 0.2
DISTANCE_CAP = 10.0

_AE1_LEN = 3
_AE2_LEN = 2
_PT_LEN = NUM_TASKS * NUM_PRIMITIVES
_AET1_LEN = 4 + 2 * NUM_ATTRIBUTES + NUM_ATTRIBUTES * NUM_TASKS
_AET2_LEN = 4 + NUM_ATTRIBUTES * NUM_TASKS
_PAE_LEN = NUM_PRIMITIVES
_PPT_LEN = NUM_TASKS * NUM_PRIMITIVES * NUM_PRIMITIVES
_PAAE_LEN = NUM_PRIMITIVES * 8


def _build_layout() -> tuple[tuple[str, int, int], ...]:
    blocks = (
        ("ae1", _AE1_LEN),
        ("ae2", _AE2_LEN),
        ("pt", _PT_LEN),
        ("aet1", _AET1_LEN),
        ("aet2", _AET2_LEN),
        ("pae1", _PAE_LEN),
        ("pae2", _PAE_LEN),
        ("ppt1", _PPT_LEN),
        ("ppt2", _PPT_LEN),
        ("paae", _PAAE_LEN),
    )
    layout = []
    start = 0
    for name, length in blocks:
        layout.append((name, start, length))
        start += length
    return tuple(layout)


LAYOUT: tuple[tuple[str, int, int], ...] = _build_layout()
DIMENSION: int = LAYOUT[-1][1] + LAYOUT[-1][2]
OFFSETS: dict[str, int] = {name: start for name, start, _ in LAYOUT}


def layout_manifest() -> str:
    """Human-readable block table; hashed into model files."""
    lines = [f"dimension={DIMENSION}"]
    for name, start, length in LAYOUT:
        lines.append(f"{name} start={start} length={length}")
    return "\n".join(lines) + "\n"


def layout_hash() -> str:
    return hashlib.sha256(layout_manifest().encode()).hexdigest()


def block_slice(name: str) -> slice:
    for block, start, length in LAYOUT:
        if block == name:
            return slice(start, start + length)
    raise KeyError(name)


@dataclass(frozen=True)
class History:
    """Last two executed actions; prev1 is the most recent."""

    prev1: Action | None = None
    prev2: Action | None = None

    def __post_init__(self) -> None:
        if self.prev2 is not None and self.prev1 is None:
            raise ValueError("prev2 requires prev1")

    def advance(self, action: Action) -> "History":
        return History(prev1=action, prev2=self.prev1)


EMPTY_HISTORY = History()


def normalized_attributes(attrs: AttributeVector) -> np.ndarray:
    """14-entry vector with continuous fields scaled and clamped into [0, 1]."""
    out = np.empty(NUM_ATTRIBUTES)
    out[0] = min(attrs.height / HEIGHT_CAP, 1.0)
    out[1] = min(attrs.max_wl / EXTENT_CAP, 1.0)
    out[2] = min(attrs.min_wl / EXTENT_CAP, 1.0)
    out[3] = min(attrs.volume / VOLUME_CAP, 1.0)
    out[4] = attrs.min_over_max
    out[5] = attrs.median_over_max
    out[6:] = [float(f) for f in attrs.flags()]
    return out


def _grasped(state: WorldState, oid: int) -> float:
    return 1.0 if oid != NULL_ID and state.robot.gripper == oid else 0.0


def _norm_distance(state: WorldState, oid: int) -> float:
    return min(distance_to(state, oid), DISTANCE_CAP) / DISTANCE_CAP


def phi_ae(state: WorldState, a1: int, a2: int) -> tuple[np.ndarray, np.ndarray]:
    """Argument-environment block: gripper bit, reach distance, pair collision."""
    copy1 = np.zeros(_AE1_LEN)
    copy2 = np.zeros(_AE2_LEN)
    if a1 != NULL_ID:
        copy1[0] = _grasped(state, a1)
        copy1[1] = _norm_distance(state, a1)
        if a2 != NULL_ID:
            copy1[2] = 1.0 if collision(state, a1, a2) else 0.0
    if a2 != NULL_ID:
        copy2[0] = _grasped(state, a2)
        copy2[1] = _norm_distance(state, a2)
    return copy1, copy2


def phi_pt(primitive: Primitive, task: Task) -> np.ndarray:
    """Primitive-task co-occurrence one-hot."""
    out = np.zeros(_PT_LEN)
    out[int(task) * NUM_PRIMITIVES + int(primitive)] = 1.0
    return out


def _identity_overlap_bits(state: WorldState, oid: int, g_a1: int, g_a2: int) -> np.ndarray:
    bits = np.zeros(4)
    if oid == NULL_ID:
        return bits
    bits[0] = 1.0 if oid == g_a1 else 0.0
    bits[1] = 1.0 if g_a2 != NULL_ID and oid == g_a2 else 0.0
    if g_a1 != NULL_ID:
        bits[2] = 1.0 if aabb_overlap_topview(state, oid, g_a1) else 0.0
    if g_a2 != NULL_ID:
        bits[3] = 1.0 if aabb_overlap_topview(state, oid, g_a2) else 0.0
    return bits


def _attr_task_tensor(state: WorldState, oid: int, task: Task) -> np.ndarray:
    # Attribute-major layout: entry index = attribute * NUM_TASKS + task.
    out = np.zeros(NUM_ATTRIBUTES * NUM_TASKS)
    if oid == NULL_ID:
        return out
    out[int(task) :: NUM_TASKS] = normalized_attributes(state.obj(oid).attributes)
    return out


def phi_aet(state: WorldState, a1: int, a2: int, spec_task: Task, g_a1: int, g_a2: int) -> tuple[np.ndarray, np.ndarray]:
    """Argument-environment-task block: task-arg identity/overlap bits, the
    attributes of a1's supporting object routed by whether a1 is held, and
    each argument's attributes crossed with the task."""
    copy1 = np.zeros(_AET1_LEN)
    copy2 = np.zeros(_AET2_LEN)
    if a1 != NULL_ID:
        copy1[0:4] = _identity_overlap_bits(state, a1, g_a1, g_a2)
        below = object_directly_below(state, a1)
        if below != NULL_ID:
            attrs = normalized_attributes(state.obj(below).attributes)
            if state.robot.gripper == a1:
                copy1[4 : 4 + NUM_ATTRIBUTES] = attrs
            else:
                copy1[4 + NUM_ATTRIBUTES : 4 + 2 * NUM_ATTRIBUTES] = attrs
        copy1[4 + 2 * NUM_ATTRIBUTES :] = _attr_task_tensor(state, a1, spec_task)
    if a2 != NULL_ID:
        copy2[0:4] = _identity_overlap_bits(state, a2, g_a1, g_a2)
        copy2[4:] = _attr_task_tensor(state, a2, spec_task)
    return copy1, copy2


def phi_pae(state: WorldState, primitive: Primitive, arg: int) -> np.ndarray:
    """Primitive one-hot row gated by whether the argument sits in the gripper."""
    out = np.zeros(_PAE_LEN)
    if arg != NULL_ID:
        out[int(primitive)] = _grasped(state, arg)
    return out


def phi_ppt(primitive: Primitive, history: History, task: Task) -> tuple[np.ndarray, np.ndarray]:
    """Primitive-transition block: copy 1 skips one step back, copy 2 one step."""
    copy1 = np.zeros(_PPT_LEN)
    copy2 = np.zeros(_PPT_LEN)
    base = int(task) * NUM_PRIMITIVES * NUM_PRIMITIVES
    if history.prev2 is not None:
        copy1[base + int(history.prev2.primitive) * NUM_PRIMITIVES + int(primitive)] = 1.0
    if history.prev1 is not None:
        copy2[base + int(history.prev1.primitive) * NUM_PRIMITIVES + int(primitive)] = 1.0
    return copy1, copy2


def _match(a: int, b: int) -> float:
    # NULL never matches NULL.
    return 1.0 if a != NULL_ID and a == b else 0.0


def phi_paae(primitive: Primitive, a1: int, a2: int, history: History) -> np.ndarray:
    """Argument-recurrence bits in the current primitive's row."""
    out = np.zeros(_PAAE_LEN)
    row = int(primitive) * 8
    if history.prev1 is not None:
        p1 = history.prev1
        out[row + 0] = _match(a1, p1.a1)
        out[row + 1] = _match(a1, p1.a2)
        out[row + 2] = _match(a2, p1.a1)
        out[row + 3] = _match(a2, p1.a2)
    if history.prev2 is not None:
        p2 = history.prev2
        out[row + 4] = _match(a1, p2.a1)
        out[row + 5] = _match(a1, p2.a2)
        out[row + 6] = _match(a2, p2.a1)
        out[row + 7] = _match(a2, p2.a2)
    return out


def assemble(state: WorldState, spec, action: Action, history: History = EMPTY_HISTORY) -> np.ndarray:
    """Full joint feature vector for one candidate action."""
    out = np.zeros(DIMENSION)
    a1, a2 = action.a1, action.a2
    ae1, ae2 = phi_ae(state, a1, a2)
    out[block_slice("ae1")] = ae1
    out[block_slice("ae2")] = ae2
    out[block_slice("pt")] = phi_pt(action.primitive, spec.task)
    aet1, aet2 = phi_aet(state, a1, a2, spec.task, spec.g_a1, spec.g_a2)
    out[block_slice("aet1")] = aet1
    out[block_slice("aet2")] = aet2
    out[block_slice("pae1")] = phi_pae(state, action.primitive, a1)
    out[block_slice("pae2")] = phi_pae(state, action.primitive, a2)
    ppt1, ppt2 = phi_ppt(action.primitive, history, spec.task)
    out[block_slice("ppt1")] = ppt1
    out[block_slice("ppt2")] = ppt2
    out[block_slice("paae")] = phi_paae(action.primitive, a1, a2, history)
    return out


def block_scores(weights: np.ndarray, features: np.ndarray) -> dict[str, float]:
    """Per-block contribution of a feature vector to its total score."""
    return {
        name: float(np.dot(weights[start : start + length], features[start : start + length]))
        for name, start, length in LAYOUT
    }
