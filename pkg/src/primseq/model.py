"""Linear score model over joint features, exact argmax inference, rollout.

The score of a candidate action factors over per-argument feature blocks,
so the batch scorer precomputes per-object components once per state and
evaluates every candidate with a handful of vector operations. Its scores
agree with the dense inner product over the assembled feature vector.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from . import features as F
from .world import (
    NULL_ID,
    NUM_PRIMITIVES,
    NUM_TASKS,
    Action,
    Primitive,
    TaskSpec,
    WorldState,
    apply_primitive,
    check_preconditions,
    task_goal_satisfied,
)

DEFAULT_HORIZON = 25

UNARY_PRIMITIVES = tuple(p for p in Primitive if p.arity == 1)
BINARY_PRIMITIVES = tuple(p for p in Primitive if p.arity == 2)


class ModelFormatError(Exception):
    """Raised when a model file is malformed or from a different layout."""


class AbortedRollout(Exception):
    """Raised when no proposed action is executable."""


@dataclass(frozen=True)
class ScoredAction:
    action: Action
    score: float


def loss(truth: Action, predicted: Action) -> float:
    """Per-step structured loss: one point each for primitive, a1 and a2."""
    return (
        float(truth.primitive != predicted.primitive)
        + float(truth.a1 != predicted.a1)
        + float(truth.a2 != predicted.a2)
    )


def enumerate_actions(state: WorldState) -> list[Action]:
    """All candidate actions in canonical order: primitive, then arguments."""
    ids = state.ids()
    out: list[Action] = []
    for p in Primitive:
        if p.arity == 0:
            out.append(Action(p))
        elif p.arity == 1:
            out.extend(Action(p, a1) for a1 in ids)
        else:
            out.extend(Action(p, a1, a2) for a1 in ids for a2 in ids if a2 != a1)
    return out


def score(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    action: Action,
    history: F.History = F.EMPTY_HISTORY,
) -> float:
    """Inner product of the weights with the assembled feature vector."""
    return float(np.dot(weights, F.assemble(state, spec, action, history)))


class StepContext:
    """Weight-independent feature components for one (state, task, history).

    Candidate order matches enumerate_actions exactly, so argmax indices
    translate directly into actions.
    """

    def __init__(self, state: WorldState, spec: TaskSpec, history: F.History = F.EMPTY_HISTORY):
        self.state = state
        self.spec = spec
        self.history = history
        ids = state.ids()
        self.ids = ids
        n = len(ids)
        self.n = n

        self.grasped = np.array([1.0 if state.robot.gripper == o else 0.0 for o in ids])
        self.dist = np.array([F._norm_distance(state, o) for o in ids])
        self.coll = np.zeros((n, n))
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                if i != j and F.collision(state, a, b):
                    self.coll[i, j] = 1.0

        self.bits = np.zeros((n, 4))
        self.below_held = np.zeros((n, F.NUM_ATTRIBUTES))
        self.below_rest = np.zeros((n, F.NUM_ATTRIBUTES))
        self.tensor = np.zeros((n, F.NUM_ATTRIBUTES))
        for i, o in enumerate(ids):
            self.bits[i] = F._identity_overlap_bits(state, o, spec.g_a1, spec.g_a2)
            below = F.object_directly_below(state, o)
            if below != NULL_ID:
                attrs = F.normalized_attributes(state.obj(below).attributes)
                if state.robot.gripper == o:
                    self.below_held[i] = attrs
                else:
                    self.below_rest[i] = attrs
            self.tensor[i] = F.normalized_attributes(state.obj(o).attributes)

        # Bits [match prev1.a1, prev1.a2, prev2.a1, prev2.a2] per object.
        self.hist_match = np.zeros((n, 4))
        prev1, prev2 = history.prev1, history.prev2
        for i, o in enumerate(ids):
            if prev1 is not None:
                self.hist_match[i, 0] = 1.0 if o == prev1.a1 else 0.0
                self.hist_match[i, 1] = 1.0 if prev1.a2 != NULL_ID and o == prev1.a2 else 0.0
            if prev2 is not None:
                self.hist_match[i, 2] = 1.0 if o == prev2.a1 else 0.0
                self.hist_match[i, 3] = 1.0 if prev2.a2 != NULL_ID and o == prev2.a2 else 0.0

        # Candidate index ranges per primitive, in enumeration order.
        self._ranges: list[tuple[Primitive, int, int]] = []
        start = 0
        for p in Primitive:
            width = 1 if p.arity == 0 else n if p.arity == 1 else n * (n - 1)
            self._ranges.append((p, start, start + width))
            start += width
        self.n_actions = start
        self._offdiag = np.ones((n, n), dtype=bool)
        np.fill_diagonal(self._offdiag, False)

    def scores(self, weights: np.ndarray) -> np.ndarray:
        """Scores for every candidate, aligned with enumerate_actions."""
        w = weights
        t = int(self.spec.task)
        off = F.OFFSETS

        a1_base = off["aet1"]
        w_bits1 = w[a1_base : a1_base + 4]
        w_below_held = w[a1_base + 4 : a1_base + 4 + F.NUM_ATTRIBUTES]
        w_below_rest = w[a1_base + 4 + F.NUM_ATTRIBUTES : a1_base + 4 + 2 * F.NUM_ATTRIBUTES]
        w_tensor1 = w[a1_base + 4 + 2 * F.NUM_ATTRIBUTES + t : a1_base + F._AET1_LEN : NUM_TASKS]
        a2_base = off["aet2"]
        w_bits2 = w[a2_base : a2_base + 4]
        w_tensor2 = w[a2_base + 4 + t : a2_base + F._AET2_LEN : NUM_TASKS]

        A1 = (
            self.grasped * w[0]
            + self.dist * w[1]
            + self.bits @ w_bits1
            + self.below_held @ w_below_held
            + self.below_rest @ w_below_rest
            + self.tensor @ w_tensor1
        )
        A2 = self.grasped * w[3] + self.dist * w[4] + self.bits @ w_bits2 + self.tensor @ w_tensor2

        pt = w[off["pt"] + t * NUM_PRIMITIVES : off["pt"] + (t + 1) * NUM_PRIMITIVES].copy()
        base1 = off["ppt1"] + t * NUM_PRIMITIVES * NUM_PRIMITIVES
        base2 = off["ppt2"] + t * NUM_PRIMITIVES * NUM_PRIMITIVES
        if self.history.prev2 is not None:
            p2 = int(self.history.prev2.primitive)
            pt += w[base1 + p2 * NUM_PRIMITIVES : base1 + (p2 + 1) * NUM_PRIMITIVES]
        if self.history.prev1 is not None:
            p1 = int(self.history.prev1.primitive)
            pt += w[base2 + p1 * NUM_PRIMITIVES : base2 + (p1 + 1) * NUM_PRIMITIVES]

        out = np.empty(self.n_actions)
        pb = off["paae"]
        for p, lo, hi in self._ranges:
            pi = int(p)
            if p.arity == 0:
                out[lo] = pt[pi]
                continue
            row = w[pb + pi * 8 : pb + (pi + 1) * 8]
            side1 = A1 + self.grasped * w[off["pae1"] + pi] + self.hist_match @ row[[0, 1, 4, 5]]
            if p.arity == 1:
                out[lo:hi] = pt[pi] + side1
            else:
                side2 = A2 + self.grasped * w[off["pae2"] + pi] + self.hist_match @ row[[2, 3, 6, 7]]
                grid = pt[pi] + side1[:, None] + side2[None, :] + self.coll * w[2]
                out[lo:hi] = grid[self._offdiag]
        return out

    def loss_vector(self, truth: Action) -> np.ndarray:
        """Structured loss of every candidate against the ground truth."""
        ids = np.array(self.ids)
        out = np.empty(self.n_actions)
        miss1 = (ids != truth.a1).astype(float)
        miss2 = (ids != truth.a2).astype(float)
        for p, lo, hi in self._ranges:
            lp = float(p != truth.primitive)
            if p.arity == 0:
                out[lo] = lp + float(truth.a1 != NULL_ID) + float(truth.a2 != NULL_ID)
            elif p.arity == 1:
                out[lo:hi] = lp + float(truth.a2 != NULL_ID) + miss1
            else:
                grid = lp + miss1[:, None] + miss2[None, :]
                out[lo:hi] = grid[self._offdiag]
        return out

    def action_at(self, index: int) -> Action:
        for p, lo, hi in self._ranges:
            if index >= hi:
                continue
            k = index - lo
            if p.arity == 0:
                return Action(p)
            if p.arity == 1:
                return Action(p, self.ids[k])
            i, j = divmod(k, self.n - 1)
            a1 = self.ids[i]
            a2 = self.ids[j if j < i else j + 1]
            return Action(p, a1, a2)
        raise IndexError(index)

    def actions(self) -> list[Action]:
        return [self.action_at(i) for i in range(self.n_actions)]

    def features_at(self, index: int) -> np.ndarray:
        return F.assemble(self.state, self.spec, self.action_at(index), self.history)


def predict(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    history: F.History = F.EMPTY_HISTORY,
) -> ScoredAction:
    """Highest-scoring action; ties resolve to the earliest enumerated."""
    ctx = StepContext(state, spec, history)
    s = ctx.scores(weights)
    best = int(np.argmax(s))
    return ScoredAction(ctx.action_at(best), float(s[best]))


def top_k(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    history: F.History = F.EMPTY_HISTORY,
    k: int = 3,
) -> list[ScoredAction]:
    """The k highest-scoring actions in descending order."""
    ctx = StepContext(state, spec, history)
    s = ctx.scores(weights)
    order = np.argsort(-s, kind="stable")[: max(k, 0)]
    return [ScoredAction(ctx.action_at(int(i)), float(s[i])) for i in order]


def loss_augmented_argmax(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    history: F.History,
    truth: Action,
) -> tuple[ScoredAction, float]:
    """Maximizer of score plus loss; returns it with its structured loss."""
    ctx = StepContext(state, spec, history)
    losses = ctx.loss_vector(truth)
    augmented = ctx.scores(weights) + losses
    best = int(np.argmax(augmented))
    return ScoredAction(ctx.action_at(best), float(augmented[best])), float(losses[best])


# ---------------------------------------------------------------------------
# Primitive-only scoring (flat multiclass baseline)


def multiclass_scores(weights: np.ndarray, spec: TaskSpec, history: F.History) -> np.ndarray:
    """Scores of the eight bare primitives with argument blocks zeroed."""
    t = int(spec.task)
    off = F.OFFSETS
    out = weights[off["pt"] + t * NUM_PRIMITIVES : off["pt"] + (t + 1) * NUM_PRIMITIVES].copy()
    base1 = off["ppt1"] + t * NUM_PRIMITIVES * NUM_PRIMITIVES
    base2 = off["ppt2"] + t * NUM_PRIMITIVES * NUM_PRIMITIVES
    if history.prev2 is not None:
        p2 = int(history.prev2.primitive)
        out += weights[base1 + p2 * NUM_PRIMITIVES : base1 + (p2 + 1) * NUM_PRIMITIVES]
    if history.prev1 is not None:
        p1 = int(history.prev1.primitive)
        out += weights[base2 + p1 * NUM_PRIMITIVES : base2 + (p1 + 1) * NUM_PRIMITIVES]
    return out


def multiclass_features(spec: TaskSpec, primitive: Primitive, history: F.History) -> np.ndarray:
    """Feature vector of a bare primitive: only task and transition blocks."""
    out = np.zeros(F.DIMENSION)
    out[F.block_slice("pt")] = F.phi_pt(primitive, spec.task)
    ppt1, ppt2 = F.phi_ppt(primitive, history, spec.task)
    out[F.block_slice("ppt1")] = ppt1
    out[F.block_slice("ppt2")] = ppt2
    return out


def predict_primitive(weights: np.ndarray, spec: TaskSpec, history: F.History) -> Primitive:
    return Primitive(int(np.argmax(multiclass_scores(weights, spec, history))))


# ---------------------------------------------------------------------------
# Closed-loop rollout


@dataclass
class RolloutResult:
    actions: list[Action]
    states: list[WorldState]
    reached_done: bool
    goal_satisfied: bool

    @property
    def final_state(self) -> WorldState:
        return self.states[-1]


def executable_top_k(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    history: F.History,
    k: int,
) -> list[ScoredAction]:
    """Best k proposals whose preconditions hold, in score order."""
    ctx = StepContext(state, spec, history)
    s = ctx.scores(weights)
    order = np.argsort(-s, kind="stable")
    out: list[ScoredAction] = []
    for idx in order:
        action = ctx.action_at(int(idx))
        if check_preconditions(state, action)[0]:
            out.append(ScoredAction(action, float(s[idx])))
            if len(out) == k:
                break
    return out


def rollout(
    weights: np.ndarray,
    state: WorldState,
    spec: TaskSpec,
    max_steps: int = DEFAULT_HORIZON,
    k: int = 1,
    select=None,
) -> RolloutResult:
    """Execute the policy until DONE or the step budget runs out.

    Proposals are the top-k executable actions; `select(step, state,
    proposals)` picks one (the top proposal when omitted). Precondition
    failures never surface here because blocked candidates are skipped.
    """
    history = F.EMPTY_HISTORY
    actions: list[Action] = []
    states = [state]
    reached_done = False
    for step in range(max_steps):
        proposals = executable_top_k(weights, state, spec, history, k)
        if not proposals:
            raise AbortedRollout(f"no executable action at step {step}")
        choice = proposals[0] if select is None else proposals[select(step, state, proposals)]
        actions.append(choice.action)
        state = apply_primitive(state, choice.action)
        states.append(state)
        history = history.advance(choice.action)
        if choice.action.primitive == Primitive.DONE:
            reached_done = True
            break
    return RolloutResult(actions, states, reached_done, task_goal_satisfied(states[-1], spec))


# ---------------------------------------------------------------------------
# Model file IO


def save_model(path, weights: np.ndarray, config: dict, kind: str = "full") -> None:
    """Write weights with the layout fingerprint and training configuration."""
    payload = {
        "format_version": 1,
        "kind": kind,
        "layout_hash": F.layout_hash(),
        "dimension": int(weights.shape[0]),
        "config": config,
        "weights_b64": base64.b64encode(np.asarray(weights, dtype="<f8").tobytes()).decode(),
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def load_model(path) -> tuple[np.ndarray, dict, str]:
    """Read a model file; rejects files built against another feature layout."""
    with open(path) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"not a model file: {e}") from e
    for key in ("format_version", "layout_hash", "weights_b64"):
        if key not in payload:
            raise ModelFormatError(f"missing field {key}")
    if payload["format_version"] != 1:
        raise ModelFormatError(f"unsupported format version {payload['format_version']}")
    if payload["layout_hash"] != F.layout_hash():
        raise ModelFormatError("model was trained against a different feature layout")
    raw = base64.b64decode(payload["weights_b64"])
    weights = np.frombuffer(raw, dtype="<f8").astype(float)
    if weights.shape[0] != F.DIMENSION:
        raise ModelFormatError("weight vector has the wrong dimension")
    return weights, payload.get("config", {}), payload.get("kind", "full")
