"""Experiment harness: cross-validation, noise sweeps, feedback, recipes."""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import features as F
from .corpus import (
    ExpertError,
    GenerationError,
    Sequence,
    _build_environment,
    _is_small_empty_container,
    _pick_garbage,
    _sample_robot,
    action_to_dict,
    corpus_hash,
    expert_plan,
    is_garbage_profile,
    is_stirrer_profile,
    perturb_attributes,
    replay_sequence,
)
from .learn import TrainConfig, train, train_multiclass
from .model import (
    DEFAULT_HORIZON,
    AbortedRollout,
    RolloutResult,
    StepContext,
    enumerate_actions,
    rollout,
)
from .world import (
    NULL_ID,
    Action,
    Primitive,
    Task,
    TaskSpec,
    WorldError,
    WorldState,
    apply_primitive,
    check_preconditions,
    container_of,
    object_directly_below,
    task_goal_satisfied,
)

NON_DONE = tuple(p for p in Primitive if p is not Primitive.DONE)

# Slack penalty for reported experiments, chosen by a 6-fold validation sweep
# over {1e2, 1e3, 3e3}: 1e3 maximizes sequence accuracy while every fold still
# converges well inside the iteration cap.  TrainConfig keeps a conservative
# default for generic use.
DEFAULT_EVAL_C = 1000.0


class SessionError(RuntimeError):
    """Interactive feedback was requested without a connected session."""


class FeedbackMode(enum.Enum):
    NONE = "none"
    ORACLE_TOPK = "oracle_topk"
    INTERACTIVE = "interactive"


class FeedbackScope(enum.Enum):
    FIRST_STEP = "first_step"
    ALL_STEPS = "all_steps"


@dataclass(frozen=True)
class FeedbackPolicy:
    """How proposals are surfaced to an observer during rollout."""

    mode: FeedbackMode = FeedbackMode.NONE
    k: int = 1
    scope: FeedbackScope = FeedbackScope.ALL_STEPS

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass(frozen=True)
class FoldStats:
    """Per-fold accounting used for report assembly and sanity checks."""

    fold: int
    sequences: int
    steps: int
    teacher_step_prim: float
    teacher_step_full: float
    closed_step_prim: float
    closed_step_full: float
    train_iterations: int
    converged: bool


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated accuracies; every percentage is recomputable from `raw`.

    per_primitive maps each primitive with support to (primitive accuracy,
    full-action accuracy) percentages under teacher forcing. macro_average
    averages those columns over the non-DONE primitives. sequence_accuracy
    is (primitives-only, full-action) exact-match percentages of closed-loop
    rollouts against the demonstrations. confusion counts (truth, predicted)
    primitive pairs, indexed by primitive value.
    """

    per_primitive: dict[Primitive, tuple[float | None, float | None]]
    macro_average: tuple[float | None, float | None]
    sequence_accuracy: tuple[float | None, float | None]
    confusion: np.ndarray
    support: dict[Primitive, int]
    seed: int
    corpus_hash: str
    folds: tuple[FoldStats, ...] = ()
    raw: tuple[dict, ...] = ()

    def __post_init__(self):
        for pair in list(self.per_primitive.values()) + [
            self.macro_average,
            self.sequence_accuracy,
        ]:
            for value in pair:
                if value is not None and not 0.0 <= value <= 100.0:
                    raise ValueError(f"accuracy {value} outside [0, 100]")
        for p in Primitive:
            row = int(self.confusion[int(p)].sum())
            if row != self.support.get(p, 0):
                raise ValueError(f"confusion row {p.name} != support")


class _Tally:
    """Mutable step/sequence counters merged across folds."""

    def __init__(self, track_args: bool, track_sequences: bool):
        self.track_args = track_args
        self.track_sequences = track_sequences
        self.support = {p: 0 for p in Primitive}
        self.prim_hits = {p: 0 for p in Primitive}
        self.arg_hits = {p: 0 for p in Primitive}
        self.confusion = np.zeros((len(Primitive), len(Primitive)), dtype=int)
        self.sequences = 0
        self.seq_prim = 0
        self.seq_full = 0

    def step(self, truth: Action, predicted_prim: Primitive, full_hit: bool | None):
        p = truth.primitive
        self.support[p] += 1
        self.confusion[int(p), int(predicted_prim)] += 1
        if predicted_prim == p:
            self.prim_hits[p] += 1
        if full_hit:
            self.arg_hits[p] += 1

    def sequence(self, truth: tuple[Action, ...], predicted: tuple[Action, ...]):
        self.sequences += 1
        if tuple(a.primitive for a in predicted) == tuple(a.primitive for a in truth):
            self.seq_prim += 1
        if predicted == truth:
            self.seq_full += 1

    def merge(self, other: "_Tally"):
        for p in Primitive:
            self.support[p] += other.support[p]
            self.prim_hits[p] += other.prim_hits[p]
            self.arg_hits[p] += other.arg_hits[p]
        self.confusion += other.confusion
        self.sequences += other.sequences
        self.seq_prim += other.seq_prim
        self.seq_full += other.seq_full

    def report(self, seed: int, digest: str, folds=(), raw=()) -> MetricsReport:
        per_primitive = {}
        for p in Primitive:
            n = self.support[p]
            if n == 0:
                continue
            arg = 100.0 * self.arg_hits[p] / n if self.track_args else None
            per_primitive[p] = (100.0 * self.prim_hits[p] / n, arg)
        scored = [per_primitive[p] for p in NON_DONE if p in per_primitive]
        macro_prim = float(np.mean([v[0] for v in scored])) if scored else None
        macro_arg = (
            float(np.mean([v[1] for v in scored])) if scored and self.track_args else None
        )
        if self.track_sequences and self.sequences:
            seq = (
                100.0 * self.seq_prim / self.sequences,
                100.0 * self.seq_full / self.sequences,
            )
        else:
            seq = (None, None)
        return MetricsReport(
            per_primitive=per_primitive,
            macro_average=(macro_prim, macro_arg),
            sequence_accuracy=seq,
            confusion=self.confusion.copy(),
            support=dict(self.support),
            seed=seed,
            corpus_hash=digest,
            folds=tuple(folds),
            raw=tuple(raw),
        )


def fold_indices(count: int, folds: int, seed: int) -> list[list[int]]:
    """Disjoint test folds covering range(count), shuffled by the seed."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(count)
    return [sorted(int(i) for i in order[f::folds]) for f in range(folds)]


def confusion_matrix(predictions, truths) -> np.ndarray:
    """Counts of (truth primitive, predicted primitive) over aligned lists."""
    if len(predictions) != len(truths):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths"
        )
    out = np.zeros((len(Primitive), len(Primitive)), dtype=int)
    for pred, truth in zip(predictions, truths):
        out[int(truth), int(pred)] += 1
    return out


def _record_rollout(weights, seq: Sequence, k: int):
    """Autonomous rollout plus the proposal lists seen at each step."""
    proposal_log: list[list] = []

    def keep_top(step, state, proposals):
        proposal_log.append(proposals)
        return 0

    result = rollout(weights, seq.initial_state, seq.spec, k=k, select=keep_top)
    return result, proposal_log


def _closed_loop_hits(truth: tuple[Action, ...], predicted: list[Action]) -> tuple[int, int]:
    prim = full = 0
    for i, action in enumerate(truth):
        if i < len(predicted) and predicted[i].primitive == action.primitive:
            prim += 1
        if i < len(predicted) and predicted[i] == action:
            full += 1
    return prim, full


def _evaluate_full_fold(fold: int, weights, seqs: list[Sequence], top_k: int):
    tally = _Tally(track_args=True, track_sequences=True)
    raw: list[dict] = []
    teacher_prim = teacher_full = closed_prim = closed_full = steps = 0
    for seq in seqs:
        states = replay_sequence(seq)
        history = F.EMPTY_HISTORY
        for i, (state, truth) in enumerate(zip(states, seq.actions)):
            ctx = StepContext(state, seq.spec, history)
            scores = ctx.scores(weights)
            order = np.argsort(-scores, kind="stable")[:top_k]
            pred = ctx.action_at(int(order[0]))
            tally.step(truth, pred.primitive, pred == truth)
            steps += 1
            teacher_prim += pred.primitive == truth.primitive
            teacher_full += pred == truth
            raw.append(
                {
                    "phase": "teacher",
                    "fold": fold,
                    "scenario_id": seq.scenario_id,
                    "step": i,
                    "truth": action_to_dict(truth),
                    "predicted": action_to_dict(pred),
                    "top_k": [
                        {"action": action_to_dict(ctx.action_at(int(j))), "score": float(scores[j])}
                        for j in order
                    ],
                }
            )
            history = history.advance(truth)
        result, proposal_log = _record_rollout(weights, seq, top_k)
        tally.sequence(seq.actions, tuple(result.actions))
        prim, full = _closed_loop_hits(seq.actions, result.actions)
        closed_prim += prim
        closed_full += full
        for i, (action, proposals) in enumerate(zip(result.actions, proposal_log)):
            truth = action_to_dict(seq.actions[i]) if i < len(seq.actions) else None
            raw.append(
                {
                    "phase": "rollout",
                    "fold": fold,
                    "scenario_id": seq.scenario_id,
                    "step": i,
                    "truth": truth,
                    "predicted": action_to_dict(action),
                    "top_k": [
                        {"action": action_to_dict(sa.action), "score": sa.score}
                        for sa in proposals
                    ],
                }
            )
    return tally, raw, (teacher_prim, teacher_full, closed_prim, closed_full, steps)


def _evaluate_multiclass_fold(fold: int, weights, seqs: list[Sequence], top_k: int):
    from .model import multiclass_scores

    tally = _Tally(track_args=False, track_sequences=False)
    raw: list[dict] = []
    teacher_prim = steps = 0
    for seq in seqs:
        history = F.EMPTY_HISTORY
        for i, truth in enumerate(seq.actions):
            scores = multiclass_scores(weights, seq.spec, history)
            order = np.argsort(-scores, kind="stable")[:top_k]
            pred = Primitive(int(order[0]))
            tally.step(truth, pred, None)
            steps += 1
            teacher_prim += pred == truth.primitive
            raw.append(
                {
                    "phase": "teacher",
                    "fold": fold,
                    "scenario_id": seq.scenario_id,
                    "step": i,
                    "truth": {"primitive": truth.primitive.name.lower()},
                    "predicted": {"primitive": pred.name.lower()},
                    "top_k": [
                        {
                            "action": {"primitive": Primitive(int(j)).name.lower()},
                            "score": float(scores[j]),
                        }
                        for j in order
                    ],
                }
            )
            history = history.advance(truth)
    return tally, raw, (teacher_prim, None, None, None, steps)


def cross_validate(
    corpus: list[Sequence],
    config: TrainConfig = TrainConfig(),
    folds: int = 6,
    kind: str = "full",
    top_k: int = 3,
    max_workers: int | None = None,
) -> MetricsReport:
    """Seeded k-fold evaluation: teacher-forced steps, closed-loop sequences."""
    if len(corpus) < folds:
        raise ValueError(f"corpus of {len(corpus)} sequences cannot fill {folds} folds")
    if kind not in ("full", "multiclass"):
        raise ValueError(f"unknown model kind {kind!r}")
    splits = fold_indices(len(corpus), folds, config.seed)

    def run(fold: int):
        held = set(splits[fold])
        train_seqs = [corpus[i] for i in range(len(corpus)) if i not in held]
        test_seqs = [corpus[i] for i in splits[fold]]
        if kind == "full":
            outcome = train(train_seqs, config)
            tally, raw, counts = _evaluate_full_fold(fold, outcome.weights, test_seqs, top_k)
        else:
            outcome = train_multiclass(train_seqs, config)
            tally, raw, counts = _evaluate_multiclass_fold(
                fold, outcome.weights, test_seqs, top_k
            )
        teacher_prim, teacher_full, closed_prim, closed_full, steps = counts
        stats = FoldStats(
            fold=fold,
            sequences=len(test_seqs),
            steps=steps,
            teacher_step_prim=100.0 * teacher_prim / steps,
            teacher_step_full=100.0 * teacher_full / steps if teacher_full is not None else float("nan"),
            closed_step_prim=100.0 * closed_prim / steps if closed_prim is not None else float("nan"),
            closed_step_full=100.0 * closed_full / steps if closed_full is not None else float("nan"),
            train_iterations=outcome.iterations,
            converged=outcome.converged,
        )
        return tally, raw, stats

    with ThreadPoolExecutor(max_workers=max_workers or folds) as pool:
        results = list(pool.map(run, range(folds)))

    total = _Tally(track_args=kind == "full", track_sequences=kind == "full")
    raw: list[dict] = []
    stats: list[FoldStats] = []
    for tally, fold_raw, fold_stats in results:
        total.merge(tally)
        raw.extend(fold_raw)
        stats.append(fold_stats)
    return total.report(config.seed, corpus_hash(corpus), stats, raw)


# ---------------------------------------------------------------------------
# Attribute-noise robustness


def noise_sweep(
    corpus: list[Sequence],
    model_config: TrainConfig = TrainConfig(),
    probabilities=(0.0, 0.1, 0.2, 0.3, 0.4),
    noise_seeds=(0, 1, 2, 3, 4),
    weights: np.ndarray | None = None,
    max_workers: int | None = None,
) -> list[tuple[float, float]]:
    """Full-sequence accuracy vs attribute flip probability at inference.

    The model is trained once on the clean corpus; each probability is
    averaged over the noise seeds, perturbing every scenario independently.
    """
    for p in probabilities:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"flip probability {p} outside [0, 1]")
    if weights is None:
        weights = train(corpus, model_config).weights

    def run(job: tuple[float, int]) -> float:
        p, noise_seed = job
        hits = 0
        for idx, seq in enumerate(corpus):
            rng = np.random.default_rng(np.random.SeedSequence([noise_seed, idx]))
            noisy = perturb_attributes(seq.initial_state, p, rng)
            try:
                result = rollout(weights, noisy, seq.spec)
            except AbortedRollout:
                continue
            hits += tuple(result.actions) == seq.actions
        return 100.0 * hits / len(corpus)

    jobs = [(float(p), int(s)) for p in probabilities for s in noise_seeds]
    with ThreadPoolExecutor(max_workers=max_workers or len(noise_seeds)) as pool:
        accs = list(pool.map(run, jobs))
    out = []
    for i, p in enumerate(probabilities):
        block = accs[i * len(noise_seeds) : (i + 1) * len(noise_seeds)]
        out.append((float(p), float(np.mean(block))))
    return out


# ---------------------------------------------------------------------------
# Observer feedback


def _oracle_select(policy: FeedbackPolicy, truth_at):
    """Rollout hook picking the known-good action when it is on screen."""

    def select(step, state, proposals):
        if policy.scope is FeedbackScope.FIRST_STEP and step > 0:
            return 0
        truth = truth_at(step, state)
        if truth is not None:
            for j, scored in enumerate(proposals):
                if scored.action == truth:
                    return j
        return 0

    return select


def feedback_eval(
    corpus: list[Sequence],
    model: np.ndarray,
    policy: FeedbackPolicy,
    driver=None,
) -> float:
    """Full-sequence accuracy of rollouts steered by the feedback policy."""
    if policy.mode is FeedbackMode.INTERACTIVE and driver is None:
        raise SessionError("interactive feedback requires a connected session")
    hits = 0
    for seq in corpus:
        if policy.mode is FeedbackMode.NONE:
            k, select = 1, None
        elif policy.mode is FeedbackMode.INTERACTIVE:
            k, select = policy.k, driver
        else:
            truth_at = lambda step, state, actions=seq.actions: (
                actions[step] if step < len(actions) else None
            )
            k, select = policy.k, _oracle_select(policy, truth_at)
        result = rollout(model, seq.initial_state, seq.spec, k=k, select=select)
        hits += tuple(result.actions) == seq.actions
    return 100.0 * hits / len(corpus)


# ---------------------------------------------------------------------------
# Recipe chaining


class ChainAborted(Exception):
    """A recipe rollout ran out of executable actions; carries the trace."""

    def __init__(self, message: str, trace: list[Action]):
        super().__init__(message)
        self.trace = trace


@dataclass
class ChainResult:
    success: bool
    trace: list[Action]
    segments: list[RolloutResult]
    goals: list[bool]


def chain_tasks(
    recipe: list[TaskSpec],
    state: WorldState,
    model: np.ndarray,
    policy: FeedbackPolicy | None = None,
    driver=None,
) -> ChainResult:
    """Run one rollout per task, threading each final state into the next.

    Success means every task's goal holds when its rollout ends. A task
    whose goal already holds is skipped and contributes an empty segment.
    With an ORACLE_TOPK policy the oracle replans the scripted expert from
    the current state and picks its next action when it appears among the
    proposals.
    """
    if policy is not None and policy.mode is FeedbackMode.INTERACTIVE and driver is None:
        raise SessionError("interactive feedback requires a connected session")
    trace: list[Action] = []
    segments: list[RolloutResult] = []
    goals: list[bool] = []
    for spec in recipe:
        if task_goal_satisfied(state, spec):
            segments.append(RolloutResult([], [state], True, True))
            goals.append(True)
            continue
        if policy is None or policy.mode is FeedbackMode.NONE:
            k, select = 1, None
        elif policy.mode is FeedbackMode.INTERACTIVE:
            k, select = policy.k, driver
        else:
            k = policy.k
            select = _oracle_select(policy, lambda step, s, spec=spec: _expert_next(s, spec))
        try:
            result = rollout(model, state, spec, k=k, select=select)
        except AbortedRollout as exc:
            raise ChainAborted(str(exc), trace) from exc
        trace.extend(result.actions)
        segments.append(result)
        goals.append(result.goal_satisfied)
        state = result.final_state
    return ChainResult(all(goals), trace, segments, goals)


def _expert_next(state: WorldState, spec: TaskSpec) -> Action | None:
    """Next scripted-expert action from this state, if one can be planned."""
    if task_goal_satisfied(state, spec):
        return Action(Primitive.DONE)
    try:
        return expert_plan(state, spec)[0]
    except ExpertError:
        return None


# ---------------------------------------------------------------------------
# Recipe scenarios


@dataclass(frozen=True)
class RecipeScenario:
    name: str
    recipe: tuple[TaskSpec, ...]
    initial_state: WorldState


def _sorted_vessels(state: WorldState) -> list:
    pool = [o for o in state.objects.values() if _is_small_empty_container(o)]
    return sorted(pool, key=lambda o: (o.attributes.volume, o.id))


def _holder(state: WorldState, liquid_id: int):
    hid = container_of(state, liquid_id)
    return state.obj(hid) if hid != NULL_ID else None


def _bottled_liquids(state: WorldState) -> list:
    out = []
    for o in state.objects.values():
        if not o.attributes.liquid:
            continue
        holder = _holder(state, o.id)
        if holder is not None and not holder.attributes.container:
            out.append(o)
    return sorted(out, key=lambda o: o.id)


def _potted_liquids(state: WorldState) -> list:
    out = []
    for o in state.objects.values():
        if not o.attributes.liquid:
            continue
        holder = _holder(state, o.id)
        if holder is not None and holder.attributes.container and holder.attributes.movable:
            out.append(o)
    return sorted(out, key=lambda o: o.id)


def _recipe_sweet_tea(state: WorldState):
    """Pour from the bottle, transfer to a second vessel, stir it there."""
    bottled = _bottled_liquids(state)
    vessels = _sorted_vessels(state)
    stirrers = [o for o in state.objects.values() if is_stirrer_profile(o.attributes)]
    if not bottled or len(vessels) < 2 or not stirrers:
        return None
    liquid = bottled[0].id
    return (
        TaskSpec(Task.POUR, liquid),
        TaskSpec(Task.POUR_TO, liquid, vessels[1].id),
        TaskSpec(Task.STIR, liquid),
    )


def _recipe_serve_drinks(state: WorldState):
    """Pour two different liquids into their own vessels."""
    liquids = sorted(
        (o for o in state.objects.values() if o.attributes.liquid), key=lambda o: o.id
    )
    vessels = _sorted_vessels(state)
    if len(liquids) < 2 or len(vessels) < 2:
        return None
    return (
        TaskSpec(Task.POUR_TO, liquids[0].id, vessels[0].id),
        TaskSpec(Task.POUR_TO, liquids[1].id, vessels[1].id),
    )


def _recipe_empty_and_discard(state: WorldState):
    """Decant a pot into a vessel, then throw the emptied pot away."""
    potted = _potted_liquids(state)
    vessels = _sorted_vessels(state)
    if not potted or not vessels:
        return None
    for liquid in potted:
        pot = _holder(state, liquid.id)
        try:
            bin_id = _pick_garbage(state, exclude=pot.id)
        except ExpertError:
            return None
        bin_obj = state.obj(bin_id)
        if max(pot.dims[0], pot.dims[1]) + 0.04 < bin_obj.dims[0]:
            return (
                TaskSpec(Task.POUR_TO, liquid.id, vessels[0].id),
                TaskSpec(Task.THROW_AWAY, pot.id),
            )
    return None


def _recipe_serve_and_store(state: WorldState):
    """Bring a vessel to a table, then store a bottle on the shelf."""
    vessels = _sorted_vessels(state)
    bottled = _bottled_liquids(state)
    if not vessels or not bottled:
        return None
    cup = vessels[0]
    bottle = _holder(state, bottled[0].id)
    tables = sorted(
        o.id
        for o in state.objects.values()
        if o.attributes.large_horizontal_surface
        and not o.attributes.multiple_large_horizontal_surface
        and o.id not in (object_directly_below(state, cup.id), cup.id)
    )
    shelves = sorted(
        o.id
        for o in state.objects.values()
        if o.attributes.multiple_large_horizontal_surface
        and o.id != object_directly_below(state, bottle.id)
    )
    if not tables or not shelves:
        return None
    return (
        TaskSpec(Task.PICK_AND_PLACE, cup.id, tables[0]),
        TaskSpec(Task.PICK_AND_PLACE, bottle.id, shelves[0]),
    )


_RECIPES = (
    ("sweet-tea", _recipe_sweet_tea),
    ("serve-drinks", _recipe_serve_drinks),
    ("empty-and-discard", _recipe_empty_and_discard),
    ("serve-and-store", _recipe_serve_and_store),
)


def _expert_chain_ok(state: WorldState, recipe) -> bool:
    """True when scripted plans complete every task in order from here."""
    try:
        for spec in recipe:
            for action in expert_plan(state, spec):
                state = apply_primitive(state, action)
    except (ExpertError, WorldError):
        return False
    return True


def recipe_scenarios(seed: int = 0, per_recipe: int = 3) -> list[RecipeScenario]:
    """Freshly generated scenes, each paired with one multi-task recipe."""
    out: list[RecipeScenario] = []
    for r_idx, (name, template) in enumerate(_RECIPES):
        made = 0
        for attempt in range(200):
            rng = np.random.default_rng(np.random.SeedSequence([seed, r_idx, attempt]))
            try:
                # Open-table scenes only: every recipe step needs a surface the
                # goal tests accept, and shelf-bound vessels rarely qualify.
                objects = _build_environment(rng, shelf_heavy=False)
                state = WorldState(objects, _sample_robot(rng, objects))
            except GenerationError:
                continue
            recipe = template(state)
            if recipe is None or not _expert_chain_ok(state, recipe):
                continue
            out.append(RecipeScenario(f"{name}-{made}", recipe, state))
            made += 1
            if made == per_recipe:
                break
        if made < per_recipe:
            raise GenerationError(f"could not assemble {per_recipe} {name} scenes")
    return out


# ---------------------------------------------------------------------------
# Baselines


def chance_baseline(state: WorldState, rng: np.random.Generator) -> Action:
    """Uniform primitive class, then uniform arguments, over the enumeration.

    The two-stage draw keeps each of the seven non-DONE primitives equally
    likely, so expected primitive accuracy is 1/7 against any step labels.
    """
    by_prim: dict[Primitive, list[Action]] = {}
    for action in enumerate_actions(state):
        if action.primitive is not Primitive.DONE:
            by_prim.setdefault(action.primitive, []).append(action)
    prims = sorted(by_prim)
    prim = prims[int(rng.integers(len(prims)))]
    pool = by_prim[prim]
    return pool[int(rng.integers(len(pool)))]


def _chance_rollout(
    state: WorldState, rng: np.random.Generator, max_steps: int = DEFAULT_HORIZON
) -> list[Action]:
    """Chance policy restricted to executable actions so it can be applied."""
    actions: list[Action] = []
    for _ in range(max_steps):
        by_prim: dict[Primitive, list[Action]] = {}
        for action in enumerate_actions(state):
            if action.primitive is not Primitive.DONE and check_preconditions(state, action)[0]:
                by_prim.setdefault(action.primitive, []).append(action)
        if not by_prim:
            break
        prims = sorted(by_prim)
        pool = by_prim[prims[int(rng.integers(len(prims)))]]
        action = pool[int(rng.integers(len(pool)))]
        actions.append(action)
        state = apply_primitive(state, action)
    return actions


def chance_metrics(corpus: list[Sequence], seed: int = 0) -> MetricsReport:
    """MetricsReport for the chance policy on the given demonstrations."""
    rng = np.random.default_rng(seed)
    tally = _Tally(track_args=True, track_sequences=True)
    raw: list[dict] = []
    for seq in corpus:
        states = replay_sequence(seq)
        for i, (state, truth) in enumerate(zip(states, seq.actions)):
            pred = chance_baseline(state, rng)
            tally.step(truth, pred.primitive, pred == truth)
            raw.append(
                {
                    "phase": "teacher",
                    "fold": None,
                    "scenario_id": seq.scenario_id,
                    "step": i,
                    "truth": action_to_dict(truth),
                    "predicted": action_to_dict(pred),
                    "top_k": [],
                }
            )
        predicted = _chance_rollout(seq.initial_state, rng)
        tally.sequence(seq.actions, tuple(predicted))
    return tally.report(seed, corpus_hash(corpus), (), raw)


# ---------------------------------------------------------------------------
# Report files


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "per_primitive": {
            p.name.lower(): {"prim": v[0], "arg": v[1]} for p, v in report.per_primitive.items()
        },
        "macro_average": {"prim": report.macro_average[0], "arg": report.macro_average[1]},
        "sequence_accuracy": {
            "prim_only": report.sequence_accuracy[0],
            "full": report.sequence_accuracy[1],
        },
        "confusion": report.confusion.tolist(),
        "primitive_order": [p.name.lower() for p in Primitive],
        "support": {p.name.lower(): n for p, n in report.support.items()},
        "seed": report.seed,
        "corpus_hash": report.corpus_hash,
        "folds": [
            {
                "fold": s.fold,
                "sequences": s.sequences,
                "steps": s.steps,
                "teacher_step_prim": s.teacher_step_prim,
                "teacher_step_full": s.teacher_step_full,
                "closed_step_prim": s.closed_step_prim,
                "closed_step_full": s.closed_step_full,
                "train_iterations": s.train_iterations,
                "converged": s.converged,
            }
            for s in report.folds
        ],
        "raw": list(report.raw),
    }


def save_report(path, report: MetricsReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, sort_keys=True, indent=1)
        fh.write("\n")
