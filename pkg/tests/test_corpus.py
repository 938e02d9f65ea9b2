"""Scene generation, the scripted expert, perturbation, corpus files."""

from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest

from primseq.corpus import (
    FORMAT_VERSION,
    MAX_DEMO_STEPS,
    MIN_DEMO_STEPS,
    CorpusFormatError,
    ExpertError,
    GeneratorConfig,
    Sequence,
    action_from_dict,
    action_to_dict,
    corpus_hash,
    dumps_corpus,
    expert_demonstrate,
    expert_plan,
    generate_corpus,
    is_garbage_profile,
    is_stirrer_profile,
    load_corpus,
    perturb_attributes,
    replay_sequence,
    save_corpus,
)
from primseq.world import (
    FLAG_NAMES,
    NULL_ID,
    Action,
    Primitive,
    Task,
    TaskSpec,
    apply_primitive,
    task_goal_satisfied,
    validate_state,
)

from scenes import bin_, box, cup, scene, shelf, table, water

P = Primitive


def prims(actions):
    return [a.primitive for a in actions]


def pour_scene(robot=(2.0, -2.0), gripper=None):
    """Bottle of juice and an empty glass on one table."""
    return scene(
        [
            table(1, 0.0, 0.0),
            box(2, -0.6, 0.2, w=0.08, l=0.08, h=0.25, bottom=1.0, holds=3,
                movable=True, cylinder_shape=True),
            water(3, -0.6, 0.2, bottom=1.01),
            cup(4, 0.6, -0.2, bottom=1.0),
        ],
        robot=robot,
        gripper=gripper,
    )


# ---------------------------------------------------------------------------
# Object profiles


def test_stirrer_profile_wants_long_thin_rods():
    rod = box(9, 0, 0, w=0.03, l=0.03, h=0.3, movable=True, cylinder_shape=True)
    assert is_stirrer_profile(rod.attributes)
    thick = box(9, 0, 0, w=0.1, l=0.1, h=0.3, movable=True, cylinder_shape=True)
    assert not is_stirrer_profile(thick.attributes)
    assert not is_stirrer_profile(cup(9, 0, 0).attributes)


def test_garbage_profile_wants_large_containers():
    assert is_garbage_profile(bin_(9, 0, 0).attributes)
    assert not is_garbage_profile(cup(9, 0, 0).attributes)


# ---------------------------------------------------------------------------
# Scripted expert


def test_pour_demo_has_the_eight_step_shape():
    st = pour_scene()
    actions = expert_demonstrate(st, TaskSpec(Task.POUR_TO, 3, 4))
    assert prims(actions) == [
        P.MOVE_CLOSE,
        P.GRASP,
        P.MOVE_CLOSE,
        P.HOLD_ABOVE,
        P.FOLLOW_TRAJ_POUR,
        P.PLACE_ABOVE,
        P.RELEASE,
        P.DONE,
    ]
    assert actions[0].a1 == actions[1].a1 == 2
    assert actions[3] == Action(P.HOLD_ABOVE, 2, 4)
    assert actions[4] == Action(P.FOLLOW_TRAJ_POUR, 2, 4)
    assert actions[5] == Action(P.PLACE_ABOVE, 2, 1)


def test_pick_and_place_minimal_demo_is_four_steps_plus_done():
    objs = [table(1, 0.0, 0.0), cup(2, 0.3, 0.3, bottom=1.0), shelf(3, 2.0, 2.0)]
    st = scene(objs, robot=(0.35, 0.75))
    actions = expert_demonstrate(st, TaskSpec(Task.PICK_AND_PLACE, 2, 3))
    assert prims(actions) == [P.GRASP, P.MOVE_CLOSE, P.PLACE_ABOVE, P.RELEASE, P.DONE]
    assert len(actions) == 5


def test_pick_and_place_clears_a_blocker_first():
    objs = [
        table(1, 0.0, 0.0),
        box(2, 0.3, 0.3, w=0.3, l=0.3, h=0.1, bottom=1.0, movable=True),
        box(4, 0.3, 0.3, w=0.1, l=0.1, h=0.05, bottom=1.1, movable=True),
        shelf(3, 2.0, 2.0),
    ]
    st = scene(objs, robot=(2.5, -2.5))
    actions = expert_demonstrate(st, TaskSpec(Task.PICK_AND_PLACE, 2, 3))
    grabbed = [a.a1 for a in actions if a.primitive == P.GRASP]
    assert grabbed == [4, 2]


def test_stir_relocates_shelved_vessels_to_the_rod_table():
    objs = [
        table(1, 0.0, 0.0),
        shelf(2, 2.0, 2.0),
        cup(3, 2.0, 2.0, bottom=1.8, holds=4),
        water(4, 2.0, 2.0, bottom=1.81),
        box(5, 0.4, -0.3, w=0.03, l=0.03, h=0.28, bottom=1.0, movable=True, cylinder_shape=True),
    ]
    st = scene(objs, robot=(-2.0, -2.0))
    spec = TaskSpec(Task.STIR, 4)
    actions = expert_plan(st, spec)
    assert Action(P.PLACE_ABOVE, 3, 1) in actions
    assert Action(P.FOLLOW_TRAJ_CIRCLE, 3) in actions
    states = replay_sequence(Sequence("s", "e", spec, st, actions))
    assert task_goal_satisfied(apply_primitive(states[-1], actions[-1]), spec)


def test_throw_away_uses_the_garbage_container():
    objs = [
        table(1, 0.0, 0.0),
        box(2, 0.4, 0.2, w=0.06, l=0.05, h=0.04, bottom=1.0, movable=True),
        bin_(3, -1.8, -1.8),
    ]
    st = scene(objs, robot=(2.0, 2.0))
    actions = expert_demonstrate(st, TaskSpec(Task.THROW_AWAY, 2))
    assert Action(P.HOLD_ABOVE, 2, 3) in actions
    assert prims(actions)[-2:] == [P.RELEASE, P.DONE]


def test_expert_stows_held_cargo_before_working():
    st = pour_scene(robot=(0.6, -0.2), gripper=4)
    actions = expert_plan(st, TaskSpec(Task.POUR_TO, 3, 4))
    assert prims(actions[:2]) == [P.PLACE_ABOVE, P.RELEASE]
    assert actions[0].a1 == 4


def test_expert_plan_recovers_from_any_prefix_state():
    st = pour_scene()
    spec = TaskSpec(Task.POUR_TO, 3, 4)
    full = expert_plan(st, spec)
    state = st
    for i, action in enumerate(full[:-1]):
        state = apply_primitive(state, action)
        if task_goal_satisfied(state, spec):
            break
        resumed = expert_plan(state, spec)
        assert resumed[-1].primitive == P.DONE
        check = state
        for a in resumed:
            check = apply_primitive(check, a)
        assert task_goal_satisfied(check, spec)


def test_expert_rejects_satisfied_goals():
    st = pour_scene()
    spec = TaskSpec(Task.POUR_TO, 3, 4)
    done = st
    for a in expert_plan(st, spec):
        done = apply_primitive(done, a)
    with pytest.raises(ExpertError, match="already satisfied"):
        expert_demonstrate(done, spec)


def test_expert_rejects_stirless_scenes():
    objs = [table(1, 0.0, 0.0), cup(2, 0.3, 0.3, bottom=1.0, holds=3), water(3, 0.3, 0.3, bottom=1.01)]
    with pytest.raises(ExpertError, match="no stirrer"):
        expert_plan(scene(objs, robot=(2.0, 2.0)), TaskSpec(Task.STIR, 3))


# ---------------------------------------------------------------------------
# Generator


def test_generate_corpus_is_deterministic():
    cfg = GeneratorConfig(seed=7, environments=2, scenarios_per_environment=3)
    a = dumps_corpus(generate_corpus(cfg))
    b = dumps_corpus(generate_corpus(cfg))
    assert a == b
    assert a != dumps_corpus(generate_corpus(GeneratorConfig(seed=8, environments=2, scenarios_per_environment=3)))


def test_default_corpus_meets_the_dataset_contract(corpus):
    assert len(corpus) >= 127
    assert sum(len(s.actions) for s in corpus) >= 736
    assert {s.spec.task for s in corpus} == set(Task)
    assert len({s.scenario_id for s in corpus}) == len(corpus)
    assert len({s.environment_id for s in corpus}) == 13
    for seq in corpus:
        assert MIN_DEMO_STEPS <= len(seq.actions) <= MAX_DEMO_STEPS
        assert seq.actions[-1] == Action(P.DONE)
        assert seq.initial_state.robot.gripper is None


def test_default_corpus_replays_to_its_goals(corpus):
    for seq in corpus:
        states = replay_sequence(seq)
        final = apply_primitive(states[-1], seq.actions[-1])
        assert task_goal_satisfied(final, seq.spec), seq.scenario_id


def test_default_corpus_scenes_are_valid(corpus):
    for seq in corpus[:20]:
        assert validate_state(seq.initial_state) == []


# ---------------------------------------------------------------------------
# Attribute perturbation


def test_perturb_zero_probability_is_identity(corpus):
    rng = np.random.default_rng(0)
    st = corpus[0].initial_state
    assert perturb_attributes(st, 0.0, rng) == st


def test_perturb_one_inverts_every_flag(corpus):
    rng = np.random.default_rng(0)
    st = corpus[0].initial_state
    flipped = perturb_attributes(st, 1.0, rng)
    for oid in st.ids():
        before = st.obj(oid).attributes
        after = flipped.obj(oid).attributes
        for name in FLAG_NAMES:
            assert getattr(after, name) == (not getattr(before, name))
        assert after.height == before.height and after.volume == before.volume


def test_perturb_flip_rate_matches_probability(corpus):
    rng = np.random.default_rng(42)
    total = flips = 0
    for seq in corpus:
        st = seq.initial_state
        noisy = perturb_attributes(st, 0.1, rng)
        for oid in st.ids():
            before, after = st.obj(oid).attributes, noisy.obj(oid).attributes
            for name in FLAG_NAMES:
                total += 1
                flips += getattr(before, name) != getattr(after, name)
    assert total >= 10_000
    assert flips / total == pytest.approx(0.1, abs=0.01)


def test_perturb_leaves_geometry_and_actions_alone(corpus):
    rng = np.random.default_rng(1)
    seq = corpus[0]
    noisy = perturb_attributes(seq.initial_state, 0.5, rng)
    for oid in seq.initial_state.ids():
        assert noisy.obj(oid).center == seq.initial_state.obj(oid).center
        assert noisy.obj(oid).contained_liquid == seq.initial_state.obj(oid).contained_liquid


# ---------------------------------------------------------------------------
# Corpus files


def test_corpus_roundtrip(tmp_path, corpus):
    path = tmp_path / "corpus.jsonl"
    save_corpus(path, corpus[:10])
    loaded = load_corpus(path)
    assert dumps_corpus(loaded) == dumps_corpus(corpus[:10])
    assert loaded[0] == corpus[0]


def test_corpus_lines_are_one_record_each(corpus):
    lines = dumps_corpus(corpus[:3]).splitlines()
    assert len(lines) == 3
    record = json.loads(lines[0])
    assert record["format_version"] == FORMAT_VERSION
    assert set(record) == {
        "format_version",
        "scenario_id",
        "environment_id",
        "task",
        "task_args",
        "environment",
        "steps",
    }


def test_corpus_hash_is_sha256_of_the_dump(corpus):
    data = dumps_corpus(corpus[:5])
    assert corpus_hash(corpus[:5]) == hashlib.sha256(data.encode()).hexdigest()


def test_load_corpus_reports_malformed_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"format_version": 1\n')
    with pytest.raises(CorpusFormatError, match="line 1"):
        load_corpus(path)


def test_load_corpus_rejects_other_versions(tmp_path, corpus):
    record = json.loads(dumps_corpus(corpus[:1]))
    record["format_version"] = 99
    path = tmp_path / "v99.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(CorpusFormatError, match="format_version"):
        load_corpus(path)


def test_load_corpus_rejects_missing_fields(tmp_path, corpus):
    record = json.loads(dumps_corpus(corpus[:1]))
    del record["task_args"]
    path = tmp_path / "short.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(CorpusFormatError, match="line 1"):
        load_corpus(path)


def test_action_dict_roundtrip():
    for action in [Action(P.DONE), Action(P.GRASP, 4), Action(P.FOLLOW_TRAJ_POUR, 2, 9)]:
        d = action_to_dict(action)
        assert action_from_dict(d) == action
        assert d["primitive"] == action.primitive.name.lower()
    assert action_to_dict(Action(P.DONE))["a1"] == NULL_ID
