"""Command-line entry points wrapping corpus, training, evaluation, serving."""

from __future__ import annotations

import argparse
import json
import sys

from .corpus import (
    CorpusFormatError,
    CorpusIntegrityError,
    GenerationError,
    GeneratorConfig,
    corpus_hash,
    generate_corpus,
    load_corpus,
    save_corpus,
)
from .evaluation import (
    DEFAULT_EVAL_C,
    ChainAborted,
    FeedbackMode,
    FeedbackPolicy,
    FeedbackScope,
    MetricsReport,
    SessionError,
    chain_tasks,
    cross_validate,
    feedback_eval,
    noise_sweep,
    recipe_scenarios,
    report_to_dict,
    save_report,
)
from .learn import TrainConfig, train, train_multiclass
from .model import ModelFormatError, load_model, rollout, save_model
from .world import WorldError


def _add_train_flags(p: argparse.ArgumentParser, default_c: float) -> None:
    p.add_argument("--C", type=float, default=default_c, help="slack penalty")
    p.add_argument("--epsilon", type=float, default=0.01, help="convergence tolerance")
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("full", "multiclass"), default="full")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primseq", description="Task-sequencing models over simulated scenes."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a demonstration corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--environments", type=int, default=13)
    p.add_argument("--scenarios-per-environment", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="fit weights on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write the training log here instead of stdout")
    _add_train_flags(p, default_c=100.0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated metrics report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--folds", type=int, default=6)
    p.add_argument("--out", help="write the JSON report (with raw predictions) here")
    _add_train_flags(p, default_c=DEFAULT_EVAL_C)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("noise-sweep", help="sequence accuracy vs attribute noise")
    p.add_argument("--corpus", required=True)
    p.add_argument("--noise-probs", default="0,0.1,0.2,0.3,0.4")
    p.add_argument("--noise-seeds", type=int, default=5)
    p.add_argument("--out")
    _add_train_flags(p, default_c=DEFAULT_EVAL_C)
    p.set_defaults(func=_cmd_noise_sweep)

    p = sub.add_parser("feedback-eval", help="rollouts steered by a top-k oracle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--scope", choices=("first", "all"), default="all")
    p.set_defaults(func=_cmd_feedback_eval)

    p = sub.add_parser("rollout", help="run one scenario autonomously")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("chain", help="run multi-task recipes")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", help="run only the named recipe scenario")
    p.add_argument("--oracle", action="store_true", help="steer with the top-k oracle")
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=_cmd_chain)

    p = sub.add_parser("serve", help="HTTP session service for observer clients")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=_cmd_serve)

    return parser


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        C=args.C,
        epsilon=args.epsilon,
        max_iterations=args.max_iterations,
        seed=args.seed,
    )


def _cmd_generate(args) -> int:
    config = GeneratorConfig(
        seed=args.seed,
        environments=args.environments,
        scenarios_per_environment=args.scenarios_per_environment,
    )
    sequences = generate_corpus(config)
    save_corpus(args.out, sequences)
    steps = sum(len(s.actions) for s in sequences)
    print(
        f"wrote {len(sequences)} sequences ({steps} steps) to {args.out} "
        f"sha256={corpus_hash(sequences)[:16]}"
    )
    return 0


def _cmd_train(args) -> int:
    sequences = load_corpus(args.corpus)
    config = _train_config(args)
    sink = open(args.log, "w") if args.log else sys.stdout
    try:
        log = lambda line: print(line, file=sink)
        fit = train if args.kind == "full" else train_multiclass
        report = fit(sequences, config, log=log)
    finally:
        if sink is not sys.stdout:
            sink.close()
    save_model(
        args.out,
        report.weights,
        {
            "C": config.C,
            "epsilon": config.epsilon,
            "max_iterations": config.max_iterations,
            "seed": config.seed,
        },
        kind=args.kind,
    )
    print(
        f"trained {args.kind} model: iterations={report.iterations} "
        f"converged={report.converged} objective={report.final_objective:.6g} -> {args.out}"
    )
    return 0 if report.converged else 1


def _fmt(value) -> str:
    return "   -" if value is None else f"{value:5.1f}"


def _print_report(report: MetricsReport) -> None:
    print(f"{'primitive':<20} {'prim%':>6} {'arg%':>6}")
    for prim, (prim_acc, arg_acc) in report.per_primitive.items():
        print(f"{prim.name.lower():<20} {_fmt(prim_acc):>6} {_fmt(arg_acc):>6}")
    macro_prim, macro_arg = report.macro_average
    print(f"{'macro (non-done)':<20} {_fmt(macro_prim):>6} {_fmt(macro_arg):>6}")
    seq_prim, seq_full = report.sequence_accuracy
    print(f"sequence accuracy: primitives {_fmt(seq_prim).strip()} full {_fmt(seq_full).strip()}")
    print(f"corpus sha256={report.corpus_hash[:16]} seed={report.seed}")


def _cmd_evaluate(args) -> int:
    sequences = load_corpus(args.corpus)
    report = cross_validate(sequences, _train_config(args), folds=args.folds, kind=args.kind)
    _print_report(report)
    if args.out:
        save_report(args.out, report)
        print(f"report written to {args.out}")
    return 0


def _cmd_noise_sweep(args) -> int:
    sequences = load_corpus(args.corpus)
    try:
        probabilities = [float(tok) for tok in args.noise_probs.split(",") if tok.strip()]
    except ValueError:
        print(f"error: bad --noise-probs {args.noise_probs!r}", file=sys.stderr)
        return 2
    results = noise_sweep(
        sequences,
        _train_config(args),
        probabilities=probabilities,
        noise_seeds=tuple(range(args.noise_seeds)),
    )
    for p, acc in results:
        print(f"p={p:g} sequence_accuracy={acc:.2f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "probabilities": [p for p, _ in results],
                    "sequence_accuracy": [a for _, a in results],
                    "noise_seeds": args.noise_seeds,
                    "corpus_hash": corpus_hash(sequences),
                    "seed": args.seed,
                },
                fh,
                sort_keys=True,
                indent=1,
            )
            fh.write("\n")
    return 0


def _cmd_feedback_eval(args) -> int:
    sequences = load_corpus(args.corpus)
    weights, _, kind = load_model(args.model)
    if kind != "full":
        print("error: feedback evaluation needs a full model", file=sys.stderr)
        return 1
    policy = FeedbackPolicy(
        mode=FeedbackMode.ORACLE_TOPK,
        k=args.k,
        scope=FeedbackScope.FIRST_STEP if args.scope == "first" else FeedbackScope.ALL_STEPS,
    )
    accuracy = feedback_eval(sequences, weights, policy)
    print(f"k={args.k} scope={args.scope} sequence_accuracy={accuracy:.2f}")
    return 0


def _cmd_rollout(args) -> int:
    sequences = load_corpus(args.corpus)
    weights, _, kind = load_model(args.model)
    if kind != "full":
        print("error: rollout needs a full model", file=sys.stderr)
        return 1
    match = [s for s in sequences if s.scenario_id == args.scenario]
    if not match:
        print(f"error: unknown scenario {args.scenario!r}", file=sys.stderr)
        return 1
    seq = match[0]
    result = rollout(weights, seq.initial_state, seq.spec)
    for i, action in enumerate(result.actions):
        args_txt = ",".join(str(a) for a in (action.a1, action.a2) if a)
        print(f"{i:2d} {action.primitive.name.lower()}({args_txt})")
    print(f"goal_satisfied={result.goal_satisfied} matches_demo={tuple(result.actions) == seq.actions}")
    return 0


def _cmd_chain(args) -> int:
    weights, _, kind = load_model(args.model)
    if kind != "full":
        print("error: chaining needs a full model", file=sys.stderr)
        return 1
    scenarios = recipe_scenarios(seed=args.seed)
    if args.scenario:
        scenarios = [s for s in scenarios if s.name == args.scenario]
        if not scenarios:
            print(f"error: unknown recipe scenario {args.scenario!r}", file=sys.stderr)
            return 1
    policy = (
        FeedbackPolicy(mode=FeedbackMode.ORACLE_TOPK, k=args.k)
        if args.oracle
        else None
    )
    succeeded = 0
    for scenario in scenarios:
        try:
            result = chain_tasks(list(scenario.recipe), scenario.initial_state, weights, policy)
        except ChainAborted:
            print(f"{scenario.name}: aborted")
            continue
        succeeded += result.success
        print(
            f"{scenario.name}: {'success' if result.success else 'failure'} "
            f"({len(result.trace)} primitives, goals={result.goals})"
        )
    print(f"succeeded {succeeded}/{len(scenarios)}")
    return 0


def _cmd_serve(args) -> int:
    from .server import serve

    sequences = load_corpus(args.corpus)
    weights, _, kind = load_model(args.model)
    if kind != "full":
        print("error: serving needs a full model", file=sys.stderr)
        return 1
    serve(weights, sequences, args.port)
    return 0


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        CorpusFormatError,
        CorpusIntegrityError,
        GenerationError,
        ModelFormatError,
        SessionError,
        WorldError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
