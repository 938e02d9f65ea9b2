"""Task sequencing for a tabletop manipulation robot.

A linear model over joint state-action features proposes the next primitive
action; exact enumeration gives the argmax, a cutting-plane max-margin
trainer fits the weights from demonstrations, and a kinematic world model
simulates the resulting sequences.
"""

from .world import (
    Action,
    AttributeVector,
    ObjectState,
    PreconditionCode,
    Primitive,
    RobotState,
    Task,
    TaskSpec,
    WorldError,
    WorldState,
    apply_primitive,
    check_preconditions,
    task_goal_satisfied,
    validate_state,
)
from .features import DIMENSION, History, EMPTY_HISTORY, assemble, block_scores, layout_manifest
from .model import (
    StepContext,
    enumerate_actions,
    executable_top_k,
    load_model,
    loss,
    predict,
    rollout,
    save_model,
    score,
    top_k,
)
from .learn import TrainConfig, TrainReport, solve_qp, train, train_multiclass
from .corpus import (
    GeneratorConfig,
    Sequence,
    corpus_hash,
    expert_demonstrate,
    expert_plan,
    generate_corpus,
    load_corpus,
    perturb_attributes,
    replay_sequence,
    save_corpus,
)
from .evaluation import (
    DEFAULT_EVAL_C,
    ChainAborted,
    ChainResult,
    FeedbackMode,
    FeedbackPolicy,
    FeedbackScope,
    MetricsReport,
    RecipeScenario,
    SessionError,
    chain_tasks,
    chance_baseline,
    chance_metrics,
    confusion_matrix,
    cross_validate,
    feedback_eval,
    noise_sweep,
    recipe_scenarios,
    report_to_dict,
    save_report,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AttributeVector",
    "ChainAborted",
    "ChainResult",
    "DEFAULT_EVAL_C",
    "DIMENSION",
    "EMPTY_HISTORY",
    "FeedbackMode",
    "FeedbackPolicy",
    "FeedbackScope",
    "GeneratorConfig",
    "History",
    "MetricsReport",
    "ObjectState",
    "PreconditionCode",
    "Primitive",
    "RecipeScenario",
    "RobotState",
    "Sequence",
    "SessionError",
    "StepContext",
    "Task",
    "TaskSpec",
    "TrainConfig",
    "TrainReport",
    "WorldError",
    "WorldState",
    "apply_primitive",
    "assemble",
    "block_scores",
    "chain_tasks",
    "chance_baseline",
    "chance_metrics",
    "check_preconditions",
    "confusion_matrix",
    "corpus_hash",
    "cross_validate",
    "enumerate_actions",
    "executable_top_k",
    "expert_demonstrate",
    "expert_plan",
    "feedback_eval",
    "generate_corpus",
    "layout_manifest",
    "load_corpus",
    "load_model",
    "loss",
    "noise_sweep",
    "perturb_attributes",
    "predict",
    "recipe_scenarios",
    "replay_sequence",
    "report_to_dict",
    "rollout",
    "save_corpus",
    "save_model",
    "save_report",
    "score",
    "solve_qp",
    "top_k",
    "train",
    "train_multiclass",
    "task_goal_satisfied",
    "validate_state",
]
