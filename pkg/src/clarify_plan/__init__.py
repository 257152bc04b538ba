"""Interactive clarification of robot action plans through an LLM dialogue.

A session drafts a Robot Action Plan for a natural-language command, asks the
model what information the plan still lacks, relays the model's questions to
the human, and folds the answers into the next draft — until the model
answers 'none'. Sessions are event-sourced, replayable, and scriptable.
"""

from . import errors
from .harness import (
    AggregateMetrics,
    CoverageReport,
    ExperimentReport,
    SessionMetrics,
    aggregate,
    compare_before_after,
    compare_commands,
    compute_metrics,
    generate_rap_once,
    make_answer_provider,
    run_experiment,
)
from .llm import BackendConfig, ChatMessage, OpenAIBackend, ScriptedBackend
from .loop import (
    Answer,
    AnswerSet,
    AnalysisResult,
    DialogueSession,
    LoopPhase,
    PhaseOutcome,
    Question,
    QuestionSet,
    RunResult,
    SessionConfig,
    SessionEvent,
    advance,
    is_none_response,
    parse_analysis,
    parse_questions,
    run_to_completion,
    start_session,
    submit_answers,
    validate_phase_walk,
)
from .prompts import (
    PromptBundle,
    assemble_messages,
    estimate_tokens,
    load_components,
    phase_instruction,
)
from .rap import (
    ActionStep,
    RapDiff,
    RobotActionPlan,
    ValidationReport,
    canonicalize,
    diff,
    key_vocabulary,
    load_rap_file,
    make_plan,
    parse_rap,
    serialize_rap,
    validate,
)
from .store import ReplayReport, SessionRecord, SessionStore, replay

__version__ = "0.1.0"

__all__ = [
    "ActionStep",
    "AggregateMetrics",
    "AnalysisResult",
    "Answer",
    "AnswerSet",
    "BackendConfig",
    "ChatMessage",
    "CoverageReport",
    "DialogueSession",
    "ExperimentReport",
    "LoopPhase",
    "OpenAIBackend",
    "PhaseOutcome",
    "PromptBundle",
    "Question",
    "QuestionSet",
    "RapDiff",
    "ReplayReport",
    "RobotActionPlan",
    "RunResult",
    "ScriptedBackend",
    "SessionConfig",
    "SessionEvent",
    "SessionMetrics",
    "SessionRecord",
    "SessionStore",
    "ValidationReport",
    "advance",
    "aggregate",
    "assemble_messages",
    "canonicalize",
    "compare_before_after",
    "compare_commands",
    "compute_metrics",
    "diff",
    "errors",
    "estimate_tokens",
    "generate_rap_once",
    "is_none_response",
    "key_vocabulary",
    "load_components",
    "load_rap_file",
    "make_answer_provider",
    "make_plan",
    "parse_analysis",
    "parse_questions",
    "parse_rap",
    "phase_instruction",
    "replay",
    "run_experiment",
    "run_to_completion",
    "serialize_rap",
    "start_session",
    "submit_answers",
    "validate_phase_walk",
    "validate",
]
