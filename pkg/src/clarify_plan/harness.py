"""Metrics and batch evaluation over recorded or freshly run sessions.

Everything here computes from event logs, so any number the harness reports
can be recomputed from a session file alone. Means are rendered at two
decimals by truncation, not rounding, and the exact fractions are kept
alongside the rendered strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import EmptyInput, IncompleteSession
from .llm import LlmBackend, ScriptedBackend
from .loop import (
    Answer,
    AnswerProvider,
    AnswerSet,
    DialogueSession,
    Question,
    SessionConfig,
    advance,
    run_to_completion,
    start_session,
)
from .prompts import PromptBundle, estimate_tokens, load_components
from .rap import RobotActionPlan, diff, key_vocabulary, load_rap_file, make_plan
from .store import SessionRecord, SessionStore

REFUSED_MARKER = "REFUSED"


@dataclass(frozen=True)
class SessionMetrics:
    session_id: str
    command: str
    final_status: str
    iterations: int
    question_turns: int
    questions_total: int
    tokens_estimated: int

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "command": self.command,
            "final_status": self.final_status,
            "iterations": self.iterations,
            "question_turns": self.question_turns,
            "questions_total": self.questions_total,
            "tokens_estimated": self.tokens_estimated,
        }


def compute_metrics(source: Union[SessionRecord, DialogueSession]) -> SessionMetrics:
    """Derive the per-session numbers from the event log alone."""
    events = source.events
    status = source.status
    if status not in ("Done", "Truncated"):
        raise IncompleteSession(
            f"session {source.session_id} has no final status; cannot score it"
        )
    iterations = sum(1 for e in events if e.kind == "RapParsed")
    question_events = [
        e.payload for e in events if e.kind == "QuestionsParsed" and not e.payload["is_none"]
    ]
    tokens_estimated = 0
    for event in events:
        if event.kind == "Request":
            tokens_estimated += sum(
                estimate_tokens(m["content"]) for m in event.payload["messages"]
            )
    return SessionMetrics(
        session_id=source.session_id,
        command=source.command,
        final_status=status,
        iterations=iterations,
        question_turns=len(question_events),
        questions_total=sum(len(p["questions"]) for p in question_events),
        tokens_estimated=tokens_estimated,
    )


def format_mean(value: Fraction) -> str:
    """Render a nonnegative mean at two decimals, truncating the rest."""
    if value < 0:
        raise ValueError("means are nonnegative")
    hundredths = (value.numerator * 100) // value.denominator
    return f"{hundredths // 100}.{hundredths % 100:02d}"


@dataclass(frozen=True)
class AggregateMetrics:
    sessions: int
    total_iterations: int
    total_questions: int
    mean_iterations: Fraction
    mean_questions: Fraction
    statuses: dict[str, int]

    @property
    def mean_iterations_str(self) -> str:
        return format_mean(self.mean_iterations)

    @property
    def mean_questions_str(self) -> str:
        return format_mean(self.mean_questions)

    def to_payload(self) -> dict:
        return {
            "sessions": self.sessions,
            "total_iterations": self.total_iterations,
            "total_questions": self.total_questions,
            "mean_iterations": self.mean_iterations_str,
            "mean_questions": self.mean_questions_str,
            "statuses": dict(sorted(self.statuses.items())),
        }


def aggregate(metrics: Sequence[SessionMetrics]) -> AggregateMetrics:
    if not metrics:
        raise EmptyInput("nothing to aggregate")
    statuses: dict[str, int] = {}
    for m in metrics:
        statuses[m.final_status] = statuses.get(m.final_status, 0) + 1
    total_iterations = sum(m.iterations for m in metrics)
    total_questions = sum(m.questions_total for m in metrics)
    n = len(metrics)
    return AggregateMetrics(
        sessions=n,
        total_iterations=total_iterations,
        total_questions=total_questions,
        mean_iterations=Fraction(total_iterations, n),
        mean_questions=Fraction(total_questions, n),
        statuses=statuses,
    )


def _plans_of(record: SessionRecord) -> list[RobotActionPlan]:
    return [
        make_plan(
            e.payload["plan"],
            source_command=record.command,
            revision=e.payload["revision"],
        )
        for e in record.events
        if e.kind == "RapParsed"
    ]


def compare_before_after(source: Union[SessionRecord, DialogueSession]):
    """Diff of the first plan revision against the last one."""
    if isinstance(source, DialogueSession):
        plans = list(source.rap_versions)
    else:
        plans = _plans_of(source)
    if not plans:
        raise IncompleteSession("session produced no plan to compare")
    return diff(plans[0], plans[-1])


def revision_diffs(record: SessionRecord) -> list[dict]:
    """Structural diffs between consecutive plan revisions of a session."""
    plans = _plans_of(record)
    out = []
    for before, after in zip(plans, plans[1:]):
        out.append(
            {
                "from_revision": before.revision,
                "to_revision": after.revision,
                "diff": diff(before, after).to_payload(),
            }
        )
    return out


@dataclass(frozen=True)
class CoverageReport:
    """What the second of two plans carries that the first does not."""

    keys_only_in_a: tuple[str, ...]
    keys_only_in_b: tuple[str, ...]
    step_count_a: int
    step_count_b: int
    narrative_items: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.keys_only_in_a or self.keys_only_in_b or self.narrative_items)

    def to_payload(self) -> dict:
        return {
            "keys_only_in_a": list(self.keys_only_in_a),
            "keys_only_in_b": list(self.keys_only_in_b),
            "step_count_a": self.step_count_a,
            "step_count_b": self.step_count_b,
            "narrative_items": list(self.narrative_items),
        }


def compare_commands(
    rap_from_terse: RobotActionPlan,
    rap_from_elaborated: RobotActionPlan,
    annotations: Optional[Sequence[dict]] = None,
) -> CoverageReport:
    """Vocabulary and step-count comparison of plans from two command phrasings.

    Annotations are {"label": ..., "present_in": "a"|"b"} records supplied by
    a human reviewer; labels marked "b" surface as narrative items that key
    vocabulary alone cannot express.
    """
    vocab_a = key_vocabulary(rap_from_terse)
    vocab_b = key_vocabulary(rap_from_elaborated)
    narrative_items: list[str] = []
    for item in annotations or ():
        side = item.get("present_in")
        if side not in ("a", "b"):
            raise ValueError(f"annotation present_in must be 'a' or 'b', got {side!r}")
        if side == "b":
            narrative_items.append(item["label"])
    return CoverageReport(
        keys_only_in_a=tuple(sorted(vocab_a - vocab_b)),
        keys_only_in_b=tuple(sorted(vocab_b - vocab_a)),
        step_count_a=len(rap_from_terse.steps),
        step_count_b=len(rap_from_elaborated.steps),
        narrative_items=tuple(narrative_items),
    )


def make_answer_provider(mapping: dict[str, str]) -> AnswerProvider:
    """Answers questions from an ordinal->text map.

    Keys are question ordinals as strings ("1" answers q1). A missing key or
    the literal value "REFUSED" refuses that question.
    """

    def provider(questions: list[Question]) -> AnswerSet:
        answers = []
        for q in questions:
            value = mapping.get(str(q.ordinal), REFUSED_MARKER)
            if value == REFUSED_MARKER:
                answers.append(Answer(question_id=q.question_id, text="", refused=True))
            else:
                answers.append(Answer(question_id=q.question_id, text=value))
        return AnswerSet(tuple(answers))

    return provider


def generate_rap_once(
    command: str,
    backend: LlmBackend,
    config: Optional[SessionConfig] = None,
    bundle: Optional[PromptBundle] = None,
) -> RobotActionPlan:
    """One MakeRap pass with no clarification: the non-interactive baseline."""
    session = start_session(command, config=config, bundle=bundle)
    outcome = advance(session, backend)
    assert outcome.plan is not None
    return outcome.plan


@dataclass(frozen=True)
class TaskResult:
    label: str
    command: str
    trials: tuple[SessionMetrics, ...]
    aggregate: AggregateMetrics
    coverage: Optional[CoverageReport] = None

    def to_payload(self) -> dict:
        payload = {
            "label": self.label,
            "command": self.command,
            "trials": [m.to_payload() for m in self.trials],
            "aggregate": self.aggregate.to_payload(),
        }
        if self.coverage is not None:
            payload["coverage"] = self.coverage.to_payload()
        return payload


@dataclass(frozen=True)
class ExperimentReport:
    tasks: tuple[TaskResult, ...]
    pooled: AggregateMetrics
    deterministic: bool
    prompt_token_estimate: int

    def to_payload(self) -> dict:
        return {
            "deterministic": self.deterministic,
            "prompt_token_estimate": self.prompt_token_estimate,
            "tasks": [t.to_payload() for t in self.tasks],
            "pooled": self.pooled.to_payload(),
        }

    def render_table(self) -> str:
        rows = [("task", "trials", "mean iterations", "mean questions")]
        for task in self.tasks:
            rows.append(
                (
                    task.label,
                    str(task.aggregate.sessions),
                    task.aggregate.mean_iterations_str,
                    task.aggregate.mean_questions_str,
                )
            )
        rows.append(
            (
                "pooled",
                str(self.pooled.sessions),
                self.pooled.mean_iterations_str,
                self.pooled.mean_questions_str,
            )
        )
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        lines = []
        for index, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
            if index == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _run_scripted_trial(
    label: str,
    trial_index: int,
    command: str,
    script_path: Path,
    answers_path: Optional[Path],
    config: SessionConfig,
    store: Optional[SessionStore],
) -> SessionMetrics:
    backend = ScriptedBackend.from_file(str(script_path))
    mapping = _load_json(answers_path) if answers_path else {}
    if not isinstance(mapping, dict):
        raise ValueError(f"{answers_path}: answers must be a JSON object")
    session_id = f"{label}-trial{trial_index}"
    if store is not None:
        store.path_for(session_id).unlink(missing_ok=True)
    session = start_session(command, config=config, session_id=session_id)
    writer = store.persist(session) if store is not None else None
    try:
        run_to_completion(session, backend, make_answer_provider(mapping))
    finally:
        if writer is not None:
            writer.close()
    return compute_metrics(session)


def run_experiment(
    spec_path: str | Path,
    store: Optional[SessionStore] = None,
    bundle: Optional[PromptBundle] = None,
) -> ExperimentReport:
    """Execute an experiment description file.

    The file is a JSON object: {"tasks": [...]} where each task gives a
    label, a command, a scripted backend block ({"scripts": [...],
    "answers": [...]} with paths relative to the spec file), and optionally a
    coverage block comparing two plan files. A shared "config" object applies
    to every trial.
    """
    spec_path = Path(spec_path)
    spec = _load_json(spec_path)
    base = spec_path.parent
    config = SessionConfig.from_payload(spec.get("config", {}))
    bundle = bundle or load_components(config.prompts_dir)

    tasks = []
    all_metrics: list[SessionMetrics] = []
    deterministic = True
    for task in spec["tasks"]:
        label = task["label"]
        command = task["command"]
        backend_spec = task.get("backend", {})
        mode = backend_spec.get("mode", "scripted")
        if mode != "scripted":
            raise ValueError(
                f"task {label!r}: only scripted experiment backends are supported "
                f"in batch runs, got {mode!r}"
            )
        scripts = backend_spec.get("scripts", [])
        answers = backend_spec.get("answers", [])
        if len(answers) not in (0, len(scripts)):
            raise ValueError(
                f"task {label!r}: answers must be absent or match scripts 1:1"
            )
        metrics = []
        for i, script_rel in enumerate(scripts, start=1):
            answers_rel = answers[i - 1] if answers else None
            metrics.append(
                _run_scripted_trial(
                    label=label,
                    trial_index=i,
                    command=command,
                    script_path=base / script_rel,
                    answers_path=base / answers_rel if answers_rel else None,
                    config=config,
                    store=store,
                )
            )
        coverage = None
        if "coverage" in task:
            cov = task["coverage"]
            plan_a = load_rap_file(str(base / cov["a"]))
            plan_b = load_rap_file(str(base / cov["b"]))
            annotations = (
                _load_json(base / cov["annotations"]) if "annotations" in cov else None
            )
            coverage = compare_commands(plan_a, plan_b, annotations)
        tasks.append(
            TaskResult(
                label=label,
                command=command,
                trials=tuple(metrics),
                aggregate=aggregate(metrics),
                coverage=coverage,
            )
        )
        all_metrics.extend(metrics)

    return ExperimentReport(
        tasks=tuple(tasks),
        pooled=aggregate(all_metrics),
        deterministic=deterministic,
        prompt_token_estimate=bundle.token_estimate,
    )
