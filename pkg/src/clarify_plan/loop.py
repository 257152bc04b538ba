"""The three-phase clarification loop.

A session walks MakeRap -> Analyze -> Question; when the model still has
questions the loop parks in AwaitAnswers until the human replies, then begins
the next iteration. Either analysis or questioning may output the 'none'
sentinel, which finishes the session. Every externally visible step is
recorded as an event so a session can be persisted and replayed bit-for-bit.
"""

from __future__ import annotations

import datetime as _dt
import re
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    EmptyCommand,
    IllegalPhase,
    LoopError,
    MissingAnswer,
    PhaseViolation,
    RapParseError,
    RepairExhausted,
    UnknownQuestionId,
)
from .llm import ChatMessage, DEFAULT_MODEL, LlmBackend
from .prompts import PromptBundle, assemble_user_turn, load_components, phase_instruction
from .rap import RobotActionPlan, canonicalize, parse_rap, plan_to_payload, validate


class LoopPhase(str, Enum):
    MAKE_RAP = "MakeRap"
    ANALYZE = "Analyze"
    QUESTION = "Question"
    AWAIT_ANSWERS = "AwaitAnswers"
    DONE = "Done"


# Every transition a well-formed session may take; None is "before the first
# phase". Used both by the engine and by integrity checks on stored records.
LEGAL_TRANSITIONS: dict[Optional[str], frozenset[str]] = {
    None: frozenset({LoopPhase.MAKE_RAP.value}),
    LoopPhase.MAKE_RAP.value: frozenset({LoopPhase.ANALYZE.value}),
    LoopPhase.ANALYZE.value: frozenset({LoopPhase.QUESTION.value, LoopPhase.DONE.value}),
    LoopPhase.QUESTION.value: frozenset(
        {LoopPhase.AWAIT_ANSWERS.value, LoopPhase.DONE.value}
    ),
    LoopPhase.AWAIT_ANSWERS.value: frozenset({LoopPhase.MAKE_RAP.value}),
    LoopPhase.DONE.value: frozenset(),
}

EVENT_KINDS = (
    "Request",
    "Response",
    "RapParsed",
    "AnalysisParsed",
    "QuestionsParsed",
    "AnswersSubmitted",
    "PhaseChanged",
    "Error",
)

STATUS_DONE = "Done"
STATUS_TRUNCATED = "Truncated"

_REFUSAL_TEXT = "I cannot answer this question."

_ENUM_LINE_RE = re.compile(r"^\s*(?:\d+\s*[.):]|[-*•])\s+(.*\S)\s*$", re.MULTILINE)
_QUESTION_SENTENCE_RE = re.compile(r"[^.?!\n]+\?")

# Characters trimmed from both ends before sentinel comparison. '?' is
# deliberately absent: a question mark anywhere disqualifies the sentinel.
_SENTINEL_STRIP = " \t\r\n.,;:!\"'`´‘’“”()[]{}<>*_~|-"


def _normalize_sentinel(text: str) -> str:
    return text.strip(_SENTINEL_STRIP).lower()


def is_none_response(text: str) -> bool:
    """Decide whether a model reply is the 'none' terminator.

    Empty replies count as 'none'. A question mark anywhere means the model
    is still asking, so the reply is never treated as the sentinel, even if
    its last line happens to read 'none'.
    """
    if not text.strip():
        return True
    if "?" in text:
        return False
    if _normalize_sentinel(text) == "none":
        return True
    lines = [line for line in text.splitlines() if line.strip()]
    return bool(lines) and _normalize_sentinel(lines[-1]) == "none"


@dataclass(frozen=True)
class AnalysisResult:
    text: str
    is_none: bool
    missing_items: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "text": self.text,
            "is_none": self.is_none,
            "missing_items": list(self.missing_items),
        }


def parse_analysis(text: str) -> AnalysisResult:
    if is_none_response(text):
        return AnalysisResult(text=text, is_none=True)
    items = tuple(m.group(1).strip() for m in _ENUM_LINE_RE.finditer(text))
    return AnalysisResult(text=text, is_none=False, missing_items=items)


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str

    @property
    def ordinal(self) -> int:
        return int(self.question_id[1:])

    def to_payload(self) -> dict:
        return {"question_id": self.question_id, "text": self.text}


@dataclass(frozen=True)
class QuestionSet:
    text: str
    is_none: bool
    questions: tuple[Question, ...] = ()

    def to_payload(self) -> dict:
        return {
            "text": self.text,
            "is_none": self.is_none,
            "questions": [q.to_payload() for q in self.questions],
        }


def parse_questions(text: str, id_start: int = 1) -> QuestionSet:
    """Extract the individual questions from a reply.

    Question ids are ordinals across the whole session ("q1", "q2", ...), so
    `id_start` must be one past the last id already handed out.
    """
    if is_none_response(text):
        return QuestionSet(text=text, is_none=True)
    bodies = [m.group(1).strip() for m in _ENUM_LINE_RE.finditer(text)]
    if not bodies:
        bodies = [line.strip() for line in text.splitlines() if line.strip().endswith("?")]
    if not bodies:
        bodies = [m.group(0).strip() for m in _QUESTION_SENTENCE_RE.finditer(text)]
        bodies = [b for b in bodies if len(b) > 1]
    if not bodies:
        bodies = [text.strip()]
    questions = tuple(
        Question(question_id=f"q{id_start + i}", text=body)
        for i, body in enumerate(bodies)
    )
    return QuestionSet(text=text, is_none=False, questions=questions)


@dataclass(frozen=True)
class Answer:
    question_id: str
    text: str
    refused: bool = False

    def to_payload(self) -> dict:
        return {"question_id": self.question_id, "text": self.text, "refused": self.refused}


@dataclass(frozen=True)
class AnswerSet:
    answers: tuple[Answer, ...]

    def __post_init__(self) -> None:
        ids = [a.question_id for a in self.answers]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate question ids in answer set")

    def by_id(self) -> dict[str, Answer]:
        return {a.question_id: a for a in self.answers}


@dataclass(frozen=True)
class SessionConfig:
    max_iterations: int = 10
    temperature: float = 0.0
    model: str = DEFAULT_MODEL
    repair_attempts: int = 1
    prompts_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.repair_attempts < 0:
            raise ValueError("repair_attempts must not be negative")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")

    def to_payload(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "temperature": self.temperature,
            "model": self.model,
            "repair_attempts": self.repair_attempts,
            "prompts_dir": self.prompts_dir,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SessionConfig":
        known = {f: payload[f] for f in (
            "max_iterations", "temperature", "model", "repair_attempts", "prompts_dir"
        ) if f in payload}
        return cls(**known)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    payload: dict
    ts: str

    def to_payload(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload, "ts": self.ts}


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


@dataclass
class DialogueSession:
    """Mutable state of one clarification dialogue."""

    command: str
    config: SessionConfig
    bundle: PromptBundle
    session_id: str
    created_at: str
    phase: LoopPhase = LoopPhase.MAKE_RAP
    iteration: int = 1
    messages: list[ChatMessage] = field(default_factory=list)
    rap_versions: list[RobotActionPlan] = field(default_factory=list)
    pending_questions: list[Question] = field(default_factory=list)
    question_turns: int = 0
    questions_total: int = 0
    status: Optional[str] = None
    events: list[SessionEvent] = field(default_factory=list)
    sink: Optional[Callable[[SessionEvent], None]] = None

    def emit(self, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=len(self.events) + 1, kind=kind, payload=payload, ts=_utcnow()
        )
        self.events.append(event)
        if self.sink is not None:
            self.sink(event)
        return event

    @property
    def final_rap(self) -> Optional[RobotActionPlan]:
        return self.rap_versions[-1] if self.rap_versions else None


def start_session(
    command: str,
    config: Optional[SessionConfig] = None,
    bundle: Optional[PromptBundle] = None,
    session_id: Optional[str] = None,
    sink: Optional[Callable[[SessionEvent], None]] = None,
) -> DialogueSession:
    if not command or not command.strip():
        raise EmptyCommand("command must not be blank")
    config = config or SessionConfig()
    if bundle is None:
        bundle = load_components(config.prompts_dir)
    session = DialogueSession(
        command=command.strip(),
        config=config,
        bundle=bundle,
        session_id=session_id or uuid.uuid4().hex,
        created_at=_utcnow(),
        sink=sink,
    )
    session.emit(
        "PhaseChanged",
        {"from": None, "to": LoopPhase.MAKE_RAP.value, "iteration": 1, "status": None},
    )
    return session


@dataclass(frozen=True)
class PhaseOutcome:
    phase_before: LoopPhase
    phase_after: LoopPhase
    response_text: str
    plan: Optional[RobotActionPlan] = None
    analysis: Optional[AnalysisResult] = None
    questions: Optional[QuestionSet] = None
    status: Optional[str] = None


def _transition(session: DialogueSession, to: LoopPhase, status: Optional[str] = None) -> None:
    allowed = LEGAL_TRANSITIONS[session.phase.value]
    if to.value not in allowed:
        raise IllegalPhase(f"cannot move from {session.phase.value} to {to.value}")
    payload = {
        "from": session.phase.value,
        "to": to.value,
        "iteration": session.iteration,
        "status": status,
    }
    session.phase = to
    if status is not None:
        session.status = status
    session.emit("PhaseChanged", payload)


def _exchange(session: DialogueSession, backend: LlmBackend, user_text: str) -> str:
    request = assemble_user_turn(session.bundle, session.messages, user_text)
    session.emit(
        "Request",
        {"phase": session.phase.value, "messages": [m.to_payload() for m in request]},
    )
    text = backend.complete(request)
    session.emit("Response", {"text": text})
    session.messages.append(ChatMessage(role="user", content=user_text))
    session.messages.append(ChatMessage(role="assistant", content=text))
    return text


def _advance_make_rap(session: DialogueSession, backend: LlmBackend) -> PhaseOutcome:
    instruction = phase_instruction(LoopPhase.MAKE_RAP.value)
    command = session.command if not session.messages else None
    user_text = instruction.render(command)
    attempts = 0
    while True:
        text = _exchange(session, backend, user_text)
        try:
            plan = parse_rap(
                text,
                source_command=session.command,
                revision=len(session.rap_versions) + 1,
            )
            break
        except RapParseError as exc:
            session.emit("Error", {"kind": type(exc).__name__, "message": str(exc)})
            attempts += 1
            if attempts > session.config.repair_attempts:
                raise RepairExhausted(
                    f"no parseable plan after {attempts} attempt(s): {exc}"
                ) from exc
            user_text = (
                f"The previous reply could not be used: {exc}. "
                "Output the RAP again as a single JSON array of step objects, "
                "with no text before or after it."
            )
    plan = canonicalize(plan)
    report = validate(plan, finality="draft")
    session.rap_versions.append(plan)
    session.emit(
        "RapParsed",
        {
            "revision": plan.revision,
            "plan": plan_to_payload(plan),
            "validation": report.to_payload(),
        },
    )
    before = session.phase
    _transition(session, LoopPhase.ANALYZE)
    return PhaseOutcome(
        phase_before=before,
        phase_after=session.phase,
        response_text=text,
        plan=plan,
    )


def _advance_analyze(session: DialogueSession, backend: LlmBackend) -> PhaseOutcome:
    instruction = phase_instruction(LoopPhase.ANALYZE.value)
    text = _exchange(session, backend, instruction.render())
    result = parse_analysis(text)
    session.emit("AnalysisParsed", result.to_payload())
    before = session.phase
    if result.is_none:
        _transition(session, LoopPhase.DONE, status=STATUS_DONE)
    else:
        _transition(session, LoopPhase.QUESTION)
    return PhaseOutcome(
        phase_before=before,
        phase_after=session.phase,
        response_text=text,
        analysis=result,
        status=session.status,
    )


def _advance_question(session: DialogueSession, backend: LlmBackend) -> PhaseOutcome:
    instruction = phase_instruction(LoopPhase.QUESTION.value)
    text = _exchange(session, backend, instruction.render())
    qset = parse_questions(text, id_start=session.questions_total + 1)
    session.emit("QuestionsParsed", qset.to_payload())
    before = session.phase
    if qset.is_none:
        _transition(session, LoopPhase.DONE, status=STATUS_DONE)
    elif session.iteration >= session.config.max_iterations:
        _transition(session, LoopPhase.DONE, status=STATUS_TRUNCATED)
    else:
        session.pending_questions = list(qset.questions)
        session.question_turns += 1
        session.questions_total += len(qset.questions)
        _transition(session, LoopPhase.AWAIT_ANSWERS)
    return PhaseOutcome(
        phase_before=before,
        phase_after=session.phase,
        response_text=text,
        questions=qset,
        status=session.status,
    )


def advance(session: DialogueSession, backend: LlmBackend) -> PhaseOutcome:
    """Run the model through the session's current phase."""
    if session.phase is LoopPhase.MAKE_RAP:
        return _advance_make_rap(session, backend)
    if session.phase is LoopPhase.ANALYZE:
        return _advance_analyze(session, backend)
    if session.phase is LoopPhase.QUESTION:
        return _advance_question(session, backend)
    raise IllegalPhase(f"advance is not valid in phase {session.phase.value}")


def submit_answers(
    session: DialogueSession, answers: AnswerSet | Sequence[Answer]
) -> None:
    """Record the human's answers and arm the next iteration."""
    if session.phase is not LoopPhase.AWAIT_ANSWERS:
        raise PhaseViolation(
            f"answers are only accepted in AwaitAnswers, not {session.phase.value}"
        )
    answer_set = answers if isinstance(answers, AnswerSet) else AnswerSet(tuple(answers))
    by_id = answer_set.by_id()
    pending_ids = [q.question_id for q in session.pending_questions]
    unknown = sorted(set(by_id) - set(pending_ids))
    if unknown:
        raise UnknownQuestionId(f"no such pending question(s): {', '.join(unknown)}")
    missing = [qid for qid in pending_ids if qid not in by_id]
    if missing:
        raise MissingAnswer(f"missing answer(s) for: {', '.join(missing)}")

    lines = []
    for question in session.pending_questions:
        answer = by_id[question.question_id]
        reply = _REFUSAL_TEXT if answer.refused else answer.text
        lines.append(f"Q{question.ordinal}: {question.text}")
        lines.append(f"A{question.ordinal}: {reply}")
    session.messages.append(ChatMessage(role="user", content="\n".join(lines)))
    session.emit(
        "AnswersSubmitted", {"answers": [by_id[q].to_payload() for q in pending_ids]}
    )
    session.pending_questions = []
    session.iteration += 1
    _transition(session, LoopPhase.MAKE_RAP)


AnswerProvider = Callable[[list[Question]], AnswerSet]


@dataclass(frozen=True)
class RunResult:
    status: str
    final_rap: Optional[RobotActionPlan]
    session: DialogueSession


def run_to_completion(
    session: DialogueSession, backend: LlmBackend, answer_provider: AnswerProvider
) -> RunResult:
    """Drive the session until its status is set, asking `answer_provider`
    whenever the loop parks in AwaitAnswers."""
    # Generous upper bound: three model phases plus one answer turn per
    # iteration, with repair retries on top. Purely a tripwire.
    budget = session.config.max_iterations * (4 + session.config.repair_attempts) + 4
    steps = 0
    while session.status is None:
        steps += 1
        if steps > budget:
            raise LoopError("session failed to settle within its step budget")
        if session.phase is LoopPhase.AWAIT_ANSWERS:
            submit_answers(session, answer_provider(list(session.pending_questions)))
        else:
            advance(session, backend)
    return RunResult(status=session.status, final_rap=session.final_rap, session=session)


def validate_phase_walk(transitions: Iterable[dict]) -> None:
    """Check a stream of PhaseChanged payloads for legality and continuity.

    Raises ValueError on the first broken link; storage wraps this into its
    own corruption error.
    """
    previous: Optional[str] = None
    for payload in transitions:
        came_from = payload.get("from")
        to = payload.get("to")
        if came_from != previous:
            raise ValueError(
                f"discontinuous phase walk: expected from={previous!r}, got {came_from!r}"
            )
        if to not in LEGAL_TRANSITIONS.get(came_from, frozenset()):
            raise ValueError(f"illegal transition {came_from!r} -> {to!r}")
        previous = to
