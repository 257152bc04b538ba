"""Append-only session persistence and deterministic replay.

Each session lives in one JSONL file: a header line (schema version, id,
command, config) followed by one line per event in sequence order. Replay
feeds the recorded model responses and human answers back through the engine
and checks that every parsed artifact comes out identical.
"""

from __future__ import annotations

import collections
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import (
    BackendError,
    CorruptRecord,
    LoopError,
    NotFound,
    PromptAssetError,
    ReplayDivergence,
    SequenceGap,
    StorageFailure,
)
from .llm import ScriptedBackend
from .loop import (
    EVENT_KINDS,
    Answer,
    AnswerSet,
    DialogueSession,
    LoopPhase,
    SessionConfig,
    SessionEvent,
    advance,
    start_session,
    submit_answers,
    validate_phase_walk,
)
from .prompts import load_components

SCHEMA_VERSION = 1

_HEADER_FIELDS = ("schema_version", "session_id", "created_at", "command", "config")

# The artifact events whose payloads must reproduce exactly under replay.
PARSED_KINDS = ("RapParsed", "AnalysisParsed", "QuestionsParsed")


@dataclass(frozen=True)
class SessionSummary:
    session_id: str
    created_at: str
    command: str
    status: Optional[str]
    path: Path
    corrupt: bool = False


@dataclass(frozen=True)
class SessionRecord:
    session_id: str
    created_at: str
    command: str
    config: SessionConfig
    events: tuple[SessionEvent, ...]
    path: Optional[Path] = None

    @property
    def status(self) -> Optional[str]:
        for event in reversed(self.events):
            if event.kind == "PhaseChanged" and event.payload.get("status"):
                return event.payload["status"]
        return None

    @property
    def final_phase(self) -> Optional[str]:
        for event in reversed(self.events):
            if event.kind == "PhaseChanged":
                return event.payload.get("to")
        return None

    def events_of(self, kind: str) -> list[SessionEvent]:
        return [e for e in self.events if e.kind == kind]

    def rap_payloads(self) -> list[dict]:
        return [e.payload for e in self.events if e.kind == "RapParsed"]

    def header_payload(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": self.session_id,
            "created_at": self.created_at,
            "command": self.command,
            "config": self.config.to_payload(),
        }


class SessionWriter:
    """Appends events to one session file, enforcing seq contiguity."""

    def __init__(self, path: Path, header: dict, *, resume_after: int = 0) -> None:
        self._path = path
        self._next_seq = resume_after + 1
        mode = "a" if resume_after else "x"
        try:
            self._fh = open(path, mode, encoding="utf-8")
            if not resume_after:
                self._write_line(header)
        except OSError as exc:
            raise StorageFailure(f"cannot open {path}: {exc}") from exc

    def _write_line(self, payload: dict) -> None:
        try:
            self._fh.write(json.dumps(payload, ensure_ascii=False) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot write {self._path}: {exc}") from exc

    def append(self, event: SessionEvent) -> None:
        if event.seq != self._next_seq:
            raise SequenceGap(
                f"expected seq {self._next_seq}, got {event.seq} in {self._path.name}"
            )
        self._write_line(event.to_payload())
        self._next_seq += 1

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError as exc:
            raise StorageFailure(f"cannot close {self._path}: {exc}") from exc

    def __enter__(self) -> "SessionWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class SessionStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def path_for(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _ensure_root(self) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create {self.root}: {exc}") from exc

    def persist(self, session: DialogueSession) -> SessionWriter:
        """Start journaling a live session; events already emitted are written
        first so the file always reflects the full history."""
        self._ensure_root()
        header = {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "created_at": session.created_at,
            "command": session.command,
            "config": session.config.to_payload(),
        }
        writer = SessionWriter(self.path_for(session.session_id), header)
        for event in session.events:
            writer.append(event)
        session.sink = writer.append
        return writer

    def save_record(self, record: SessionRecord) -> Path:
        self._ensure_root()
        path = self.path_for(record.session_id)
        with SessionWriter(path, record.header_payload()) as writer:
            for event in record.events:
                writer.append(event)
        return path

    def load(self, session_id: str) -> SessionRecord:
        path = self.path_for(session_id)
        if not path.is_file():
            raise NotFound(f"no session {session_id!r} under {self.root}")
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        lines = [line for line in raw.splitlines() if line.strip()]
        if not lines:
            raise CorruptRecord(f"{path.name}: empty session file")

        def parse_line(index: int, line: str) -> dict:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptRecord(f"{path.name}: bad JSON on line {index + 1}") from exc
            if not isinstance(obj, dict):
                raise CorruptRecord(f"{path.name}: line {index + 1} is not an object")
            return obj

        header = parse_line(0, lines[0])
        missing = [f for f in _HEADER_FIELDS if f not in header]
        if missing:
            raise CorruptRecord(f"{path.name}: header missing {', '.join(missing)}")
        if header["schema_version"] != SCHEMA_VERSION:
            raise CorruptRecord(
                f"{path.name}: unsupported schema_version {header['schema_version']!r}"
            )
        try:
            config = SessionConfig.from_payload(header["config"])
        except (TypeError, ValueError) as exc:
            raise CorruptRecord(f"{path.name}: bad config in header: {exc}") from exc

        events = []
        for index, line in enumerate(lines[1:], start=1):
            obj = parse_line(index, line)
            try:
                event = SessionEvent(
                    seq=obj["seq"], kind=obj["kind"], payload=obj["payload"], ts=obj["ts"]
                )
            except KeyError as exc:
                raise CorruptRecord(
                    f"{path.name}: event on line {index + 1} missing {exc}"
                ) from exc
            if event.kind not in EVENT_KINDS:
                raise CorruptRecord(
                    f"{path.name}: unknown event kind {event.kind!r} on line {index + 1}"
                )
            if event.seq != index:
                raise CorruptRecord(
                    f"{path.name}: expected seq {index}, found {event.seq}"
                )
            events.append(event)

        walk = [e.payload for e in events if e.kind == "PhaseChanged"]
        try:
            validate_phase_walk(walk)
        except ValueError as exc:
            raise CorruptRecord(f"{path.name}: {exc}") from exc

        return SessionRecord(
            session_id=header["session_id"],
            created_at=header["created_at"],
            command=header["command"],
            config=config,
            events=tuple(events),
            path=path,
        )

    def list_sessions(self) -> list[SessionSummary]:
        if not self.root.is_dir():
            return []
        summaries = []
        for path in sorted(self.root.glob("*.jsonl")):
            session_id = path.stem
            try:
                record = self.load(session_id)
            except CorruptRecord:
                summaries.append(
                    SessionSummary(
                        session_id=session_id,
                        created_at="",
                        command="",
                        status=None,
                        path=path,
                        corrupt=True,
                    )
                )
                continue
            summaries.append(
                SessionSummary(
                    session_id=record.session_id,
                    created_at=record.created_at,
                    command=record.command,
                    status=record.status,
                    path=path,
                )
            )
        summaries.sort(key=lambda s: (s.created_at, s.session_id))
        return summaries


@dataclass(frozen=True)
class ReplayReport:
    session_id: str
    compared_events: int
    status: Optional[str]


def _artifact_trail(events) -> list[tuple[str, dict]]:
    return [(e.kind, e.payload) for e in events if e.kind in PARSED_KINDS]


def replay(record: SessionRecord) -> ReplayReport:
    """Re-run a recorded session from its transcript and verify the outcome.

    The recorded model responses feed a scripted backend and the recorded
    human answers feed the answer turns; every re-parsed artifact must equal
    the recorded one, in order, and the final status must match.
    """
    responses = [e.payload["text"] for e in record.events if e.kind == "Response"]
    answer_turns = collections.deque(
        e.payload["answers"] for e in record.events if e.kind == "AnswersSubmitted"
    )
    backend = ScriptedBackend(responses=list(responses))

    # Prompt assets only shape Request events, which are not part of the
    # comparison, so a vanished override directory must not block a replay.
    try:
        bundle = load_components(record.config.prompts_dir)
    except PromptAssetError:
        bundle = load_components(None)

    session = start_session(
        record.command,
        config=record.config,
        bundle=bundle,
        session_id=record.session_id,
    )
    halted: Optional[str] = None
    while session.status is None:
        if session.phase is LoopPhase.AWAIT_ANSWERS:
            if not answer_turns:
                halted = "recorded answers exhausted"
                break
            turn = answer_turns.popleft()
            answers = AnswerSet(
                tuple(
                    Answer(
                        question_id=a["question_id"],
                        text=a["text"],
                        refused=a.get("refused", False),
                    )
                    for a in turn
                )
            )
            submit_answers(session, answers)
        else:
            if backend.cursor >= len(backend.responses):
                halted = "recorded responses exhausted"
                break
            try:
                advance(session, backend)
            except (LoopError, BackendError) as exc:
                halted = f"{type(exc).__name__}: {exc}"
                break

    recorded = _artifact_trail(record.events)
    replayed = _artifact_trail(session.events)
    limit = min(len(recorded), len(replayed))
    for i in range(limit):
        if recorded[i] != replayed[i]:
            kind = recorded[i][0]
            raise ReplayDivergence(
                f"{record.session_id}: artifact {i + 1} ({kind}) differs under replay"
            )
    if len(recorded) != len(replayed):
        raise ReplayDivergence(
            f"{record.session_id}: {len(recorded)} recorded artifact(s) "
            f"but {len(replayed)} on replay"
            + (f" (replay halted: {halted})" if halted else "")
        )
    if record.status != session.status:
        raise ReplayDivergence(
            f"{record.session_id}: final status {record.status!r} recorded "
            f"but {session.status!r} on replay"
        )
    return ReplayReport(
        session_id=record.session_id,
        compared_events=len(recorded),
        status=session.status,
    )
