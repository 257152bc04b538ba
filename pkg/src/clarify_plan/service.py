"""HTTP facade over the dialogue loop and session store.

Model calls run on a per-session worker thread, so POST handlers return
immediately and clients follow progress through the event stream (SSE with
resume, or JSON long-poll). Every view served here is reconstructible from
the session record alone; the in-memory registry only adds liveness.
"""

from __future__ import annotations

import json
import threading
import time
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    BackendError,
    CorruptRecord,
    LoopError,
    NotFound,
    PromptAssetError,
)
from .llm import BackendConfig, LlmBackend, OpenAIBackend
from .loop import (
    Answer,
    AnswerSet,
    DialogueSession,
    LoopPhase,
    SessionConfig,
    advance,
    start_session,
    submit_answers,
)
from .prompts import estimate_tokens, load_components
from .rap import diff, make_plan, plan_to_payload
from .store import SessionRecord, SessionStore

REFUSED_MARKER = "REFUSED"

BackendFactory = Callable[[SessionConfig], LlmBackend]

_POLL_CAP_SECONDS = 30.0


def _partial_metrics(events) -> dict:
    """Metrics over a possibly unfinished event log; never raises."""
    iterations = 0
    question_turns = 0
    questions_total = 0
    tokens = 0
    for event in events:
        if event.kind == "RapParsed":
            iterations += 1
        elif event.kind == "QuestionsParsed" and not event.payload["is_none"]:
            question_turns += 1
            questions_total += len(event.payload["questions"])
        elif event.kind == "Request":
            tokens += sum(estimate_tokens(m["content"]) for m in event.payload["messages"])
    return {
        "iterations": iterations,
        "question_turns": question_turns,
        "questions_total": questions_total,
        "tokens_estimated": tokens,
    }


class SessionRunner:
    """Owns one live session: its state, its worker thread, its journal."""

    def __init__(self, session: DialogueSession, backend: LlmBackend, writer) -> None:
        self.session = session
        self.backend = backend
        self.writer = writer
        self.cond = threading.Condition(threading.RLock())
        self.failure: Optional[str] = None
        self._driving = False
        self._writer_open = writer is not None
        self.applied_answers: dict[int, str] = {}

        inner_sink = session.sink

        def sink(event):
            if inner_sink is not None:
                inner_sink(event)
            with self.cond:
                self.cond.notify_all()

        session.sink = sink

    # -- lifecycle ---------------------------------------------------------

    def finished(self) -> bool:
        return self.session.status is not None or self.failure is not None

    def _close_writer_locked(self) -> None:
        if self._writer_open:
            self._writer_open = False
            self.writer.close()

    def _should_drive_locked(self) -> bool:
        return not self.finished() and self.session.phase not in (
            LoopPhase.AWAIT_ANSWERS,
            LoopPhase.DONE,
        )

    def ensure_driving_locked(self) -> None:
        if self._driving or not self._should_drive_locked():
            return
        self._driving = True
        threading.Thread(target=self._drive, daemon=True).start()

    def _drive(self) -> None:
        while True:
            with self.cond:
                if not self._should_drive_locked():
                    self._driving = False
                    if self.finished():
                        self._close_writer_locked()
                    self.cond.notify_all()
                    return
            try:
                advance(self.session, self.backend)
            except (LoopError, BackendError) as exc:
                with self.cond:
                    self.failure = f"{type(exc).__name__}: {exc}"
                    self._driving = False
                    self._close_writer_locked()
                    self.cond.notify_all()
                return

    # -- queries -----------------------------------------------------------

    def events_after(self, after: int, wait: float = 0.0) -> list:
        deadline = time.monotonic() + min(wait, _POLL_CAP_SECONDS)
        with self.cond:
            while True:
                fresh = [e for e in self.session.events if e.seq > after]
                if fresh or self.finished():
                    return fresh
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return fresh
                self.cond.wait(remaining)


def _view_from_runner(runner: SessionRunner) -> dict:
    with runner.cond:
        session = runner.session
        view = {
            "session_id": session.session_id,
            "command": session.command,
            "config": session.config.to_payload(),
            "phase": session.phase.value,
            "iteration": session.iteration,
            "status": session.status,
            "pending_questions": [q.to_payload() for q in session.pending_questions],
            "rap_versions": [
                {"revision": p.revision, "steps": plan_to_payload(p)}
                for p in session.rap_versions
            ],
            "metrics": _partial_metrics(session.events),
            "last_seq": len(session.events),
        }
        if runner.failure:
            view["error"] = runner.failure
        return view


def _view_from_record(record: SessionRecord) -> dict:
    pending: list[dict] = []
    final_phase = record.final_phase
    if final_phase == LoopPhase.AWAIT_ANSWERS.value:
        for event in reversed(record.events):
            if event.kind == "QuestionsParsed" and not event.payload["is_none"]:
                pending = list(event.payload["questions"])
                break
    iteration = 1
    for event in reversed(record.events):
        if event.kind == "PhaseChanged":
            iteration = event.payload.get("iteration", 1)
            break
    return {
        "session_id": record.session_id,
        "command": record.command,
        "config": record.config.to_payload(),
        "phase": final_phase,
        "iteration": iteration,
        "status": record.status,
        "pending_questions": pending,
        "rap_versions": [
            {"revision": p["revision"], "steps": p["plan"]}
            for p in record.rap_payloads()
        ],
        "metrics": _partial_metrics(record.events),
        "last_seq": len(record.events),
    }


def _default_backend_factory(config: SessionConfig) -> LlmBackend:
    return OpenAIBackend(BackendConfig(model=config.model, temperature=config.temperature))


def create_app(
    store_dir: str = "sessions",
    backend_factory: Optional[BackendFactory] = None,
    prompts_dir: Optional[str] = None,
    cors_origins: Optional[list[str]] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="clarify-plan", docs_url=None, redoc_url=None)
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    store = SessionStore(store_dir)
    factory = backend_factory or _default_backend_factory
    registry: dict[str, SessionRunner] = {}
    registry_lock = threading.Lock()

    def get_runner(session_id: str) -> Optional[SessionRunner]:
        with registry_lock:
            return registry.get(session_id)

    def error(status: int, message: str) -> JSONResponse:
        return JSONResponse({"detail": message}, status_code=status)

    @app.post("/sessions")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return error(400, "request body must be JSON")
        if not isinstance(body, dict):
            return error(400, "request body must be a JSON object")
        command = body.get("command", "")
        if not isinstance(command, str) or not command.strip():
            return error(400, "command must be a non-empty string")
        config_payload = dict(body.get("config") or {})
        if prompts_dir is not None and "prompts_dir" not in config_payload:
            config_payload["prompts_dir"] = prompts_dir
        try:
            config = SessionConfig.from_payload(config_payload)
        except (TypeError, ValueError) as exc:
            return error(400, f"bad config: {exc}")
        try:
            backend = factory(config)
        except BackendError as exc:
            return error(503, f"backend unavailable: {exc}")
        try:
            bundle = load_components(config.prompts_dir)
        except PromptAssetError as exc:
            return error(400, f"bad prompt assets: {exc}")

        session = start_session(command, config=config, bundle=bundle)
        writer = store.persist(session)
        runner = SessionRunner(session, backend, writer)
        with registry_lock:
            registry[session.session_id] = runner
        with runner.cond:
            runner.ensure_driving_locked()
        return JSONResponse(
            {"session_id": session.session_id, "config": config.to_payload()},
            status_code=201,
        )

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        runner = get_runner(session_id)
        if runner is not None:
            return _view_from_runner(runner)
        try:
            record = store.load(session_id)
        except NotFound:
            return error(404, f"no session {session_id!r}")
        except CorruptRecord as exc:
            return error(404, f"unreadable session: {exc}")
        return _view_from_record(record)

    @app.post("/sessions/{session_id}/answers")
    async def post_answers(session_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return error(400, "request body must be JSON")
        entries = body.get("answers") if isinstance(body, dict) else None
        if not isinstance(entries, list) or not all(
            isinstance(e, dict) and isinstance(e.get("question_id"), str)
            and isinstance(e.get("text"), str)
            for e in entries
        ):
            return error(
                422, "answers must be a list of {question_id, text} objects"
            )

        runner = get_runner(session_id)
        if runner is None:
            try:
                store.load(session_id)
            except (NotFound, CorruptRecord):
                return error(404, f"no session {session_id!r}")
            return error(409, "session is not awaiting answers")

        canonical = json.dumps(sorted((e["question_id"], e["text"]) for e in entries))
        answers = AnswerSet(
            tuple(
                Answer(
                    question_id=e["question_id"],
                    text="" if e["text"] == REFUSED_MARKER else e["text"],
                    refused=e["text"] == REFUSED_MARKER,
                )
                for e in entries
            )
        ) if len({e["question_id"] for e in entries}) == len(entries) else None
        if answers is None:
            return error(422, "duplicate question ids in submission")

        with runner.cond:
            if canonical in runner.applied_answers.values():
                return JSONResponse({"accepted": True, "duplicate": True}, status_code=202)
            if runner.session.phase is not LoopPhase.AWAIT_ANSWERS:
                return error(409, "session is not awaiting answers")
            pending_ids = {q.question_id for q in runner.session.pending_questions}
            submitted_ids = {a.question_id for a in answers.answers}
            unknown = sorted(submitted_ids - pending_ids)
            missing = sorted(pending_ids - submitted_ids)
            if unknown or missing:
                detail = {}
                if unknown:
                    detail["unknown_ids"] = unknown
                if missing:
                    detail["missing_ids"] = missing
                return JSONResponse({"detail": detail}, status_code=422)
            iteration = runner.session.iteration
            submit_answers(runner.session, answers)
            runner.applied_answers[iteration] = canonical
            runner.ensure_driving_locked()
        return JSONResponse({"accepted": True}, status_code=202)

    @app.get("/sessions/{session_id}/diff")
    def get_diff(session_id: str, request: Request):
        params = request.query_params
        try:
            rev_from = int(params.get("from", ""))
            rev_to = int(params.get("to", ""))
        except ValueError:
            return error(400, "from and to must be integer revisions")

        runner = get_runner(session_id)
        if runner is not None:
            with runner.cond:
                plans = {
                    p.revision: p for p in runner.session.rap_versions
                }
        else:
            try:
                record = store.load(session_id)
            except NotFound:
                return error(404, f"no session {session_id!r}")
            except CorruptRecord as exc:
                return error(404, f"unreadable session: {exc}")
            plans = {
                p["revision"]: make_plan(p["plan"], revision=p["revision"])
                for p in record.rap_payloads()
            }
        if rev_from not in plans or rev_to not in plans:
            known = sorted(plans)
            return error(404, f"unknown revision; session has {known}")
        payload = diff(plans[rev_from], plans[rev_to]).to_payload()
        payload["from"] = rev_from
        payload["to"] = rev_to
        return payload

    def _sse_stream(runner: Optional[SessionRunner], record_events, after: int):
        def encode(event) -> str:
            return f"id: {event.seq}\ndata: {json.dumps(event.to_payload(), ensure_ascii=False)}\n\n"

        def generate():
            last = after
            if runner is None:
                for event in record_events:
                    if event.seq > last:
                        yield encode(event)
                return
            while True:
                fresh = runner.events_after(last, wait=1.0)
                for event in fresh:
                    yield encode(event)
                    last = event.seq
                if not fresh and runner.finished():
                    return

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, request: Request):
        params = request.query_params
        try:
            after = int(params.get("after", 0))
        except ValueError:
            return error(400, "after must be an integer sequence number")
        mode = params.get("mode", "sse")

        runner = get_runner(session_id)
        record_events = None
        if runner is None:
            try:
                record_events = store.load(session_id).events
            except NotFound:
                return error(404, f"no session {session_id!r}")
            except CorruptRecord as exc:
                return error(404, f"unreadable session: {exc}")

        if mode == "poll":
            try:
                wait = float(params.get("wait", 0.0))
            except ValueError:
                return error(400, "wait must be a number of seconds")
            if runner is None:
                events = [e for e in record_events if e.seq > after]
                finished = True
                status = None
                for e in reversed(record_events):
                    if e.kind == "PhaseChanged" and e.payload.get("status"):
                        status = e.payload["status"]
                        break
            else:
                events = runner.events_after(after, wait=wait)
                finished = runner.finished()
                status = runner.session.status
            return {
                "events": [e.to_payload() for e in events],
                "finished": finished,
                "status": status,
            }

        return _sse_stream(runner, record_events, after)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
