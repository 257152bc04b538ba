"""Operator command line.

Subcommands: plan (run a clarification session, interactive or batch),
replay (verify a stored session), experiment (batch evaluation), sessions
(list/show stored sessions), serve (HTTP API).

Exit codes: 0 success/Done, 1 usage or not-found, 2 backend failure,
3 session truncated, 4 replay divergence or corrupt record.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .errors import (
    BackendError,
    CorruptRecord,
    EmptyCommand,
    LoopError,
    NotFound,
    PromptAssetError,
    ReplayDivergence,
    StoreError,
    UsageError,
)
from .harness import (
    REFUSED_MARKER,
    compute_metrics,
    make_answer_provider,
    run_experiment,
)
from .llm import BackendConfig, DEFAULT_ENDPOINT, DEFAULT_MODEL, OpenAIBackend, ScriptedBackend
from .loop import (
    Answer,
    AnswerSet,
    Question,
    SessionConfig,
    run_to_completion,
    start_session,
)
from .rap import RobotActionPlan, plan_to_payload
from .store import SessionStore

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BACKEND = 2
EXIT_TRUNCATED = 3
EXIT_DIVERGED = 4

DEFAULT_STORE = "sessions"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; the contract here wants 1."""

    def error(self, message: str):  # noqa: D401 - argparse hook
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="clarify-plan", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_plan = sub.add_parser("plan", help="run one clarification session")
    p_plan.add_argument("command", help="the instruction to plan for")
    p_plan.add_argument("--scripted", metavar="FILE", help="canned model responses (JSON array)")
    p_plan.add_argument("--answers", metavar="FILE", help="batch answers: JSON map ordinal -> text or REFUSED")
    p_plan.add_argument("--prompts", metavar="DIR", help="prompt asset override directory")
    p_plan.add_argument("--max-iter", type=int, default=10, metavar="N")
    p_plan.add_argument("--out", default=DEFAULT_STORE, metavar="DIR", help="session store directory")
    p_plan.add_argument("--session-id", help="fix the session id (otherwise random)")
    p_plan.add_argument("--model", default=DEFAULT_MODEL)
    p_plan.add_argument("--endpoint", default=DEFAULT_ENDPOINT)
    p_plan.add_argument("--json", action="store_true", help="machine-readable result on stdout")

    p_replay = sub.add_parser("replay", help="re-run a stored session and verify it")
    p_replay.add_argument("session", help="session id or path to a .jsonl record")
    p_replay.add_argument("--out", default=DEFAULT_STORE, metavar="DIR")

    p_exp = sub.add_parser("experiment", help="run an experiment spec")
    p_exp.add_argument("spec", help="experiment description (JSON)")
    p_exp.add_argument("--report", metavar="FILE", help="write the JSON report here")
    p_exp.add_argument("--store", metavar="DIR", help="persist trial sessions here")

    p_sessions = sub.add_parser("sessions", help="inspect the session store")
    sessions_sub = p_sessions.add_subparsers(dest="action", required=True)
    p_list = sessions_sub.add_parser("list")
    p_list.add_argument("--out", default=DEFAULT_STORE, metavar="DIR")
    p_show = sessions_sub.add_parser("show")
    p_show.add_argument("session", help="session id")
    p_show.add_argument("--out", default=DEFAULT_STORE, metavar="DIR")

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--sessions-dir", default=DEFAULT_STORE)
    p_serve.add_argument("--prompts", metavar="DIR")
    p_serve.add_argument("--model", default=DEFAULT_MODEL)
    p_serve.add_argument("--endpoint", default=DEFAULT_ENDPOINT)
    p_serve.add_argument("--allow-origin", action="append", default=[], metavar="ORIGIN")
    p_serve.add_argument("--serve-ui", metavar="DIR", help="serve a built UI from this directory")

    return parser


def render_rap_table(plan: RobotActionPlan) -> str:
    """The plan as an aligned text table: one row per step, one column per key."""
    columns: list[str] = []
    for step in plan.steps:
        for key in step.items():
            if key not in columns:
                columns.append(key)
    header = ["#", *columns]
    rows = [header]
    for step in plan.steps:
        items = step.items()
        rows.append([str(step.step_index), *[items.get(col, "") for col in columns]])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _interactive_provider(out, readline) -> "callable":
    def provider(questions: list[Question]) -> AnswerSet:
        answers = []
        for q in questions:
            out.write(f"Q{q.ordinal}: {q.text}\n")
            out.flush()
            try:
                line = readline()
            except EOFError:
                line = ""
            text = (line or "").strip()
            if not text or text == "/refuse":
                answers.append(Answer(question_id=q.question_id, text="", refused=True))
            else:
                answers.append(Answer(question_id=q.question_id, text=text))
        return AnswerSet(tuple(answers))

    return provider


def _load_answers_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            mapping = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read answers file {path}: {exc}") from exc
    if not isinstance(mapping, dict):
        raise UsageError(f"answers file {path} must be a JSON object")
    for key, value in mapping.items():
        if not isinstance(value, str):
            raise UsageError(f"answers file {path}: value for {key!r} must be a string")
    return mapping


def cmd_plan(args, out) -> int:
    if not args.command.strip():
        raise UsageError("command must not be empty")
    try:
        config = SessionConfig(max_iterations=args.max_iter, model=args.model, prompts_dir=args.prompts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if args.scripted:
        try:
            backend = ScriptedBackend.from_file(args.scripted)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load script {args.scripted}: {exc}") from exc
    else:
        backend = OpenAIBackend(BackendConfig(endpoint=args.endpoint, model=args.model))

    if args.answers:
        provider = make_answer_provider(_load_answers_file(args.answers))
    else:
        provider = _interactive_provider(out, input)

    store = SessionStore(args.out)
    if args.session_id:
        store.path_for(args.session_id).unlink(missing_ok=True)
    try:
        session = start_session(args.command, config=config, session_id=args.session_id)
    except EmptyCommand as exc:
        raise UsageError(str(exc)) from exc
    writer = store.persist(session)
    try:
        result = run_to_completion(session, backend, provider)
    finally:
        writer.close()

    metrics = compute_metrics(session)
    if args.json:
        payload = {
            "session_id": session.session_id,
            "status": result.status,
            "final_rap": plan_to_payload(result.final_rap) if result.final_rap else None,
            "metrics": metrics.to_payload(),
        }
        out.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    else:
        out.write(f"session: {session.session_id}\n")
        out.write(f"status: {result.status}\n")
        out.write(
            f"iterations: {metrics.iterations}  questions: {metrics.questions_total}\n"
        )
        if result.final_rap is not None:
            out.write(render_rap_table(result.final_rap) + "\n")
    return EXIT_OK if result.status == "Done" else EXIT_TRUNCATED


def _store_and_id_for(session_arg: str, out_dir: str) -> tuple[SessionStore, str]:
    path = Path(session_arg)
    if session_arg.endswith(".jsonl") or path.is_file():
        return SessionStore(path.parent if str(path.parent) != "" else "."), path.stem
    return SessionStore(out_dir), session_arg


def cmd_replay(args, out) -> int:
    from .store import replay as replay_record

    store, session_id = _store_and_id_for(args.session, args.out)
    try:
        record = store.load(session_id)
        report = replay_record(record)
    except NotFound as exc:
        out.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ReplayDivergence, CorruptRecord) as exc:
        out.write(f"replay failed: {exc}\n")
        return EXIT_DIVERGED
    out.write(
        f"replay ok: {report.session_id} "
        f"({report.compared_events} artifacts, status {report.status})\n"
    )
    return EXIT_OK


def cmd_experiment(args, out) -> int:
    store = SessionStore(args.store) if args.store else None
    try:
        report = run_experiment(args.spec, store=store)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad experiment spec {args.spec}: {exc}") from exc
    out.write(report.render_table() + "\n")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_payload(), fh, indent=2, ensure_ascii=False, sort_keys=True)
            fh.write("\n")
        out.write(f"report written to {args.report}\n")
    return EXIT_OK


def cmd_sessions(args, out) -> int:
    store = SessionStore(args.out)
    if args.action == "list":
        summaries = store.list_sessions()
        if not summaries:
            out.write("no sessions\n")
            return EXIT_OK
        for s in summaries:
            if s.corrupt:
                out.write(f"{s.session_id}  <corrupt record>\n")
            else:
                out.write(f"{s.session_id}  {s.created_at}  {s.status or 'open'}  {s.command}\n")
        return EXIT_OK

    # show
    try:
        record = store.load(args.session)
    except NotFound as exc:
        out.write(f"error: {exc}\n")
        return EXIT_USAGE
    except CorruptRecord as exc:
        out.write(f"error: {exc}\n")
        return EXIT_DIVERGED
    out.write(f"session: {record.session_id}\n")
    out.write(f"command: {record.command}\n")
    out.write(f"status: {record.status or 'open'}\n")
    from .rap import make_plan

    for event in record.events:
        if event.kind == "RapParsed":
            plan = make_plan(event.payload["plan"], revision=event.payload["revision"])
            out.write(f"\nRAP revision {event.payload['revision']}:\n")
            out.write(render_rap_table(plan) + "\n")
        elif event.kind == "QuestionsParsed" and not event.payload["is_none"]:
            out.write("\nquestions:\n")
            for q in event.payload["questions"]:
                out.write(f"  Q{int(q['question_id'][1:])}: {q['text']}\n")
        elif event.kind == "AnswersSubmitted":
            out.write("answers:\n")
            for a in event.payload["answers"]:
                text = REFUSED_MARKER if a.get("refused") else a["text"]
                out.write(f"  A{int(a['question_id'][1:])}: {text}\n")
    return EXIT_OK


def cmd_serve(args, out) -> int:
    import uvicorn

    from .service import create_app

    def backend_factory(config: SessionConfig):
        return OpenAIBackend(
            BackendConfig(endpoint=args.endpoint, model=config.model, temperature=config.temperature)
        )

    app = create_app(
        store_dir=args.sessions_dir,
        backend_factory=backend_factory,
        prompts_dir=args.prompts,
        cors_origins=list(args.allow_origin),
        ui_dir=args.serve_ui,
    )
    out.write(f"serving on http://{args.bind}:{args.port}\n")
    uvicorn.run(app, host=args.bind, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv: Optional[list[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand == "plan":
            return cmd_plan(args, out)
        if args.subcommand == "replay":
            return cmd_replay(args, out)
        if args.subcommand == "experiment":
            return cmd_experiment(args, out)
        if args.subcommand == "sessions":
            return cmd_sessions(args, out)
        if args.subcommand == "serve":
            return cmd_serve(args, out)
        raise UsageError(f"unknown subcommand {args.subcommand!r}")
    except UsageError as exc:
        out.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except PromptAssetError as exc:
        out.write(f"prompt asset error: {exc}\n")
        return EXIT_USAGE
    except (BackendError, LoopError) as exc:
        out.write(f"backend failure: {type(exc).__name__}: {exc}\n")
        return EXIT_BACKEND
    except StoreError as exc:
        out.write(f"store error: {exc}\n")
        return EXIT_DIVERGED


def entrypoint() -> None:
    sys.exit(main())
