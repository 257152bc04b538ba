#!/usr/bin/env python3
"""Record the committed session fixtures under fixtures/sessions/.

Runs the paper-shaped experiment trials plus three auxiliary sessions
(immediate none, parse repair, truncation) against the scripted fixtures and
journals each one. Replays every produced record as a self-check.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from clarify_plan import (  # noqa: E402
    ScriptedBackend,
    SessionConfig,
    SessionStore,
    make_answer_provider,
    replay,
    run_experiment,
    run_to_completion,
    start_session,
)

FIXTURES = ROOT / "fixtures"
SESSIONS = FIXTURES / "sessions"


def run_one(session_id: str, command: str, script: str, answers: str | None, **config_kw) -> None:
    store = SessionStore(SESSIONS)
    store.path_for(session_id).unlink(missing_ok=True)
    backend = ScriptedBackend.from_file(str(FIXTURES / "scripts" / script))
    mapping = {}
    if answers:
        mapping = json.loads((FIXTURES / "answers" / answers).read_text(encoding="utf-8"))
    session = start_session(
        command, config=SessionConfig(**config_kw), session_id=session_id
    )
    writer = store.persist(session)
    try:
        run_to_completion(session, backend, make_answer_provider(mapping))
    finally:
        writer.close()
    print(f"recorded {session_id}: {session.status}")


def main() -> None:
    SESSIONS.mkdir(parents=True, exist_ok=True)
    store = SessionStore(SESSIONS)

    run_experiment(FIXTURES / "experiments" / "cooking_tasks.json", store=store)
    print("recorded 6 experiment trial sessions")

    run_one("aux-immediate-none", "Bring me the TV remote.", "immediate_none.json", None)
    run_one("aux-repair-recovery", "Open the window.", "repair_recovery.json", None)
    run_one(
        "aux-truncated-demo",
        "Organize the bookshelf.",
        "truncated_demo.json",
        "truncated_demo.json",
        max_iterations=2,
    )

    for summary in store.list_sessions():
        report = replay(store.load(summary.session_id))
        print(f"replay ok: {report.session_id} ({report.compared_events} artifacts)")


if __name__ == "__main__":
    main()
