#!/usr/bin/env python3
"""Manual smoke test against a real chat-completions endpoint.

Needs the CLARIFY_PLAN_API_KEY environment variable. This is the one check
that cannot run unattended: it spends real tokens and its output is
non-deterministic, so it is kept out of the automated suite. The session is
journaled so the transcript can be inspected or replayed afterwards.

Usage:
    CLARIFY_PLAN_API_KEY=... python3 scripts/live_smoke.py "Make scrambled egg." \
        [--endpoint URL] [--model NAME] [--max-iter N] [--out DIR]
"""

import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from clarify_plan import (  # noqa: E402
    Answer,
    AnswerSet,
    SessionConfig,
    SessionStore,
    run_to_completion,
    start_session,
)
from clarify_plan.llm import API_KEY_ENV, BackendConfig, DEFAULT_ENDPOINT, DEFAULT_MODEL, OpenAIBackend  # noqa: E402
from clarify_plan.cli import render_rap_table  # noqa: E402


def ask_on_terminal(questions):
    answers = []
    for q in questions:
        reply = input(f"Q{q.ordinal}: {q.text}\n> ").strip()
        if not reply or reply == "/refuse":
            answers.append(Answer(question_id=q.question_id, text="", refused=True))
        else:
            answers.append(Answer(question_id=q.question_id, text=reply))
    return AnswerSet(tuple(answers))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("command", help="instruction for the robot")
    parser.add_argument("--endpoint", default=DEFAULT_ENDPOINT)
    parser.add_argument("--model", default=DEFAULT_MODEL)
    parser.add_argument("--max-iter", type=int, default=5)
    parser.add_argument("--out", default="sessions", help="session store directory")
    args = parser.parse_args()

    if not os.environ.get(API_KEY_ENV):
        print(f"error: set {API_KEY_ENV} first", file=sys.stderr)
        return 2

    backend = OpenAIBackend(BackendConfig(endpoint=args.endpoint, model=args.model))
    config = SessionConfig(max_iterations=args.max_iter, model=args.model)
    session = start_session(args.command, config=config)
    store = SessionStore(args.out)
    writer = store.persist(session)
    try:
        result = run_to_completion(session, backend, ask_on_terminal)
    finally:
        writer.close()

    print(f"\nstatus: {result.status}")
    print(f"session stored at {store.path_for(session.session_id)}")
    if result.final_rap is not None:
        print(render_rap_table(result.final_rap))
    return 0 if result.status == "Done" else 3


if __name__ == "__main__":
    raise SystemExit(main())
