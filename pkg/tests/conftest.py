import json
from pathlib import Path

import pytest
from hypothesis import strategies as st

from clarify_plan import (
    ScriptedBackend,
    SessionConfig,
    SessionStore,
    make_answer_provider,
    run_to_completion,
    start_session,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# one line per acceptance criterion, echoed after the run so the verdicts are
# visible even with output capture on
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def fixture_store() -> SessionStore:
    return SessionStore(FIXTURES / "sessions")


def load_script(name: str) -> list[str]:
    with open(FIXTURES / "scripts" / name, encoding="utf-8") as fh:
        return json.load(fh)


def load_answers(name: str) -> dict:
    with open(FIXTURES / "answers" / name, encoding="utf-8") as fh:
        return json.load(fh)


_RAP_TEXTS = (
    '[{"ACTION": "MOVE", "OBJECT": "table", "ROBOT POSITION": "living room",'
    ' "GRIPPER_L": "NONE", "GRIPPER_R": "NONE"}]',
    'Here is the plan.\n```json\n[{"ACTION": "FIND", "OBJECT": "cup",'
    ' "ROBOT POSITION": "kitchen", "GRIPPER_L": "NONE", "GRIPPER_R": "NONE",'
    ' "TIME": "1 minute"}]\n```',
    '[{"ACTION": "GRAB", "OBJECT": "book", "ROBOT POSITION": "shelf",'
    ' "GRIPPER_L": "book", "GRIPPER_R": "NONE"},'
    ' {"ACTION": "PUT", "OBJECT": "book", "ROBOT POSITION": "desk",'
    ' "GRIPPER_L": "NONE", "GRIPPER_R": "NONE"}]',
)
_ANALYSIS_TEXTS = (
    "Checking the RAP step by step:\n1. The plan is missing a target location.",
    "The RAP does not say when to stop.\n- stopping condition\n- target amount",
)
_NONE_TEXTS = ("none", "None.", "'none'")
_QUESTION_LINES = (
    "Where should I put it?",
    "How many do you need?",
    "When should I start?",
)


@st.composite
def loop_walks(draw):
    """A scripted walk through the loop plus the facts a checker needs.

    Produces (responses, max_iterations, expected_status, expected_iterations,
    expected_question_counts). The script always holds exactly the responses
    the engine will consume, so a run can never exhaust it.
    """
    max_iterations = draw(st.integers(min_value=1, max_value=4))
    outcomes = draw(
        st.lists(
            st.sampled_from(["continue", "end_analysis", "end_question"]),
            min_size=max_iterations,
            max_size=max_iterations,
        )
    )
    responses: list[str] = []
    question_counts: list[int] = []
    expected_status = "Truncated"
    expected_iterations = max_iterations
    for index, outcome in enumerate(outcomes, start=1):
        responses.append(draw(st.sampled_from(_RAP_TEXTS)))
        if outcome == "end_analysis":
            responses.append(draw(st.sampled_from(_NONE_TEXTS)))
            expected_status = "Done"
            expected_iterations = index
            break
        responses.append(draw(st.sampled_from(_ANALYSIS_TEXTS)))
        if outcome == "end_question":
            responses.append(draw(st.sampled_from(_NONE_TEXTS)))
            expected_status = "Done"
            expected_iterations = index
            break
        count = draw(st.integers(min_value=1, max_value=3))
        responses.append("\n".join(_QUESTION_LINES[:count]))
        if index == max_iterations:
            break  # the guardrail fires at this question turn
        question_counts.append(count)
    return responses, max_iterations, expected_status, expected_iterations, question_counts


def run_fixture_session(
    script: str,
    answers: str | None = None,
    command: str = "Make scrambled egg.",
    session_id: str | None = None,
    store: SessionStore | None = None,
    **config_kw,
):
    """Drive one scripted fixture to completion and return the session."""
    backend = ScriptedBackend(responses=load_script(script))
    mapping = load_answers(answers) if answers else {}
    session = start_session(
        command, config=SessionConfig(**config_kw), session_id=session_id
    )
    writer = store.persist(session) if store is not None else None
    try:
        run_to_completion(session, backend, make_answer_provider(mapping))
    finally:
        if writer is not None:
            writer.close()
    return session
