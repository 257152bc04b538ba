"""Metrics, aggregation, coverage comparison, and batch experiment runs."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from clarify_plan import (
    ScriptedBackend,
    SessionStore,
    aggregate,
    compare_before_after,
    compare_commands,
    compute_metrics,
    generate_rap_once,
    load_rap_file,
    run_experiment,
)
from clarify_plan.errors import EmptyInput, IncompleteSession
from clarify_plan.harness import format_mean, make_answer_provider, revision_diffs
from clarify_plan.loop import Question, start_session
from clarify_plan.rap import make_plan

from conftest import FIXTURES, load_script, run_fixture_session

# session-id -> (iterations, question_turns, questions_total, status)
EXPECTED_METRICS = {
    "task1-scrambled-egg-trial1": (2, 1, 3, "Done"),
    "task1-scrambled-egg-trial2": (3, 2, 3, "Done"),
    "task1-scrambled-egg-trial3": (2, 1, 2, "Done"),
    "task2-cut-carrots-trial1": (2, 1, 3, "Done"),
    "task2-cut-carrots-trial2": (2, 1, 3, "Done"),
    "task2-cut-carrots-trial3": (2, 1, 2, "Done"),
    "aux-immediate-none": (1, 0, 0, "Done"),
    "aux-truncated-demo": (2, 2, 2, "Truncated"),
}


# --- per-session metrics -----------------------------------------------------

@pytest.mark.parametrize("session_id,expected", sorted(EXPECTED_METRICS.items()))
def test_compute_metrics_against_fixture(fixture_store, session_id, expected):
    metrics = compute_metrics(fixture_store.load(session_id))
    assert (
        metrics.iterations,
        metrics.question_turns,
        metrics.questions_total,
        metrics.final_status,
    ) == expected
    assert metrics.session_id == session_id
    assert metrics.tokens_estimated > 0
    assert metrics.question_turns <= metrics.iterations
    if metrics.questions_total:
        assert metrics.questions_total >= metrics.question_turns


def test_compute_metrics_rejects_unfinished_session():
    backend = ScriptedBackend(responses=load_script("egg_trial1.json"))
    session = start_session("Make scrambled egg.")
    from clarify_plan import advance

    advance(session, backend)  # only MakeRap has run; no final status yet
    with pytest.raises(IncompleteSession):
        compute_metrics(session)


def test_metrics_agree_between_live_and_loaded(tmp_path):
    store = SessionStore(tmp_path)
    session = run_fixture_session(
        "egg_trial1.json", "egg_trial1.json", session_id="both", store=store
    )
    live = compute_metrics(session)
    loaded = compute_metrics(store.load("both"))
    assert live == loaded


# --- mean formatting ---------------------------------------------------------

@pytest.mark.parametrize(
    "values,rendered",
    [
        ([3, 3, 2], "2.66"),
        ([2, 3, 2], "2.33"),
        ([2, 2, 2], "2.00"),
        ([1], "1.00"),
        ([1, 2], "1.50"),
    ],
)
def test_mean_rendering_truncates(values, rendered):
    assert format_mean(Fraction(sum(values), len(values))) == rendered


def test_format_mean_edge_cases():
    assert format_mean(Fraction(1, 8)) == "0.12"  # 0.125 truncates, never rounds
    assert format_mean(Fraction(199, 100)) == "1.99"
    assert format_mean(Fraction(0)) == "0.00"
    with pytest.raises(ValueError):
        format_mean(Fraction(-1, 2))


# --- aggregation -------------------------------------------------------------

def _metrics_for(ids, fixture_store):
    return [compute_metrics(fixture_store.load(i)) for i in ids]


def test_aggregate_empty_rejected():
    with pytest.raises(EmptyInput):
        aggregate([])


def test_aggregate_singleton_identity(fixture_store):
    (m,) = _metrics_for(["task1-scrambled-egg-trial1"], fixture_store)
    agg = aggregate([m])
    assert agg.sessions == 1
    assert agg.mean_iterations == Fraction(m.iterations)
    assert agg.mean_questions == Fraction(m.questions_total)
    assert agg.statuses == {"Done": 1}


def test_aggregate_permutation_invariant(fixture_store):
    ids = [
        "task1-scrambled-egg-trial1",
        "task1-scrambled-egg-trial2",
        "task1-scrambled-egg-trial3",
    ]
    forward = aggregate(_metrics_for(ids, fixture_store))
    backward = aggregate(_metrics_for(list(reversed(ids)), fixture_store))
    assert forward == backward
    assert forward.mean_iterations_str == "2.33"
    assert forward.mean_questions_str == "2.66"


@given(st.lists(st.integers(min_value=0, max_value=20), min_size=1, max_size=12))
@settings(max_examples=50, deadline=None)
def test_aggregate_mean_matches_fraction(counts):
    from clarify_plan.harness import SessionMetrics

    metrics = [
        SessionMetrics(
            session_id=f"s{i}",
            command="x",
            final_status="Done",
            iterations=c,
            question_turns=0,
            questions_total=c,
            tokens_estimated=1,
        )
        for i, c in enumerate(counts)
    ]
    agg = aggregate(metrics)
    assert agg.mean_iterations == Fraction(sum(counts), len(counts))
    assert agg.total_questions == sum(counts)


# --- before/after comparison ---------------------------------------------------

def test_compare_before_after_task1(fixture_store):
    report = compare_before_after(fixture_store.load("task1-scrambled-egg-trial1"))
    assert "TIME" in report.added_keys
    added = {(step.action, step.object) for _, step in report.added_steps}
    assert ("OPEN", "refrigerator") in added
    assert ("CLOSE", "refrigerator") in added


def test_compare_before_after_task2(fixture_store):
    report = compare_before_after(fixture_store.load("task2-cut-carrots-trial1"))
    assert {"CUT_SIZE", "LOCATION"} <= set(report.added_keys)


def test_compare_before_after_single_revision(fixture_store):
    report = compare_before_after(fixture_store.load("aux-immediate-none"))
    assert report.is_empty()


def test_compare_before_after_requires_a_plan():
    session = start_session("Do nothing yet.")
    with pytest.raises(IncompleteSession):
        compare_before_after(session)


def test_revision_diffs_chain(fixture_store):
    record = fixture_store.load("task1-scrambled-egg-trial2")
    chain = revision_diffs(record)
    assert [d["from_revision"] for d in chain] == [1, 2]
    assert [d["to_revision"] for d in chain] == [2, 3]


# --- command coverage -----------------------------------------------------------

def load_fixture_rap(name):
    return load_rap_file(str(FIXTURES / "raps" / name))


def test_compare_commands_on_fixture_pair():
    terse = load_fixture_rap("egg_terse.json")
    elaborated = load_fixture_rap("egg_elaborated.json")
    with open(FIXTURES / "annotations" / "egg.json", encoding="utf-8") as fh:
        annotations = json.load(fh)
    report = compare_commands(terse, elaborated, annotations)
    assert report.keys_only_in_a == ()
    assert set(report.keys_only_in_b) == {"COUNT", "HEAT_LEVEL", "SEASONING", "SERVING"}
    assert report.step_count_b >= report.step_count_a
    assert len(report.narrative_items) == 4
    assert not report.is_empty()


def test_compare_commands_identity():
    plan = load_fixture_rap("carrots_terse.json")
    report = compare_commands(plan, plan)
    assert report.keys_only_in_a == ()
    assert report.keys_only_in_b == ()
    assert report.is_empty()


def test_compare_commands_rejects_bad_annotation():
    plan = load_fixture_rap("egg_terse.json")
    with pytest.raises(ValueError):
        compare_commands(plan, plan, [{"label": "x", "present_in": "c"}])


def test_compare_commands_only_b_side_annotations_surface():
    plan = load_fixture_rap("egg_terse.json")
    report = compare_commands(
        plan,
        plan,
        [
            {"label": "kept detail", "present_in": "a"},
            {"label": "new detail", "present_in": "b"},
        ],
    )
    assert report.narrative_items == ("new detail",)


# --- answer provider --------------------------------------------------------------

def test_make_answer_provider_semantics():
    provider = make_answer_provider({"1": "yes", "3": "REFUSED"})
    questions = [Question("q1", "A?"), Question("q2", "B?"), Question("q3", "C?")]
    answers = provider(questions).by_id()
    assert answers["q1"].text == "yes" and not answers["q1"].refused
    assert answers["q2"].refused  # missing ordinal refuses
    assert answers["q3"].refused  # explicit marker refuses


def test_generate_rap_once():
    backend = ScriptedBackend(responses=load_script("immediate_none.json"))
    plan = generate_rap_once("Bring me the TV remote.", backend)
    assert plan.revision == 1
    assert plan.steps
    assert backend.cursor == 1  # only the MakeRap exchange ran


# --- experiment runner ---------------------------------------------------------------

SPEC_PATH = FIXTURES / "experiments" / "cooking_tasks.json"


def test_run_experiment_report_values():
    report = run_experiment(SPEC_PATH)
    by_label = {t.label: t for t in report.tasks}
    egg = by_label["task1-scrambled-egg"]
    carrots = by_label["task2-cut-carrots"]
    assert egg.aggregate.mean_iterations_str == "2.33"
    assert egg.aggregate.mean_questions_str == "2.66"
    assert carrots.aggregate.mean_iterations_str == "2.00"
    assert carrots.aggregate.mean_questions_str == "2.66"
    assert report.pooled.sessions == 6
    assert report.pooled.mean_questions_str == "2.66"
    assert report.deterministic
    assert report.prompt_token_estimate > 0
    assert egg.coverage is not None and egg.coverage.keys_only_in_a == ()


def test_run_experiment_is_deterministic():
    first = run_experiment(SPEC_PATH)
    second = run_experiment(SPEC_PATH)
    assert first.to_payload() == second.to_payload()


def test_run_experiment_table_layout():
    table = run_experiment(SPEC_PATH).render_table()
    lines = table.splitlines()
    assert lines[0].split() == ["task", "trials", "mean", "iterations", "mean", "questions"]
    assert set(lines[1]) <= {"-", " "}
    assert lines[-1].startswith("pooled")
    assert "2.66" in lines[-1]


def test_run_experiment_persists_when_given_store(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    run_experiment(SPEC_PATH, store=store)
    ids = {s.session_id for s in store.list_sessions()}
    assert "task1-scrambled-egg-trial1" in ids
    assert len(ids) == 6


def test_run_experiment_rejects_live_mode(tmp_path):
    spec = {
        "tasks": [
            {
                "label": "t",
                "command": "x",
                "backend": {"mode": "live", "scripts": []},
            }
        ]
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    with pytest.raises(ValueError):
        run_experiment(path)


def test_run_experiment_rejects_mismatched_answers(tmp_path):
    spec = {
        "tasks": [
            {
                "label": "t",
                "command": "x",
                "backend": {
                    "mode": "scripted",
                    "scripts": ["a.json", "b.json"],
                    "answers": ["only-one.json"],
                },
            }
        ]
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    with pytest.raises(ValueError):
        run_experiment(path)
