"""Plan document model: parsing, canonical form, validation, and diffing."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from clarify_plan import canonicalize, diff, key_vocabulary, make_plan, parse_rap, serialize_rap, validate
from clarify_plan.errors import MalformedJson, NoJsonFound, NotAnArray, RapParseError
from clarify_plan.rap import REQUIRED_KEYS, canonical_key, canonical_value


STEP = {
    "ACTION": "GRAB",
    "OBJECT": "egg",
    "ROBOT POSITION": "kitchen",
    "GRIPPER_L": "none",
    "GRIPPER_R": "egg",
}


def plan_of(*objs):
    return canonicalize(make_plan(objs))


# --- parsing ---------------------------------------------------------------


def test_parse_plain_array():
    plan = parse_rap(json.dumps([STEP]))
    assert len(plan.steps) == 1
    step = plan.steps[0]
    assert step.action == "GRAB"
    assert step.robot_position == "kitchen"
    assert step.extensions == {}


def test_parse_space_and_underscore_position_aliases():
    a = parse_rap('[{"ACTION": "MOVE", "ROBOT POSITION": "kitchen"}]')
    b = parse_rap('[{"ACTION": "MOVE", "ROBOT_POSITION": "kitchen"}]')
    assert a.steps[0].robot_position == b.steps[0].robot_position == "kitchen"


def test_parse_keys_case_insensitive():
    plan = parse_rap('[{"action": "MOVE", "object": "none", "robot position": "hall"}]')
    assert plan.steps[0].action == "MOVE"
    assert plan.steps[0].robot_position == "hall"


def test_parse_extension_keys_kept_in_first_seen_order():
    plan = parse_rap('[{"ACTION": "CUT", "CUT_SIZE": "1 cm", "time": "2 min"}]')
    assert list(plan.steps[0].extensions) == ["CUT_SIZE", "TIME"]


def test_parse_prose_wrapped_array():
    text = "Sure, here is the plan:\n" + json.dumps([STEP]) + "\nLet me know."
    assert len(parse_rap(text).steps) == 1


def test_parse_fenced_block_preferred():
    fenced = "```json\n" + json.dumps([STEP]) + "\n```"
    assert parse_rap(fenced).steps[0].action == "GRAB"


def test_parse_missing_required_keys_become_empty():
    plan = parse_rap('[{"ACTION": "WAIT"}]')
    step = plan.steps[0]
    assert step.object == ""
    assert step.gripper_l == ""


def test_parse_non_string_values_stringified():
    plan = parse_rap('[{"ACTION": "WAIT", "TIME": 3, "CAREFUL": true, "WHO": null}]')
    assert plan.steps[0].extensions == {"TIME": "3", "CAREFUL": "true", "WHO": "none"}


def test_parse_no_json_raises():
    with pytest.raises(NoJsonFound):
        parse_rap("I will simply grab the egg.")


def test_parse_object_instead_of_array():
    with pytest.raises(NotAnArray):
        parse_rap('{"ACTION": "GRAB"}')


def test_parse_array_of_scalars_not_accepted():
    with pytest.raises(NotAnArray):
        parse_rap("[1, 2, 3]")


def test_parse_malformed_json_has_offset():
    text = 'prefix [ {"ACTION": "GRAB", } ] suffix'
    with pytest.raises(MalformedJson) as err:
        parse_rap(text)
    assert err.value.offset == text.index("[")


def test_parse_skips_non_plan_brackets():
    text = "ranked [1st] choice:\n" + json.dumps([STEP])
    assert parse_rap(text).steps[0].action == "GRAB"


def test_parse_empty_array_is_a_plan():
    assert parse_rap("[]").steps == ()


# --- canonical form ----------------------------------------------------------


def test_canonical_key_normalizes_spacing_and_case():
    assert canonical_key("  robot  position ") == "ROBOT_POSITION"
    assert canonical_key("Cut Size") == "CUT_SIZE"


def test_canonical_value_trims_and_fixes_none():
    assert canonical_value("  none ") == "NONE"
    assert canonical_value("None") == "NONE"
    assert canonical_value(" egg ") == "egg"


def test_canonicalize_folds_extension_collision_into_required():
    plan = make_plan([{"ACTION": "MOVE", "Robot Position": "hall"}])
    fixed = canonicalize(plan)
    assert fixed.steps[0].robot_position == "hall"
    assert "ROBOT_POSITION" not in fixed.steps[0].extensions


def test_serialize_orders_required_then_extensions():
    plan = plan_of({"TIME": "3", "ACTION": "WAIT", "OBJECT": "none"})
    data = json.loads(serialize_rap(plan))
    assert list(data[0]) == [*REQUIRED_KEYS, "TIME"]


# --- validation ---------------------------------------------------------------


def test_validate_flags_empty_action():
    report = validate(plan_of({"ACTION": "", "OBJECT": "egg"}))
    assert not report.valid
    assert any(i.key == "ACTION" for i in report.issues)


def test_validate_final_requires_steps():
    assert validate(make_plan([]), finality="final").valid is False
    assert validate(make_plan([]), finality="draft").valid is True


def test_validate_warns_on_manipulation_without_object():
    report = validate(plan_of({"ACTION": "GRAB", "OBJECT": "none"}))
    assert report.valid  # warnings only
    assert any(i.severity == "warning" and i.key == "OBJECT" for i in report.issues)


def test_validate_warns_on_sentinel_misspellings():
    report = validate(plan_of({"ACTION": "MOVE", "GRIPPER_L": "n/a"}))
    assert any("n/a" in i.message for i in report.issues)


# --- vocabulary and diff -------------------------------------------------------


def test_key_vocabulary_counts_extensions_and_nonempty_required():
    plan = plan_of(
        {"ACTION": "CUT", "OBJECT": "carrot", "CUT_SIZE": "1 cm"},
        {"ACTION": "WAIT"},
    )
    vocab = key_vocabulary(plan)
    assert "CUT_SIZE" in vocab
    assert "ROBOT_POSITION" not in vocab  # empty in every step


def test_diff_reports_added_key_and_step():
    before = plan_of(
        {"ACTION": "CUT", "OBJECT": "carrot", "ROBOT POSITION": "counter"},
    )
    after = plan_of(
        {"ACTION": "FIND", "OBJECT": "board", "ROBOT POSITION": "counter"},
        {"ACTION": "CUT", "OBJECT": "carrot", "ROBOT POSITION": "counter", "CUT_SIZE": "1 cm"},
    )
    d = diff(before, after)
    assert ("FIND", "board") in [(s.action, s.object) for _, s in d.added_steps]
    assert "CUT_SIZE" in d.added_keys
    assert d.removed_steps == ()


def test_diff_value_change_reported_per_key():
    before = plan_of({"ACTION": "MOVE", "ROBOT POSITION": "kitchen"})
    after = plan_of({"ACTION": "MOVE", "ROBOT POSITION": "hall"})
    d = diff(before, after)
    assert d.modified_steps[0].changes["ROBOT_POSITION"] == ("kitchen", "hall")


def test_diff_positional_tiebreak_on_duplicate_pairs():
    before = plan_of(
        {"ACTION": "MOVE", "ROBOT POSITION": "a"},
        {"ACTION": "MOVE", "ROBOT POSITION": "b"},
    )
    after = plan_of(
        {"ACTION": "MOVE", "ROBOT POSITION": "a"},
        {"ACTION": "MOVE", "ROBOT POSITION": "c"},
    )
    d = diff(before, after)
    assert len(d.modified_steps) == 1
    assert d.modified_steps[0].changes["ROBOT_POSITION"] == ("b", "c")


# --- properties ---------------------------------------------------------------

_key_st = st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ", min_size=1, max_size=8).filter(
    lambda k: k not in REQUIRED_KEYS
)
_value_st = st.text(alphabet="abcdefghij XYZ_-0123456789", max_size=12)


@st.composite
def step_objects(draw):
    obj = {
        "ACTION": draw(st.sampled_from(["MOVE", "FIND", "GRAB", "CUT", "WAIT", "POUR"])),
        "OBJECT": draw(_value_st),
        "ROBOT POSITION": draw(_value_st),
        "GRIPPER_L": draw(_value_st),
        "GRIPPER_R": draw(_value_st),
    }
    extensions = draw(st.dictionaries(_key_st, _value_st, max_size=3))
    obj.update(extensions)
    return obj


plans = st.builds(
    lambda objs: canonicalize(make_plan(objs)),
    st.lists(step_objects(), max_size=6),
)


@given(plans)
def test_roundtrip_serialize_parse(plan):
    assert parse_rap(serialize_rap(plan)).steps == plan.steps


@given(plans)
def test_canonicalize_idempotent(plan):
    assert canonicalize(plan) == plan


@given(plans)
def test_diff_self_is_empty(plan):
    assert diff(plan, plan).is_empty()


@given(plans, plans)
def test_diff_key_sets_mirror(a, b):
    assert diff(a, b).added_keys == diff(b, a).removed_keys
    assert diff(a, b).removed_keys == diff(b, a).added_keys


@given(plans, plans)
def test_diff_accounts_for_every_step(a, b):
    d = diff(a, b)
    assert len(d.added_steps) - len(d.removed_steps) == len(b.steps) - len(a.steps)


@given(plans)
@settings(max_examples=50)
def test_validate_never_raises(plan):
    report = validate(plan)
    assert isinstance(report.valid, bool)


@given(st.text(max_size=300))
@settings(max_examples=200)
def test_parse_raises_only_parse_errors(text):
    try:
        parse_rap(text)
    except RapParseError:
        pass
