"""Prompt component loading, assembly order, and instruction fidelity."""

import pytest

from clarify_plan import assemble_messages, estimate_tokens, load_components, phase_instruction
from clarify_plan.errors import DuplicateComponent, UnreadableAsset
from clarify_plan.llm import ChatMessage
from clarify_plan.prompts import COMPONENT_KINDS, assemble_user_turn

ANALYZE_SENTENCES = (
    "Please analyze step by step what elements are missing in the RAP for the "
    "robot to work. Then output the information that should be added to the RAP. "
    "If there is no information to be added, please output 'none'."
)

QUESTION_SENTENCES = (
    "Please collect the information you suggested in the b) analysis that should "
    "be added to the RAP by asking questions. I will provide the information for "
    "your question. If you have no questions, please output 'none'."
)

MAKE_RAP_LINE = (
    "a) Make RAP (provide a modified RAP. It should be something that the robot "
    "can easily understand. Therefore, the prompt should be unambiguous.)"
)

PREREQUISITES = """1. The robot has two robotic arms.
2. The robot arm has 7 degrees of freedom.
3. The robot can grab things at will.
4. The robot can acquire information about the appearance of objects by means of a camera.
5. The robot has a pre-mapped information of the workspace.
6. The robot is currently in the living room.
7. The human (MASTER) who gives commands to the robot is sitting on a chair in the living room."""


def test_default_bundle_has_all_components_in_order():
    bundle = load_components()
    assert [c.kind for c in bundle.components] == list(COMPONENT_KINDS)
    positions = [bundle.system_text.index(f"# {k.capitalize()}") for k in COMPONENT_KINDS]
    assert positions == sorted(positions)


def test_prerequisites_are_the_seven_items_verbatim():
    bundle = load_components()
    assert bundle.component("prerequisites").body == PREREQUISITES


def test_process_contains_phase_instruction_sentences():
    body = load_components().component("process").body
    assert MAKE_RAP_LINE in body
    assert "a-1) The RAP should be output as a list." in body
    assert ANALYZE_SENTENCES in body
    assert QUESTION_SENTENCES in body


def test_analyze_instruction_verbatim():
    text = phase_instruction("Analyze").render()
    assert ANALYZE_SENTENCES in text
    assert "analyze step by step what elements are missing" in text
    assert "please output 'none'" in text


def test_question_instruction_verbatim():
    text = phase_instruction("Question").render()
    assert QUESTION_SENTENCES in text


def test_make_rap_instruction_asks_for_a_list():
    text = phase_instruction("MakeRap").render()
    assert MAKE_RAP_LINE in text
    assert "a-1) The RAP should be output as a list." in text


def test_unknown_phase_rejected():
    with pytest.raises(ValueError):
        phase_instruction("Reflect")


def test_render_prefixes_command_once():
    inst = phase_instruction("MakeRap")
    text = inst.render('Make scrambled egg.')
    assert text.startswith('Command: "Make scrambled egg."\n\n')
    assert inst.render().startswith("Now perform process a).")


def test_estimate_tokens_is_ceil_of_quarter_chars():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2
    assert estimate_tokens("x" * 401) == 101


def test_bundle_estimate_matches_system_text():
    bundle = load_components()
    assert bundle.token_estimate == estimate_tokens(bundle.system_text)


def test_assemble_messages_shape():
    bundle = load_components()
    history = [
        ChatMessage(role="user", content="hi"),
        ChatMessage(role="assistant", content="[]"),
    ]
    messages = assemble_messages(bundle, history, phase_instruction("Analyze"))
    assert messages[0].role == "system"
    assert messages[0].content == bundle.system_text
    assert messages[1:3] == history
    assert messages[-1].role == "user"
    assert ANALYZE_SENTENCES in messages[-1].content


def test_assemble_user_turn_appends_free_text():
    bundle = load_components()
    messages = assemble_user_turn(bundle, [], "try again")
    assert [m.role for m in messages] == ["system", "user"]
    assert messages[-1].content == "try again"


def test_directory_override_partial(tmp_path):
    (tmp_path / "role.txt").write_text("You plan robot motions.", encoding="utf-8")
    bundle = load_components(tmp_path)
    assert bundle.component("role").body == "You plan robot motions."
    assert bundle.component("prerequisites").body == PREREQUISITES


def test_directory_override_case_insensitive(tmp_path):
    (tmp_path / "ROLE.TXT").write_text("caps", encoding="utf-8")
    assert load_components(tmp_path).component("role").body == "caps"


def test_duplicate_component_rejected(tmp_path):
    (tmp_path / "role.txt").write_text("a", encoding="utf-8")
    (tmp_path / "Role.txt").write_text("b", encoding="utf-8")
    with pytest.raises(DuplicateComponent):
        load_components(tmp_path)


def test_missing_directory_rejected(tmp_path):
    with pytest.raises(UnreadableAsset):
        load_components(tmp_path / "nope")


def test_undecodable_asset_rejected(tmp_path):
    (tmp_path / "example.txt").write_bytes(b"\xff\xfe\x00bad")
    with pytest.raises(UnreadableAsset):
        load_components(tmp_path)


def test_default_estimate_within_band_of_target():
    # chars/4 heuristic over the full default bundle; the working band is
    # 4150 +/- 25%.
    estimate = load_components().token_estimate
    assert 3113 <= estimate <= 5187
