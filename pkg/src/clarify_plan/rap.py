"""Robot Action Plan documents: parsing, validation, canonical form, and diffs.

A plan is an ordered list of action steps. Every step carries the five
required items (ACTION, OBJECT, ROBOT_POSITION, GRIPPER_L, GRIPPER_R) plus
any number of extension items the model chose to add (TIME, CUT_SIZE, ...).
All types in this module are immutable values and all operations are pure
functions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Literal

from .errors import MalformedJson, NoJsonFound, NotAnArray

REQUIRED_KEYS = ("ACTION", "OBJECT", "ROBOT_POSITION", "GRIPPER_L", "GRIPPER_R")
NONE_VALUE = "NONE"

# Actions that normally need a target; OBJECT=NONE on them earns a warning.
MANIPULATION_ACTIONS = frozenset({"GRAB", "CUT", "POUR"})

# Value spellings that look like an attempt at the NONE sentinel.
_SENTINEL_MISSPELLINGS = frozenset({"", "null", "nil", "n/a", "na", "nothing", "-"})

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def canonical_key(key: str) -> str:
    """Upper-snake-case a field key: trim, uppercase, whitespace runs to '_'."""
    return re.sub(r"\s+", "_", key.strip()).upper()


def canonical_value(value: str) -> str:
    """Trim a field value and map any spelling of "none" to the NONE sentinel."""
    trimmed = value.strip()
    if trimmed.lower() == "none":
        return NONE_VALUE
    return trimmed


def _stringify(value: Any) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "none"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, (int, float)):
        return json.dumps(value)
    return json.dumps(value, ensure_ascii=False)


@dataclass(frozen=True)
class ActionStep:
    """One motion record of a plan.

    ``extensions`` holds the open-ended items beyond the five required keys,
    in first-seen order. Keys are upper-snake-case once canonicalized.
    """

    step_index: int
    action: str
    object: str = NONE_VALUE
    robot_position: str = ""
    gripper_l: str = NONE_VALUE
    gripper_r: str = NONE_VALUE
    extensions: dict[str, str] = field(default_factory=dict)

    def required_items(self) -> dict[str, str]:
        return {
            "ACTION": self.action,
            "OBJECT": self.object,
            "ROBOT_POSITION": self.robot_position,
            "GRIPPER_L": self.gripper_l,
            "GRIPPER_R": self.gripper_r,
        }

    def items(self) -> dict[str, str]:
        """All items in canonical serialization order: required, then extensions."""
        out = self.required_items()
        out.update(self.extensions)
        return out

    def present_keys(self) -> set[str]:
        """Required keys with a non-empty value, plus every extension key.

        Required fields always exist structurally (absence is encoded as ""),
        so only non-empty ones count as present; extensions exist only when
        explicitly added, so they always count.
        """
        present = {k for k, v in self.required_items().items() if v.strip()}
        present.update(self.extensions)
        return present


@dataclass(frozen=True)
class RobotActionPlan:
    steps: tuple[ActionStep, ...]
    source_command: str = ""
    revision: int = 1


@dataclass(frozen=True)
class ValidationIssue:
    step_index: int | None
    key: str
    message: str
    severity: Literal["error", "warning"]

    def to_payload(self) -> dict[str, Any]:
        return {
            "step_index": self.step_index,
            "key": self.key,
            "message": self.message,
            "severity": self.severity,
        }


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    issues: tuple[ValidationIssue, ...]

    def to_payload(self) -> dict[str, Any]:
        return {"valid": self.valid, "issues": [i.to_payload() for i in self.issues]}


@dataclass(frozen=True)
class StepChange:
    """Per-step value changes for one aligned step pair.

    ``position`` is the 1-based index in the after-plan; ``changes`` maps the
    changed key to its (old, new) values, ``None`` meaning the key was absent
    on that side.
    """

    position: int
    changes: dict[str, tuple[str | None, str | None]]


@dataclass(frozen=True)
class RapDiff:
    added_steps: tuple[tuple[int, ActionStep], ...]
    removed_steps: tuple[tuple[int, ActionStep], ...]
    modified_steps: tuple[StepChange, ...]
    added_keys: frozenset[str]
    removed_keys: frozenset[str]

    def is_empty(self) -> bool:
        return not (
            self.added_steps
            or self.removed_steps
            or self.modified_steps
            or self.added_keys
            or self.removed_keys
        )

    def to_payload(self) -> dict[str, Any]:
        return {
            "added_steps": [
                {"position": pos, "step": step.items()} for pos, step in self.added_steps
            ],
            "removed_steps": [
                {"position": pos, "step": step.items()} for pos, step in self.removed_steps
            ],
            "modified_steps": [
                {
                    "position": change.position,
                    "changes": {k: list(v) for k, v in change.changes.items()},
                }
                for change in self.modified_steps
            ],
            "added_keys": sorted(self.added_keys),
            "removed_keys": sorted(self.removed_keys),
        }


def make_plan(
    step_items: Iterable[dict[str, Any]],
    source_command: str = "",
    revision: int = 1,
) -> RobotActionPlan:
    """Build a plan from raw key->value step mappings, numbering steps 1..N."""
    steps = tuple(
        _step_from_object(obj, index) for index, obj in enumerate(step_items, start=1)
    )
    return RobotActionPlan(steps=steps, source_command=source_command, revision=revision)


def _step_from_object(obj: dict[str, Any], index: int) -> ActionStep:
    items: dict[str, str] = {}
    for raw_key, raw_value in obj.items():
        items[canonical_key(str(raw_key))] = _stringify(raw_value)
    required = {k: items.pop(k) for k in REQUIRED_KEYS if k in items}
    return ActionStep(
        step_index=index,
        action=required.get("ACTION", ""),
        object=required.get("OBJECT", ""),
        robot_position=required.get("ROBOT_POSITION", ""),
        gripper_l=required.get("GRIPPER_L", ""),
        gripper_r=required.get("GRIPPER_R", ""),
        extensions=items,
    )


def _iter_candidates(text: str) -> Iterable[tuple[int, str]]:
    # Fenced blocks first, then the raw text.
    for match in _FENCE_RE.finditer(text):
        yield match.start(1), match.group(1)
    yield 0, text


def parse_rap(text: str, source_command: str = "", revision: int = 1) -> RobotActionPlan:
    """Extract the first JSON array of step objects from model output.

    Fenced code blocks are searched before the raw text. Required keys are
    matched case-insensitively with space/underscore normalization; every
    other key lands in the step's extensions.

    Raises NoJsonFound, MalformedJson (with the offset of the first
    undecodable bracket), or NotAnArray.
    """
    decoder = json.JSONDecoder()
    first_error: tuple[int, str] | None = None
    wrong_shape: str | None = None

    for base, candidate in _iter_candidates(text):
        pos = candidate.find("[")
        while pos != -1:
            try:
                value, _ = decoder.raw_decode(candidate, pos)
            except json.JSONDecodeError as exc:
                if first_error is None:
                    first_error = (base + pos, exc.msg)
            else:
                if all(isinstance(item, dict) for item in value):
                    return make_plan(value, source_command=source_command, revision=revision)
                if wrong_shape is None:
                    wrong_shape = "JSON array found, but its elements are not all objects"
            pos = candidate.find("[", pos + 1)

        stripped = candidate.strip()
        if wrong_shape is None and stripped.startswith("{"):
            try:
                json.loads(stripped)
            except json.JSONDecodeError:
                pass
            else:
                wrong_shape = "found a JSON object where an array of steps was expected"

    if wrong_shape is not None:
        raise NotAnArray(wrong_shape)
    if first_error is not None:
        raise MalformedJson(first_error[1], offset=first_error[0])
    raise NoJsonFound("no JSON array found in text")


def canonicalize(plan: RobotActionPlan) -> RobotActionPlan:
    """Normalize a plan: upper-snake keys, trimmed values, NONE sentinel.

    Idempotent. An extension key that collides with a required key after
    normalization folds into that required field (last value wins).
    """
    steps = []
    for step in plan.steps:
        items: dict[str, str] = {}
        for key, value in step.required_items().items():
            items[key] = canonical_value(value)
        for key, value in step.extensions.items():
            items[canonical_key(key)] = canonical_value(value)
        required = {k: items.pop(k) for k in REQUIRED_KEYS if k in items}
        steps.append(
            ActionStep(
                step_index=step.step_index,
                action=required.get("ACTION", ""),
                object=required.get("OBJECT", ""),
                robot_position=required.get("ROBOT_POSITION", ""),
                gripper_l=required.get("GRIPPER_L", ""),
                gripper_r=required.get("GRIPPER_R", ""),
                extensions=items,
            )
        )
    return replace(plan, steps=tuple(steps))


def validate(plan: RobotActionPlan, finality: Literal["draft", "final"] = "draft") -> ValidationReport:
    """Check a plan and report issues; never raises.

    Errors: empty action, non-contiguous step indices, and an empty step list
    when ``finality`` is "final". Warnings: OBJECT=NONE on manipulation-class
    actions, and sentinel-looking values that are not the NONE spelling.
    """
    issues: list[ValidationIssue] = []

    if finality == "final" and not plan.steps:
        issues.append(
            ValidationIssue(None, "steps", "final plan has no steps", "error")
        )

    for position, step in enumerate(plan.steps, start=1):
        if step.step_index != position:
            issues.append(
                ValidationIssue(
                    step.step_index,
                    "step_index",
                    f"expected index {position}, found {step.step_index}",
                    "error",
                )
            )
        if not step.action.strip():
            issues.append(
                ValidationIssue(step.step_index, "ACTION", "action is empty", "error")
            )
        action = canonical_value(step.action) if step.action else ""
        if action in MANIPULATION_ACTIONS and canonical_value(step.object) == NONE_VALUE:
            issues.append(
                ValidationIssue(
                    step.step_index,
                    "OBJECT",
                    f"{action} has no target object",
                    "warning",
                )
            )
        for key in ("OBJECT", "GRIPPER_L", "GRIPPER_R"):
            value = step.required_items()[key]
            if value.strip().lower() in _SENTINEL_MISSPELLINGS:
                issues.append(
                    ValidationIssue(
                        step.step_index,
                        key,
                        f"unclear sentinel spelling {value!r}; use {NONE_VALUE}",
                        "warning",
                    )
                )

    valid = not any(issue.severity == "error" for issue in issues)
    return ValidationReport(valid=valid, issues=tuple(issues))


def key_vocabulary(plan: RobotActionPlan) -> frozenset[str]:
    """Union of present required keys and all extension keys across steps."""
    vocab: set[str] = set()
    for step in plan.steps:
        vocab.update(step.present_keys())
    return frozenset(vocab)


def diff(before: RobotActionPlan, after: RobotActionPlan) -> RapDiff:
    """Structural comparison of two canonicalized plans.

    Steps are aligned by (action, object) identity with positional
    tie-breaking; key sets are compared over each plan's whole vocabulary.
    """
    used: list[bool] = [False] * len(before.steps)
    pairs: list[tuple[int, ActionStep, ActionStep]] = []
    added: list[tuple[int, ActionStep]] = []

    for position, step in enumerate(after.steps, start=1):
        match = None
        for i, candidate in enumerate(before.steps):
            if not used[i] and (candidate.action, candidate.object) == (step.action, step.object):
                match = i
                break
        if match is None:
            added.append((position, step))
        else:
            used[match] = True
            pairs.append((position, before.steps[match], step))

    removed = [
        (i + 1, step) for i, step in enumerate(before.steps) if not used[i]
    ]

    modified: list[StepChange] = []
    for position, old, new in pairs:
        changes: dict[str, tuple[str | None, str | None]] = {}
        for key, old_value in old.required_items().items():
            new_value = new.required_items()[key]
            if old_value != new_value:
                changes[key] = (old_value, new_value)
        for key in {**old.extensions, **new.extensions}:
            old_value = old.extensions.get(key)
            new_value = new.extensions.get(key)
            if old_value != new_value:
                changes[key] = (old_value, new_value)
        if changes:
            modified.append(StepChange(position=position, changes=changes))

    before_vocab = key_vocabulary(before)
    after_vocab = key_vocabulary(after)
    return RapDiff(
        added_steps=tuple(added),
        removed_steps=tuple(removed),
        modified_steps=tuple(modified),
        added_keys=frozenset(after_vocab - before_vocab),
        removed_keys=frozenset(before_vocab - after_vocab),
    )


def serialize_rap(plan: RobotActionPlan, indent: int | None = 2) -> str:
    """Canonical UTF-8 JSON: required keys in fixed order, then extensions."""
    return json.dumps([step.items() for step in plan.steps], indent=indent, ensure_ascii=False)


def plan_to_payload(plan: RobotActionPlan) -> list[dict[str, str]]:
    """Plan steps as JSON-ready mappings in canonical key order."""
    return [step.items() for step in plan.steps]


def load_rap_file(path: str, source_command: str = "", revision: int = 1) -> RobotActionPlan:
    with open(path, encoding="utf-8") as fh:
        return parse_rap(fh.read(), source_command=source_command, revision=revision)
