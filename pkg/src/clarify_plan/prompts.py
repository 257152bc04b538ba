"""Assembles the system prompt from five editable text components and builds
the per-phase user messages.

Components live as plain-text assets (role, prerequisites, process, output,
example) so prompt tuning never requires a rebuild; embedded defaults ship
with the package. Assembly is pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DuplicateComponent, UnreadableAsset
from .llm import ChatMessage

COMPONENT_KINDS = ("role", "prerequisites", "process", "output", "example")

PHASE_MAKE_RAP = "MakeRap"
PHASE_ANALYZE = "Analyze"
PHASE_QUESTION = "Question"

_MAKE_RAP_TEMPLATE = (
    "Now perform process a).\n"
    "a) Make RAP (provide a modified RAP. It should be something that the robot can "
    "easily understand. Therefore, the prompt should be unambiguous.)\n"
    "a-1) The RAP should be output as a list.\n"
    "Output the RAP now as a single JSON array of step objects, with no text before "
    "or after it."
)

_ANALYZE_TEMPLATE = (
    "Now perform process b).\n"
    "Please analyze step by step what elements are missing in the RAP for the robot "
    "to work. Then output the information that should be added to the RAP. If there "
    "is no information to be added, please output 'none'."
)

_QUESTION_TEMPLATE = (
    "Now perform process c).\n"
    "Please collect the information you suggested in the b) analysis that should be "
    "added to the RAP by asking questions. I will provide the information for your "
    "question. If you have no questions, please output 'none'."
)

_TEMPLATES = {
    PHASE_MAKE_RAP: _MAKE_RAP_TEMPLATE,
    PHASE_ANALYZE: _ANALYZE_TEMPLATE,
    PHASE_QUESTION: _QUESTION_TEMPLATE,
}


@dataclass(frozen=True)
class PromptComponent:
    kind: str
    body: str


@dataclass(frozen=True)
class PromptBundle:
    """The five components plus the pre-assembled system text."""

    components: tuple[PromptComponent, ...]
    system_text: str
    token_estimate: int

    def component(self, kind: str) -> PromptComponent:
        for comp in self.components:
            if comp.kind == kind:
                return comp
        raise KeyError(kind)


@dataclass(frozen=True)
class PhaseInstruction:
    phase: str
    template: str

    def render(self, command: str | None = None) -> str:
        """The user-message text; a command is prefixed on the opening turn."""
        if command is not None:
            return f'Command: "{command}"\n\n{self.template}'
        return self.template


def phase_instruction(phase: str) -> PhaseInstruction:
    if phase not in _TEMPLATES:
        raise ValueError(f"unknown phase {phase!r}")
    return PhaseInstruction(phase=phase, template=_TEMPLATES[phase])


def estimate_tokens(text: str) -> int:
    """Advisory chars/4 heuristic; deliberately not a vendor tokenizer."""
    if not text:
        return 0
    return math.ceil(len(text) / 4)


def _default_body(kind: str) -> str:
    asset = resources.files("clarify_plan").joinpath(f"prompt_assets/{kind}.txt")
    return asset.read_text(encoding="utf-8").strip()


def _directory_body(directory: Path, kind: str) -> str | None:
    matches = [
        path
        for path in directory.iterdir()
        if path.is_file() and path.name.lower() == f"{kind}.txt"
    ]
    if len(matches) > 1:
        names = ", ".join(sorted(p.name for p in matches))
        raise DuplicateComponent(f"multiple assets for {kind!r}: {names}")
    if not matches:
        return None
    try:
        return matches[0].read_text(encoding="utf-8").strip()
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableAsset(f"cannot read {matches[0]}: {exc}") from exc


def load_components(asset_source: str | Path | None = None) -> PromptBundle:
    """Load the five components, falling back to embedded defaults per kind."""
    directory = Path(asset_source) if asset_source is not None else None
    if directory is not None and not directory.is_dir():
        raise UnreadableAsset(f"prompt asset directory not found: {directory}")

    components = []
    for kind in COMPONENT_KINDS:
        body = _directory_body(directory, kind) if directory is not None else None
        if body is None:
            body = _default_body(kind)
        components.append(PromptComponent(kind=kind, body=body))

    system_text = "\n\n".join(
        f"# {comp.kind.capitalize()}\n\n{comp.body}" for comp in components
    )
    return PromptBundle(
        components=tuple(components),
        system_text=system_text,
        token_estimate=estimate_tokens(system_text),
    )


def assemble_user_turn(
    bundle: PromptBundle, history: list[ChatMessage], user_text: str
) -> list[ChatMessage]:
    """System message, then the prior transcript, then one new user message."""
    messages = [ChatMessage(role="system", content=bundle.system_text)]
    messages.extend(history)
    messages.append(ChatMessage(role="user", content=user_text))
    return messages


def assemble_messages(
    bundle: PromptBundle,
    history: list[ChatMessage],
    phase: PhaseInstruction,
    command: str | None = None,
) -> list[ChatMessage]:
    return assemble_user_turn(bundle, history, phase.render(command))
