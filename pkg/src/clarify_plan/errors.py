"""Exception hierarchy shared across the package."""


class ClarifyPlanError(Exception):
    """Base class for every error raised by this package."""


# RAP parsing


class RapParseError(ClarifyPlanError):
    """A plan could not be extracted from model output."""


class NoJsonFound(RapParseError):
    pass


class MalformedJson(RapParseError):
    """JSON-looking text that fails to decode; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class NotAnArray(RapParseError):
    pass


# Prompt assets


class PromptAssetError(ClarifyPlanError):
    pass


class DuplicateComponent(PromptAssetError):
    pass


class UnreadableAsset(PromptAssetError):
    pass


# Dialogue loop


class LoopError(ClarifyPlanError):
    pass


class EmptyCommand(LoopError):
    pass


class IllegalPhase(LoopError):
    pass


class PhaseViolation(LoopError):
    pass


class UnknownQuestionId(LoopError):
    pass


class MissingAnswer(LoopError):
    pass


class RepairExhausted(LoopError):
    """Model kept producing unparseable plans after the allowed repair prompts."""


# LLM backends


class BackendError(ClarifyPlanError):
    pass


class Timeout(BackendError):
    pass


class AuthFailure(BackendError):
    pass


class RateLimited(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class ScriptExhausted(BackendError):
    """A scripted backend ran out of canned responses."""


# Session store


class StoreError(ClarifyPlanError):
    pass


class SequenceGap(StoreError):
    pass


class StorageFailure(StoreError):
    pass


class NotFound(StoreError):
    pass


class CorruptRecord(StoreError):
    pass


class ReplayDivergence(StoreError):
    """Replaying a record produced different parsed artifacts than it stored."""


# Evaluation


class IncompleteSession(ClarifyPlanError):
    pass


class EmptyInput(ClarifyPlanError):
    pass


# Command line


class UsageError(ClarifyPlanError):
    pass
