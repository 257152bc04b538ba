"""Chat-completion backends: one live OpenAI-compatible HTTP client and one
scripted stand-in that replays canned responses for deterministic runs.

The credential for the live backend comes from the CLARIFY_PLAN_API_KEY
environment variable only; it is never read from or written to config files.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .errors import AuthFailure, ProtocolError, RateLimited, ScriptExhausted, Timeout

API_KEY_ENV = "CLARIFY_PLAN_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4-0314"


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def to_payload(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    timeout: float = 120.0
    max_retries: int = 2
    backoff: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class LlmBackend(Protocol):
    def complete(self, messages: list[ChatMessage]) -> str: ...


class OpenAIBackend:
    """Blocking client for any endpoint speaking the chat-completions schema.

    Retries transport failures, 5xx, and 429 with exponential backoff; other
    4xx responses are never retried. A missing credential fails before any
    network traffic.
    """

    def __init__(self, config: BackendConfig | None = None, transport: httpx.BaseTransport | None = None):
        self.config = config or BackendConfig()
        api_key = os.environ.get(API_KEY_ENV, "").strip()
        if not api_key:
            raise AuthFailure(f"environment variable {API_KEY_ENV} is not set")
        self._api_key = api_key
        self._client = httpx.Client(
            timeout=self.config.timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    def complete(self, messages: list[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[0].role != "system":
            raise ValueError("first message must be the system message")
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [m.to_payload() for m in messages],
        }

        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                response = self._client.post(url, json=body)
            except httpx.TimeoutException as exc:
                last_exc = Timeout(f"request timed out after {self.config.timeout}s")
                last_exc.__cause__ = exc
                continue
            except httpx.TransportError as exc:
                last_exc = ProtocolError(f"transport failure: {exc}")
                last_exc.__cause__ = exc
                continue

            if response.status_code in (401, 403):
                raise AuthFailure(f"endpoint rejected the credential ({response.status_code})")
            if response.status_code == 429:
                last_exc = RateLimited("rate limited by the endpoint")
                continue
            if response.status_code >= 500:
                last_exc = ProtocolError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise ProtocolError(
                    f"request rejected ({response.status_code}): {response.text[:200]}"
                )
            return self._extract_content(response)

        assert last_exc is not None
        raise last_exc

    @staticmethod
    def _extract_content(response: httpx.Response) -> str:
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise ProtocolError(f"unparseable response body: {exc}") from exc
        if not isinstance(content, str):
            raise ProtocolError("response content is not text")
        return content


@dataclass
class ScriptedBackend:
    """Replays canned response texts in order and records every request.

    The request log enables golden-transcript assertions: the messages each
    call was made with are kept verbatim.
    """

    responses: list[str]
    cursor: int = 0
    request_log: list[list[ChatMessage]] = field(default_factory=list)

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
            raise ValueError(f"script file {path} must be a JSON array of strings")
        return cls(responses=entries)

    def complete(self, messages: list[ChatMessage]) -> str:
        if self.cursor >= len(self.responses):
            raise ScriptExhausted(
                f"script exhausted after {len(self.responses)} responses"
            )
        self.request_log.append(list(messages))
        text = self.responses[self.cursor]
        self.cursor += 1
        return text
