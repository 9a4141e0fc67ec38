"""Uniform access to a chat-completion endpoint, plus a scripted test mock.

Token accounting is whitespace-word based so the gateway stays model
agnostic; prompts over the context budget are truncated head-first before
dispatch. The live backend speaks the common chat-completion HTTP wire
protocol and is configured through environment variables; the scripted
mock replays canned replies keyed on (stage tag, prompt substring) and is
the only backend the test suite talks to.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import requests

from .errors import EndpointUnavailable, GatewayConfigError, MalformedResponse
from .hashing import sha256_hex

logger = logging.getLogger(__name__)

DEFAULT_MAX_NEW_TOKENS = 200
DEFAULT_TEMPERATURE = 0.7
DEFAULT_CONTEXT_BUDGET = 2048

ENV_BASE_URL = "FINBRIEF_LLM_BASE_URL"
ENV_API_KEY = "FINBRIEF_LLM_API_KEY"
ENV_MODEL = "FINBRIEF_LLM_MODEL"


class StageTag(str, Enum):
    INITIAL_SUMMARY = "initial_summary"
    METADATA_EXTRACTION = "metadata_extraction"
    ENHANCED_SUMMARY = "enhanced_summary"
    RELEVANCE = "relevance"
    RANKING = "ranking"
    INSIGHTS = "insights"
    ACTIONS = "actions"


class GatewayBackend(str, Enum):
    HTTP_ENDPOINT = "http_endpoint"
    SCRIPTED_MOCK = "scripted_mock"


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    context_budget_tokens: int = DEFAULT_CONTEXT_BUDGET

    def __post_init__(self) -> None:
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.context_budget_tokens <= 0:
            raise ValueError("context_budget_tokens must be > 0")


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    params: GenerationParams
    stage_tag: StageTag


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_ms: int
    backend: GatewayBackend
    truncated_input: bool


def estimate_tokens(text: str) -> int:
    """Whitespace-word token estimate; deterministic and model agnostic."""
    return len(text.split())


def truncate_to_context(text: str, budget: int) -> tuple[str, bool]:
    """Keep the head of *text* within *budget* estimated tokens.

    Head-keep: financial articles front-load the lede, so the tail is the
    part dropped. The cut lands on a word boundary, which makes the
    operation idempotent under a fixed budget.
    """
    if budget <= 0:
        raise ValueError("budget must be > 0")
    words = text.split()
    if len(words) <= budget:
        return text, False
    return " ".join(words[:budget]), True


class CompletionGateway:
    """Shared dispatch: budget truncation, timing, result packaging."""

    backend: GatewayBackend

    def complete(self, request: CompletionRequest) -> CompletionResult:
        prompt, truncated = truncate_to_context(
            request.prompt, request.params.context_budget_tokens
        )
        bounded = replace(request, prompt=prompt)
        start = time.perf_counter()
        text = self._generate(bounded)
        latency_ms = int((time.perf_counter() - start) * 1000)
        return CompletionResult(
            text=text,
            latency_ms=0 if self.backend is GatewayBackend.SCRIPTED_MOCK else latency_ms,
            backend=self.backend,
            truncated_input=truncated,
        )

    def _generate(self, request: CompletionRequest) -> str:
        raise NotImplementedError

    def config_descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class MockRule:
    stage: StageTag
    reply: str
    match: str = ""

    def applies_to(self, request: CompletionRequest) -> bool:
        return self.stage is request.stage_tag and self.match in request.prompt


class ScriptedMockGateway(CompletionGateway):
    """Deterministic mock: first rule matching (stage, prompt substring) wins.

    The rule list is immutable after construction; a gap in the script is a
    MalformedResponse, never a silent empty reply. Served requests are kept
    in a call log for test assertions.
    """

    backend = GatewayBackend.SCRIPTED_MOCK

    def __init__(self, rules: list[MockRule]):
        self._rules = tuple(rules)
        self._calls: list[CompletionRequest] = []
        self._lock = threading.Lock()

    def _generate(self, request: CompletionRequest) -> str:
        with self._lock:
            self._calls.append(request)
        for rule in self._rules:
            if rule.applies_to(request):
                return rule.reply
        raise MalformedResponse(
            f"mock script has no rule for stage {request.stage_tag.value!r}"
        )

    @property
    def calls(self) -> list[CompletionRequest]:
        with self._lock:
            return list(self._calls)

    def config_descriptor(self) -> dict:
        canonical = json.dumps(
            [{"stage": r.stage.value, "match": r.match, "reply": r.reply} for r in self._rules],
            sort_keys=True,
            ensure_ascii=False,
        )
        return {"backend": self.backend.value, "script_digest": sha256_hex(canonical)}


def load_mock_script(path: str | Path) -> ScriptedMockGateway:
    """Load mock rules from a JSON file: {"rules": [{stage, match?, reply}]}."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [
            MockRule(stage=StageTag(r["stage"]), match=r.get("match", ""), reply=r["reply"])
            for r in payload["rules"]
        ]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise GatewayConfigError(f"cannot load mock script {path}: {exc}") from exc
    return ScriptedMockGateway(rules)


class HttpEndpointGateway(CompletionGateway):
    """Chat-completion client with bounded concurrency and retry/backoff."""

    backend = GatewayBackend.HTTP_ENDPOINT

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        max_attempts: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 60.0,
        max_in_flight: int = 4,
        session: requests.Session | None = None,
    ):
        if not base_url:
            raise GatewayConfigError("endpoint base URL is required")
        if not model:
            raise GatewayConfigError("model name is required")
        self._url = base_url.rstrip("/") + "/chat/completions"
        self._model = model
        self._api_key = api_key
        self._max_attempts = max_attempts
        self._backoff_s = backoff_s
        self._timeout_s = timeout_s
        self._slots = threading.Semaphore(max_in_flight)
        self._session = session or requests.Session()

    def _generate(self, request: CompletionRequest) -> str:
        payload = {
            "model": self._model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.params.max_new_tokens,
            "temperature": request.params.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"

        last_error: Exception | None = None
        for attempt in range(self._max_attempts):
            if attempt:
                time.sleep(self._backoff_s * 2 ** (attempt - 1))
            try:
                with self._slots:
                    response = self._session.post(
                        self._url, json=payload, headers=headers, timeout=self._timeout_s
                    )
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("endpoint attempt %d/%d failed: %s", attempt + 1, self._max_attempts, exc)
                continue
            if response.status_code >= 500:
                last_error = EndpointUnavailable(f"endpoint returned {response.status_code}")
                logger.warning("endpoint attempt %d/%d: HTTP %d", attempt + 1, self._max_attempts,
                               response.status_code)
                continue
            return _parse_chat_reply(response)
        raise EndpointUnavailable(
            f"endpoint unavailable after {self._max_attempts} attempts: {last_error}"
        )

    def config_descriptor(self) -> dict:
        return {"backend": self.backend.value, "base_url": self._url, "model": self._model}


def _parse_chat_reply(response: requests.Response) -> str:
    if response.status_code != 200:
        raise MalformedResponse(f"endpoint returned HTTP {response.status_code}")
    try:
        body = response.json()
        text = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unparseable endpoint reply: {exc}") from exc
    if not isinstance(text, str):
        raise MalformedResponse("endpoint reply content is not text")
    return text


def gateway_from_env(environ: dict[str, str] | None = None) -> HttpEndpointGateway:
    """Build the live gateway from FINBRIEF_LLM_* environment variables."""
    env = os.environ if environ is None else environ
    base_url = env.get(ENV_BASE_URL, "")
    if not base_url:
        raise GatewayConfigError(f"{ENV_BASE_URL} is not set; configure an endpoint or use a mock script")
    model = env.get(ENV_MODEL, "")
    if not model:
        raise GatewayConfigError(f"{ENV_MODEL} is not set")
    return HttpEndpointGateway(base_url=base_url, model=model, api_key=env.get(ENV_API_KEY, ""))
