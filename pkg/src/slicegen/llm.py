"""Chat-completion access: live, record and replay backends plus the
greedy-then-top-p retry schedule."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from .extraction import InvalidResponse

log = logging.getLogger(__name__)

DEFAULT_API_BASE = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-3.5-turbo-0125"
API_KEY_ENV = "SLICEGEN_API_KEY"
API_BASE_ENV = "SLICEGEN_API_BASE"


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.0
    top_p: float = 0.1
    max_output_tokens: int = 2048

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")


GREEDY = SamplingParams()
TOP_P_SCHEDULE = (0.2, 0.5, 0.8)


def attempt_schedule(max_output_tokens: int = GREEDY.max_output_tokens) -> list[SamplingParams]:
    first = SamplingParams(GREEDY.temperature, GREEDY.top_p, max_output_tokens)
    return [first] + [SamplingParams(0.0, p, max_output_tokens) for p in TOP_P_SCHEDULE]


class LLMError(Exception):
    pass


class TransportError(LLMError):
    pass


class ProviderError(LLMError):
    """The provider answered with an error payload (kept verbatim)."""


class ReplayMiss(LLMError):
    def __init__(self, key: str):
        super().__init__(f"no recorded transcript for key {key[:16]}")
        self.key = key


class FormatFailureExhausted(LLMError):
    def __init__(self, attempts: list[str], errors: list[str]):
        super().__init__(f"no valid response after {len(attempts)} attempts: {errors[-1]}")
        self.attempts = attempts
        self.errors = errors


def transcript_key(messages: list[dict], params: SamplingParams, model: str) -> str:
    blob = json.dumps(
        {"messages": messages, "params": asdict(params), "model": model},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- transcript store ------------------------------------------------------------


def encode_entry(entry: dict) -> str:
    return json.dumps(entry, ensure_ascii=False, separators=(",", ":"))


class TranscriptStore:
    """Append-only JSONL file(s) of ``{key, model, request, response, ts}``."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path and self.path.is_dir():
            for p in sorted(self.path.glob("*.jsonl")):
                self._load(p)
            self.path = None  # directories are read-only fixture sets
        elif self.path and self.path.exists():
            self._load(self.path)

    def _load(self, path: Path) -> None:
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                entry = json.loads(line)
                self.entries.setdefault(entry["key"], entry)

    def get(self, key: str) -> Optional[dict]:
        return self.entries.get(key)

    def append(self, entry: dict) -> None:
        with self._lock:
            if entry["key"] in self.entries:
                return
            self.entries[entry["key"]] = entry
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(encode_entry(entry) + "\n")


# -- backends ---------------------------------------------------------------------

Transport = Callable[[str, dict, dict], dict]


def httpx_transport(url: str, headers: dict, body: dict) -> dict:
    import httpx

    try:
        resp = httpx.post(url, headers=headers, json=body, timeout=120.0)
    except httpx.HTTPError as e:
        raise TransportError(str(e)) from e
    try:
        return resp.json()
    except ValueError as e:
        raise TransportError(f"HTTP {resp.status_code}: non-JSON body") from e


class LiveBackend:
    """OpenAI-style ``/chat/completions`` over HTTPS."""

    def __init__(
        self,
        api_base: Optional[str] = None,
        api_key: Optional[str] = None,
        transport: Optional[Transport] = None,
        max_in_flight: int = 2,
    ):
        self.api_base = (api_base or os.environ.get(API_BASE_ENV) or DEFAULT_API_BASE).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.transport = transport or httpx_transport
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def complete(self, messages: list[dict], params: SamplingParams, model: str) -> str:
        body = {
            "model": model,
            "messages": messages,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}", "Content-Type": "application/json"}
        with self._slots:
            data = self.transport(f"{self.api_base}/chat/completions", headers, body)
        if "error" in data:
            raise ProviderError(json.dumps(data["error"], ensure_ascii=False))
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderError(json.dumps(data, ensure_ascii=False)) from e


class RecordBackend:
    """Live calls persisted to a store; repeated requests are served from it."""

    def __init__(self, live: LiveBackend, store: TranscriptStore, stable: bool = False):
        self.live = live
        self.store = store
        self.stable = stable

    def complete(self, messages: list[dict], params: SamplingParams, model: str) -> str:
        key = transcript_key(messages, params, model)
        hit = self.store.get(key)
        if hit is not None:
            return hit["response"]
        text = self.live.complete(messages, params, model)
        ts = "" if self.stable else datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.store.append(
            {"key": key, "model": model, "request": messages, "response": text, "ts": ts}
        )
        return text


class ReplayBackend:
    """Serves recorded responses only; holds no transport."""

    def __init__(self, store: TranscriptStore):
        self.store = store

    def complete(self, messages: list[dict], params: SamplingParams, model: str) -> str:
        key = transcript_key(messages, params, model)
        hit = self.store.get(key)
        if hit is None:
            raise ReplayMiss(key)
        return hit["response"]


# -- gateway ------------------------------------------------------------------------


def bundle_messages(bundle) -> list[dict]:
    return [{"role": role, "content": text} for role, text in bundle.messages]


def complete(bundle, params: SamplingParams, backend, model: str = DEFAULT_MODEL) -> str:
    return backend.complete(bundle_messages(bundle), params, model)


def complete_with_escalation(
    bundle, validator, backend, model: str = DEFAULT_MODEL, max_output_tokens: int = 2048
) -> tuple[str, int]:
    """Try greedy decoding first, then raise top_p until *validator* accepts.

    *validator* raises InvalidResponse for a malformed response. Returns the
    accepted text and the number of attempts used.
    """
    attempts, errors = [], []
    for n, params in enumerate(attempt_schedule(max_output_tokens), 1):
        text = complete(bundle, params, backend, model)
        attempts.append(text)
        try:
            validator(text)
        except InvalidResponse as e:
            log.info("attempt %d (top_p=%s) rejected: %s", n, params.top_p, e)
            errors.append(str(e))
            continue
        return text, n
    raise FormatFailureExhausted(attempts, errors)


@dataclass
class Gateway:
    backend: object
    model: str = DEFAULT_MODEL
    max_output_tokens: int = 2048

    def complete(self, bundle, params: SamplingParams = GREEDY) -> str:
        return complete(bundle, params, self.backend, self.model)

    def complete_with_escalation(self, bundle, validator) -> tuple[str, int]:
        return complete_with_escalation(
            bundle, validator, self.backend, self.model, self.max_output_tokens
        )
