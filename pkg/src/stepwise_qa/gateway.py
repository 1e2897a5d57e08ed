"""Completion backends: a live OpenAI-compatible HTTP client and a replay store.

Prompts go out as a single user message with no system message. The API
key is only ever read from the environment.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import httpx

from .errors import AuthError, BackendError, GatewayError, MissingFixture, RateLimited, Timeout
from .prompts import PromptText

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT_ENV = "OPENAI_BASE_URL"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"


@dataclass(frozen=True)
class GenParams:
    model: str = ""
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 1000


@dataclass(frozen=True)
class CompletionRecord:
    id: str
    prompt_hash: str
    response: str
    backend: str
    latency_ms: float
    retries: int
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def prompt_hash(prompt: str | PromptText) -> str:
    text = prompt.text if isinstance(prompt, PromptText) else prompt
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _text(prompt: str | PromptText) -> str:
    return prompt.text if isinstance(prompt, PromptText) else prompt


class Backend(Protocol):
    name: str

    def complete(self, prompt: str, params: GenParams) -> tuple[str, int]:
        """Return (response text, retries used)."""


class ReplayBackend:
    """Serve responses from a prompt-hash -> text map. Bit-deterministic."""

    name = "replay"

    def __init__(self, fixtures: Mapping[str, str]):
        self.fixtures = dict(fixtures)

    @classmethod
    def from_records(cls, path: str | os.PathLike) -> "ReplayBackend":
        fixtures = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    fixtures[rec["prompt_hash"]] = rec["response"]
        return cls(fixtures)

    def complete(self, prompt: str, params: GenParams) -> tuple[str, int]:
        key = prompt_hash(prompt)
        try:
            return self.fixtures[key], 0
        except KeyError:
            raise MissingFixture(f"no recorded response for prompt hash {key[:12]}") from None


class OpenAICompatBackend:
    """POSTs chat-completions requests with exponential-backoff retries.

    429, 5xx, timeouts and connection errors are retried up to
    ``max_retries`` times; 401/403 fail immediately with :class:`AuthError`.
    """

    name = "openai_compat"

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 120.0,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 30.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        url = endpoint.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        self.url = url
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, endpoint_env: str = DEFAULT_ENDPOINT_ENV, key_env: str = DEFAULT_API_KEY_ENV, **kwargs):
        endpoint = os.environ.get(endpoint_env, "").strip()
        if not endpoint:
            raise BackendError(f"environment variable {endpoint_env} is not set")
        return cls(endpoint, os.environ.get(key_env) or None, **kwargs)

    def close(self) -> None:
        self._client.close()

    @staticmethod
    def payload(prompt: str, params: GenParams) -> dict:
        return {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }

    def _delay(self, attempt: int, resp: httpx.Response | None) -> float:
        if resp is not None:
            try:
                return min(self.backoff_cap, float(resp.headers["retry-after"]))
            except (KeyError, ValueError):
                pass
        return min(self.backoff_cap, self.backoff_base * 2 ** attempt)

    def complete(self, prompt: str, params: GenParams) -> tuple[str, int]:
        body = self.payload(prompt, params)
        last: GatewayError | None = None
        for attempt in range(self.max_retries + 1):
            resp = None
            try:
                resp = self._client.post(self.url, json=body)
            except httpx.TimeoutException as exc:
                last = Timeout(f"request timed out: {exc}")
            except httpx.TransportError as exc:
                last = BackendError(f"transport error: {exc}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"HTTP {resp.status_code} from {self.url}")
                if resp.status_code == 429:
                    last = RateLimited(f"rate limited by {self.url}")
                elif resp.status_code >= 500:
                    last = BackendError(f"HTTP {resp.status_code} from {self.url}")
                elif resp.status_code >= 400:
                    raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    return self._content(resp), attempt
            if attempt < self.max_retries:
                self._sleep(self._delay(attempt, resp))
        assert last is not None
        raise last

    @staticmethod
    def _content(resp: httpx.Response) -> str:
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc!r}") from None
        return content or ""


class Gateway:
    """Front door for completions; keeps an append-only record log."""

    def __init__(self, backend: Backend, record_path: str | os.PathLike | None = None):
        self.backend = backend
        self.record_path = Path(record_path) if record_path else None
        self.records: list[CompletionRecord] = []
        self._lock = threading.Lock()

    def _call(self, prompt: str | PromptText, params: GenParams, instance_id: str) -> tuple[str, CompletionRecord]:
        text = _text(prompt)
        start = time.perf_counter()
        response, retries = self.backend.complete(text, params)
        latency = (time.perf_counter() - start) * 1000
        rec = CompletionRecord(instance_id, prompt_hash(text), response, self.backend.name,
                               round(latency, 3), retries, asdict(params))
        return response, rec

    def _append(self, recs: Iterable[CompletionRecord]) -> None:
        recs = list(recs)
        with self._lock:
            self.records.extend(recs)
            if self.record_path is not None and recs:
                with open(self.record_path, "a", encoding="utf-8") as fh:
                    for r in recs:
                        fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")

    def complete(self, prompt: str | PromptText, params: GenParams = GenParams(), instance_id: str = "") -> str:
        response, rec = self._call(prompt, params, instance_id)
        self._append([rec])
        return response

    def complete_batch(
        self,
        prompts: Sequence[str | PromptText],
        params: GenParams = GenParams(),
        parallelism: int = 1,
        ids: Sequence[str] | None = None,
    ) -> list[str | GatewayError]:
        """Complete every prompt; results (or per-item errors) follow input order.

        At most ``parallelism`` requests are in flight. Records are appended
        in input order once the batch finishes.
        """
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        ids = list(ids) if ids is not None else [str(i) for i in range(len(prompts))]

        def one(i: int):
            try:
                return self._call(prompts[i], params, ids[i])
            except GatewayError as exc:
                return exc
            except Exception as exc:  # backend bug or unexpected I/O: keep the batch alive
                log.exception("completion %s failed", ids[i])
                return BackendError(f"{type(exc).__name__}: {exc}")

        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(one, range(len(prompts))))
        self._append(o[1] for o in outcomes if not isinstance(o, GatewayError))
        return [o if isinstance(o, GatewayError) else o[0] for o in outcomes]
