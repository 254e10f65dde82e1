"""Query classification: prompt assembly, backend pool, and output parsing."""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import httpx

from .hierarchy import INVALID_LABEL, Label, Registry, registry_digest, validate_label

MAX_QUERY_CHARS = 4000

PROMPT_PREAMBLE = (
    "You are an API routing assistant. Classify the user's request into exactly "
    "one function from the API hierarchy below and extract the keyword values "
    "for its parameters.\n\nAPI hierarchy:\n"
)

OUTPUT_RULES = (
    "\nOutput rules:\n"
    "- Respond with a single JSON object and nothing else: "
    '{"module": str, "function": str, "params": {str: str}}\n'
    "- Every params value must be a string taken from the user's request.\n"
    "- If no route applies, answer module routes_not_exist, "
    "function return_invalid_error.\n"
)

CORRECTIVE_INSTRUCTION = "Respond with only the JSON object."


class ParseFailure(Exception):
    """Model reply held no usable classification JSON."""

    def __init__(self, reason: str, raw: str):
        super().__init__(reason)
        self.raw = raw


class ClassificationUnavailable(Exception):
    """Backend could not produce any reply after retries (maps to HTTP 503)."""


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    temperature: float = 0.0
    max_output_tokens: int = 256


@dataclass
class ClassificationResult:
    label: Label
    params: dict[str, str]
    backend_id: str
    raw_output: str = ""
    latency_ms: float = 0.0
    cached: bool = False
    diagnostic: Optional[str] = None


@dataclass(frozen=True)
class BackendSpec:
    id: str
    kind: str  # chat_http | mock_rules
    endpoint: str = ""
    model_name: str = ""
    credentials_ref: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.kind not in ("chat_http", "mock_rules"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "chat_http" and not (self.endpoint and self.model_name):
            raise ValueError(f"backend {self.id}: chat_http needs endpoint and model_name")


def build_prompt(query: str, registry: Registry) -> PromptBundle:
    text = query.strip()
    if not text:
        raise ValueError("empty query")
    if len(query) > MAX_QUERY_CHARS:
        raise ValueError(f"query exceeds {MAX_QUERY_CHARS} characters")
    system_text = PROMPT_PREAMBLE + registry_digest(registry) + OUTPUT_RULES
    return PromptBundle(system_text=system_text, user_text=query)


def _first_json_object(raw: str) -> Optional[dict]:
    decoder = json.JSONDecoder()
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(raw, idx)
        except json.JSONDecodeError:
            idx = raw.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = raw.find("{", idx + 1)
    return None


@dataclass
class ParsedOutput:
    label: Label
    params: dict[str, str]
    diagnostic: Optional[str] = None


def parse_classifier_output(raw: str, registry: Registry) -> ParsedOutput:
    """Extract and validate the classification JSON from arbitrary model text.

    Tolerates surrounding prose and code fences. Unresolvable labels collapse
    to the reserved invalid label with a `label_unresolved` diagnostic; a reply
    with no JSON object (or one missing module/function) raises ParseFailure.
    """
    obj = _first_json_object(raw)
    if obj is None:
        raise ParseFailure("no JSON object found", raw)
    if "module" not in obj or "function" not in obj:
        raise ParseFailure("JSON missing module/function keys", raw)
    raw_label = Label(str(obj["module"]), str(obj["function"]))
    label = validate_label(raw_label, registry)
    diagnostic = None
    if label is None:
        label = INVALID_LABEL
        diagnostic = "label_unresolved"
    fn = registry.function(label)
    params: dict[str, str] = {}
    raw_params = obj.get("params") or {}
    if isinstance(raw_params, dict):
        for key, value in raw_params.items():
            if fn is not None and fn.param(str(key)) is not None:
                params[str(key)] = str(value)
    return ParsedOutput(label=label, params=params, diagnostic=diagnostic)


class Backend:
    """A classifier behind the common interface; subclasses do the actual work."""

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self.inflight = 0
        self.invocations = 0

    @property
    def id(self) -> str:
        return self.spec.id

    def _enter(self):
        with self._lock:
            self.inflight += 1
            self.invocations += 1

    def _exit(self):
        with self._lock:
            self.inflight -= 1

    def classify_query(self, query: str, registry: Registry) -> ClassificationResult:
        raise NotImplementedError

    def complete(self, system_text: str, user_text: str, *,
                 temperature: float, max_tokens: int) -> str:
        raise NotImplementedError

    def reachable(self) -> bool:
        return True


class ChatHttpBackend(Backend):
    """Classifier over the common chat-completions HTTP JSON schema."""

    def __init__(self, spec: BackendSpec, client: Optional[httpx.Client] = None):
        super().__init__(spec)
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.spec.credentials_ref:
            secret = os.environ.get(self.spec.credentials_ref, "")
            if secret:
                headers["Authorization"] = f"Bearer {secret}"
        return headers

    def complete(self, system_text: str, user_text: str, *,
                 temperature: float, max_tokens: int) -> str:
        body = {
            "model": self.spec.model_name,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        last_err: Optional[Exception] = None
        for attempt in range(self.spec.max_retries + 1):
            try:
                resp = self._client.post(self.spec.endpoint, json=body,
                                         headers=self._headers())
                if resp.status_code >= 500:
                    last_err = ClassificationUnavailable(
                        f"backend {self.id} returned {resp.status_code}")
                    time.sleep(min(0.1 * 2 ** attempt, 2.0))
                    continue
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_err = exc
                time.sleep(min(0.1 * 2 ** attempt, 2.0))
        raise ClassificationUnavailable(
            f"backend {self.id} unavailable: {last_err}") from last_err

    def classify_query(self, query: str, registry: Registry) -> ClassificationResult:
        bundle = build_prompt(query, registry)
        self._enter()
        start = time.monotonic()
        try:
            user_text = bundle.user_text
            for attempt in range(self.spec.max_retries + 1):
                raw = self.complete(bundle.system_text, user_text,
                                    temperature=bundle.temperature,
                                    max_tokens=bundle.max_output_tokens)
                try:
                    parsed = parse_classifier_output(raw, registry)
                except ParseFailure:
                    # nudge the model toward bare JSON and try again
                    user_text = f"{bundle.user_text}\n\n{CORRECTIVE_INSTRUCTION}"
                    continue
                return ClassificationResult(
                    label=parsed.label, params=parsed.params, backend_id=self.id,
                    raw_output=raw, diagnostic=parsed.diagnostic,
                    latency_ms=(time.monotonic() - start) * 1000.0)
            return ClassificationResult(
                label=INVALID_LABEL, params={}, backend_id=self.id,
                raw_output=raw, diagnostic="backend_unparseable",
                latency_ms=(time.monotonic() - start) * 1000.0)
        finally:
            self._exit()

    def reachable(self) -> bool:
        try:
            resp = self._client.get(self.spec.endpoint, headers=self._headers())
            return resp.status_code < 500
        except httpx.HTTPError:
            return False


class BackendPool:
    """Ordered backend set with round_robin or least_inflight selection."""

    def __init__(self, backends: list[Backend], policy: str = "round_robin"):
        if not backends:
            raise ValueError("backend pool must be non-empty")
        if policy not in ("round_robin", "least_inflight"):
            raise ValueError(f"unknown pool policy {policy!r}")
        ids = [b.id for b in backends]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate backend id in pool")
        self.backends = list(backends)
        self.policy = policy
        self._cursor = 0
        self._lock = threading.Lock()

    def ids(self) -> list[str]:
        return [b.id for b in self.backends]


def select_backend(pool: BackendPool) -> Backend:
    if pool.policy == "least_inflight":
        return min(pool.backends, key=lambda b: b.inflight)
    with pool._lock:
        backend = pool.backends[pool._cursor % len(pool.backends)]
        pool._cursor += 1
    return backend


def classify(query: str, pool: BackendPool, registry: Registry) -> ClassificationResult:
    backend = select_backend(pool)
    return backend.classify_query(query, registry)
