"""HTTP gateway: classify → bind → execute → respond, with history and admin."""
from __future__ import annotations

import itertools
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .cache import ExternalKVCache, TTLCache, cache_key
from .classify import (Backend, BackendPool, BackendSpec, ChatHttpBackend,
                       ClassificationResult, ClassificationUnavailable,
                       MAX_QUERY_CHARS, classify)
from .clocks import SystemClock
from .executor import (BindingError, ExecutionResult, FixtureWeatherProvider,
                       INVALID_ROUTE, Stores, bind_params, execute_call)
from .hierarchy import INVALID_LABEL, Label, Registry, load_registry
from .mock_rules import MockRulesBackend, load_ruleset

_SESSION_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


class RequestError(ValueError):
    """Invalid client request; maps to HTTP 400."""


@dataclass
class HistoryEntry:
    request_id: str
    session_id: str
    timestamp: float
    query: str
    label: Label
    status: str
    message: str

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "session_id": self.session_id,
            "timestamp": self.timestamp,
            "query": self.query,
            "label": self.label.as_pair(),
            "status": self.status,
            "message": self.message,
        }


def _result_to_json(result: ClassificationResult) -> str:
    return json.dumps({
        "label": result.label.as_pair(),
        "params": result.params,
        "backend_id": result.backend_id,
        "raw_output": result.raw_output,
        "latency_ms": result.latency_ms,
        "diagnostic": result.diagnostic,
    })


def _result_from_json(raw: str) -> ClassificationResult:
    doc = json.loads(raw)
    return ClassificationResult(
        label=Label(*doc["label"]), params=doc["params"],
        backend_id=doc["backend_id"], raw_output=doc.get("raw_output", ""),
        latency_ms=doc.get("latency_ms", 0.0), diagnostic=doc.get("diagnostic"))


class GatewayService:
    """Everything behind the HTTP surface; shareable across request threads."""

    def __init__(self, registry: Optional[Registry] = None,
                 pool: Optional[BackendPool] = None,
                 cache: Optional[TTLCache | ExternalKVCache] = None,
                 stores: Optional[Stores] = None,
                 weather: Optional[FixtureWeatherProvider] = None,
                 clock=None, history_path: Optional[str | Path] = None):
        self.registry = registry or load_registry()
        self.pool = pool or BackendPool([MockRulesBackend()])
        self.clock = clock or SystemClock()
        self.cache = cache if cache is not None else TTLCache(clock=self.clock)
        self.stores = stores or Stores()
        self.weather = weather or FixtureWeatherProvider()
        self.history_path = Path(history_path) if history_path else None
        self._history: dict[str, list[HistoryEntry]] = {}
        self._history_lock = threading.Lock()
        self._pool_lock = threading.Lock()
        self._request_seq = itertools.count(1)
        self._last_ts = 0.0

    # -- pipeline ----------------------------------------------------------

    def handle_query(self, text: str, session_id: str) -> dict:
        if not isinstance(text, str) or not text.strip():
            raise RequestError("text must be non-empty")
        if len(text) > MAX_QUERY_CHARS:
            raise RequestError(f"text exceeds {MAX_QUERY_CHARS} characters")
        if not isinstance(session_id, str) or not _SESSION_RE.match(session_id):
            raise RequestError("session_id must match [A-Za-z0-9_-]{1,64}")

        key = cache_key(self.registry.version, text)
        cached = self.cache.lookup(key)
        if cached is not None:
            classification = cached
            was_cached = True
        else:
            with self._pool_lock:
                pool = self.pool
            classification = classify(text, pool, self.registry)
            self.cache.store(key, classification)
            was_cached = False

        result = self._bind_and_execute(classification)
        request_id = f"req-{next(self._request_seq)}"
        entry = HistoryEntry(
            request_id=request_id, session_id=session_id,
            timestamp=self._next_timestamp(), query=text,
            label=classification.label, status=result.status,
            message=result.message)
        self._append_history(entry)
        return {
            "request_id": request_id,
            "label": classification.label.as_pair(),
            "params": classification.params,
            "result": {
                "status": result.status,
                "payload": result.payload,
                "message": result.message,
            },
            "cached": was_cached,
            "backend_id": classification.backend_id,
            "latency_ms": classification.latency_ms,
        }

    def _bind_and_execute(self, classification: ClassificationResult) -> ExecutionResult:
        label = classification.label
        if label == INVALID_LABEL:
            return ExecutionResult(INVALID_ROUTE, message="no matching API route")
        fn = self.registry.function(label)
        if fn is None:  # registry swapped under us; treat as invalid route
            return ExecutionResult(INVALID_ROUTE, message="no matching API route")
        try:
            bound = bind_params(fn, label, classification.params, clock=self.clock)
        except BindingError as exc:
            return ExecutionResult(exc.status, message=str(exc))
        return execute_call(bound, self.stores, self.weather, clock=self.clock)

    # -- history -----------------------------------------------------------

    def _next_timestamp(self) -> float:
        with self._history_lock:
            ts = max(self.clock.now(), self._last_ts + 1e-6)
            self._last_ts = ts
            return ts

    def _append_history(self, entry: HistoryEntry) -> None:
        with self._history_lock:
            self._history.setdefault(entry.session_id, []).append(entry)
        if self.history_path:
            with self._history_lock:
                with self.history_path.open("a") as fh:
                    fh.write(json.dumps(entry.to_dict()) + "\n")

    def get_history(self, session_id: str, limit: int = 50,
                    before: Optional[float] = None) -> list[dict]:
        if not _SESSION_RE.match(session_id or ""):
            raise RequestError("bad session_id")
        if not isinstance(limit, int) or not 1 <= limit <= 500:
            raise RequestError("limit must be in [1, 500]")
        with self._history_lock:
            entries = list(self._history.get(session_id, []))
        if before is not None:
            entries = [e for e in entries if e.timestamp < before]
        entries.sort(key=lambda e: e.timestamp, reverse=True)
        return [e.to_dict() for e in entries[:limit]]

    # -- admin -------------------------------------------------------------

    def set_pool(self, backends: list[Backend], policy: str = "round_robin") -> list[str]:
        new_pool = BackendPool(backends, policy=policy)  # validates non-empty/dups
        with self._pool_lock:
            self.pool = new_pool
        return new_pool.ids()

    def classifier_invocations(self) -> int:
        with self._pool_lock:
            return sum(b.invocations for b in self.pool.backends)

    def health(self) -> dict:
        with self._pool_lock:
            backends = list(self.pool.backends)
        reachability = [{"id": b.id, "reachable": b.reachable()} for b in backends]
        status = "ok" if all(r["reachable"] for r in reachability) else "degraded"
        return {
            "status": status,
            "registry_version": self.registry.version,
            "backends": reachability,
        }


def build_backend(entry: dict) -> Backend:
    kind = entry.get("kind", "mock_rules")
    spec = BackendSpec(
        id=entry["id"], kind=kind,
        endpoint=entry.get("endpoint", ""),
        model_name=entry.get("model_name", ""),
        credentials_ref=entry.get("credentials_ref", ""),
        timeout_s=float(entry.get("timeout_s", 30.0)),
        max_retries=int(entry.get("max_retries", 2)),
    )
    if kind == "mock_rules":
        ruleset = load_ruleset(entry["ruleset_path"]) if entry.get("ruleset_path") else None
        return MockRulesBackend(spec, ruleset=ruleset)
    return ChatHttpBackend(spec)


def service_from_config(config: dict | str | Path) -> GatewayService:
    """Build a GatewayService from the gateway JSON config document."""
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    registry = load_registry(config.get("registry_path"))
    cache_cfg = config.get("cache", {})
    ttl = float(cache_cfg.get("ttl_s", 300))
    capacity = int(cache_cfg.get("capacity", 10_000))
    if cache_cfg.get("external_url"):
        cache = ExternalKVCache(cache_cfg["external_url"], ttl_s=ttl,
                                encode=_result_to_json, decode=_result_from_json)
    else:
        cache = TTLCache(ttl_s=ttl, capacity=capacity)
    pool_cfg = config.get("pool", {})
    backends = [build_backend(e) for e in pool_cfg.get("backends", [])] or [MockRulesBackend()]
    pool = BackendPool(backends, policy=pool_cfg.get("policy", "round_robin"))
    history_path = (config.get("history") or {}).get("path")
    return GatewayService(registry=registry, pool=pool, cache=cache,
                          history_path=history_path)


def create_app(service: Optional[GatewayService] = None):
    """FastAPI application exposing the gateway HTTP+JSON interface."""
    from fastapi import FastAPI, HTTPException, Request
    from fastapi.middleware.cors import CORSMiddleware

    service = service or GatewayService()
    app = FastAPI(title="nlgateway")
    app.state.service = service
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.post("/v1/query")
    def query(body: dict):
        try:
            return service.handle_query(body.get("text", ""),
                                        body.get("session_id", ""))
        except RequestError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ClassificationUnavailable as exc:
            raise HTTPException(status_code=503, detail=str(exc))

    @app.get("/v1/history")
    def history(session_id: str = "", limit: int = 50,
                before: Optional[float] = None):
        try:
            return {"entries": service.get_history(session_id, limit, before)}
        except RequestError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/v1/health")
    def health():
        return service.health()

    @app.put("/v1/admin/pool")
    def set_pool(body: dict):
        specs = body.get("backends", [])
        if not specs:
            raise HTTPException(status_code=400, detail="pool must be non-empty")
        ids = [e.get("id") for e in specs]
        if len(ids) != len(set(ids)):
            raise HTTPException(status_code=409, detail="duplicate backend id")
        try:
            backends = [build_backend(e) for e in specs]
            accepted = service.set_pool(backends, body.get("policy", "round_robin"))
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"backends": accepted}

    return app
