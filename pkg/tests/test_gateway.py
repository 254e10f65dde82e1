import datetime as dt
import json
import threading

import httpx
import pytest
from fastapi.testclient import TestClient

from nlgateway.cache import TTLCache
from nlgateway.classify import BackendPool, BackendSpec, ChatHttpBackend
from nlgateway.clocks import FakeClock
from nlgateway.gateway import (
    GatewayService, RequestError, create_app, service_from_config,
)
from nlgateway.mock_rules import MockRulesBackend


@pytest.fixture
def clock():
    return FakeClock(today=dt.date(2024, 1, 15))


@pytest.fixture
def service(clock):
    return GatewayService(clock=clock, cache=TTLCache(ttl_s=300, clock=clock))


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


def test_query_happy_path(client):
    resp = client.post("/v1/query", json={"text": "add 5 and 3", "session_id": "s1"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["label"] == ["calculator", "add"]
    assert body["result"]["status"] == "ok"
    assert body["result"]["payload"] == {"value": 8.0}
    assert body["cached"] is False
    assert body["backend_id"] == "mock"


def test_repeat_query_hits_cache(service):
    service.handle_query("add 5 and 3", "s1")
    before = service.classifier_invocations()
    again = service.handle_query("add 5 and 3", "s1")
    assert again["cached"] is True
    assert again["label"] == ["calculator", "add"]
    assert service.classifier_invocations() == before


def test_unroutable_query_is_payload_level(client):
    resp = client.post("/v1/query", json={"text": "tell me a joke", "session_id": "s1"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["label"] == ["routes_not_exist", "return_invalid_error"]
    assert body["result"]["status"] == "invalid_route"
    assert body["result"]["message"]


def test_binding_failure_is_payload_level(client):
    # rule matches but no id keyword present in the query
    resp = client.post("/v1/query", json={"text": "delete my note", "session_id": "s1"})
    assert resp.status_code == 200
    assert resp.json()["result"]["status"] == "missing_param"


def test_request_validation(client):
    assert client.post("/v1/query", json={"text": "", "session_id": "s1"}).status_code == 400
    assert client.post("/v1/query",
                       json={"text": "x" * 4001, "session_id": "s1"}).status_code == 400
    assert client.post("/v1/query",
                       json={"text": "hi", "session_id": "bad session!"}).status_code == 400


def test_history_order_isolation_pagination(client):
    for q in ("add 1 and 2", "add 3 and 4", "add 5 and 6"):
        client.post("/v1/query", json={"text": q, "session_id": "s1"})
    resp = client.get("/v1/history", params={"session_id": "s1"})
    entries = resp.json()["entries"]
    assert len(entries) == 3
    assert entries[0]["query"] == "add 5 and 6"  # newest first
    # other sessions see nothing
    other = client.get("/v1/history", params={"session_id": "s2"}).json()["entries"]
    assert other == []
    # paginate: 2 then the remaining 1
    page = client.get("/v1/history",
                      params={"session_id": "s1", "limit": 2}).json()["entries"]
    assert [e["query"] for e in page] == ["add 5 and 6", "add 3 and 4"]
    rest = client.get("/v1/history",
                      params={"session_id": "s1", "limit": 2,
                              "before": page[-1]["timestamp"]}).json()["entries"]
    assert [e["query"] for e in rest] == ["add 1 and 2"]


def test_history_bad_paging(client):
    assert client.get("/v1/history",
                      params={"session_id": "s1", "limit": 0}).status_code == 400
    assert client.get("/v1/history",
                      params={"session_id": "s1", "limit": 9999}).status_code == 400


def test_history_persisted_to_jsonl(tmp_path, clock):
    path = tmp_path / "history.jsonl"
    service = GatewayService(clock=clock, history_path=path)
    service.handle_query("add 1 and 2", "s1")
    service.handle_query("add 3 and 4", "s1")
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(lines) == 2
    assert lines[0]["label"] == ["calculator", "add"]


def test_admin_pool_swap(client):
    resp = client.put("/v1/admin/pool", json={
        "policy": "round_robin",
        "backends": [{"id": "mock2", "kind": "mock_rules"}],
    })
    assert resp.status_code == 200
    out = client.post("/v1/query", json={"text": "add 7 and 8", "session_id": "s1"})
    assert out.json()["backend_id"] == "mock2"


def test_admin_pool_rejects_empty_and_duplicates(client):
    assert client.put("/v1/admin/pool", json={"backends": []}).status_code == 400
    resp = client.put("/v1/admin/pool", json={
        "backends": [{"id": "a", "kind": "mock_rules"},
                     {"id": "a", "kind": "mock_rules"}]})
    assert resp.status_code == 409


def test_health_ok_and_degraded(client, service):
    assert client.get("/v1/health").json()["status"] == "ok"
    spec = BackendSpec(id="dead", kind="chat_http", endpoint="http://127.0.0.1:1/v1",
                       model_name="m", timeout_s=0.2, max_retries=0)
    dead = ChatHttpBackend(spec, client=httpx.Client(timeout=0.2))
    service.set_pool([dead])
    health = client.get("/v1/health").json()
    assert health["status"] == "degraded"
    assert health["backends"] == [{"id": "dead", "reachable": False}]


def test_classifier_unavailable_maps_to_503(service, client):
    def handler(request):
        return httpx.Response(500, text="boom")

    spec = BackendSpec(id="flaky", kind="chat_http", endpoint="http://test/v1",
                       model_name="m", max_retries=0)
    backend = ChatHttpBackend(spec, client=httpx.Client(
        transport=httpx.MockTransport(handler)))
    service.set_pool([backend])
    resp = client.post("/v1/query", json={"text": "add 5 and 3", "session_id": "s1"})
    assert resp.status_code == 503


def test_cache_expiry_forces_reclassification(service, clock):
    service.handle_query("add 5 and 3", "s1")
    clock.advance(301)
    resp = service.handle_query("add 5 and 3", "s1")
    assert resp["cached"] is False
    assert service.classifier_invocations() == 2


def test_backend_swap_atomicity_under_load(service):
    pools = [[MockRulesBackend(BackendSpec(id=f"pa{i}", kind="mock_rules"))
              for i in range(2)],
             [MockRulesBackend(BackendSpec(id=f"pb{i}", kind="mock_rules"))
              for i in range(2)]]
    service.set_pool(pools[0])
    valid_ids = {"pa0", "pa1", "pb0", "pb1"}
    seen = []
    stop = threading.Event()

    def querier(n):
        while not stop.is_set():
            resp = service.handle_query(f"add {n} and {len(seen)}", "s1")
            seen.append(resp["backend_id"])

    threads = [threading.Thread(target=querier, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for flip in range(20):
        service.set_pool(pools[flip % 2])
    stop.set()
    for t in threads:
        t.join()
    assert seen and set(seen) <= valid_ids


def test_service_from_config(tmp_path):
    config = {
        "listen": "127.0.0.1:9321",
        "cache": {"ttl_s": 60, "capacity": 100},
        "pool": {"policy": "round_robin",
                 "backends": [{"id": "m1", "kind": "mock_rules"}]},
        "history": {"path": str(tmp_path / "h.jsonl")},
    }
    service = service_from_config(config)
    resp = service.handle_query("add 2 and 2", "s1")
    assert resp["backend_id"] == "m1"
    assert (tmp_path / "h.jsonl").exists()


def test_handle_query_direct_validation(service):
    with pytest.raises(RequestError):
        service.handle_query("hi", "not ok!")
