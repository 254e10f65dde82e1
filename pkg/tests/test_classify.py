import json
import threading

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from nlgateway.classify import (
    Backend, BackendPool, BackendSpec, ChatHttpBackend, ClassificationUnavailable,
    ParseFailure, build_prompt, classify, parse_classifier_output, select_backend,
)
from nlgateway.hierarchy import INVALID_LABEL, Label, load_registry
from nlgateway.mock_rules import MockRulesBackend

REG = load_registry()


# -- build_prompt ------------------------------------------------------------

def test_prompt_contains_hierarchy_and_rules():
    bundle = build_prompt("add 5 and 3", REG)
    assert "calculator.add" in bundle.system_text
    assert "routes_not_exist" in bundle.system_text
    assert bundle.temperature == 0.0
    assert bundle.user_text == "add 5 and 3"


def test_prompt_rejects_empty_and_overlong():
    with pytest.raises(ValueError):
        build_prompt("   ", REG)
    with pytest.raises(ValueError):
        build_prompt("x" * 4001, REG)


def test_prompt_deterministic():
    a = build_prompt("hello", REG)
    b = build_prompt("hello", REG)
    assert a == b


# -- parse_classifier_output -------------------------------------------------

def test_parse_well_formed():
    raw = '{"module":"calculator","function":"add","params":{"a":"5","b":"3"}}'
    out = parse_classifier_output(raw, REG)
    assert out.label == Label("calculator", "add")
    assert out.params == {"a": "5", "b": "3"}
    assert out.diagnostic is None


def test_parse_fenced_with_prose():
    raw = ('Sure! ```json\n{"module":"weather","function":"get_today_weather",'
           '"params":{"location":"Paris"}}\n```')
    out = parse_classifier_output(raw, REG)
    assert out.label == Label("weather", "get_today_weather")
    assert out.params == {"location": "Paris"}


def test_parse_unresolved_label_maps_to_invalid():
    # unit oracle: the label genuinely does not resolve
    from nlgateway.hierarchy import validate_label
    assert validate_label(Label("music", "play"), REG) is None
    out = parse_classifier_output('{"module":"music","function":"play","params":{}}', REG)
    assert out.label == INVALID_LABEL
    assert out.diagnostic == "label_unresolved"


def test_parse_unknown_params_dropped():
    raw = '{"module":"calculator","function":"add","params":{"a":"1","zzz":"2"}}'
    out = parse_classifier_output(raw, REG)
    assert out.params == {"a": "1"}


def test_parse_failures():
    with pytest.raises(ParseFailure):
        parse_classifier_output("no json here", REG)
    with pytest.raises(ParseFailure):
        parse_classifier_output('{"module":"calculator"}', REG)


def test_parse_round_trip_for_valid_results():
    for label in REG.labels():
        fn = REG.function(label)
        params = {p.name: "1" for p in fn.params}
        raw = json.dumps({"module": label.module, "function": label.function,
                          "params": params})
        out = parse_classifier_output(raw, REG)
        assert out.label == label
        assert out.params == params


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=300))
def test_parse_never_yields_unresolved_label(raw):
    try:
        out = parse_classifier_output(raw, REG)
    except ParseFailure:
        return
    assert REG.function(out.label) is not None


# -- backend pool ------------------------------------------------------------

def _mock_pool(n, policy="round_robin"):
    backends = [MockRulesBackend(BackendSpec(id=f"b{i}", kind="mock_rules"))
                for i in range(n)]
    return BackendPool(backends, policy=policy)


def test_round_robin_cycle():
    pool = _mock_pool(3)
    picked = [select_backend(pool).id for _ in range(6)]
    assert picked == ["b0", "b1", "b2", "b0", "b1", "b2"]


def test_singleton_pool():
    pool = _mock_pool(1, policy="least_inflight")
    assert all(select_backend(pool).id == "b0" for _ in range(10))


def test_round_robin_concurrent_counts():
    pool = _mock_pool(3)
    counts = {"b0": 0, "b1": 0, "b2": 0}
    lock = threading.Lock()

    def worker():
        for _ in range(25):
            b = select_backend(pool)
            with lock:
                counts[b.id] += 1

    threads = [threading.Thread(target=worker) for _ in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert counts == {"b0": 100, "b1": 100, "b2": 100}


def test_least_inflight_prefers_idle():
    pool = _mock_pool(2, policy="least_inflight")
    pool.backends[0].inflight = 5
    assert select_backend(pool).id == "b1"
    pool.backends[0].inflight = 0
    assert select_backend(pool).id == "b0"  # tie broken by list order


def test_pool_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        BackendPool([])
    b = MockRulesBackend()
    with pytest.raises(ValueError):
        BackendPool([b, MockRulesBackend()])


# -- chat_http backend -------------------------------------------------------

def _chat_backend(handler, max_retries=2):
    spec = BackendSpec(id="llm", kind="chat_http", endpoint="http://test/v1/chat",
                       model_name="test-model", max_retries=max_retries)
    client = httpx.Client(transport=httpx.MockTransport(handler), timeout=5)
    return ChatHttpBackend(spec, client=client)


def _chat_reply(content):
    return httpx.Response(200, json={
        "choices": [{"message": {"role": "assistant", "content": content}}]})


def test_chat_http_happy_path():
    seen = {}

    def handler(request):
        seen["body"] = json.loads(request.content)
        return _chat_reply('{"module":"calculator","function":"add",'
                           '"params":{"a":"5","b":"3"}}')

    backend = _chat_backend(handler)
    result = backend.classify_query("add 5 and 3", REG)
    assert result.label == Label("calculator", "add")
    assert result.params == {"a": "5", "b": "3"}
    assert seen["body"]["model"] == "test-model"
    assert seen["body"]["messages"][0]["role"] == "system"
    assert seen["body"]["messages"][1]["content"] == "add 5 and 3"


def test_chat_http_retries_with_corrective_instruction():
    calls = []

    def handler(request):
        body = json.loads(request.content)
        calls.append(body["messages"][1]["content"])
        if len(calls) == 1:
            return _chat_reply("I think this is about math!")
        return _chat_reply('{"module":"calculator","function":"add","params":{}}')

    backend = _chat_backend(handler)
    result = backend.classify_query("add 5 and 3", REG)
    assert result.label == Label("calculator", "add")
    assert len(calls) == 2
    assert "only the JSON object" in calls[1]


def test_chat_http_unparseable_exhaustion():
    backend = _chat_backend(lambda req: _chat_reply("still not json"))
    result = backend.classify_query("add 5 and 3", REG)
    assert result.label == INVALID_LABEL
    assert result.diagnostic == "backend_unparseable"


def test_chat_http_server_errors_raise_unavailable():
    count = {"n": 0}

    def handler(request):
        count["n"] += 1
        return httpx.Response(500, text="boom")

    backend = _chat_backend(handler)
    with pytest.raises(ClassificationUnavailable):
        backend.classify_query("add 5 and 3", REG)
    assert count["n"] == 3  # initial + 2 retries


def test_classify_routes_through_pool():
    pool = BackendPool([MockRulesBackend()])
    result = classify("add 5 and 3", pool, REG)
    assert result.label == Label("calculator", "add")
    assert result.params == {"a": "5", "b": "3"}
    assert result.backend_id == "mock"


def test_backend_spec_validation():
    with pytest.raises(ValueError):
        BackendSpec(id="x", kind="chat_http")  # missing endpoint/model
    with pytest.raises(ValueError):
        BackendSpec(id="x", kind="telepathy")
