import datetime as dt
import math
import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from nlgateway.clocks import FakeClock
from nlgateway.executor import (
    BindingError, CalcError, FixtureWeatherProvider, NotesStore, Stores,
    bind_params, eval_calculator, execute_call, BoundArgs,
    OK, INVALID_ROUTE, MISSING_PARAM, BAD_PARAM, EXEC_ERROR,
)
from nlgateway.hierarchy import INVALID_LABEL, Label, load_registry

REG = load_registry()
CLOCK = FakeClock(today=dt.date(2024, 1, 15))


def fn(module, function):
    return REG.function(Label(module, function))


def bind(module, function, extracted, clock=CLOCK):
    return bind_params(fn(module, function), Label(module, function), extracted,
                       clock=clock)


# -- bind_params -------------------------------------------------------------

def test_bind_numbers():
    bound = bind("calculator", "add", {"a": "5", "b": "3"})
    assert bound.values == {"a": 5.0, "b": 3.0}


def test_bind_scientific_and_decimal():
    bound = bind("calculator", "add", {"a": "1.5e2", "b": "-0.25"})
    assert bound.values == {"a": 150.0, "b": -0.25}


def test_bind_missing_required():
    with pytest.raises(BindingError) as exc:
        bind("calculator", "add", {"a": "5"})
    assert exc.value.status == MISSING_PARAM
    assert exc.value.param == "b"


def test_bind_bad_number():
    with pytest.raises(BindingError) as exc:
        bind("calculator", "add", {"a": "five", "b": "3"})
    assert exc.value.status == BAD_PARAM


def test_bind_today_resolves_against_injected_clock():
    bound = bind("weather", "get_today_weather",
                 {"location": "Paris", "date": "today"})
    assert bound.values == {"location": "Paris", "date": dt.date(2024, 1, 15)}


def test_bind_iso_date_and_integer():
    bound = bind("calendar", "add_event", {"title": "x", "date": "2024-06-08"})
    assert bound.values["date"] == dt.date(2024, 6, 8)
    bound = bind("calculator", "factorial", {"n": "5"})
    assert bound.values == {"n": 5}
    with pytest.raises(BindingError):
        bind("calculator", "factorial", {"n": "5.5"})


# -- eval_calculator ---------------------------------------------------------

def _calc(function, **values):
    return eval_calculator(function, BoundArgs(Label("calculator", function), values))


def test_calculator_basics():
    assert _calc("add", a=5.0, b=3.0) == 8.0
    assert _calc("subtract", a=5.0, b=3.0) == 2.0
    assert _calc("multiply", a=5.0, b=3.0) == 15.0
    assert _calc("divide", a=6.0, b=3.0) == 2.0
    assert _calc("power", a=2.0, b=10.0) == 1024.0
    assert _calc("factorial", n=5) == 120


def test_log_against_independent_identity():
    assert abs(_calc("log", x=8.0, base=2.0) - math.log(8) / math.log(2)) < 1e-12
    assert abs(_calc("log", x=8.0) - math.log(8)) < 1e-12


def test_calculator_error_domains():
    with pytest.raises(CalcError, match="division by zero"):
        _calc("divide", a=1.0, b=0.0)
    with pytest.raises(CalcError):
        _calc("log", x=-1.0)
    with pytest.raises(CalcError):
        _calc("log", x=8.0, base=1.0)
    with pytest.raises(CalcError):
        _calc("factorial", n=-1)
    with pytest.raises(CalcError):
        _calc("factorial", n=21)


def test_calculator_random_inputs_match_direct_math():
    rng = random.Random(4)
    for _ in range(2000):
        a = rng.uniform(-100, 100)
        b = rng.uniform(0.1, 100)
        assert math.isclose(_calc("add", a=a, b=b), a + b, rel_tol=1e-9)
        assert math.isclose(_calc("subtract", a=a, b=b), a - b, rel_tol=1e-9)
        assert math.isclose(_calc("multiply", a=a, b=b), a * b, rel_tol=1e-9)
        assert math.isclose(_calc("divide", a=a, b=b), a / b, rel_tol=1e-9)
        assert math.isclose(_calc("sin", x=a), math.sin(a), rel_tol=1e-9)


# -- stores ------------------------------------------------------------------

def test_crud_sequence_notes():
    stores = Stores()
    weather = FixtureWeatherProvider()
    bound = bind("notes", "create", {"content": "buy milk"})
    result = execute_call(bound, stores, weather, clock=CLOCK)
    assert result.status == OK
    assert result.payload == {"id": "1"}
    listing = execute_call(bind("notes", "get_all_notes", {}), stores, weather,
                           clock=CLOCK)
    assert listing.status == OK
    assert len(listing.payload["notes"]) == 1


def test_mark_as_read_on_empty_store():
    stores = Stores()
    result = execute_call(bind("notification", "mark_as_read", {"id": "7"}),
                          stores, FixtureWeatherProvider(), clock=CLOCK)
    assert result.status == EXEC_ERROR
    assert result.message == "not found"


def test_invalid_route_always():
    stores = Stores()
    bound = BoundArgs(INVALID_LABEL, {})
    result = execute_call(bound, stores, FixtureWeatherProvider(), clock=CLOCK)
    assert result.status == INVALID_ROUTE
    assert result.message == "no matching API route"


def test_email_lifecycle():
    stores = Stores()
    weather = FixtureWeatherProvider()
    r = execute_call(bind("email", "compose_email", {"to": "bob"}), stores,
                     weather, clock=CLOCK)
    eid = r.payload["id"]
    assert execute_call(bind("email", "send_email", {"id": eid}), stores,
                        weather, clock=CLOCK).status == OK
    again = execute_call(bind("email", "send_email", {"id": eid}), stores,
                         weather, clock=CLOCK)
    assert again.status == EXEC_ERROR
    assert again.message == "not a draft"
    assert execute_call(bind("email", "delete_email", {"id": eid}), stores,
                        weather, clock=CLOCK).status == OK
    gone = execute_call(bind("email", "read_email", {"id": eid}), stores,
                        weather, clock=CLOCK)
    assert gone.status == EXEC_ERROR


def test_weather_fixture_lookup_and_unknown_location():
    stores = Stores()
    weather = FixtureWeatherProvider()
    r = execute_call(bind("weather", "get_today_weather", {"location": "Boston"}),
                     stores, weather, clock=CLOCK)
    assert r.status == OK
    assert r.payload["location"] == "Boston"
    r = execute_call(bind("weather", "get_today_weather", {"location": "Atlantis"}),
                     stores, weather, clock=CLOCK)
    assert r.status == EXEC_ERROR
    assert r.message == "unknown location"
    r = execute_call(bind("weather", "get_weekly_forecast", {"location": "Paris"}),
                     stores, weather, clock=CLOCK)
    assert r.status == OK
    assert len(r.payload["forecast"]) == 7
    r = execute_call(bind("weather", "get_air_pollution", {"location": "Tokyo"}),
                     stores, weather, clock=CLOCK)
    assert r.status == OK
    assert "aqi" in r.payload


def test_notification_read_flag_monotone():
    stores = Stores()
    nid = stores.notifications.send("bob", "hi")
    stores.notifications.mark_as_read(nid)
    rec = stores.notifications.mark_as_read(nid)
    assert rec["read"] is True


# -- property: random op sequences against a reference map oracle ------------

@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["create", "delete", "update", "get"]),
                          st.integers(0, 30), st.text(max_size=8)),
                max_size=60))
def test_notes_store_matches_map_oracle(ops):
    store = NotesStore()
    oracle: dict[str, dict] = {}
    next_id = 1
    for op, target, text in ops:
        tid = str(target)
        if op == "create":
            nid = store.create(text)
            oracle[str(next_id)] = {"id": str(next_id), "title": "",
                                    "content": text, "created_at": ""}
            assert nid == str(next_id)
            next_id += 1
        elif op == "delete":
            try:
                store.delete(tid)
                store_ok = True
            except KeyError:
                store_ok = False
            assert store_ok == (tid in oracle)
            oracle.pop(tid, None)
        elif op == "update":
            try:
                store.update(tid, text)
                store_ok = True
            except KeyError:
                store_ok = False
            assert store_ok == (tid in oracle)
            if tid in oracle:
                oracle[tid]["content"] = text
        else:
            got = {r["id"]: r for r in store.get_all()}
            assert got == oracle
    assert {r["id"]: r for r in store.get_all()} == oracle


def test_concurrent_creates_yield_distinct_ids():
    store = NotesStore()
    ids = []
    lock = threading.Lock()

    def worker():
        mine = [store.create(f"note") for _ in range(100)]
        with lock:
            ids.extend(mine)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(ids) == 800
    assert len(set(ids)) == 800
    assert len(store.get_all()) == 800
