"""Parameter binding and API execution against in-process stores and fixtures."""
from __future__ import annotations

import datetime as dt
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .clocks import SystemClock
from .hierarchy import INVALID_LABEL, ApiFunction, Label

OK = "ok"
INVALID_ROUTE = "invalid_route"
MISSING_PARAM = "missing_param"
BAD_PARAM = "bad_param"
EXEC_ERROR = "exec_error"


@dataclass
class ExecutionResult:
    status: str
    payload: Any = None
    message: str = ""


@dataclass
class BoundArgs:
    label: Label
    values: dict[str, Any]


class BindingError(Exception):
    def __init__(self, status: str, param: str, reason: str = ""):
        self.status = status
        self.param = param
        self.reason = reason
        msg = f"missing required parameter {param!r}" if status == MISSING_PARAM \
            else f"bad value for parameter {param!r}: {reason}"
        super().__init__(msg)


class CalcError(Exception):
    pass


def _parse_value(kind: str, raw: str, spec_enum, clock) -> Any:
    raw = raw.strip()
    if kind == "number":
        return float(raw)
    if kind == "integer":
        return int(raw, 10)
    if kind in ("string", "location"):
        return raw
    if kind == "date":
        if raw.lower() == "today":
            return clock.today()
        return dt.date.fromisoformat(raw)
    if kind == "time":
        return dt.time.fromisoformat(raw)
    if kind == "enum":
        if raw not in (spec_enum or ()):
            raise ValueError(f"not one of {spec_enum}")
        return raw
    raise ValueError(f"unknown kind {kind}")


def bind_params(fn: ApiFunction, label: Label, extracted: dict[str, str],
                clock=None) -> BoundArgs:
    """Type-check extracted keywords against the function signature.

    Raises BindingError (missing_param / bad_param); "today" dates resolve
    against the injected clock, never the system clock.
    """
    clock = clock or SystemClock()
    values: dict[str, Any] = {}
    for spec in fn.params:
        if spec.name not in extracted or extracted[spec.name].strip() == "":
            if spec.required:
                raise BindingError(MISSING_PARAM, spec.name)
            continue
        try:
            values[spec.name] = _parse_value(spec.kind, extracted[spec.name],
                                             spec.enum_values, clock)
        except (ValueError, OverflowError) as exc:
            raise BindingError(BAD_PARAM, spec.name, str(exc)) from exc
    return BoundArgs(label=label, values=values)


FACTORIAL_MAX = 20  # largest n! exactly representable in a 64-bit signed int


def eval_calculator(function: str, args: BoundArgs) -> float | int:
    v = args.values
    if function in ("add", "subtract", "multiply", "divide", "power"):
        a, b = v["a"], v["b"]
        if function == "add":
            return a + b
        if function == "subtract":
            return a - b
        if function == "multiply":
            return a * b
        if function == "divide":
            if b == 0:
                raise CalcError("division by zero")
            return a / b
        try:
            result = a ** b
        except (OverflowError, ZeroDivisionError) as exc:
            raise CalcError(f"power out of range: {exc}") from exc
        if isinstance(result, complex):
            raise CalcError("power of negative base with fractional exponent")
        return result
    if function == "log":
        x = v["x"]
        base = v.get("base")
        if x <= 0:
            raise CalcError("log of non-positive value")
        if base is None:
            return math.log(x)
        if base <= 0 or base == 1:
            raise CalcError("log base must be positive and != 1")
        return math.log(x) / math.log(base)
    if function == "factorial":
        n = v["n"]
        if n < 0:
            raise CalcError("factorial of negative number")
        if n > FACTORIAL_MAX:
            raise CalcError(f"factorial above {FACTORIAL_MAX} not supported")
        return math.factorial(n)
    if function in ("sin", "cos", "tan"):
        return getattr(math, function)(v["x"])
    raise CalcError(f"unknown calculator function {function}")


class EntityStore:
    """Lock-guarded id→record map; ids are never reused within a process."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        self._next_id = 1

    def _new_id(self) -> str:
        nid = str(self._next_id)
        self._next_id += 1
        return nid

    def _get(self, entity_id: str) -> dict:
        rec = self._records.get(entity_id)
        if rec is None:
            raise KeyError(entity_id)
        return rec

    def snapshot(self) -> dict[str, dict]:
        with self._lock:
            return {k: dict(v) for k, v in self._records.items()}

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class NotesStore(EntityStore):
    def create(self, content: str, title: str = "", created_at: str = "") -> str:
        with self._lock:
            nid = self._new_id()
            self._records[nid] = {"id": nid, "title": title, "content": content,
                                  "created_at": created_at}
            return nid

    def get_all(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in self._records.values()]

    def delete(self, note_id: str) -> None:
        with self._lock:
            self._get(note_id)  # raises KeyError if absent
            del self._records[note_id]

    def update(self, note_id: str, content: Optional[str] = None) -> dict:
        with self._lock:
            rec = self._get(note_id)
            if content is not None:
                rec["content"] = content
            return dict(rec)


class NotificationStore(EntityStore):
    def send(self, recipient: str, message: str = "") -> str:
        with self._lock:
            nid = self._new_id()
            self._records[nid] = {"id": nid, "recipient": recipient,
                                  "message": message, "read": False}
            return nid

    def view(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in self._records.values()]

    def mark_as_read(self, notif_id: str) -> dict:
        with self._lock:
            rec = self._get(notif_id)
            rec["read"] = True  # monotone: never flips back
            return dict(rec)

    def delete(self, notif_id: str) -> None:
        with self._lock:
            self._get(notif_id)
            del self._records[notif_id]


class EmailStore(EntityStore):
    def compose(self, to: str, subject: str = "", body: str = "") -> str:
        with self._lock:
            eid = self._new_id()
            self._records[eid] = {"id": eid, "to": to, "subject": subject,
                                  "body": body, "state": "draft"}
            return eid

    def send(self, email_id: str) -> dict:
        with self._lock:
            rec = self._get(email_id)
            if rec["state"] != "draft":
                raise ValueError("not a draft")
            rec["state"] = "sent"
            return dict(rec)

    def read(self, email_id: Optional[str] = None) -> dict:
        with self._lock:
            if email_id is not None:
                rec = self._get(email_id)
                if rec["state"] == "deleted":
                    raise KeyError(email_id)
                return dict(rec)
            live = [r for r in self._records.values() if r["state"] != "deleted"]
            if not live:
                raise KeyError("latest")
            return dict(live[-1])

    def reply(self, email_id: str, body: str = "") -> str:
        with self._lock:
            orig = self._get(email_id)
            if orig["state"] == "deleted":
                raise KeyError(email_id)
            rid = self._new_id()
            subject = orig["subject"]
            if subject and not subject.lower().startswith("re:"):
                subject = f"Re: {subject}"
            self._records[rid] = {"id": rid, "to": orig["to"], "subject": subject,
                                  "body": body, "state": "sent"}
            return rid

    def delete(self, email_id: str) -> None:
        with self._lock:
            rec = self._get(email_id)
            if rec["state"] == "deleted":
                raise KeyError(email_id)
            rec["state"] = "deleted"


class CalendarStore(EntityStore):
    def add(self, title: str, date: str = "", time: str = "") -> str:
        with self._lock:
            eid = self._new_id()
            self._records[eid] = {"id": eid, "title": title, "date": date,
                                  "time": time}
            return eid

    def remove(self, event_id: str) -> None:
        with self._lock:
            self._get(event_id)
            del self._records[event_id]

    def update(self, event_id: str, title=None, date=None, time=None) -> dict:
        with self._lock:
            rec = self._get(event_id)
            if title is not None:
                rec["title"] = title
            if date is not None:
                rec["date"] = date
            if time is not None:
                rec["time"] = time
            return dict(rec)

    def view(self, date: str = "") -> list[dict]:
        with self._lock:
            records = list(self._records.values())
        if date:
            records = [r for r in records if r["date"] == date]
        return [dict(r) for r in records]


@dataclass
class Stores:
    notes: NotesStore = field(default_factory=NotesStore)
    notifications: NotificationStore = field(default_factory=NotificationStore)
    emails: EmailStore = field(default_factory=EmailStore)
    calendar: CalendarStore = field(default_factory=CalendarStore)


DEFAULT_FIXTURE = Path(__file__).parent / "data" / "weather_fixture.json"


class FixtureWeatherProvider:
    """Deterministic weather lookups keyed by (location, date)."""

    def __init__(self, path: str | Path = DEFAULT_FIXTURE):
        entries = json.loads(Path(path).read_text())
        self._by_key = {(e["location"].lower(), e["date"]): e for e in entries}
        self._locations = {e["location"].lower() for e in entries}

    def knows(self, location: str) -> bool:
        return location.lower() in self._locations

    def lookup(self, location: str, date: dt.date) -> Optional[dict]:
        return self._by_key.get((location.lower(), date.isoformat()))

    def week(self, location: str, start: dt.date) -> list[dict]:
        days = [start + dt.timedelta(days=i) for i in range(7)]
        found = [self.lookup(location, d) for d in days]
        return [f for f in found if f is not None]


def _date_str(value) -> str:
    return value.isoformat() if isinstance(value, (dt.date, dt.time)) else str(value or "")


def execute_call(bound: BoundArgs, stores: Stores,
                 weather: FixtureWeatherProvider, clock=None) -> ExecutionResult:
    """Dispatch a bound call to the owning subsystem and wrap the outcome."""
    clock = clock or SystemClock()
    label = bound.label
    v = bound.values

    if label == INVALID_LABEL:
        return ExecutionResult(INVALID_ROUTE, message="no matching API route")

    if label.module == "calculator":
        try:
            value = eval_calculator(label.function, bound)
        except CalcError as exc:
            return ExecutionResult(EXEC_ERROR, message=str(exc))
        return ExecutionResult(OK, payload={"value": value},
                               message=f"{label.function} = {value}")

    if label.module == "weather":
        location = v["location"]
        date = v.get("date") or clock.today()
        if not weather.knows(location):
            return ExecutionResult(EXEC_ERROR, message="unknown location")
        if label.function == "get_weekly_forecast":
            entries = weather.week(location, date)
            if not entries:
                return ExecutionResult(EXEC_ERROR,
                                       message=f"no forecast data for {location}")
            return ExecutionResult(OK, payload={"forecast": entries},
                                   message=f"{len(entries)}-day forecast for {location}")
        entry = weather.lookup(location, date)
        if entry is None:
            return ExecutionResult(EXEC_ERROR,
                                   message=f"no weather data for {location} on {date}")
        if label.function == "get_air_pollution":
            return ExecutionResult(OK, payload={"location": entry["location"],
                                                "date": entry["date"],
                                                "aqi": entry["aqi"]},
                                   message=f"AQI in {entry['location']}: {entry['aqi']}")
        return ExecutionResult(OK, payload=entry,
                               message=f"{entry['summary']}, {entry['temp_c']}°C "
                                       f"in {entry['location']}")

    try:
        return _execute_crud(label, v, stores, clock)
    except KeyError:
        return ExecutionResult(EXEC_ERROR, message="not found")
    except ValueError as exc:
        return ExecutionResult(EXEC_ERROR, message=str(exc))


def _execute_crud(label: Label, v: dict, stores: Stores, clock) -> ExecutionResult:
    mod, fn = label.module, label.function
    if mod == "notes":
        s = stores.notes
        if fn == "create":
            nid = s.create(v["content"], v.get("title", ""),
                           created_at=clock.today().isoformat())
            return ExecutionResult(OK, payload={"id": nid}, message=f"note {nid} created")
        if fn == "get_all_notes":
            notes = s.get_all()
            return ExecutionResult(OK, payload={"notes": notes},
                                   message=f"{len(notes)} note(s)")
        if fn == "delete_note":
            s.delete(v["id"])
            return ExecutionResult(OK, payload={"id": v["id"]},
                                   message=f"note {v['id']} deleted")
        if fn == "update_note":
            rec = s.update(v["id"], v.get("content"))
            return ExecutionResult(OK, payload=rec, message=f"note {v['id']} updated")
    if mod == "notification":
        s = stores.notifications
        if fn == "send_notification":
            nid = s.send(v["recipient"], v.get("message", ""))
            return ExecutionResult(OK, payload={"id": nid},
                                   message=f"notification {nid} sent to {v['recipient']}")
        if fn == "view_notification":
            items = s.view()
            return ExecutionResult(OK, payload={"notifications": items},
                                   message=f"{len(items)} notification(s)")
        if fn == "mark_as_read":
            rec = s.mark_as_read(v["id"])
            return ExecutionResult(OK, payload=rec,
                                   message=f"notification {v['id']} marked read")
        if fn == "delete_notification":
            s.delete(v["id"])
            return ExecutionResult(OK, payload={"id": v["id"]},
                                   message=f"notification {v['id']} deleted")
    if mod == "email":
        s = stores.emails
        if fn == "compose_email":
            eid = s.compose(v["to"], v.get("subject", ""), v.get("body", ""))
            return ExecutionResult(OK, payload={"id": eid},
                                   message=f"draft {eid} to {v['to']}")
        if fn == "send_email":
            rec = s.send(v["id"])
            return ExecutionResult(OK, payload=rec, message=f"email {v['id']} sent")
        if fn == "read_email":
            rec = s.read(v.get("id"))
            return ExecutionResult(OK, payload=rec, message=f"email {rec['id']}")
        if fn == "reply_email":
            rid = s.reply(v["id"], v.get("body", ""))
            return ExecutionResult(OK, payload={"id": rid},
                                   message=f"reply {rid} sent")
        if fn == "delete_email":
            s.delete(v["id"])
            return ExecutionResult(OK, payload={"id": v["id"]},
                                   message=f"email {v['id']} deleted")
    if mod == "calendar":
        s = stores.calendar
        if fn == "add_event":
            eid = s.add(v["title"], _date_str(v.get("date")), _date_str(v.get("time")))
            return ExecutionResult(OK, payload={"id": eid},
                                   message=f"event {eid} added")
        if fn == "remove_event":
            s.remove(v["id"])
            return ExecutionResult(OK, payload={"id": v["id"]},
                                   message=f"event {v['id']} removed")
        if fn == "update_event":
            rec = s.update(v["id"], v.get("title"), _date_str(v.get("date")) or None,
                           _date_str(v.get("time")) or None)
            return ExecutionResult(OK, payload=rec, message=f"event {v['id']} updated")
        if fn == "view_event":
            items = s.view(_date_str(v.get("date")))
            return ExecutionResult(OK, payload={"events": items},
                                   message=f"{len(items)} event(s)")
    return ExecutionResult(EXEC_ERROR, message=f"no executor for {mod}.{fn}")
