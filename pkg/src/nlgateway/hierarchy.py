"""API module/function hierarchy: the registry every other component consumes."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

PARAM_KINDS = {"number", "integer", "string", "date", "time", "location", "enum"}

INVALID_MODULE = "routes_not_exist"
INVALID_FUNCTION = "return_invalid_error"

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class RegistryError(ValueError):
    """Raised when a registry document violates the hierarchy invariants."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    required: bool = True
    enum_values: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise RegistryError(f"bad param name {self.name!r}")
        if self.kind not in PARAM_KINDS:
            raise RegistryError(f"bad param kind {self.kind!r} for {self.name}")
        if (self.kind == "enum") != bool(self.enum_values):
            raise RegistryError(f"enum_values required iff kind=enum ({self.name})")


@dataclass(frozen=True)
class ApiFunction:
    name: str
    params: tuple[ParamSpec, ...] = ()
    description: str = ""

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise RegistryError(f"bad function name {self.name!r}")
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise RegistryError(f"duplicate param in function {self.name}")
        seen_optional = False
        for p in self.params:
            if not p.required:
                seen_optional = True
            elif seen_optional:
                raise RegistryError(
                    f"required param {p.name} after optional in {self.name}"
                )

    def param(self, name: str) -> Optional[ParamSpec]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ApiModule:
    name: str
    functions: tuple[ApiFunction, ...]
    description: str = ""

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise RegistryError(f"bad module name {self.name!r}")
        if not self.functions:
            raise RegistryError(f"module {self.name} has no functions")
        names = [f.name for f in self.functions]
        for n in names:
            if names.count(n) > 1:
                raise RegistryError(f"duplicate function {self.name}.{n}")

    def function(self, name: str) -> Optional[ApiFunction]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class Label:
    module: str
    function: str

    def as_pair(self) -> list[str]:
        return [self.module, self.function]


INVALID_LABEL = Label(INVALID_MODULE, INVALID_FUNCTION)


@dataclass(frozen=True)
class Registry:
    modules: tuple[ApiModule, ...]
    version: int = 1

    def __post_init__(self):
        names = [m.name for m in self.modules]
        for n in names:
            if names.count(n) > 1:
                raise RegistryError(f"duplicate module {n}")
        inv = self.module(INVALID_MODULE)
        if inv is None or inv.function(INVALID_FUNCTION) is None:
            raise RegistryError(
                f"missing reserved invalid label {INVALID_MODULE}.{INVALID_FUNCTION}"
            )
        if len(inv.functions) != 1 or inv.functions[0].params:
            raise RegistryError("reserved invalid module must hold exactly "
                                "return_invalid_error with zero params")

    def module(self, name: str) -> Optional[ApiModule]:
        for m in self.modules:
            if m.name == name:
                return m
        return None

    def function(self, label: Label) -> Optional[ApiFunction]:
        mod = self.module(label.module)
        return mod.function(label.function) if mod else None

    def labels(self) -> list[Label]:
        return [Label(m.name, f.name) for m in self.modules for f in m.functions]

    @property
    def invalid_label(self) -> Label:
        return INVALID_LABEL


def _normalize_component(s: str) -> str:
    return re.sub(r"\s+", "_", s.strip().lower())


def validate_label(label: Label, registry: Registry) -> Optional[Label]:
    """Resolve a raw (module, function) pair against the registry.

    Lowercases, trims, and maps internal spaces to underscores before lookup.
    Returns the normalized Label, or None when either component is unknown.
    """
    norm = Label(_normalize_component(label.module), _normalize_component(label.function))
    if registry.function(norm) is not None:
        return norm
    return None


def registry_digest(registry: Registry) -> str:
    """Deterministic one-line-per-function rendering used in classifier prompts."""
    lines = []
    for mod in registry.modules:
        for fn in mod.functions:
            sig = ", ".join(f"{p.name}:{p.kind}" for p in fn.params)
            line = f"{mod.name}.{fn.name}({sig})"
            if fn.description:
                line += f" — {fn.description}"
            lines.append(line)
    return "\n".join(lines) + "\n"


def serialize_registry(registry: Registry) -> dict:
    return {
        "version": registry.version,
        "modules": [
            {
                "name": m.name,
                "description": m.description,
                "functions": [
                    {
                        "name": f.name,
                        "description": f.description,
                        "params": [
                            {
                                "name": p.name,
                                "kind": p.kind,
                                "required": p.required,
                                **({"enum_values": list(p.enum_values)}
                                   if p.enum_values else {}),
                            }
                            for p in f.params
                        ],
                    }
                    for f in m.functions
                ],
            }
            for m in registry.modules
        ],
    }


def _registry_from_dict(doc: dict) -> Registry:
    try:
        modules = tuple(
            ApiModule(
                name=m["name"],
                description=m.get("description", ""),
                functions=tuple(
                    ApiFunction(
                        name=f["name"],
                        description=f.get("description", ""),
                        params=tuple(
                            ParamSpec(
                                name=p["name"],
                                kind=p["kind"],
                                required=bool(p.get("required", True)),
                                enum_values=tuple(p["enum_values"])
                                if p.get("enum_values") else None,
                            )
                            for p in f.get("params", [])
                        ),
                    )
                    for f in m["functions"]
                ),
            )
            for m in doc["modules"]
        )
    except (KeyError, TypeError) as exc:
        raise RegistryError(f"malformed registry document: {exc}") from exc
    return Registry(modules=modules, version=int(doc.get("version", 1)))


def load_registry(source: str | Path | dict | None = None) -> Registry:
    """Load a registry from a JSON file path or dict; None loads the built-in default."""
    if source is None:
        return default_registry()
    if isinstance(source, dict):
        return _registry_from_dict(source)
    text = Path(source).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegistryError(f"registry document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RegistryError("registry document must be a JSON object")
    return _registry_from_dict(doc)


def _num(name, required=True):
    return ParamSpec(name, "number", required)


def default_registry() -> Registry:
    """The built-in seven-module hierarchy (31 functions)."""
    calc_binary = [("add", "add two numbers"),
                   ("subtract", "subtract b from a"),
                   ("multiply", "multiply two numbers"),
                   ("divide", "divide a by b"),
                   ("power", "raise a to the power b")]
    calc_fns = [
        ApiFunction(n, (_num("a"), _num("b")), d) for n, d in calc_binary
    ]
    calc_fns.append(ApiFunction("log", (_num("x"), _num("base", required=False)),
                                "logarithm of x, natural by default"))
    calc_fns.append(ApiFunction("factorial", (ParamSpec("n", "integer"),),
                                "exact factorial of a small non-negative integer"))
    for trig in ("sin", "cos", "tan"):
        calc_fns.append(ApiFunction(trig, (_num("x"),), f"{trig} of x in radians"))

    weather_params = (ParamSpec("location", "location"),
                      ParamSpec("date", "date", required=False))
    weather_fns = [
        ApiFunction("get_today_weather", weather_params, "current weather for a location"),
        ApiFunction("get_weekly_forecast", weather_params, "seven-day forecast"),
        ApiFunction("get_air_pollution", weather_params, "air quality index"),
    ]

    s = lambda n, req=True: ParamSpec(n, "string", req)  # noqa: E731
    notes_fns = [
        ApiFunction("create", (s("content"), s("title", False)), "create a note"),
        ApiFunction("get_all_notes", (), "list all notes"),
        ApiFunction("delete_note", (s("id"),), "delete a note by id"),
        ApiFunction("update_note", (s("id"), s("content", False)), "update a note"),
    ]
    notif_fns = [
        ApiFunction("send_notification", (s("recipient"), s("message", False)),
                    "send a notification"),
        ApiFunction("view_notification", (), "list notifications"),
        ApiFunction("mark_as_read", (s("id"),), "mark a notification read"),
        ApiFunction("delete_notification", (s("id"),), "delete a notification"),
    ]
    email_fns = [
        ApiFunction("compose_email", (s("to"), s("subject", False), s("body", False)),
                    "draft a new email"),
        ApiFunction("send_email", (s("id"),), "send a drafted email"),
        ApiFunction("read_email", (s("id", False),), "read an email (latest by default)"),
        ApiFunction("reply_email", (s("id"), s("body", False)), "reply to an email"),
        ApiFunction("delete_email", (s("id"),), "delete an email"),
    ]
    cal_fns = [
        ApiFunction("add_event", (s("title"), ParamSpec("date", "date", required=False),
                                  ParamSpec("time", "time", required=False)),
                    "add a calendar event"),
        ApiFunction("remove_event", (s("id"),), "remove an event"),
        ApiFunction("update_event", (s("id"), s("title", False),
                                     ParamSpec("date", "date", required=False),
                                     ParamSpec("time", "time", required=False)),
                    "update an event"),
        ApiFunction("view_event", (ParamSpec("date", "date", required=False),),
                    "view calendar events"),
    ]
    invalid_fns = [ApiFunction(INVALID_FUNCTION, (), "no matching API route")]

    return Registry(modules=(
        ApiModule("calculator", tuple(calc_fns), "arithmetic and math helpers"),
        ApiModule("weather", tuple(weather_fns), "weather and air quality lookups"),
        ApiModule("notes", tuple(notes_fns), "personal notes"),
        ApiModule("notification", tuple(notif_fns), "user notifications"),
        ApiModule("email", tuple(email_fns), "email drafting and delivery"),
        ApiModule("calendar", tuple(cal_fns), "calendar events"),
        ApiModule(INVALID_MODULE, tuple(invalid_fns), "reserved: invalid routes"),
    ))
