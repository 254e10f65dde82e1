"""Deterministic keyword/regex classifier: the offline backend and test oracle."""
from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .classify import Backend, BackendSpec, ClassificationResult
from .hierarchy import INVALID_LABEL, Label, Registry, validate_label

NUM = r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
LOC = r"[A-Za-z][A-Za-z .'-]*"


@dataclass(frozen=True)
class Rule:
    pattern: str
    module: str
    function: str
    # param name -> regex group (name or index); None means "use named groups"
    param_groups: Optional[dict[str, int | str]] = None

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern, re.IGNORECASE)


class Ruleset:
    def __init__(self, rules: list[Rule]):
        self.rules = rules
        self._compiled = [(r.compiled(), r) for r in rules]

    def match(self, query: str) -> tuple[Optional[Rule], dict[str, str]]:
        for rx, rule in self._compiled:
            m = rx.search(query)
            if not m:
                continue
            params: dict[str, str] = {}
            if rule.param_groups:
                for name, group in rule.param_groups.items():
                    value = m.group(group)
                    if value is not None:
                        params[name] = _clean_value(value)
            else:
                for name, value in m.groupdict().items():
                    if value is not None:
                        params[name] = _clean_value(value)
            return rule, params
        return None, {}


def _clean_value(value: str) -> str:
    return value.strip().strip("?.!,;:").strip()


def load_ruleset(path: str | Path) -> Ruleset:
    doc = json.loads(Path(path).read_text())
    rules = [
        Rule(pattern=e["pattern"], module=e["module"], function=e["function"],
             param_groups=e.get("param_groups"))
        for e in doc
    ]
    return Ruleset(rules)


def mock_classify(query: str, ruleset: Ruleset, registry: Registry) -> ClassificationResult:
    """First matching rule wins; no match falls through to the invalid label."""
    start = time.monotonic()
    rule, params = ruleset.match(query)
    if rule is None:
        label = INVALID_LABEL
        params = {}
    else:
        resolved = validate_label(Label(rule.module, rule.function), registry)
        label = resolved if resolved is not None else INVALID_LABEL
        fn = registry.function(label)
        if fn is not None:
            params = {k: v for k, v in params.items() if fn.param(k) is not None}
        else:
            params = {}
    return ClassificationResult(
        label=label, params=params, backend_id="mock",
        raw_output=json.dumps({"module": label.module, "function": label.function,
                               "params": params}),
        latency_ms=(time.monotonic() - start) * 1000.0)


class MockRulesBackend(Backend):
    def __init__(self, spec: Optional[BackendSpec] = None,
                 ruleset: Optional[Ruleset] = None):
        super().__init__(spec or BackendSpec(id="mock", kind="mock_rules"))
        self.ruleset = ruleset or default_ruleset()

    def classify_query(self, query: str, registry: Registry) -> ClassificationResult:
        self._enter()
        try:
            result = mock_classify(query, self.ruleset, registry)
            result.backend_id = self.id
            return result
        finally:
            self._exit()


def _r(pattern: str, module: str, function: str) -> Rule:
    return Rule(pattern=pattern, module=module, function=function)


# Ordered: more specific phrasings first so e.g. "weekly forecast" never falls
# through to the generic weather rule, and nouns keep delete/update rules apart.
_DEFAULT_RULES: list[Rule] = [
    # calculator
    _r(rf"factorial of (?P<n>\d+)", "calculator", "factorial"),
    _r(rf"\b(?P<n>\d+)\s*(?:factorial\b|!)", "calculator", "factorial"),
    _r(rf"log base (?P<base>{NUM}) of (?P<x>{NUM})", "calculator", "log"),
    _r(rf"log(?:arithm)? of (?P<x>{NUM})(?:\s*(?:base|to base|in base|to the base)\s*(?P<base>{NUM}))?",
       "calculator", "log"),
    _r(rf"natural log(?:arithm)? of (?P<x>{NUM})", "calculator", "log"),
    _r(rf"(?:raise )?(?P<a>{NUM}) (?:raised )?to the (?:power(?: of)?|exponent) (?P<b>{NUM})",
       "calculator", "power"),
    _r(rf"(?P<a>{NUM})\s*(?:\^|\*\*)\s*(?P<b>{NUM})", "calculator", "power"),
    _r(rf"(?P<b>{NUM})(?:th|st|nd|rd)? power of (?P<a>{NUM})", "calculator", "power"),
    _r(rf"\bsine of (?P<x>{NUM})", "calculator", "sin"),
    _r(rf"\bsin\s*\(?\s*(?P<x>{NUM})", "calculator", "sin"),
    _r(rf"\bcosine of (?P<x>{NUM})", "calculator", "cos"),
    _r(rf"\bcos\s*\(?\s*(?P<x>{NUM})", "calculator", "cos"),
    _r(rf"\btangent of (?P<x>{NUM})", "calculator", "tan"),
    _r(rf"\btan\s*\(?\s*(?P<x>{NUM})", "calculator", "tan"),
    _r(rf"\badd (?P<a>{NUM}) (?:and|to|with|plus) (?P<b>{NUM})", "calculator", "add"),
    _r(rf"(?P<a>{NUM})\s*(?:plus|\+)\s*(?P<b>{NUM})", "calculator", "add"),
    _r(rf"sum of (?P<a>{NUM}) and (?P<b>{NUM})", "calculator", "add"),
    _r(rf"subtract (?P<b>{NUM}) from (?P<a>{NUM})", "calculator", "subtract"),
    _r(rf"(?P<a>{NUM})\s*minus\s*(?P<b>{NUM})", "calculator", "subtract"),
    _r(rf"difference between (?P<a>{NUM}) and (?P<b>{NUM})", "calculator", "subtract"),
    _r(rf"multiply (?P<a>{NUM}) (?:by|and|with|times) (?P<b>{NUM})", "calculator", "multiply"),
    _r(rf"(?P<a>{NUM})\s*(?:times|\*|×)\s*(?P<b>{NUM})", "calculator", "multiply"),
    _r(rf"product of (?P<a>{NUM}) and (?P<b>{NUM})", "calculator", "multiply"),
    _r(rf"divide (?P<a>{NUM}) by (?P<b>{NUM})", "calculator", "divide"),
    _r(rf"(?P<a>{NUM})\s*(?:divided by|/|over)\s*(?P<b>{NUM})", "calculator", "divide"),
    _r(rf"quotient of (?P<a>{NUM}) and (?P<b>{NUM})", "calculator", "divide"),
    # weather: air quality and weekly forecast before the generic today rule
    _r(rf"(?:air (?:pollution|quality)(?: index)?|aqi)\b.*?\b(?:in|for|at) (?P<location>{LOC})",
       "weather", "get_air_pollution"),
    _r(rf"how (?:polluted|clean) is the air in (?P<location>{LOC})",
       "weather", "get_air_pollution"),
    _r(rf"(?:weekly|7[- ]day|seven[- ]day) (?:weather )?forecast (?:for|in) (?P<location>{LOC})",
       "weather", "get_weekly_forecast"),
    _r(rf"forecast for (?:the|this) (?:coming |next )?week (?:in|for) (?P<location>{LOC})",
       "weather", "get_weekly_forecast"),
    _r(rf"weather .*?(?:over|for) the (?:next|coming) (?:week|seven days) in (?P<location>{LOC})",
       "weather", "get_weekly_forecast"),
    _r(rf"weather (?:like )?(?:today|right now|currently|at the moment) in (?P<location>{LOC})",
       "weather", "get_today_weather"),
    _r(rf"(?:today'?s|current) weather (?:in|for) (?P<location>{LOC})",
       "weather", "get_today_weather"),
    _r(rf"what'?s the weather (?:like )?in (?P<location>{LOC})",
       "weather", "get_today_weather"),
    _r(rf"is it (?:raining|sunny|snowing|cold|hot|windy) (?:today )?in (?P<location>{LOC})",
       "weather", "get_today_weather"),
    # notes
    _r(r"\b(?:show|list|display|see|view|pull up) (?:me )?(?:all |of |my )*notes\b",
       "notes", "get_all_notes"),
    _r(r"what notes do i have", "notes", "get_all_notes"),
    _r(r"\b(?:update|edit|change|modify|revise|rewrite) (?:my |the )?note\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?(?:\s+to say\s+(?P<content>.+))?",
       "notes", "update_note"),
    _r(r"make note (?P<id>\w+) say (?P<content>.+)", "notes", "update_note"),
    _r(r"\b(?:create|make|write|jot down|take|add) (?:a |a new |another )?note\b(?:\s+(?:that says|saying|about|to)\s+(?P<content>.+))?",
       "notes", "create"),
    _r(r"note down (?P<content>.+)", "notes", "create"),
    _r(r"\b(?:delete|remove|erase|trash|discard) (?:my |the )?notes?\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "notes", "delete_note"),
    _r(r"get rid of (?:my |the )?note (?P<id>\w+)", "notes", "delete_note"),
    # notification
    _r(r"mark (?:the |my )?notification\b(?:\s*(?:number|#)?\s*(?P<id>\w+))? as read",
       "notification", "mark_as_read"),
    _r(r"flag notification (?P<id>\w+) as (?:read|seen)", "notification", "mark_as_read"),
    _r(r"\b(?:send|push|fire off|dispatch) (?:a |an |out a )?notification to (?P<recipient>\w+)(?:\s+(?:saying|that says|about)\s+(?P<message>.+))?",
       "notification", "send_notification"),
    _r(r"notify (?P<recipient>\w+)(?:\s+(?:that|about|saying)\s+(?P<message>.+))?",
       "notification", "send_notification"),
    _r(r"\b(?:view|show|see|check|list|display) (?:me )?(?:all |my |the )*notifications?\b",
       "notification", "view_notification"),
    _r(r"\b(?:any|do i have any) (?:new |unread )?notifications", "notification",
       "view_notification"),
    _r(r"\b(?:delete|remove|clear|dismiss) (?:the |my |all )*notifications?\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "notification", "delete_notification"),
    _r(r"get rid of (?:the )?notification (?P<id>\w+)", "notification",
       "delete_notification"),
    # email
    _r(r"\b(?:compose|draft|write|start) (?:an? |a new )?e?mail to (?P<to>\w+)(?:\s+about\s+(?P<subject>.+))?",
       "email", "compose_email"),
    _r(r"start (?:an? |a new )?draft to (?P<to>\w+)", "email", "compose_email"),
    _r(r"reply to (?:the |my )?(?:latest |last )?email\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "email", "reply_email"),
    _r(r"respond to (?:the )?email\b(?:\s*(?P<id>\w+))?", "email", "reply_email"),
    _r(r"send a reply to email (?P<id>\w+)", "email", "reply_email"),
    _r(r"\b(?:read|open|show) (?:me )?(?:my |the )?(?:latest |last |newest )?email\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "email", "read_email"),
    _r(r"check my (?:inbox|mail)\b", "email", "read_email"),
    _r(r"send (?:the |my |out |off )?(?:draft(?:ed)? )?email\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "email", "send_email"),
    _r(r"\b(?:ship|fire) off (?:the )?email\b(?:\s*(?P<id>\w+))?", "email", "send_email"),
    _r(r"\b(?:delete|remove|trash|discard) (?:the |my |this )?email\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "email", "delete_email"),
    _r(r"get rid of (?:the )?email (?P<id>\w+)", "email", "delete_email"),
    # calendar
    _r(r"\b(?:view|show|see|check|what(?:'s| is) on) (?:me )?(?:my )?(?:calendar|schedule|agenda)\b",
       "calendar", "view_event"),
    _r(r"\b(?:view|show|list) (?:my |the )?(?:event|meeting|appointment)s\b",
       "calendar", "view_event"),
    _r(r"what (?:event|meeting)s? do i have", "calendar", "view_event"),
    _r(r"\b(?:add|create|schedule|book|put) (?:an? |a new )?(?:event|meeting|appointment)\b"
       r"(?:\s+(?:called|titled|named)\s+(?P<title>.+?))?"
       r"(?:\s+on\s+(?P<date>\d{4}-\d{2}-\d{2}|today|tomorrow))?"
       r"(?:\s+at\s+(?P<time>\d{1,2}:\d{2}))?\s*$",
       "calendar", "add_event"),
    _r(r"put (?:an? |a new )?(?:event|meeting) (?:on|in) (?:my )?calendar",
       "calendar", "add_event"),
    _r(r"\b(?:update|edit|move|reschedule|change|shift) (?:the |my )?(?:event|meeting|appointment)\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "calendar", "update_event"),
    _r(r"push (?:the |my )?(?:event|meeting) (?P<id>\w+)\s*(?:back|forward|to)",
       "calendar", "update_event"),
    _r(r"\b(?:remove|delete|cancel|drop) (?:the |my |an? )?(?:event|meeting|appointment)\b(?:\s*(?:number|#)?\s*(?P<id>\w+))?",
       "calendar", "remove_event"),
    _r(r"take (?:the )?(?:event|meeting) (?P<id>\w+) off (?:my )?calendar",
       "calendar", "remove_event"),
    # explicit invalid-route triggers (anything else also falls through)
    _r(r"\b(?:joke|riddle|story|poem)\b", "routes_not_exist", "return_invalid_error"),
    _r(r"\bplay (?:some |a |me )?\w*\s*(?:music|song|jazz|playlist)\b",
       "routes_not_exist", "return_invalid_error"),
]


def default_ruleset() -> Ruleset:
    return Ruleset(list(_DEFAULT_RULES))
