"""Synthetic labeled query generation: batch prompting, templates, review."""
from __future__ import annotations

import datetime as dt
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import grammar
from .classify import Backend
from .hierarchy import Label, Registry, validate_label

BATCH_SIZE_DEFAULT = 100
GENERATION_TEMPERATURE = 0.9
MAX_TOPUPS = 3

GENERATION_SYSTEM = (
    "You generate synthetic natural-language user queries for testing an "
    "API classifier. Vary phrasing and contexts for each query. Never mention "
    "the API module or function name verbatim in a query. Respond with a JSON "
    "array of distinct query strings and nothing else."
)


class GenerationDegraded(Exception):
    """Batch could not reach the requested size; partial results attached."""

    def __init__(self, message: str, partial: list["DatasetRecord"]):
        super().__init__(message)
        self.partial = partial


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationRule:
    target: Label
    samples_requested: int = BATCH_SIZE_DEFAULT
    style_directives: tuple[str, ...] = ()
    forbidden_substrings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.samples_requested < 1:
            raise ValueError("samples_requested must be >= 1")


@dataclass
class DatasetRecord:
    query: str
    label: Label
    source: str = "llm"
    batch_id: str = ""
    review: str = "unreviewed"
    rejection_reason: Optional[str] = None

    def to_dict(self) -> dict:
        doc = {
            "query": self.query,
            "label": self.label.as_pair(),
            "source": self.source,
            "batch_id": self.batch_id,
            "review": self.review,
        }
        if self.rejection_reason:
            doc["rejection_reason"] = self.rejection_reason
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetRecord":
        return cls(query=doc["query"], label=Label(*doc["label"]),
                   source=doc.get("source", "llm"),
                   batch_id=doc.get("batch_id", ""),
                   review=doc.get("review", "unreviewed"),
                   rejection_reason=doc.get("rejection_reason"))


@dataclass
class Dataset:
    records: list[DatasetRecord]
    registry_version: int = 1
    created_at: str = ""

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.records:
            out[r.label.module] = out.get(r.label.module, 0) + 1
        return out

    def accepted(self) -> list[DatasetRecord]:
        return [r for r in self.records if r.review == "accepted"]


def _dedup_key(query: str) -> str:
    return re.sub(r"\s+", " ", query.strip().lower())


def _build_generation_prompt(rule: GenerationRule, count: int,
                             avoid: Iterable[str]) -> str:
    lines = [
        f"Target: {rule.target.module}.{rule.target.function}",
        f"Count: {count}",
        "Write natural user requests that should be classified to this target.",
    ]
    lines.extend(rule.style_directives)
    if rule.forbidden_substrings:
        lines.append("Never use these substrings: "
                     + ", ".join(rule.forbidden_substrings))
    avoid = list(avoid)
    if avoid:
        lines.append("Do not repeat any of these existing queries:")
        lines.extend(f"- {q}" for q in avoid[-50:])
    return "\n".join(lines)


def _parse_query_array(raw: str) -> list[str]:
    decoder = json.JSONDecoder()
    idx = raw.find("[")
    while idx != -1:
        try:
            arr, _ = decoder.raw_decode(raw, idx)
        except json.JSONDecodeError:
            idx = raw.find("[", idx + 1)
            continue
        if isinstance(arr, list):
            return [q for q in arr if isinstance(q, str)]
        idx = raw.find("[", idx + 1)
    return []


def generate_batch(rule: GenerationRule, backend: Backend,
                   batch_size: int = BATCH_SIZE_DEFAULT,
                   batch_id: str = "") -> list[DatasetRecord]:
    """One batch-prompted generation call plus up to MAX_TOPUPS shortfall calls.

    Returns exactly batch_size unique records or raises GenerationDegraded
    carrying the survivors.
    """
    if not 1 <= batch_size <= 200:
        raise ValueError("batch_size must be in [1, 200]")
    survivors: list[str] = []
    seen: set[str] = set()

    def absorb(queries: list[str]) -> None:
        for q in queries:
            q = q.strip()
            if not q:
                continue
            key = _dedup_key(q)
            if key in seen:
                continue
            if any(bad.lower() in q.lower() for bad in rule.forbidden_substrings):
                continue
            seen.add(key)
            survivors.append(q)
            if len(survivors) >= batch_size:
                return

    prompt = _build_generation_prompt(rule, batch_size, [])
    raw = backend.complete(GENERATION_SYSTEM, prompt,
                           temperature=GENERATION_TEMPERATURE, max_tokens=4096)
    absorb(_parse_query_array(raw))
    topups = 0
    while len(survivors) < batch_size and topups < MAX_TOPUPS:
        shortfall = batch_size - len(survivors)
        prompt = _build_generation_prompt(rule, shortfall, survivors)
        raw = backend.complete(GENERATION_SYSTEM, prompt,
                               temperature=GENERATION_TEMPERATURE, max_tokens=4096)
        absorb(_parse_query_array(raw))
        topups += 1

    records = [DatasetRecord(query=q, label=rule.target, source="llm",
                             batch_id=batch_id or f"{rule.target.module}.{rule.target.function}")
               for q in survivors[:batch_size]]
    if len(records) < batch_size:
        raise GenerationDegraded(
            f"only {len(records)}/{batch_size} unique queries after "
            f"{topups} top-up call(s)", records)
    return records


class TemplateBackend(Backend):
    """Grammar-driven generation backend for hermetic batch-prompting tests."""

    def __init__(self, seed: int = 0):
        from .classify import BackendSpec
        super().__init__(BackendSpec(id="template", kind="mock_rules"))
        self._rng = random.Random(seed)

    def complete(self, system_text: str, user_text: str, *,
                 temperature: float, max_tokens: int) -> str:
        target = re.search(r"Target: (\w+)\.(\w+)", user_text)
        count = re.search(r"Count: (\d+)", user_text)
        if not target or not count:
            return "[]"
        module, function = target.group(1), target.group(2)
        queries = [grammar.generate_query(module, function, self._rng)
                   for _ in range(int(count.group(1)))]
        return json.dumps(queries)


def template_generate(rule: GenerationRule, seed: int,
                      batch_id: str = "") -> list[DatasetRecord]:
    """Deterministic grammar-backed stand-in for LLM generation."""
    target = rule.target
    if not grammar.covers(target.module, target.function):
        raise grammar.GrammarError(
            f"grammar does not cover {target.module}.{target.function}")
    rng = random.Random(f"{seed}:{target.module}.{target.function}")
    seen: set[str] = set()
    queries: list[str] = []
    attempts = 0
    limit = rule.samples_requested * 200
    while len(queries) < rule.samples_requested and attempts < limit:
        attempts += 1
        q = grammar.generate_query(target.module, target.function, rng)
        key = _dedup_key(q)
        if key in seen:
            continue
        if any(bad.lower() in q.lower() for bad in rule.forbidden_substrings):
            continue
        seen.add(key)
        queries.append(q)
    if len(queries) < rule.samples_requested:
        raise GenerationDegraded(
            f"template grammar exhausted at {len(queries)}/{rule.samples_requested} "
            f"for {target.module}.{target.function}",
            [DatasetRecord(query=q, label=target, source="template",
                           batch_id=batch_id) for q in queries])
    return [DatasetRecord(query=q, label=target, source="template",
                          batch_id=batch_id or f"tpl-{seed}") for q in queries]


def assemble_dataset(batches: Iterable[list[DatasetRecord]],
                     registry: Registry) -> Dataset:
    """Merge batches with global first-wins dedup and label validation."""
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    for batch in batches:
        for rec in batch:
            if validate_label(rec.label, registry) is None:
                raise AssemblyError(
                    f"label {rec.label.module}.{rec.label.function} does not "
                    f"resolve for query {rec.query!r}")
            key = _dedup_key(rec.query)
            if key in seen:
                continue
            seen.add(key)
            records.append(rec)
    return Dataset(records=records, registry_version=registry.version,
                   created_at=dt.datetime.now(dt.timezone.utc).isoformat())


def default_plan(registry: Registry) -> list[GenerationRule]:
    """Per-function allocation mirroring the default dataset breakdown."""
    module_totals = {"calculator": 250, "weather": 200, "notes": 200,
                     "notification": 200, "email": 200, "calendar": 200,
                     "routes_not_exist": 50}
    rules: list[GenerationRule] = []
    for module in registry.modules:
        total = module_totals.get(module.name)
        if total is None:
            continue
        n_fns = len(module.functions)
        base, extra = divmod(total, n_fns)
        for i, fn in enumerate(module.functions):
            n = base + (1 if i < extra else 0)
            rules.append(GenerationRule(target=Label(module.name, fn.name),
                                        samples_requested=n))
    return rules


def load_plan(path: str | Path) -> list[GenerationRule]:
    doc = json.loads(Path(path).read_text())
    return [GenerationRule(target=Label(e["module"], e["function"]),
                           samples_requested=int(e.get("samples", BATCH_SIZE_DEFAULT)),
                           style_directives=tuple(e.get("style_directives", ())),
                           forbidden_substrings=tuple(e.get("forbidden_substrings", ())))
            for e in doc]


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    docs = [r.to_dict() for r in dataset.records]
    keys = {_dedup_key(r.query) for r in dataset.records}
    if len(keys) != len(dataset.records):
        raise AssemblyError("dataset violates query uniqueness")
    Path(path).write_text(json.dumps(docs, indent=1) + "\n")


def load_dataset(path: str | Path, registry: Optional[Registry] = None) -> Dataset:
    docs = json.loads(Path(path).read_text())
    records = [DatasetRecord.from_dict(d) for d in docs]
    if registry is not None:
        for rec in records:
            if validate_label(rec.label, registry) is None:
                raise AssemblyError(
                    f"stored label {rec.label.as_pair()} does not resolve")
    version = registry.version if registry is not None else 1
    return Dataset(records=records, registry_version=version)


@dataclass
class ReviewStats:
    accepted: int = 0
    rejected: int = 0

    @property
    def acceptance_rate(self) -> Optional[float]:
        total = self.accepted + self.rejected
        return self.accepted / total if total else None


def review_session(dataset: Dataset,
                   decisions: Iterable[dict]) -> tuple[Dataset, ReviewStats]:
    """Apply accept/reject decisions; each record decided at most once."""
    stats = ReviewStats()
    decided: set[int] = set()
    for d in decisions:
        idx = d["index"]
        if idx in decided:
            raise ValueError(f"record {idx} decided twice in one session")
        if not 0 <= idx < len(dataset.records):
            raise IndexError(f"record index {idx} out of range")
        decided.add(idx)
        rec = dataset.records[idx]
        if d["decision"] == "accept":
            rec.review = "accepted"
            rec.rejection_reason = None
            stats.accepted += 1
        elif d["decision"] == "reject":
            rec.review = "rejected"
            rec.rejection_reason = d.get("reason")
            stats.rejected += 1
        else:
            raise ValueError(f"unknown decision {d['decision']!r}")
    return dataset, stats
