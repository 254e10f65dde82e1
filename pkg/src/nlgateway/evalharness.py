"""Classifier evaluation: prediction runs, accuracy metrics, comparison reports."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .classify import (Backend, BackendPool, ClassificationUnavailable, classify)
from .datagen import Dataset, DatasetRecord
from .hierarchy import INVALID_LABEL, Label, Registry

OVERALL_FOOTNOTE = (
    "Note: 'Overall' is reported both sample-weighted (micro) and as the "
    "unweighted mean of per-module values (macro); published summaries mix "
    "the two conventions, so both are shown."
)


@dataclass
class PredictionRecord:
    query: str
    true_label: Label
    pred_label: Label
    params: dict = field(default_factory=dict)
    backend_id: str = ""
    latency_ms: float = 0.0
    error_flag: Optional[str] = None

    def to_dict(self) -> dict:
        doc = {
            "query": self.query,
            "true_label": self.true_label.as_pair(),
            "pred_label": self.pred_label.as_pair(),
            "backend_id": self.backend_id,
            "latency_ms": self.latency_ms,
        }
        if self.params:
            doc["params"] = self.params
        if self.error_flag:
            doc["error_flag"] = self.error_flag
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PredictionRecord":
        return cls(query=doc["query"], true_label=Label(*doc["true_label"]),
                   pred_label=Label(*doc["pred_label"]),
                   params=doc.get("params", {}),
                   backend_id=doc.get("backend_id", ""),
                   latency_ms=doc.get("latency_ms", 0.0),
                   error_flag=doc.get("error_flag"))


def save_predictions(preds: Iterable[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for p in preds:
            fh.write(json.dumps(p.to_dict()) + "\n")


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    records = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(PredictionRecord.from_dict(json.loads(line)))
    return records


def run_predictions(dataset: Dataset, backend: Backend, registry: Registry,
                    out_path: Optional[str | Path] = None,
                    workers: int = 4) -> list[PredictionRecord]:
    """Classify every accepted record once; resumable via the output file.

    Unreviewed records count as accepted when the dataset was never reviewed
    (all-unreviewed), so freshly generated datasets can be scored directly.
    """
    records = dataset.accepted()
    if not records and all(r.review == "unreviewed" for r in dataset.records):
        records = list(dataset.records)
    if not records:
        raise ValueError("dataset has no accepted records")

    done: dict[str, PredictionRecord] = {}
    if out_path and Path(out_path).exists():
        for p in load_predictions(out_path):
            done[p.query] = p

    def predict(rec: DatasetRecord) -> PredictionRecord:
        if rec.query in done:
            return done[rec.query]
        try:
            result = backend.classify_query(rec.query, registry)
            return PredictionRecord(
                query=rec.query, true_label=rec.label, pred_label=result.label,
                params=result.params, backend_id=result.backend_id,
                latency_ms=result.latency_ms, error_flag=result.diagnostic)
        except ClassificationUnavailable as exc:
            return PredictionRecord(
                query=rec.query, true_label=rec.label, pred_label=INVALID_LABEL,
                backend_id=backend.id, error_flag=f"backend_failure: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            preds = list(pool.map(predict, records))
    else:
        preds = [predict(r) for r in records]

    if out_path:
        save_predictions(preds, out_path)
    return preds


def mlc_acc(preds: list[PredictionRecord],
            module_filter: Optional[str] = None) -> Optional[float]:
    """Fraction of queries whose predicted module matches the true module."""
    scoped = [p for p in preds
              if module_filter is None or p.true_label.module == module_filter]
    if not scoped:
        return None
    correct = sum(1 for p in scoped if p.pred_label.module == p.true_label.module)
    return correct / len(scoped)


def flc_acc(preds: list[PredictionRecord],
            module_filter: Optional[str] = None) -> Optional[float]:
    """Among module-correct queries, the fraction with the function also correct."""
    scoped = [p for p in preds
              if module_filter is None or p.true_label.module == module_filter]
    module_correct = [p for p in scoped
                      if p.pred_label.module == p.true_label.module]
    if not module_correct:
        return None
    both = sum(1 for p in module_correct
               if p.pred_label.function == p.true_label.function)
    return both / len(module_correct)


@dataclass
class EvalReport:
    backend_id: str
    n_queries: int
    n_module_correct: int
    per_module_mlc: dict[str, Optional[float]]
    per_module_flc: dict[str, Optional[float]]
    overall_mlc_micro: float
    overall_mlc_macro: Optional[float]
    flc_acc_micro: Optional[float]
    flc_acc_macro: Optional[float]
    mean_latency_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "n_queries": self.n_queries,
            "n_module_correct": self.n_module_correct,
            "per_module_mlc": self.per_module_mlc,
            "per_module_flc": self.per_module_flc,
            "overall_mlc_micro": self.overall_mlc_micro,
            "overall_mlc_macro": self.overall_mlc_macro,
            "flc_acc_micro": self.flc_acc_micro,
            "flc_acc_macro": self.flc_acc_macro,
            "mean_latency_ms": self.mean_latency_ms,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(**doc)


def score_predictions(preds: list[PredictionRecord], registry: Registry,
                      backend_id: Optional[str] = None) -> EvalReport:
    modules = [m.name for m in registry.modules]
    per_mlc = {m: mlc_acc(preds, m) for m in modules}
    per_flc = {m: flc_acc(preds, m) for m in modules}
    present_mlc = [v for v in per_mlc.values() if v is not None]
    present_flc = [v for v in per_flc.values() if v is not None]
    n_module_correct = sum(1 for p in preds
                           if p.pred_label.module == p.true_label.module)
    return EvalReport(
        backend_id=backend_id or (preds[0].backend_id if preds else "unknown"),
        n_queries=len(preds),
        n_module_correct=n_module_correct,
        per_module_mlc=per_mlc,
        per_module_flc=per_flc,
        overall_mlc_micro=mlc_acc(preds),
        overall_mlc_macro=(sum(present_mlc) / len(present_mlc)
                           if present_mlc else None),
        flc_acc_micro=flc_acc(preds),
        flc_acc_macro=(sum(present_flc) / len(present_flc)
                       if present_flc else None),
        mean_latency_ms=(sum(p.latency_ms for p in preds) / len(preds)
                         if preds else 0.0),
    )


def build_report(prediction_files: list[str | Path],
                 registry: Registry) -> list[EvalReport]:
    reports = []
    for path in prediction_files:
        preds = load_predictions(path)
        if not preds:
            raise ValueError(f"no predictions in {path}")
        reports.append(score_predictions(preds, registry))
    return reports


def _fmt(value: Optional[float]) -> str:
    return f"{value:.3f}" if value is not None else "  n/a"


def render_table(reports: list[EvalReport], registry: Registry) -> str:
    """Fixed-width comparison table: rows = backends, columns = modules."""
    modules = [m.name for m in registry.modules]
    headers = (["Model"] + modules
               + ["Overall(micro)", "Overall(macro)", "FLC-Acc(micro)",
                  "FLC-Acc(macro)"])
    rows = []
    for r in reports:
        rows.append([r.backend_id]
                    + [_fmt(r.per_module_mlc.get(m)) for m in modules]
                    + [_fmt(r.overall_mlc_micro), _fmt(r.overall_mlc_macro),
                       _fmt(r.flc_acc_micro), _fmt(r.flc_acc_macro)])
    widths = [max(len(h), max((len(row[i]) for row in rows), default=0))
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    lines.append("")
    lines.append(OVERALL_FOOTNOTE)
    return "\n".join(lines)


def report_set_to_json(reports: list[EvalReport]) -> str:
    return json.dumps({"reports": [r.to_dict() for r in reports],
                       "footnote": OVERALL_FOOTNOTE}, indent=1)


def select_best(reports: list[EvalReport]) -> EvalReport:
    """Argmax by micro MLC; ties by FLC, then by lower mean latency."""
    if not reports:
        raise ValueError("need at least one report")
    return max(reports, key=lambda r: (
        r.overall_mlc_micro if r.overall_mlc_micro is not None else -1.0,
        r.flc_acc_micro if r.flc_acc_micro is not None else -1.0,
        -r.mean_latency_ms,
    ))


def pool_config_fragment(report: EvalReport) -> dict:
    return {"policy": "round_robin", "backends": [{"id": report.backend_id}]}
