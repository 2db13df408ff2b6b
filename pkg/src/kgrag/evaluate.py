"""Batch evaluation: datasets, Hits@1 scoring, and the EvalReport."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .classifier import AdaptConfig, ClassifierModel, fast_adapt
from .errors import ConfigError, DatasetError
from .graph import KnowledgeGraph
from .labeling import LabelingError, compute_min_hop
from .llm import LlmClient, LlmResponse, contains_alias
from .pipeline import PipelineConfig, QueryResult, QueryTrace, run_query
from .rankers import build_ranker

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetRecord:
    """One evaluation or training instance; entities arrive pre-linked."""

    id: str
    question: str
    question_entities: tuple[str, ...]
    answers: tuple[str, ...] = ()
    hop: int | None = None


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Read line-delimited JSON records with id/question/entities/answers."""
    records: list[DatasetRecord] = []
    seen_ids: set[str] = set()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}:{number}: invalid JSON: {exc}") from exc
                try:
                    # Collapse internal whitespace: questions must stay
                    # single-line for lossless prompt round-trips.
                    record = DatasetRecord(
                        id=str(raw["id"]),
                        question=" ".join(str(raw["question"]).split()),
                        question_entities=tuple(raw.get("question_entities", ())),
                        answers=tuple(raw.get("answers", ())),
                        hop=raw.get("hop"),
                    )
                except KeyError as exc:
                    raise DatasetError(f"{path}:{number}: missing field {exc}") from exc
                if not record.question:
                    raise DatasetError(f"{path}:{number}: empty question")
                if record.id in seen_ids:
                    raise DatasetError(f"{path}:{number}: duplicate id {record.id!r}")
                seen_ids.add(record.id)
                records.append(record)
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    if not records:
        raise DatasetError(f"dataset {path} is empty")
    return records


def dump_dataset(records: Sequence[DatasetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            row: dict[str, Any] = {
                "id": r.id,
                "question": r.question,
                "question_entities": list(r.question_entities),
                "answers": list(r.answers),
            }
            if r.hop is not None:
                row["hop"] = r.hop
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def hits_at_1(response: LlmResponse | str | None, gold: Sequence[str]) -> int:
    """1 iff any gold alias occurs in the reply's leading answer span."""
    if not gold:
        raise ValueError("gold answers must be nonempty")
    if response is None:
        return 0
    if isinstance(response, LlmResponse):
        span = response.extracted_answers[0] if response.extracted_answers else ""
    else:
        span = response
    return 1 if any(contains_alias(span, alias) for alias in gold) else 0


@dataclass
class EvalReport:
    """Aggregated metrics for one evaluation run.

    ``wall_clock_s`` is kept out of the canonical dump so that two runs
    with the same seed and config serialize byte-identically.
    """

    total: int = 0
    hits: int = 0
    recall_hits: int = 0
    per_hop: dict[str, dict[str, int]] = field(default_factory=dict)
    truncations: int = 0
    routed_simple: int = 0
    routed_complex: int = 0
    llm_errors: int = 0
    empty_seed: int = 0
    adapt_calls: int = 0
    retrieval_llm_calls: int = 0
    wall_clock_s: float = 0.0

    @property
    def hits_at_1(self) -> float:
        return self.hits / self.total if self.total else 0.0

    @property
    def recall_at_u(self) -> float:
        return self.recall_hits / self.total if self.total else 0.0

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "total": self.total,
            "hits": self.hits,
            "hits_at_1": round(self.hits_at_1, 6),
            "recall_hits": self.recall_hits,
            "recall_at_u": round(self.recall_at_u, 6),
            "per_hop": {k: dict(v) for k, v in sorted(self.per_hop.items())},
            "truncations": self.truncations,
            "routed_simple": self.routed_simple,
            "routed_complex": self.routed_complex,
            "llm_errors": self.llm_errors,
            "empty_seed": self.empty_seed,
            "adapt_calls": self.adapt_calls,
            "retrieval_llm_calls": self.retrieval_llm_calls,
        }
        if include_timing:
            out["wall_clock_s"] = round(self.wall_clock_s, 3)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def render_table(self) -> str:
        lines = [
            f"{'queries':<24}{self.total}",
            f"{'hits@1':<24}{self.hits_at_1:.4f}",
            f"{'recall@u':<24}{self.recall_at_u:.4f}",
            f"{'routed simple':<24}{self.routed_simple}",
            f"{'routed complex':<24}{self.routed_complex}",
            f"{'truncated retrievals':<24}{self.truncations}",
            f"{'empty-seed records':<24}{self.empty_seed}",
            f"{'llm errors':<24}{self.llm_errors}",
            f"{'fast-adapt calls':<24}{self.adapt_calls}",
            f"{'retrieval llm calls':<24}{self.retrieval_llm_calls}",
            f"{'wall clock (s)':<24}{self.wall_clock_s:.2f}",
            "per-hop hits/count:",
        ]
        for bucket, cell in sorted(self.per_hop.items()):
            lines.append(f"  hop {bucket:<20}{cell['hits']}/{cell['count']}")
        return "\n".join(lines)


def _hop_bucket(
    g: KnowledgeGraph, record: DatasetRecord, cap: int
) -> str:
    if record.hop is not None:
        return str(record.hop) if record.hop <= cap else "unknown"
    try:
        hop = compute_min_hop(g, record.question_entities, record.answers, max_depth=cap)
    except LabelingError:
        return "unknown"
    return str(hop) if hop is not None else "unknown"


def evaluate(
    g: KnowledgeGraph,
    model: ClassifierModel | None,
    cfg: PipelineConfig,
    records: Sequence[DatasetRecord],
    llm_client: LlmClient,
    adapt_config: AdaptConfig | None = None,
) -> tuple[EvalReport, list[QueryTrace]]:
    """Run the pipeline over a dataset and aggregate metrics.

    With feedback enabled the first ceil(ratio * N) records run serially,
    each issuing exactly one fast_adapt call (a no-op when the LLM
    declined to echo a path); later records run against the final adapted
    model, optionally on a worker pool. Per-query failures are recorded,
    never raised.
    """
    for r in records:
        if not r.answers:
            raise DatasetError(f"record {r.id!r} has no gold answers")
    if cfg.feedback and model is None:
        raise ConfigError("feedback adaptation requires a classifier model")
    edge_ranker = build_ranker(cfg.edge_ranker, cfg.ranker_endpoint, cfg.ranker_timeout)
    path_ranker = build_ranker(cfg.path_ranker, cfg.ranker_endpoint, cfg.ranker_timeout)

    started = time.perf_counter()
    n = len(records)
    window = math.ceil(cfg.ratio * n) if cfg.feedback else 0
    report = EvalReport(total=n)
    results: list[QueryResult | None] = [None] * n

    current_model = model
    for i in range(window):
        result = run_query(
            g, current_model, cfg, records[i], llm_client,
            edge_ranker=edge_ranker, path_ranker=path_ranker, want_feedback=True,
        )
        results[i] = result
        feedback = (
            [(records[i].question, result.feedback_label)]
            if result.feedback_label is not None
            else []
        )
        current_model = fast_adapt(current_model, feedback, adapt_config)
        report.adapt_calls += 1

    def _run(idx: int) -> QueryResult:
        return run_query(
            g, current_model, cfg, records[idx], llm_client,
            edge_ranker=edge_ranker, path_ranker=path_ranker, want_feedback=False,
        )

    remaining = range(window, n)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for idx, result in zip(remaining, pool.map(_run, remaining)):
                results[idx] = result
    else:
        for idx in remaining:
            results[idx] = _run(idx)

    cap = cfg.k_complex
    traces: list[QueryTrace] = []
    for record, result in zip(records, results):
        assert result is not None
        trace = result.trace
        trace.hop_bucket = _hop_bucket(g, record, cap)
        hit = hits_at_1(result.answer, record.answers)
        report.hits += hit
        report.recall_hits += 1 if trace.recall_hit else 0
        cell = report.per_hop.setdefault(trace.hop_bucket, {"count": 0, "hits": 0})
        cell["count"] += 1
        cell["hits"] += hit
        report.truncations += 1 if trace.truncated else 0
        if trace.route == "simple":
            report.routed_simple += 1
        elif trace.route == "complex":
            report.routed_complex += 1
        if trace.error and trace.error.startswith("generation"):
            report.llm_errors += 1
        if trace.error and trace.error.startswith("empty-seed"):
            report.empty_seed += 1
        report.retrieval_llm_calls += trace.retrieval_llm_calls
        traces.append(trace)

    report.wall_clock_s = time.perf_counter() - started
    return report, traces


def write_traces(traces: Sequence[QueryTrace], path: str | Path) -> None:
    """One JSON object per line, keys sorted for reproducible logs."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
