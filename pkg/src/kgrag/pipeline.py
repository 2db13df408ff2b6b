"""End-to-end per-query orchestration.

A query is classified simple or complex, a k-hop subgraph is grown around
its entities (k depends on the route), pruned by PPR and edge ranking,
searched for reasoning paths (BFS all-paths on the simple route, Dijkstra
shortest paths on the complex one), reranked, and handed to the LLM. The
retrieval phase never calls the LLM; that is asserted per query in the
trace.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from .classifier import ClassifierModel, predict
from .errors import ConfigError, EmptySeedError, GenerationError, KgragError, ProtocolError
from .graph import KnowledgeGraph, khop_subgraph
from .labeling import Complexity, ComplexityLabel
from .llm import LlmClient, contains_alias, generate, parse_feedback, render_prompt
from .paths import PathLimits, bfs_all_paths, dijkstra_shortest_paths
from .pruning import PreprocessConfig, ppr_scores, prune_entities, rank_edges
from .rankers import Ranker, build_ranker
from .ranking import rank_paths

logger = logging.getLogger(__name__)

ROUTE_SIMPLE = "simple"
ROUTE_COMPLEX = "complex"


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the engine, with defaults from the standard setup."""

    delta: int = 2
    k_simple: int = 2
    k_complex: int = 4
    n: int = 2000
    m: int = 64
    u: int = 32
    alpha: float = 0.8
    max_iter: int = 1000
    epsilon: float = 1e-10
    ratio: float = 0.25
    feedback: bool = False
    force_route: str | None = None
    max_paths: int = 10_000
    max_hops: int | None = None
    edge_ranker: str = "lexical"
    path_ranker: str = "lexical"
    ranker_endpoint: str | None = None
    ranker_timeout: float = 10.0
    llm_endpoint: str | None = None
    llm_model: str = "gpt-4o-mini"
    temperature: float = 0.01
    max_tokens: int = 256
    retries: int = 3
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError(f"ratio must be in [0, 1], got {self.ratio}")
        if self.force_route not in (None, ROUTE_SIMPLE, ROUTE_COMPLEX):
            raise ConfigError(f"force_route must be simple/complex, got {self.force_route!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("u", "max_paths", "retries", "delta"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        self.preprocess()  # validates the shared numeric bounds

    def preprocess(self) -> PreprocessConfig:
        return PreprocessConfig(
            k_simple=self.k_simple,
            k_complex=self.k_complex,
            n=self.n,
            m=self.m,
            alpha=self.alpha,
            max_iter=self.max_iter,
            epsilon=self.epsilon,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class QueryTrace:
    """Structured per-query record of every pipeline stage."""

    record_id: str
    route: str | None = None
    forced: bool = False
    classifier_prob: float | None = None
    k: int | None = None
    gk_nodes: int = 0
    gk_edges: int = 0
    gt_nodes: int = 0
    gt_edges: int = 0
    gh_nodes: int = 0
    gh_edges: int = 0
    path_count: int = 0
    truncated: bool = False
    ranked_count: int = 0
    retrieval_llm_calls: int = 0
    llm_calls: int = 0
    recall_hit: bool = False
    answer: str | None = None
    feedback_label: int | None = None
    hop_bucket: str | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class QueryResult:
    answer: str | None
    feedback_label: ComplexityLabel | None
    trace: QueryTrace


class _CountingClient:
    """Per-query call counter so traces stay exact under worker pools."""

    def __init__(self, inner: LlmClient):
        self.inner = inner
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        return self.inner.complete(prompt)


def _route_for(
    model: ClassifierModel | None, cfg: PipelineConfig, question: str, trace: QueryTrace
) -> str:
    if cfg.force_route is not None:
        trace.route, trace.forced = cfg.force_route, True
        return cfg.force_route
    if model is None:
        raise ConfigError("no classifier model and no forced route")
    label, prob = predict(model, question)
    route = ROUTE_COMPLEX if label.value is Complexity.COMPLEX else ROUTE_SIMPLE
    trace.route, trace.classifier_prob = route, round(float(prob), 6)
    return route


def run_query(
    g: KnowledgeGraph,
    model: ClassifierModel | None,
    cfg: PipelineConfig,
    record,
    llm_client: LlmClient,
    edge_ranker: Ranker | None = None,
    path_ranker: Ranker | None = None,
    want_feedback: bool | None = None,
) -> QueryResult:
    """Answer one dataset record, returning the answer, optional refined
    label, and a full trace.

    Stage failures are captured in the trace and yield a null answer; a
    batch caller never has to abort on a bad record.
    """
    if edge_ranker is None:
        edge_ranker = build_ranker(cfg.edge_ranker, cfg.ranker_endpoint, cfg.ranker_timeout)
    if path_ranker is None:
        path_ranker = build_ranker(cfg.path_ranker, cfg.ranker_endpoint, cfg.ranker_timeout)
    want_feedback = cfg.feedback if want_feedback is None else want_feedback

    client = _CountingClient(llm_client)
    trace = QueryTrace(record_id=record.id)
    try:
        route = _route_for(model, cfg, record.question, trace)
        k = cfg.k_simple if route == ROUTE_SIMPLE else cfg.k_complex
        trace.k = k

        gk = khop_subgraph(g, record.question_entities, k)
        trace.gk_nodes, trace.gk_edges = gk.node_count, gk.edge_count

        pcfg = cfg.preprocess()
        scores = ppr_scores(gk, gk.seeds, pcfg)
        gt = prune_entities(gk, scores, cfg.n, gk.seeds)
        trace.gt_nodes, trace.gt_edges = gt.node_count, gt.edge_count

        gh = rank_edges(record.question, gt, edge_ranker, cfg.m)
        trace.gh_nodes, trace.gh_edges = gh.node_count, gh.edge_count

        if route == ROUTE_SIMPLE:
            limits = PathLimits(
                max_hops=cfg.max_hops if cfg.max_hops is not None else k,
                max_paths=cfg.max_paths,
            )
            retrieved = bfs_all_paths(gh, gk.seeds, limits)
        else:
            retrieved = dijkstra_shortest_paths(gh, gk.seeds)
        trace.path_count = len(retrieved.paths)
        trace.truncated = retrieved.truncated

        ranked = rank_paths(record.question, retrieved.paths, path_ranker, cfg.u)
        trace.ranked_count = len(ranked)
        trace.retrieval_llm_calls = client.calls

        if record.answers:
            trace.recall_hit = any(
                contains_alias(p.end, a) for p in ranked.paths for a in record.answers
            )
    except EmptySeedError as exc:
        trace.error = f"empty-seed: {exc}"
        return QueryResult(answer=None, feedback_label=None, trace=trace)
    except KgragError as exc:
        trace.error = f"retrieval: {exc}"
        return QueryResult(answer=None, feedback_label=None, trace=trace)

    answer: str | None = None
    feedback_label: ComplexityLabel | None = None
    try:
        response = generate(client, render_prompt(record.question, ranked, "answer"))
        answer = response.extracted_answers[0] if response.extracted_answers else None
        trace.answer = answer
        if want_feedback:
            fb = generate(client, render_prompt(record.question, ranked, "feedback"))
            feedback_label = parse_feedback(fb, cfg.delta)
            trace.feedback_label = (
                int(feedback_label.value) if feedback_label is not None else None
            )
    except (GenerationError, ProtocolError) as exc:
        trace.error = f"generation: {exc}"
        logger.warning("LLM failure on record %s: %s", record.id, exc)

    trace.llm_calls = client.calls
    return QueryResult(answer=answer, feedback_label=feedback_label, trace=trace)
