"""Subgraph pruning: PPR entity ranking and query-conditioned edge ranking.

Given the k-hop subgraph around the query entities, this stage keeps the
top-n entities by Personalized PageRank mass and then the top-m edges by
similarity to the query text, producing the focused subgraph the path
retrieval step runs on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError, EmptySeedError
from .graph import Subgraph, Triple
from .rankers import LexicalRanker, Ranker

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreprocessConfig:
    """Pruning hyperparameters (defaults follow the standard setup)."""

    k_simple: int = 2
    k_complex: int = 4
    n: int = 2000
    m: int = 64
    alpha: float = 0.8
    max_iter: int = 1000
    epsilon: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        for name in ("k_simple", "k_complex", "n", "m", "max_iter"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")


@dataclass(frozen=True)
class EntityScore:
    entity: str
    score: float


@dataclass(frozen=True)
class EdgeScore:
    triple: Triple
    score: float


def ppr_scores(
    sg: Subgraph,
    seeds,
    cfg: PreprocessConfig | None = None,
) -> list[EntityScore]:
    """Personalized PageRank over the subgraph, restarting at the seeds.

    Power iteration on the direction-agnostic transition matrix; restart
    mass is split uniformly over the seeds and dangling-node mass is
    teleported back to them, so the scores always sum to 1. Iteration
    stops when the L1 change drops below ``cfg.epsilon`` or after
    ``cfg.max_iter`` rounds. Results are sorted by descending score, then
    entity identifier.
    """
    cfg = cfg if cfg is not None else PreprocessConfig()
    nodes = sorted(sg.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    seed_ids = sorted({index[s] for s in seeds if s in index})
    if not seed_ids:
        raise EmptySeedError("no seed entity present in the subgraph")

    n = len(nodes)
    restart = np.zeros(n)
    restart[seed_ids] = 1.0 / len(seed_ids)
    if n == 1:
        return [EntityScore(nodes[0], 1.0)]

    # Each triple contributes one forward and one inverse transition.
    rows = np.empty(2 * len(sg.edges), dtype=np.int64)
    cols = np.empty(2 * len(sg.edges), dtype=np.int64)
    for j, t in enumerate(sg.edges):
        s, o = index[t.subject], index[t.object]
        rows[2 * j], cols[2 * j] = o, s
        rows[2 * j + 1], cols[2 * j + 1] = s, o

    degree = np.bincount(cols, minlength=n).astype(np.float64)
    dangling = degree == 0.0
    inv_degree = np.where(dangling, 0.0, 1.0 / np.maximum(degree, 1.0))
    matrix = sparse.csr_matrix(
        (inv_degree[cols], (rows, cols)), shape=(n, n), dtype=np.float64
    )

    alpha = cfg.alpha
    rank = restart.copy()
    for _ in range(cfg.max_iter):
        dangling_mass = rank[dangling].sum() if dangling.any() else 0.0
        nxt = (1.0 - alpha) * restart + alpha * (matrix @ rank + dangling_mass * restart)
        delta = np.abs(nxt - rank).sum()
        rank = nxt
        if delta < cfg.epsilon:
            break

    order = sorted(range(n), key=lambda i: (-rank[i], nodes[i]))
    return [EntityScore(nodes[i], float(rank[i])) for i in order]


def prune_entities(
    sg: Subgraph,
    scores: list[EntityScore],
    n: int,
    seeds,
) -> Subgraph:
    """Keep the top-n entities by score (seeds always survive).

    Ties break by entity identifier ascending. Edges are kept only when
    both endpoints are retained, so the result is a subgraph of ``sg``.
    """
    if n <= 0:
        raise ConfigError(f"n must be positive, got {n}")
    scored = {es.entity for es in scores}
    missing = sg.nodes - scored
    if missing:
        raise ValueError(f"scores do not cover {len(missing)} subgraph nodes")

    ranked = sorted(scores, key=lambda es: (-es.score, es.entity))
    kept = {es.entity for es in ranked[:n]}
    kept.update(s for s in seeds if s in sg.nodes)
    edges = tuple(t for t in sg.edges if t.subject in kept and t.object in kept)
    return Subgraph(
        nodes=frozenset(kept),
        edges=edges,
        seeds=sg.seeds,
        order=sg.order,
    )


def edge_text(t: Triple) -> str:
    """Canonical edge rendering for similarity scoring."""
    return f"{t.subject} {t.relation} {t.object}"


_DEFAULT_LEXICAL = LexicalRanker()


def lexical_edge_score(query: str, edge: Triple) -> float:
    """Score a single edge against the query with the default lexical ranker."""
    return _DEFAULT_LEXICAL.score(query, [edge_text(edge)])[0]


def rank_edges(
    query: str,
    sg: Subgraph,
    ranker: Ranker | None,
    m: int,
) -> Subgraph:
    """Keep the top-m edges by similarity to the query, plus their endpoints.

    Ties break by descending score then ascending (subject, relation,
    object). Seeds are retained in the node set even when none of their
    edges survive, so path retrieval still has its start points. A
    subgraph without edges yields an empty result with a warning.
    """
    if m <= 0:
        raise ConfigError(f"m must be positive, got {m}")
    ranker = ranker if ranker is not None else _DEFAULT_LEXICAL
    seed_nodes = {s for s in sg.seeds if s in sg.nodes}
    if not sg.edges:
        logger.warning("edge ranking on an edgeless subgraph; no paths can follow")
        return Subgraph(
            nodes=frozenset(seed_nodes),
            edges=(),
            seeds=sg.seeds,
            order=sg.order,
        )

    scores = ranker.score(query, [edge_text(t) for t in sg.edges])
    ranked = sorted(zip(sg.edges, scores), key=lambda p: (-p[1], p[0]))
    kept_edges = tuple(sorted(t for t, _ in ranked[:m]))
    nodes = set(seed_nodes)
    for t in kept_edges:
        nodes.add(t.subject)
        nodes.add(t.object)
    return Subgraph(
        nodes=frozenset(nodes),
        edges=kept_edges,
        seeds=sg.seeds,
        order=sg.order,
    )


def score_edges(query: str, sg: Subgraph, ranker: Ranker | None = None) -> list[EdgeScore]:
    """Score every edge of the subgraph against the query (descending)."""
    ranker = ranker if ranker is not None else _DEFAULT_LEXICAL
    scores = ranker.score(query, [edge_text(t) for t in sg.edges])
    pairs = sorted(zip(sg.edges, scores), key=lambda p: (-p[1], p[0]))
    return [EdgeScore(t, float(s)) for t, s in pairs]
