"""Hop-count labeling: minimum reasoning-path length and the simple/complex split."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable

from .errors import LabelingError
from .graph import KnowledgeGraph

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 2


class Complexity(IntEnum):
    SIMPLE = 0
    COMPLEX = 1


@dataclass(frozen=True)
class ComplexityLabel:
    value: Complexity
    min_hop: int | None = None

    @property
    def is_complex(self) -> bool:
        return self.value is Complexity.COMPLEX


def compute_min_hop(
    g: KnowledgeGraph,
    query_entities: Iterable[str],
    answer_entities: Iterable[str],
    max_depth: int | None = None,
) -> int | None:
    """Minimum hop count from any query entity to any answer entity.

    Runs a direction-agnostic multi-source BFS (the same traversal rule
    the retrieval pipeline uses). Entities absent from the graph are
    dropped; returns None when no pair is connected, or when the search
    exceeds ``max_depth`` if one is given.
    """
    sources = {e for e in query_entities if e in g.entities}
    targets = {e for e in answer_entities if e in g.entities}
    if not sources or not targets:
        raise LabelingError("query or answer entities all missing from the graph")
    if sources & targets:
        return 0

    seen = set(sources)
    queue: deque[tuple[str, int]] = deque((s, 0) for s in sorted(sources))
    while queue:
        node, dist = queue.popleft()
        if max_depth is not None and dist >= max_depth:
            continue
        for _, o in g.out_index[node]:
            if o not in seen:
                if o in targets:
                    return dist + 1
                seen.add(o)
                queue.append((o, dist + 1))
        for _, s in g.in_index[node]:
            if s not in seen:
                if s in targets:
                    return dist + 1
                seen.add(s)
                queue.append((s, dist + 1))
    return None


def label_query(min_hop: int, delta: int = DEFAULT_DELTA) -> ComplexityLabel:
    """Label a query Simple when min_hop <= delta, Complex otherwise."""
    if min_hop < 0:
        raise ValueError(f"min_hop must be nonnegative, got {min_hop}")
    value = Complexity.SIMPLE if min_hop <= delta else Complexity.COMPLEX
    return ComplexityLabel(value=value, min_hop=min_hop)


def label_dataset(
    g: KnowledgeGraph,
    pairs: Iterable[tuple[str, Iterable[str], Iterable[str]]],
    delta: int = DEFAULT_DELTA,
) -> list[tuple[str, ComplexityLabel]]:
    """Label (question, query_entities, answer_entities) triples against a graph.

    Unreachable or unresolvable instances are skipped with a warning: an
    absent path gives no hop evidence to train on.
    """
    labeled: list[tuple[str, ComplexityLabel]] = []
    skipped = 0
    for question, q_ents, a_ents in pairs:
        try:
            hop = compute_min_hop(g, q_ents, a_ents)
        except LabelingError:
            hop = None
        if hop is None:
            skipped += 1
            continue
        labeled.append((question, label_query(hop, delta)))
    if skipped:
        logger.warning("skipped %d unreachable/unresolvable training queries", skipped)
    return labeled
