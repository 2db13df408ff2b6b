"""Reasoning-path retrieval over a pruned subgraph.

Simple queries enumerate every simple path from each seed with a BFS
queue; complex queries take one unit-weight shortest path per reachable
target via Dijkstra with a predecessor array. Traversal is
direction-agnostic but each step remembers whether it followed the stored
edge forward or inverse, so rendering stays faithful to the graph.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .graph import Subgraph

SEPARATOR = " → "
INVERSE_MARKER = "⁻¹"

FORWARD = "forward"
INVERSE = "inverse"


@dataclass(frozen=True)
class ReasoningPath:
    """Alternating entity/relation sequence with per-step direction tags.

    ``steps`` is (e0, r1, e1, ..., rl, el); ``directions`` has one tag per
    relation step.
    """

    steps: tuple[str, ...]
    directions: tuple[str, ...]

    def __post_init__(self):
        if len(self.steps) < 3 or len(self.steps) % 2 == 0:
            raise ValueError("steps must alternate entity/relation/entity")
        if len(self.directions) != self.hops:
            raise ValueError("one direction tag required per relation step")

    @property
    def hops(self) -> int:
        return (len(self.steps) - 1) // 2

    @property
    def start(self) -> str:
        return self.steps[0]

    @property
    def end(self) -> str:
        return self.steps[-1]

    @property
    def entities(self) -> tuple[str, ...]:
        return self.steps[0::2]

    def render(self) -> str:
        """Canonical text form: ``e0 -> r1 -> e1 -> ...`` with inverse markers."""
        parts = [self.steps[0]]
        for i, direction in enumerate(self.directions):
            relation = self.steps[2 * i + 1]
            if direction == INVERSE:
                relation += INVERSE_MARKER
            parts.append(relation)
            parts.append(self.steps[2 * i + 2])
        return SEPARATOR.join(parts)


@dataclass(frozen=True)
class PathLimits:
    """Explosion guard for all-paths enumeration."""

    max_hops: int | None = None
    max_paths: int = 10_000


@dataclass
class RetrievalResult:
    paths: list[ReasoningPath] = field(default_factory=list)
    truncated: bool = False


def _adjacency(sg: Subgraph) -> dict[str, list[tuple[str, str, str]]]:
    """Direction-agnostic adjacency: node -> sorted (relation, neighbor, tag)."""
    adj: dict[str, list[tuple[str, str, str]]] = {v: [] for v in sg.nodes}
    for t in sg.edges:
        adj[t.subject].append((t.relation, t.object, FORWARD))
        adj[t.object].append((t.relation, t.subject, INVERSE))
    for v in adj:
        adj[v].sort()
    return adj


def bfs_all_paths(
    sg: Subgraph,
    seeds: Iterable[str],
    limits: PathLimits | None = None,
) -> RetrievalResult:
    """Enumerate every simple path from each seed to every reachable node.

    Queue-of-partial-paths BFS: a path is extended only to neighbors not
    already on it, and every extension is emitted. Results from multiple
    seeds are unioned and deduplicated. Hitting ``max_paths`` truncates
    the enumeration and sets the flag instead of raising.
    """
    limits = limits if limits is not None else PathLimits()
    adj = _adjacency(sg)
    start_nodes = sorted({s for s in seeds if s in sg.nodes})

    result = RetrievalResult()
    seen: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    for start in start_nodes:
        queue: deque[tuple[str, tuple[str, ...], tuple[str, ...], frozenset[str]]] = deque()
        queue.append((start, (start,), (), frozenset((start,))))
        while queue:
            node, steps, tags, visited = queue.popleft()
            if limits.max_hops is not None and len(tags) >= limits.max_hops:
                continue
            for relation, nbr, tag in adj[node]:
                if nbr in visited:
                    continue
                new_steps = steps + (relation, nbr)
                new_tags = tags + (tag,)
                key = (new_steps, new_tags)
                if key not in seen:
                    seen.add(key)
                    result.paths.append(ReasoningPath(new_steps, new_tags))
                    if len(result.paths) >= limits.max_paths:
                        result.truncated = True
                        return result
                queue.append((nbr, new_steps, new_tags, visited | {nbr}))
    return result


def dijkstra_shortest_paths(sg: Subgraph, seeds: Iterable[str]) -> RetrievalResult:
    """One unit-weight shortest path from each seed to every reachable node.

    Min-heap Dijkstra relaxing ``d[u] + 1 < d[v]`` with a predecessor
    array; ties resolve to the lowest-identifier predecessor (and the
    lexicographically smallest relation among parallel edges), so output
    is deterministic. Unreachable nodes yield no path.
    """
    adj = _adjacency(sg)
    start_nodes = sorted({s for s in seeds if s in sg.nodes})

    result = RetrievalResult()
    for start in start_nodes:
        dist: dict[str, int] = {start: 0}
        pred: dict[str, tuple[str, str, str]] = {}
        heap: list[tuple[int, str]] = [(0, start)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, -1):
                continue
            for relation, v, tag in adj[u]:
                nd = d + 1
                if nd < dist.get(v, float("inf")):
                    dist[v] = nd
                    pred[v] = (u, relation, tag)
                    heapq.heappush(heap, (nd, v))

        for target in sorted(dist, key=lambda v: (dist[v], v)):
            if target == start:
                continue
            steps: list[str] = [target]
            tags: list[str] = []
            node = target
            while node != start:
                prev, relation, tag = pred[node]
                steps.append(relation)
                steps.append(prev)
                tags.append(tag)
                node = prev
            steps.reverse()
            tags.reverse()
            result.paths.append(ReasoningPath(tuple(steps), tuple(tags)))
    return result
