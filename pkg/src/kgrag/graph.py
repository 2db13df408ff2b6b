"""In-memory triple store with adjacency indexes and k-hop subgraph extraction.

The graph is immutable after construction and safe to share across worker
threads; all operations here are read-only.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import (
    EmptyGraphError,
    EmptySeedError,
    TripleParseError,
    UnknownEntityError,
)

logger = logging.getLogger(__name__)

COMMENT_PREFIX = "#"


@dataclass(frozen=True, order=True)
class Triple:
    """One directed, labeled edge (subject --relation--> object)."""

    subject: str
    relation: str
    object: str


@dataclass(frozen=True)
class KnowledgeGraph:
    """Deduplicated triple set with sorted out/in adjacency indexes.

    ``out_index[e]`` lists ``(relation, object)`` pairs for edges leaving
    ``e``; ``in_index[e]`` lists ``(relation, subject)`` pairs for edges
    arriving at ``e``. Both are sorted so every traversal downstream is
    reproducible. Treat all fields as read-only.
    """

    entities: frozenset[str]
    relations: frozenset[str]
    triples: frozenset[Triple]
    out_index: dict[str, tuple[tuple[str, str], ...]]
    in_index: dict[str, tuple[tuple[str, str], ...]]

    @classmethod
    def from_triples(cls, triples: Iterable[Triple]) -> "KnowledgeGraph":
        unique = frozenset(triples)
        entities: set[str] = set()
        relations: set[str] = set()
        out: dict[str, list[tuple[str, str]]] = {}
        inc: dict[str, list[tuple[str, str]]] = {}
        for t in unique:
            entities.add(t.subject)
            entities.add(t.object)
            relations.add(t.relation)
            out.setdefault(t.subject, []).append((t.relation, t.object))
            inc.setdefault(t.object, []).append((t.relation, t.subject))
        for e in entities:
            out.setdefault(e, [])
            inc.setdefault(e, [])
        return cls(
            entities=frozenset(entities),
            relations=frozenset(relations),
            triples=unique,
            out_index={e: tuple(sorted(v)) for e, v in out.items()},
            in_index={e: tuple(sorted(v)) for e, v in inc.items()},
        )

    def stats(self) -> dict[str, int]:
        return {
            "entities": len(self.entities),
            "relations": len(self.relations),
            "triples": len(self.triples),
        }

    def __contains__(self, entity: str) -> bool:
        return entity in self.entities


@dataclass(frozen=True)
class Subgraph:
    """A node/edge subset of a graph grown from seed entities.

    ``edges`` holds only triples whose endpoints are both in ``nodes`` and
    is kept sorted; ``order`` records the hop bound the subgraph was grown
    with.
    """

    nodes: frozenset[str]
    edges: tuple[Triple, ...]
    seeds: tuple[str, ...]
    order: int

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def _parse_line(line: str, number: int) -> Triple | None:
    stripped = line.strip()
    if not stripped or stripped.startswith(COMMENT_PREFIX):
        return None
    fields = line.rstrip("\n").rstrip("\r").split("\t")
    if len(fields) != 3:
        raise TripleParseError(
            f"expected 3 tab-separated fields, got {len(fields)}", number
        )
    subject, relation, obj = (f.strip() for f in fields)
    if not subject or not relation or not obj:
        raise TripleParseError("empty field after trimming", number)
    return Triple(subject, relation, obj)


def iter_triples(stream: IO[bytes] | IO[str]) -> Iterator[Triple]:
    """Parse triples from a one-per-line, tab-separated stream."""
    for number, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise TripleParseError(f"invalid UTF-8: {exc}", number) from exc
        else:
            line = raw
        triple = _parse_line(line, number)
        if triple is not None:
            yield triple


def load_triples(source: str | Path | IO[bytes] | IO[str]) -> KnowledgeGraph:
    """Load and index a knowledge graph from a triple file or stream.

    Duplicate lines are stored once. Lines starting with ``#`` and blank
    lines are skipped. Raises TripleParseError on malformed lines and
    EmptyGraphError when no triples remain.
    """
    if isinstance(source, (str, Path)):
        with io.open(source, "rb") as fh:
            triples = list(iter_triples(fh))
    else:
        triples = list(iter_triples(source))
    if not triples:
        raise EmptyGraphError("triple source contains no triples")
    g = KnowledgeGraph.from_triples(triples)
    logger.info(
        "loaded graph: %d entities, %d relations, %d triples",
        len(g.entities),
        len(g.relations),
        len(g.triples),
    )
    return g


def dump_triples(g: KnowledgeGraph, path: str | Path) -> int:
    """Write the graph back out as a sorted tab-separated triple file."""
    triples = sorted(g.triples)
    with io.open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(f"{t.subject}\t{t.relation}\t{t.object}\n")
    return len(triples)


def neighbors(
    g: KnowledgeGraph, entity: str, direction: str = "both"
) -> list[tuple[str, str, str]]:
    """List ``(relation, neighbor, tag)`` adjacent to ``entity``.

    ``direction`` is one of ``out``, ``in``, ``both``; tags record which
    side each edge came from. Output is sorted by (relation, neighbor,
    tag) so callers see a stable order.
    """
    if entity not in g.entities:
        raise UnknownEntityError(f"unknown entity: {entity!r}")
    if direction not in ("out", "in", "both"):
        raise ValueError(f"direction must be out/in/both, got {direction!r}")
    result: list[tuple[str, str, str]] = []
    if direction in ("out", "both"):
        result.extend((r, o, "out") for r, o in g.out_index[entity])
    if direction in ("in", "both"):
        result.extend((r, s, "in") for r, s in g.in_index[entity])
    result.sort()
    return result


def resolve_seeds(g: KnowledgeGraph, seeds: Iterable[str]) -> list[str]:
    """Drop seed entities absent from the graph, warning about each."""
    kept = []
    for s in seeds:
        if s in g.entities:
            kept.append(s)
        else:
            logger.warning("seed entity %r not in graph; dropped", s)
    return sorted(set(kept))


def khop_subgraph(g: KnowledgeGraph, seeds: Iterable[str], k: int) -> Subgraph:
    """Extract the union of k-hop neighborhoods around the seed entities.

    Frontier expansion is direction-agnostic (out- and in-edges alike);
    the edge set is the graph's restriction to the collected nodes. With
    ``k == 0`` only the seeds themselves are returned, without edges.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    kept = resolve_seeds(g, seeds)
    if not kept:
        raise EmptySeedError("no seed entity present in the graph")

    ball: set[str] = set(kept)
    frontier: set[str] = set(kept)
    for _ in range(k):
        nxt: set[str] = set()
        for v in frontier:
            for _, o in g.out_index[v]:
                if o not in ball:
                    nxt.add(o)
            for _, s in g.in_index[v]:
                if s not in ball:
                    nxt.add(s)
        if not nxt:
            break
        ball.update(nxt)
        frontier = nxt

    edges: list[Triple] = []
    if k > 0:
        for v in ball:
            for r, o in g.out_index[v]:
                if o in ball:
                    edges.append(Triple(v, r, o))
    edges.sort()
    return Subgraph(
        nodes=frozenset(ball),
        edges=tuple(edges),
        seeds=tuple(kept),
        order=k,
    )


def subgraph_from_triples(
    triples: Iterable[Triple], seeds: Iterable[str], order: int = 0
) -> Subgraph:
    """Build a Subgraph directly from triples (mostly for tests and tools)."""
    edges = tuple(sorted(set(triples)))
    nodes = set(seeds)
    for t in edges:
        nodes.add(t.subject)
        nodes.add(t.object)
    return Subgraph(
        nodes=frozenset(nodes),
        edges=edges,
        seeds=tuple(sorted(set(seeds))),
        order=order,
    )
