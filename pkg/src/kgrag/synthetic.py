"""Synthetic KGQA benchmark generation.

Builds a deterministic knowledge graph with planted gold reasoning chains
of known hop count, a balanced query set over hops 1-4, and a text corpus
whose phrasing correlates with hop depth for classifier training. A dense
"hub core" reachable only through short gateway chains makes wide-radius
retrieval noisy around a fraction of the shallow queries, the regime the
routed pipeline is supposed to win.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .evaluate import DatasetRecord
from .graph import KnowledgeGraph, Triple

logger = logging.getLogger(__name__)

_WORDS = (
    "film director actor producer genre studio album artist label track "
    "author novel publisher editor series capital country region river "
    "mountain border currency language anthem president minister party "
    "senate court mayor city district university faculty campus degree "
    "founder company product market sector owner stadium league team coach "
    "captain season trophy spouse parent child sibling ancestor mentor "
    "student religion temple festival cuisine dish ingredient vineyard "
    "museum painting sculptor architect bridge harbor airport station line "
    "doctor hospital disease symptom remedy species habitat climate soil "
    "crop breed orchestra composer opera conductor ballet theater novel2"
).split()

_QUESTION_OPENERS = ("what is", "who is", "which one is", "name")


def _relation_vocab(rng: np.random.Generator, count: int) -> list[str]:
    pairs: set[tuple[str, str]] = set()
    vocab: list[str] = []
    while len(vocab) < count:
        a, b = rng.choice(len(_WORDS), size=2, replace=False)
        key = tuple(sorted((int(a), int(b))))
        if key in pairs:
            continue
        pairs.add(key)
        vocab.append(f"{_WORDS[int(a)]}.{_WORDS[int(b)]}")
    return vocab


def _phrase(relation: str) -> str:
    return relation.replace(".", " ")


def render_question(opener: str, relations: list[str], seed_entity: str) -> str:
    nested = " of the ".join(_phrase(r) for r in reversed(relations))
    return f"{opener} the {nested} of {seed_entity}?"


@dataclass
class Benchmark:
    graph: KnowledgeGraph
    records: list[DatasetRecord]
    corpus: list[tuple[str, int]] = field(default_factory=list)


def generate_classifier_corpus(
    seed: int = 0,
    size: int = 2000,
    hops: tuple[int, ...] = (1, 2, 3, 4),
    relation_count: int = 150,
) -> list[tuple[str, int]]:
    """(question, hop) pairs whose phrasing correlates with hop depth."""
    rng = np.random.default_rng(seed)
    vocab = _relation_vocab(rng, relation_count)
    corpus: list[tuple[str, int]] = []
    for i in range(size):
        hop = int(hops[i % len(hops)])
        relations = [vocab[int(j)] for j in rng.choice(len(vocab), size=hop, replace=False)]
        opener = _QUESTION_OPENERS[int(rng.integers(len(_QUESTION_OPENERS)))]
        entity = f"e{int(rng.integers(100_000)):05d}"
        corpus.append((render_question(opener, relations, entity), hop))
    return corpus


def generate_benchmark(
    seed: int = 0,
    queries_per_hop: int = 250,
    hops: tuple[int, ...] = (1, 2, 3, 4),
    base_entities: int = 40_000,
    base_triples: int = 90_000,
    relation_count: int = 150,
    hub_count: int = 80,
    dilution: float = 0.5,
    corpus_size: int = 2000,
) -> Benchmark:
    """Build the benchmark graph, query records, and classifier corpus.

    Every query gets a planted chain of fresh entities hanging off a base
    entity, so its minimum hop count is exact by construction. A
    ``dilution`` fraction of the 1- and 2-hop queries additionally gets a
    3-hop gateway into the fully connected hub core: wide (k=4) subgraphs
    around those seeds flood the edge ranker with same-relation noise
    while narrow (k=2) subgraphs stay clean.
    """
    # Entity identifiers tokenize to a single run (no shared prefix token),
    # matching real KG ids; otherwise every edge would lexically match
    # every question.
    rng = np.random.default_rng(seed)
    vocab = _relation_vocab(rng, relation_count)
    entities = [f"e{i:05d}" for i in range(base_entities)]

    triples: set[Triple] = set()
    while len(triples) < base_triples:
        need = base_triples - len(triples)
        src = rng.integers(base_entities, size=need + need // 8 + 8)
        dst = rng.integers(base_entities, size=len(src))
        rel = rng.integers(relation_count, size=len(src))
        for s, o, r in zip(src, dst, rel):
            if s != o:
                triples.add(Triple(entities[int(s)], vocab[int(r)], entities[int(o)]))
            if len(triples) >= base_triples:
                break

    hubs = [f"hub{i:03d}" for i in range(hub_count)]
    for i in range(hub_count):
        for j in range(hub_count):
            if i != j:
                r = vocab[int(rng.integers(relation_count))]
                triples.add(Triple(hubs[i], r, hubs[j]))

    records: list[DatasetRecord] = []
    used_seeds: set[str] = set()
    qid = 0
    for hop in hops:
        diluted_cut = int(round(dilution * queries_per_hop)) if hop <= 2 else 0
        for j in range(queries_per_hop):
            while True:
                s = entities[int(rng.integers(base_entities))]
                if s not in used_seeds:
                    used_seeds.add(s)
                    break
            relations = [
                vocab[int(r)] for r in rng.choice(relation_count, size=hop, replace=False)
            ]
            chain = [s] + [f"x{qid:04d}n{step}" for step in range(1, hop + 1)]
            for step, r in enumerate(relations):
                triples.add(Triple(chain[step], r, chain[step + 1]))
            # Decoy branches keep retrieval non-trivial without shortcuts.
            for step in range(hop):
                r = vocab[int(rng.integers(relation_count))]
                triples.add(Triple(chain[step], r, f"d{qid:04d}s{step}"))
            if j < diluted_cut:
                g1, g2 = f"gw{qid:04d}a", f"gw{qid:04d}b"
                hub = hubs[int(rng.integers(hub_count))]
                for a, b in ((s, g1), (g1, g2), (g2, hub)):
                    r = vocab[int(rng.integers(relation_count))]
                    triples.add(Triple(a, r, b))
            opener = _QUESTION_OPENERS[int(rng.integers(len(_QUESTION_OPENERS)))]
            records.append(
                DatasetRecord(
                    id=f"q{qid:04d}",
                    question=render_question(opener, relations, s),
                    question_entities=(s,),
                    answers=(chain[-1],),
                    hop=hop,
                )
            )
            qid += 1

    corpus = generate_classifier_corpus(
        seed=seed + 1, size=corpus_size, hops=hops, relation_count=relation_count
    )
    graph = KnowledgeGraph.from_triples(triples)
    logger.info(
        "generated benchmark: %d triples, %d records, %d corpus questions",
        len(graph.triples),
        len(records),
        len(corpus),
    )
    return Benchmark(graph=graph, records=records, corpus=corpus)
