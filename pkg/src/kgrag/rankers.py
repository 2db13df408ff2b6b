"""Query/text similarity scorers used for edge and path ranking.

The default ranker is a deterministic lexical scorer (BM25-style term
frequency saturation, no corpus statistics). A remote scorer client is
available for plugging in an embedding service; it falls back to the
lexical scorer when the endpoint misbehaves.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from typing import Protocol, Sequence

import requests

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric token runs; punctuation splits tokens."""
    return _TOKEN_RE.findall(text.casefold())


class Ranker(Protocol):
    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        """Similarity of each candidate text to the query; higher is closer."""
        ...


class LexicalRanker:
    """Term-frequency saturation scorer.

    score(q, c) = sum over distinct query tokens t of
    tf_c(t) * (k1 + 1) / (tf_c(t) + k1). Disjoint vocabularies score 0;
    repeated candidate terms saturate instead of growing linearly.
    """

    def __init__(self, k1: float = 1.5):
        self.k1 = k1

    def score_tokens(self, query_tokens: Sequence[str], cand_tokens: Sequence[str]) -> float:
        tf = Counter(cand_tokens)
        k1 = self.k1
        total = 0.0
        for t in set(query_tokens):
            f = tf.get(t, 0)
            if f:
                total += f * (k1 + 1.0) / (f + k1)
        return total

    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        q_tokens = tokenize(query)
        return [self.score_tokens(q_tokens, tokenize(c)) for c in candidates]


class RemoteRanker:
    """HTTP scorer: POST {query, candidates} -> {scores}.

    Any transport failure, timeout, or malformed reply falls back to the
    lexical ranker with a warning so a flaky endpoint degrades instead of
    aborting a run. Instances hold no mutable state and may be shared
    across worker threads.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        fallback: Ranker | None = None,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.fallback = fallback if fallback is not None else LexicalRanker()
        self._session = session

    def _post(self, payload: dict):
        session = self._session if self._session is not None else requests
        return session.post(self.endpoint, json=payload, timeout=self.timeout)

    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        if not candidates:
            return []
        try:
            reply = self._post({"query": query, "candidates": list(candidates)})
            reply.raise_for_status()
            scores = reply.json()["scores"]
            if not isinstance(scores, list) or len(scores) != len(candidates):
                raise ValueError("scores length mismatch")
            return [float(s) for s in scores]
        except Exception as exc:  # noqa: BLE001 - any endpoint failure degrades
            logger.warning(
                "remote ranker %s failed (%s); falling back to lexical scoring",
                self.endpoint,
                exc,
            )
            return self.fallback.score(query, candidates)


def build_ranker(
    kind: str,
    endpoint: str | None = None,
    timeout: float = 10.0,
) -> Ranker:
    """Construct a ranker by config name ('lexical' or 'remote')."""
    if kind == "lexical":
        return LexicalRanker()
    if kind == "remote":
        if not endpoint:
            raise ValueError("remote ranker requires an endpoint")
        return RemoteRanker(endpoint, timeout=timeout)
    raise ValueError(f"unknown ranker kind: {kind!r}")
