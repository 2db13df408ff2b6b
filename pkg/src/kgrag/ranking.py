"""Path postprocessing: score retrieved paths against the query, keep top-u."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .paths import ReasoningPath
from .rankers import LexicalRanker, Ranker

_DEFAULT_LEXICAL = LexicalRanker()

DEFAULT_TOP_U = 32


@dataclass(frozen=True)
class RankedPaths:
    """Top-u paths in descending score order."""

    entries: tuple[tuple[ReasoningPath, float], ...]
    u: int

    @property
    def paths(self) -> list[ReasoningPath]:
        return [p for p, _ in self.entries]

    @property
    def texts(self) -> list[str]:
        return [p.render() for p, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_paths(
    query: str,
    paths: Sequence[ReasoningPath],
    ranker: Ranker | None = None,
    u: int = DEFAULT_TOP_U,
) -> RankedPaths:
    """Score each path's rendered text against the query and keep the top-u.

    The scored text is the same canonical rendering used in prompts, so
    ranking and prompting never drift apart. Ties order by path text
    ascending; an empty input yields an empty (still valid) result.
    """
    if u <= 0:
        raise ValueError(f"u must be positive, got {u}")
    if not paths:
        return RankedPaths(entries=(), u=u)
    texts = [p.render() for p in paths]
    scores = ranker.score(query, texts) if ranker is not None else _DEFAULT_LEXICAL.score(query, texts)
    order = sorted(range(len(paths)), key=lambda i: (-scores[i], texts[i]))
    entries = tuple((paths[i], float(scores[i])) for i in order[:u])
    return RankedPaths(entries=entries, u=u)
