"""Prompt assembly, chat-completion clients, and feedback parsing.

The prompt bodies are fixed zero-shot templates; paths are rendered one
per line in rank order because earlier positions carry more weight during
generation. A deterministic mock client stands in for a live endpoint so
the whole pipeline runs offline.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import requests

from .errors import GenerationError, ProtocolError
from .labeling import ComplexityLabel, label_query
from .paths import SEPARATOR
from .ranking import RankedPaths

logger = logging.getLogger(__name__)

ANSWER_TEMPLATE_BODY = (
    "You are an expert reasoner with a deep understanding of logical connections "
    "and relationships. Your task is to analyze the given reasoning paths and "
    "provide clear and accurate answers to the questions based on these paths. "
    "Based on the reasoning paths, please answer the given question.\n"
    "\n"
    "Reasoning Paths: {paths}\n"
    "\n"
    "Question: {question}"
)

FEEDBACK_TEMPLATE_BODY = (
    "You are an expert reasoner with a deep understanding of logical connections "
    "and relationships. Your task is to analyze the given reasoning paths and "
    "provide accurate reasoning path to the questions based on these paths. "
    "Based on the reasoning paths, please extract the correct reasoning path. "
    "If NO correct reasoning path, please just reply NO.\n"
    "\n"
    "Reasoning Paths: {paths}\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Correct reasoning path:"
)

EMPTY_PATHS_PLACEHOLDER = "None"
NO_PATH_REPLY = "NO"

_PATHS_SLOT = "{paths}"
_QUESTION_SLOT = "{question}"


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    body: str

    def __post_init__(self):
        for slot in (_PATHS_SLOT, _QUESTION_SLOT):
            if self.body.count(slot) != 1:
                raise ValueError(f"template must contain {slot} exactly once")


ANSWER_TEMPLATE = PromptTemplate("answer", ANSWER_TEMPLATE_BODY)
FEEDBACK_TEMPLATE = PromptTemplate("feedback", FEEDBACK_TEMPLATE_BODY)

_TEMPLATES = {"answer": ANSWER_TEMPLATE, "feedback": FEEDBACK_TEMPLATE}


def render_prompt(
    question: str,
    ranked: RankedPaths | Sequence[str],
    kind: str = "answer",
) -> str:
    """Fill the template of the given kind with the question and path texts.

    Paths appear one per line, best-ranked first; an empty set renders the
    literal ``None``. Substitution is plain string replacement, so path
    texts survive byte-for-byte.
    """
    template = _TEMPLATES[kind]
    texts = ranked.texts if isinstance(ranked, RankedPaths) else list(ranked)
    block = "\n".join(texts) if texts else EMPTY_PATHS_PLACEHOLDER
    return template.body.replace(_PATHS_SLOT, block, 1).replace(_QUESTION_SLOT, question, 1)


def parse_prompt(prompt: str) -> tuple[str, list[str]]:
    """Recover (question, path texts) from a rendered prompt of either kind."""
    marker = "Reasoning Paths: "
    start = prompt.index(marker) + len(marker)
    end = prompt.index("\n\nQuestion: ", start)
    block = prompt[start:end]
    question = prompt[end + len("\n\nQuestion: ") :]
    if question.endswith("\n\nCorrect reasoning path:"):
        question = question[: -len("\n\nCorrect reasoning path:")]
    texts = [] if block == EMPTY_PATHS_PLACEHOLDER else block.split("\n")
    return question, texts


def is_feedback_prompt(prompt: str) -> bool:
    return prompt.endswith("Correct reasoning path:")


@dataclass(frozen=True)
class LlmResponse:
    raw_text: str
    extracted_answers: tuple[str, ...]
    feedback_path: str | None = None


def _extract_answers(raw: str) -> tuple[str, ...]:
    for line in raw.splitlines():
        line = line.strip()
        if line:
            return (line,)
    return ()


@dataclass(frozen=True)
class GenerationParams:
    model: str = "gpt-4o-mini"
    temperature: float = 0.01
    max_tokens: int = 256
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.2


class LlmClient(Protocol):
    calls: int

    def complete(self, prompt: str) -> str:
        """Return the raw completion text for a prompt."""
        ...


class ChatClient:
    """Chat-completion HTTP client with bounded retries.

    Sends ``{model, messages, temperature, max_tokens}`` and reads the
    first choice's message content. The API key comes from an environment
    variable and is never logged. Transient transport failures (connection
    errors, timeouts, 5xx) are retried with a short backoff; anything else
    fails immediately.
    """

    def __init__(
        self,
        endpoint: str,
        params: GenerationParams | None = None,
        api_key_env: str = "KGRAG_API_KEY",
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.params = params if params is not None else GenerationParams()
        self.api_key_env = api_key_env
        self._session = session
        self._lock = threading.Lock()
        self.calls = 0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        payload = {
            "model": self.params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.params.temperature,
            "max_tokens": self.params.max_tokens,
        }
        session = self._session if self._session is not None else requests
        last_exc: Exception | None = None
        for attempt in range(self.params.retries):
            try:
                reply = session.post(
                    self.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.params.timeout,
                )
                if reply.status_code >= 500:
                    raise requests.RequestException(f"server error {reply.status_code}")
                if reply.status_code != 200:
                    raise ProtocolError(f"endpoint returned status {reply.status_code}")
                try:
                    return str(reply.json()["choices"][0]["message"]["content"])
                except (KeyError, IndexError, TypeError, ValueError) as exc:
                    raise ProtocolError(f"malformed completion payload: {exc}") from exc
            except ProtocolError:
                raise
            except requests.RequestException as exc:
                last_exc = exc
                if attempt + 1 < self.params.retries:
                    time.sleep(self.params.backoff * (2**attempt))
        raise GenerationError(
            f"endpoint unreachable after {self.params.retries} attempts: {last_exc}"
        )


_NORM_RE = re.compile(r"[^0-9a-z]+")


def normalize_answer(text: str) -> str:
    """Casefold and strip punctuation down to space-separated tokens."""
    return " ".join(_NORM_RE.sub(" ", text.casefold()).split())


def contains_alias(text: str, alias: str) -> bool:
    """True when the normalized alias occurs as a token run inside the text."""
    hay = normalize_answer(text)
    needle = normalize_answer(alias)
    if not needle:
        return False
    return f" {needle} " in f" {hay} "


class MockLlmClient:
    """Deterministic oracle stand-in for offline runs.

    Answers correctly exactly when some prompted path terminates at a gold
    answer of the question: the answer prompt gets that path's terminal
    entity, the feedback prompt gets the path text itself (or ``NO``).
    """

    def __init__(self, gold: Mapping[str, Sequence[str]]):
        self._gold = {q: tuple(a) for q, a in gold.items()}
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_records(cls, records) -> "MockLlmClient":
        return cls({r.question: tuple(r.answers) for r in records})

    def _first_gold_path(self, question: str, texts: Sequence[str]) -> str | None:
        aliases = self._gold.get(question, ())
        for text in texts:
            terminal = text.split(SEPARATOR)[-1]
            if any(contains_alias(terminal, a) for a in aliases):
                return text
        return None

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        question, texts = parse_prompt(prompt)
        hit = self._first_gold_path(question, texts)
        if is_feedback_prompt(prompt):
            return hit if hit is not None else NO_PATH_REPLY
        return hit.split(SEPARATOR)[-1] if hit is not None else "unknown"


def generate(client: LlmClient, prompt: str) -> LlmResponse:
    """Run one completion and package the reply.

    Raises GenerationError/ProtocolError on client failure; callers doing
    batch evaluation catch these per query.
    """
    raw = client.complete(prompt)
    feedback_path = raw.strip() if is_feedback_prompt(prompt) else None
    return LlmResponse(
        raw_text=raw,
        extracted_answers=_extract_answers(raw),
        feedback_path=feedback_path,
    )


def parse_feedback(response: LlmResponse, delta: int) -> ComplexityLabel | None:
    """Derive a refined complexity label from an echoed reasoning path.

    Splits on the canonical separator; the hop count is the relation
    count. Returns None for a ``NO`` reply or anything unparseable.
    """
    text = response.feedback_path if response.feedback_path is not None else response.raw_text
    text = text.strip()
    if not text or text.upper() == NO_PATH_REPLY:
        return None
    parts = text.split(SEPARATOR)
    if len(parts) < 3 or len(parts) % 2 == 0 or any(not p.strip() for p in parts):
        return None
    hops = (len(parts) - 1) // 2
    return label_query(hops, delta)
