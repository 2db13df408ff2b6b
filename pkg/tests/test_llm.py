import pytest
import requests

from kgrag.errors import GenerationError, ProtocolError
from kgrag.labeling import Complexity
from kgrag.llm import (
    ANSWER_TEMPLATE_BODY,
    FEEDBACK_TEMPLATE_BODY,
    ChatClient,
    GenerationParams,
    LlmResponse,
    MockLlmClient,
    PromptTemplate,
    contains_alias,
    generate,
    is_feedback_prompt,
    normalize_answer,
    parse_feedback,
    parse_prompt,
    render_prompt,
)
from kgrag.paths import ReasoningPath
from kgrag.rankers import LexicalRanker
from kgrag.ranking import rank_paths


def make_path(*rels, start="A"):
    steps = [start]
    for i, r in enumerate(rels):
        steps.extend([r, chr(ord("B") + i)])
    return ReasoningPath(tuple(steps), ("forward",) * len(rels))


def ranked(paths, query="q", u=32):
    return rank_paths(query, paths, LexicalRanker(), u=u)


def test_templates_have_exactly_one_slot_each():
    for body in (ANSWER_TEMPLATE_BODY, FEEDBACK_TEMPLATE_BODY):
        assert body.count("{paths}") == 1
        assert body.count("{question}") == 1


def test_template_validation():
    with pytest.raises(ValueError):
        PromptTemplate("broken", "no slots at all")


def test_feedback_template_contains_reply_no_instruction():
    assert "please just reply NO" in FEEDBACK_TEMPLATE_BODY


def test_render_empty_paths_uses_none_literal():
    prompt = render_prompt("what is this?", ranked([]))
    assert "Reasoning Paths: None" in prompt
    assert "Question: what is this?" in prompt


def test_render_orders_rank_one_first():
    relevant = make_path("film.director")
    other = make_path("river.border")
    prompt = render_prompt("film director", ranked([other, relevant], "film director"))
    assert prompt.index(relevant.render()) < prompt.index(other.render())


def test_render_round_trip_recovers_paths_exactly():
    paths = [make_path("a.b", "c.d"), make_path("x.y"), make_path("film.director")]
    rp = ranked(paths)
    for kind in ("answer", "feedback"):
        prompt = render_prompt("what is the x?", rp, kind)
        question, texts = parse_prompt(prompt)
        assert question == "what is the x?"
        assert texts == rp.texts


def test_render_round_trip_empty():
    prompt = render_prompt("q?", ranked([]), "feedback")
    question, texts = parse_prompt(prompt)
    assert question == "q?" and texts == []


def test_is_feedback_prompt():
    assert is_feedback_prompt(render_prompt("q", ranked([]), "feedback"))
    assert not is_feedback_prompt(render_prompt("q", ranked([])))


def test_parse_feedback_simple_and_complex():
    two_hop = LlmResponse("A → r1 → B → r2 → C", (), "A → r1 → B → r2 → C")
    lbl = parse_feedback(two_hop, delta=2)
    assert lbl.min_hop == 2 and lbl.value is Complexity.SIMPLE

    three = " → ".join(["A", "r1", "B", "r2", "C", "r3", "D"])
    lbl = parse_feedback(LlmResponse(three, (), three), delta=2)
    assert lbl.min_hop == 3 and lbl.value is Complexity.COMPLEX


def test_parse_feedback_no_reply_is_absent():
    assert parse_feedback(LlmResponse("NO", (), "NO"), delta=2) is None
    assert parse_feedback(LlmResponse("  no ", (), "no"), delta=2) is None


def test_parse_feedback_unparseable_is_absent():
    assert parse_feedback(LlmResponse("gibberish", (), "gibberish"), delta=2) is None
    assert parse_feedback(LlmResponse("A → r1", (), "A → r1"), delta=2) is None


def test_parse_feedback_matches_rendered_hops():
    for hops in (1, 2, 3, 4):
        p = make_path(*[f"rel{i}" for i in range(hops)])
        resp = LlmResponse(p.render(), (), p.render())
        assert parse_feedback(resp, delta=2).min_hop == hops


def test_parse_feedback_handles_inverse_markers():
    p = ReasoningPath(("A", "r1", "B", "r2", "C"), ("inverse", "forward"))
    resp = LlmResponse(p.render(), (), p.render())
    assert parse_feedback(resp, delta=2).min_hop == 2


def test_normalize_and_alias_containment():
    assert normalize_answer("The Answer, is: PARIS!") == "the answer is paris"
    assert contains_alias("The answer is Paris", "paris")
    assert contains_alias("I think e00042 fits", "e00042")
    assert not contains_alias("Parisian things", "Paris")
    assert not contains_alias("anything", "")


def test_mock_answers_with_gold_terminal():
    gold_path = make_path("film.director")  # ends at B
    other = make_path("river.border", start="Z")
    client = MockLlmClient({"who directed it?": ("B",)})
    rp = ranked([other, gold_path])
    reply = client.complete(render_prompt("who directed it?", rp))
    assert reply == "B"


def test_mock_answers_unknown_without_gold_path():
    client = MockLlmClient({"who directed it?": ("MISSING",)})
    reply = client.complete(render_prompt("who directed it?", ranked([make_path("r")])))
    assert reply == "unknown"


def test_mock_feedback_echoes_path_or_no():
    gold_path = make_path("film.director")
    client = MockLlmClient({"q?": ("B",), "other?": ("ZZZ",)})
    echoed = client.complete(render_prompt("q?", ranked([gold_path]), "feedback"))
    assert echoed == gold_path.render()
    assert client.complete(render_prompt("other?", ranked([gold_path]), "feedback")) == "NO"


def test_mock_deterministic_and_counts_calls():
    client = MockLlmClient({"q?": ("B",)})
    prompt = render_prompt("q?", ranked([make_path("r")]))
    a = client.complete(prompt)
    b = client.complete(prompt)
    assert a == b
    assert client.calls == 2


def test_generate_wraps_response():
    client = MockLlmClient({"q?": ("B",)})
    resp = generate(client, render_prompt("q?", ranked([make_path("r.b")])))
    assert resp.extracted_answers == ("B",)
    assert resp.feedback_path is None
    fb = generate(client, render_prompt("q?", ranked([make_path("r.b")]), "feedback"))
    assert fb.feedback_path == make_path("r.b").render()


class FakeReply:
    def __init__(self, payload=None, status=200):
        self.status_code = status
        self._payload = payload if payload is not None else {}

    def json(self):
        return self._payload


class FlakySession:
    """Scripted transport: each entry is an exception or a FakeReply."""

    def __init__(self, script):
        self.script = list(script)
        self.posts = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append({"url": url, "json": json, "headers": headers})
        step = self.script.pop(0)
        if isinstance(step, Exception):
            raise step
        return step


def good_reply(text="hello"):
    return FakeReply({"choices": [{"message": {"content": text}}]})


def test_chat_client_success_payload():
    session = FlakySession([good_reply("the answer")])
    client = ChatClient("http://llm/chat", GenerationParams(retries=3), session=session)
    assert client.complete("prompt text") == "the answer"
    sent = session.posts[0]["json"]
    assert sent["messages"] == [{"role": "user", "content": "prompt text"}]
    assert sent["temperature"] == 0.01
    assert sent["max_tokens"] == 256


def test_chat_client_retries_then_succeeds():
    session = FlakySession(
        [requests.ConnectionError("down"), requests.Timeout("slow"), good_reply("ok")]
    )
    client = ChatClient(
        "http://llm/chat", GenerationParams(retries=3, backoff=0.0), session=session
    )
    assert client.complete("p") == "ok"
    assert client.calls == 1
    assert len(session.posts) == 3


def test_chat_client_gives_up_after_retry_budget():
    session = FlakySession([requests.ConnectionError("down")] * 3)
    client = ChatClient(
        "http://llm/chat", GenerationParams(retries=3, backoff=0.0), session=session
    )
    with pytest.raises(GenerationError):
        client.complete("p")


def test_chat_client_retries_5xx_but_not_4xx():
    session = FlakySession([FakeReply(status=503), good_reply("fine")])
    client = ChatClient(
        "http://llm/chat", GenerationParams(retries=2, backoff=0.0), session=session
    )
    assert client.complete("p") == "fine"

    session = FlakySession([FakeReply(status=401)])
    client = ChatClient("http://llm/chat", GenerationParams(retries=3), session=session)
    with pytest.raises(ProtocolError):
        client.complete("p")


def test_chat_client_malformed_payload():
    session = FlakySession([FakeReply({"nonsense": True})])
    client = ChatClient("http://llm/chat", GenerationParams(retries=2), session=session)
    with pytest.raises(ProtocolError):
        client.complete("p")


def test_chat_client_api_key_header(monkeypatch):
    monkeypatch.setenv("KGRAG_API_KEY", "sekrit")
    session = FlakySession([good_reply()])
    client = ChatClient("http://llm/chat", session=session)
    client.complete("p")
    assert session.posts[0]["headers"]["Authorization"] == "Bearer sekrit"


def test_chat_client_no_key_no_header(monkeypatch):
    monkeypatch.delenv("KGRAG_API_KEY", raising=False)
    session = FlakySession([good_reply()])
    client = ChatClient("http://llm/chat", session=session)
    client.complete("p")
    assert "Authorization" not in session.posts[0]["headers"]
