"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines. Everything is offline and seeded; the LLM is the deterministic
mock oracle throughout.
"""

import math
import time

import numpy as np
import pytest

from kgrag.classifier import AdaptConfig, TrainConfig, fast_adapt, feedback_loss, predict, train
from kgrag.evaluate import evaluate, write_traces
from kgrag.graph import khop_subgraph
from kgrag.labeling import Complexity, ComplexityLabel, compute_min_hop, label_query
from kgrag.llm import MockLlmClient
from kgrag.paths import PathLimits, bfs_all_paths, dijkstra_shortest_paths
from kgrag.pipeline import PipelineConfig
from kgrag.pruning import ppr_scores, prune_entities, rank_edges
from kgrag.rankers import LexicalRanker
from kgrag.synthetic import generate_benchmark, generate_classifier_corpus

from oracles import (
    bfs_distances,
    dense_ppr,
    dfs_all_simple_paths,
    min_hop_bruteforce,
    random_graph,
    whole_graph_as_subgraph,
)

WIDE_OPEN = PathLimits(max_hops=None, max_paths=10_000_000)


def verdict(num: int, ok: bool, text: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {text}")
    assert ok, f"criterion {num} failed: {text}"


def path_corpus(count=200, max_nodes=12, p=0.3, seed=1234):
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        n = int(rng.integers(2, max_nodes + 1))
        g = random_graph(rng, n, p)
        names = sorted(g.entities)
        seed_entity = names[int(rng.integers(len(names)))]
        graphs.append((g, seed_entity))
    return graphs


def test_criterion_1_bfs_oracle_equivalence():
    started = time.perf_counter()
    graphs = path_corpus()
    checked_paths = 0
    for g, seed_entity in graphs:
        sg = whole_graph_as_subgraph(g, [seed_entity])
        result = bfs_all_paths(sg, [seed_entity], WIDE_OPEN)
        assert not result.truncated
        got = {(p.steps, p.directions) for p in result.paths}
        want = dfs_all_simple_paths(sg, seed_entity)
        assert got == want
        checked_paths += len(want)
    elapsed = time.perf_counter() - started
    verdict(
        1,
        elapsed < 10.0,
        f"BFS equals exhaustive DFS on {len(graphs)} graphs "
        f"({checked_paths} paths, {elapsed:.2f}s < 10s)",
    )


def test_criterion_2_dijkstra_optimality():
    started = time.perf_counter()
    graphs = path_corpus()
    checked = 0
    for g, seed_entity in graphs:
        sg = whole_graph_as_subgraph(g, [seed_entity])
        dist = bfs_distances(sg, seed_entity)
        result = dijkstra_shortest_paths(sg, [seed_entity])
        assert {p.end for p in result.paths} == set(dist) - {seed_entity}
        for p in result.paths:
            assert p.hops == dist[p.end]
            checked += 1
    elapsed = time.perf_counter() - started
    verdict(
        2,
        elapsed < 5.0,
        f"every Dijkstra path matches the BFS distance oracle "
        f"({checked} paths, {elapsed:.2f}s < 5s)",
    )


def test_criterion_3_ppr_against_dense_solve():
    started = time.perf_counter()
    rng = np.random.default_rng(77)
    worst_l1, worst_mass = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        g = random_graph(rng, n, 0.12)
        names = sorted(g.entities)
        seeds = list(rng.choice(names, size=int(rng.integers(1, 3)), replace=False))
        sg = whole_graph_as_subgraph(g, seeds)
        got = {es.entity: es.score for es in ppr_scores(sg, seeds)}
        want = dense_ppr(sg, seeds, alpha=0.8)
        l1 = sum(abs(got[v] - want[v]) for v in want)
        mass = abs(sum(got.values()) - 1.0)
        worst_l1, worst_mass = max(worst_l1, l1), max(worst_mass, mass)
        assert l1 <= 1e-8
        assert mass <= 1e-9
    elapsed = time.perf_counter() - started
    verdict(
        3,
        elapsed < 20.0,
        f"PPR matches dense linear solve on 100 graphs "
        f"(max L1 {worst_l1:.2e}, max mass error {worst_mass:.2e}, {elapsed:.2f}s < 20s)",
    )


def test_criterion_4_subgraph_nesting():
    rng = np.random.default_rng(88)
    ranker = LexicalRanker()
    violations = 0
    for _ in range(500):
        n = int(rng.integers(3, 36))
        g = random_graph(rng, n, 0.2)
        names = sorted(g.entities)
        seeds = list(rng.choice(names, size=min(int(rng.integers(1, 3)), len(names)), replace=False))
        k = int(rng.integers(1, 5))
        gk = khop_subgraph(g, seeds, k)
        gt = prune_entities(gk, ppr_scores(gk, seeds), n=int(rng.integers(1, 14)), seeds=seeds)
        gh = rank_edges("knows part of lives", gt, ranker, m=int(rng.integers(1, 9)))
        ok = (
            gh.nodes <= gt.nodes <= gk.nodes <= g.entities
            and set(gh.edges) <= set(gt.edges) <= set(gk.edges) <= g.triples
        )
        violations += 0 if ok else 1
    verdict(4, violations == 0, f"nesting held on 500 randomized pipeline runs ({violations} violations)")


def test_criterion_5_hop_labeling_oracle():
    rng = np.random.default_rng(99)
    agree = 0
    boundary_cases = 0
    for _ in range(1000):
        n = int(rng.integers(2, 15))
        g = random_graph(rng, n, 0.3)
        names = sorted(g.entities)
        q = list(rng.choice(names, size=int(rng.integers(1, 3)), replace=False))
        a = list(rng.choice(names, size=int(rng.integers(1, 3)), replace=False))
        ours_hop = compute_min_hop(g, q, a)
        oracle_hop = min_hop_bruteforce(g, q, a)
        if ours_hop is None or oracle_hop is None:
            assert ours_hop is None and oracle_hop is None
            agree += 1
            continue
        ours = label_query(ours_hop, 2)
        oracle = ComplexityLabel(
            Complexity.SIMPLE if oracle_hop <= 2 else Complexity.COMPLEX, oracle_hop
        )
        if oracle_hop == 2:
            boundary_cases += 1
        assert ours == oracle
        agree += 1
    verdict(
        5,
        agree == 1000,
        f"hop labeling matches the brute-force oracle on 1000 instances "
        f"({boundary_cases} at the delta=2 boundary)",
    )


def test_criterion_6_classifier_learnability():
    corpus = generate_classifier_corpus(seed=606, size=2000)
    labeled = [(q, label_query(h, 2)) for q, h in corpus]
    split = int(len(labeled) * 0.8)
    result = train(labeled[:split], TrainConfig(epochs=400, lr=3.0, seed=0))
    monotone = all(
        later <= earlier + 1e-12
        for earlier, later in zip(result.losses, result.losses[1:])
    )
    held = labeled[split:]
    hits = sum(predict(result.model, q)[0].value == lbl.value for q, lbl in held)
    accuracy = hits / len(held)
    verdict(
        6,
        accuracy >= 0.95 and monotone,
        f"held-out accuracy {accuracy:.3f} >= 0.95, full-batch loss monotone={monotone}",
    )


def test_criterion_7_feedback_adaptation():
    corpus = generate_classifier_corpus(seed=707, size=2000)
    labeled = [(q, label_query(h, 2)) for q, h in corpus]
    split = int(len(labeled) * 0.8)
    train_set, held = labeled[:split], labeled[split:]

    rng = np.random.default_rng(7)
    corrupt_idx = set(rng.choice(len(train_set), size=len(train_set) // 5, replace=False))
    corrupted = [
        (q, ComplexityLabel(Complexity(1 - lbl.value)) if i in corrupt_idx else lbl)
        for i, (q, lbl) in enumerate(train_set)
    ]
    result = train(corrupted, TrainConfig(epochs=400, lr=3.0, seed=0))

    def held_accuracy(model):
        return sum(predict(model, q)[0].value == lbl.value for q, lbl in held) / len(held)

    before_acc = held_accuracy(result.model)
    budget = int(0.25 * len(train_set))
    feedback = train_set[:budget]  # true labels stand in for LLM-refined ones
    before_loss = feedback_loss(result.model, feedback)
    adapted = fast_adapt(result.model, feedback, AdaptConfig())
    after_loss = feedback_loss(adapted, feedback)
    after_acc = held_accuracy(adapted)
    verdict(
        7,
        after_loss < before_loss and after_acc >= before_acc - 0.02,
        f"feedback loss {before_loss:.4f} -> {after_loss:.4f} (strictly down), "
        f"held-out {before_acc:.3f} -> {after_acc:.3f} (drop <= 2 points), "
        f"budget {budget} = ratio 0.25 of {len(train_set)}",
    )


@pytest.fixture(scope="module")
def benchmark():
    return generate_benchmark(seed=42, queries_per_hop=250)


@pytest.fixture(scope="module")
def routing_model(benchmark):
    labeled = [(q, label_query(h, 2)) for q, h in benchmark.corpus]
    return train(labeled, TrainConfig(epochs=400, lr=3.0, seed=0)).model


@pytest.fixture(scope="module")
def full_run(benchmark, routing_model):
    client = MockLlmClient.from_records(benchmark.records)
    started = time.perf_counter()
    report, traces = evaluate(
        benchmark.graph, routing_model, PipelineConfig(), benchmark.records, client
    )
    elapsed = time.perf_counter() - started
    return report, traces, elapsed


def test_criterion_8_routing_ablation(benchmark, routing_model, full_run):
    full_report, _, _ = full_run
    client = MockLlmClient.from_records(benchmark.records)
    results = {"full": full_report}
    for route in ("simple", "complex"):
        report, _ = evaluate(
            benchmark.graph,
            routing_model,
            PipelineConfig(force_route=route),
            benchmark.records,
            client,
        )
        results[route] = report
    for name, report in results.items():
        assert report.hits_at_1 == report.recall_at_u, f"{name}: hits@1 != recall@u"
    ok = (
        results["full"].recall_at_u >= results["simple"].recall_at_u
        and results["full"].recall_at_u >= results["complex"].recall_at_u
    )
    verdict(
        8,
        ok,
        "recall@u full {:.3f} >= simple-only {:.3f} and complex-only {:.3f}; "
        "hits@1 == recall@u on all three runs".format(
            results["full"].recall_at_u,
            results["simple"].recall_at_u,
            results["complex"].recall_at_u,
        ),
    )


def test_criterion_9_zero_retrieval_llm_calls(full_run):
    report, traces, _ = full_run
    offenders = [t.record_id for t in traces if t.retrieval_llm_calls != 0]
    verdict(
        9,
        not offenders and report.retrieval_llm_calls == 0,
        f"retrieval issued 0 LLM calls across {len(traces)} queries",
    )


def test_criterion_10_performance_envelope(benchmark, full_run):
    _, traces, elapsed = full_run
    cfg = PipelineConfig()
    assert (cfg.n, cfg.m, cfg.u) == (2000, 64, 32)
    assert len(benchmark.graph.triples) >= 100_000
    assert len(traces) == 1000
    verdict(
        10,
        elapsed < 120.0,
        f"1000 queries over {len(benchmark.graph.triples)} triples in "
        f"{elapsed:.1f}s < 120s (single worker, default config)",
    )


def test_criterion_11_determinism(benchmark, routing_model, tmp_path):
    records = benchmark.records[:300]
    cfg = PipelineConfig(feedback=True, ratio=0.25)
    dumps, logs, adapt_counts = [], [], []
    for i in range(2):
        client = MockLlmClient.from_records(records)
        report, traces = evaluate(benchmark.graph, routing_model, cfg, records, client)
        path = tmp_path / f"trace{i}.jsonl"
        write_traces(traces, path)
        dumps.append(report.dumps().encode("utf-8"))
        logs.append(path.read_bytes())
        adapt_counts.append(report.adapt_calls)
    assert adapt_counts[0] == adapt_counts[1] == math.ceil(0.25 * len(records))
    verdict(
        11,
        dumps[0] == dumps[1] and logs[0] == logs[1],
        f"two feedback-mode runs produced byte-identical reports "
        f"({len(dumps[0])} bytes) and trace logs ({len(logs[0])} bytes), "
        f"fast-adapt calls = {adapt_counts[0]}",
    )
