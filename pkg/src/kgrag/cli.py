"""Command-line entry point.

Subcommands: ingest (index a triple file and print stats), train (label a
dataset against a graph and fit the classifier), answer (one question end
to end), eval (batch evaluation with report and trace log), adapt (apply
a feedback file to a saved model), synth (generate a synthetic benchmark).
Exit codes: 0 success, 1 categorized runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .classifier import AdaptConfig, TrainConfig, fast_adapt, load_model, save_model, train
from .errors import DatasetError, KgragError
from .evaluate import DatasetRecord, dump_dataset, evaluate, load_dataset, write_traces
from .graph import dump_triples, load_triples
from .labeling import label_dataset, label_query
from .llm import ChatClient, GenerationParams, MockLlmClient
from .pipeline import PipelineConfig, run_query
from .synthetic import generate_benchmark

logger = logging.getLogger(__name__)


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()


def _build_client(cfg: PipelineConfig, mock_gold=None):
    if mock_gold is not None:
        return MockLlmClient(mock_gold)
    if not cfg.llm_endpoint:
        raise KgragError("no --mock-llm and no llm_endpoint configured")
    params = GenerationParams(
        model=cfg.llm_model,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        retries=cfg.retries,
    )
    return ChatClient(cfg.llm_endpoint, params=params)


def _cmd_ingest(args) -> int:
    g = load_triples(args.triples)
    for key, value in g.stats().items():
        print(f"{key:<12}{value}")
    if args.dump:
        count = dump_triples(g, args.dump)
        print(f"dumped {count} triples to {args.dump}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    g = load_triples(args.graph)
    records = load_dataset(args.dataset)
    labeled = []
    pending = []
    for r in records:
        if r.hop is not None:
            labeled.append((r.question, label_query(r.hop, cfg.delta)))
        else:
            pending.append((r.question, r.question_entities, r.answers))
    if pending:
        labeled.extend(label_dataset(g, pending, cfg.delta))
    result = train(
        labeled,
        TrainConfig(epochs=args.epochs, lr=args.lr, seed=cfg.seed),
        delta=cfg.delta,
    )
    save_model(result.model, args.out)
    print(
        f"trained on {len(labeled)} queries: "
        f"loss {result.losses[-1]:.4f}, accuracy {result.accuracy:.3f}"
    )
    print(f"model written to {args.out}")
    return 0


def _gold_map(records) -> dict[str, tuple[str, ...]]:
    return {r.question: tuple(r.answers) for r in records}


def _cmd_answer(args) -> int:
    cfg = _load_config(args.config)
    if args.force_route:
        cfg = PipelineConfig(**{**cfg.to_dict(), "force_route": args.force_route})
    g = load_triples(args.graph)
    model = load_model(args.model) if args.model else None
    record = DatasetRecord(
        id="cli",
        question=args.question,
        question_entities=tuple(args.entities or ()),
        answers=tuple(args.gold or ()),
    )
    if args.mock_llm:
        client = _build_client(cfg, mock_gold=_gold_map([record]))
    else:
        client = _build_client(cfg)
    result = run_query(g, model, cfg, record, client)
    print(json.dumps(result.trace.to_dict(), indent=2, sort_keys=True))
    print(f"answer: {result.answer}")
    return 0


def _cmd_eval(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    g = load_triples(args.graph)
    records = load_dataset(args.dataset)
    model = load_model(args.model) if args.model else None
    client = _build_client(cfg, mock_gold=_gold_map(records) if args.mock_llm else None)
    report, traces = evaluate(g, model, cfg, records, client)
    print(report.render_table())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.dumps() + "\n")
        print(f"report written to {args.report}")
    if args.trace:
        write_traces(traces, args.trace)
        print(f"trace log written to {args.trace}")
    return 0


def _cmd_adapt(args) -> int:
    cfg = _load_config(args.config)
    model = load_model(args.model)
    feedback = []
    with open(args.feedback, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                hop = raw["hop"] if "hop" in raw else int(raw["label"]) * (cfg.delta + 1)
                feedback.append((str(raw["question"]), label_query(int(hop), cfg.delta)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DatasetError(f"{args.feedback}:{number}: bad feedback row: {exc}") from exc
    adapted = fast_adapt(model, feedback, AdaptConfig(seed=cfg.seed))
    save_model(adapted, args.out)
    print(f"adapted on {len(feedback)} samples; version {model.version} -> {adapted.version}")
    print(f"model written to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    bench = generate_benchmark(seed=args.seed, queries_per_hop=args.queries_per_hop)
    count = dump_triples(bench.graph, args.graph_out)
    dump_dataset(bench.records, args.dataset_out)
    if args.corpus_out:
        corpus_records = [
            DatasetRecord(id=f"c{i:05d}", question=q, question_entities=(), hop=h)
            for i, (q, h) in enumerate(bench.corpus)
        ]
        dump_dataset(corpus_records, args.corpus_out)
        print(f"corpus written to {args.corpus_out}")
    print(f"graph written to {args.graph_out} ({count} triples)")
    print(f"dataset written to {args.dataset_out} ({len(bench.records)} records)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgrag",
        description="Knowledge-graph RAG engine with complexity-routed retrieval",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="index a triple file and print stats")
    p.add_argument("--triples", required=True)
    p.add_argument("--dump", help="write the deduplicated graph back out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train the complexity classifier")
    p.add_argument("--graph", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--lr", type=float, default=3.0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("answer", help="answer a single question end to end")
    p.add_argument("--graph", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--entities", nargs="*", help="pre-linked query entities")
    p.add_argument("--gold", nargs="*", help="gold answers (for the mock client)")
    p.add_argument("--model")
    p.add_argument("--config")
    p.add_argument("--mock-llm", action="store_true")
    p.add_argument("--force-route", choices=("simple", "complex"))
    p.set_defaults(func=_cmd_answer)

    p = sub.add_parser("eval", help="evaluate a dataset and print the report")
    p.add_argument("--config", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--model")
    p.add_argument("--mock-llm", action="store_true")
    p.add_argument("--report", help="write the machine-readable report here")
    p.add_argument("--trace", help="write the per-query trace log here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("adapt", help="fast-adapt a model on a feedback file")
    p.add_argument("--model", required=True)
    p.add_argument("--feedback", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_adapt)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--graph-out", required=True)
    p.add_argument("--dataset-out", required=True)
    p.add_argument("--corpus-out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries-per-hop", type=int, default=250)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except KgragError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
