"""Knowledge-graph RAG engine with complexity-routed retrieval."""

__version__ = "0.1.0"

from .classifier import (
    ClassifierModel,
    EncoderConfig,
    TrainConfig,
    AdaptConfig,
    fast_adapt,
    featurize,
    load_model,
    predict,
    save_model,
    train,
)
from .errors import KgragError
from .evaluate import DatasetRecord, EvalReport, evaluate, hits_at_1, load_dataset
from .graph import (
    KnowledgeGraph,
    Subgraph,
    Triple,
    khop_subgraph,
    load_triples,
    neighbors,
)
from .labeling import Complexity, ComplexityLabel, compute_min_hop, label_query
from .llm import ChatClient, LlmResponse, MockLlmClient, generate, parse_feedback, render_prompt
from .paths import PathLimits, ReasoningPath, bfs_all_paths, dijkstra_shortest_paths
from .pipeline import PipelineConfig, run_query
from .pruning import PreprocessConfig, ppr_scores, prune_entities, rank_edges
from .rankers import LexicalRanker, RemoteRanker
from .ranking import RankedPaths, rank_paths
from .synthetic import generate_benchmark, generate_classifier_corpus

__all__ = [
    "AdaptConfig",
    "ChatClient",
    "ClassifierModel",
    "Complexity",
    "ComplexityLabel",
    "DatasetRecord",
    "EncoderConfig",
    "EvalReport",
    "KgragError",
    "KnowledgeGraph",
    "LexicalRanker",
    "LlmResponse",
    "MockLlmClient",
    "PathLimits",
    "PipelineConfig",
    "PreprocessConfig",
    "RankedPaths",
    "ReasoningPath",
    "RemoteRanker",
    "Subgraph",
    "TrainConfig",
    "Triple",
    "bfs_all_paths",
    "compute_min_hop",
    "dijkstra_shortest_paths",
    "evaluate",
    "fast_adapt",
    "featurize",
    "generate",
    "generate_benchmark",
    "generate_classifier_corpus",
    "hits_at_1",
    "khop_subgraph",
    "label_query",
    "load_dataset",
    "load_model",
    "load_triples",
    "neighbors",
    "parse_feedback",
    "ppr_scores",
    "predict",
    "prune_entities",
    "rank_edges",
    "rank_paths",
    "render_prompt",
    "run_query",
    "save_model",
    "train",
]
