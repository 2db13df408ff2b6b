"""Simple/complex query classifier.

A hashed bag-of-n-grams encoder with a handful of query statistics feeds
a logistic decoder. Training is plain gradient descent (full-batch by
default, so the loss is provably non-increasing at the default step
size); fast adaptation fine-tunes a copy of the model on refined labels
fed back from the reasoning stage. Models are immutable: train and
fast_adapt always return new instances.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import DegenerateTrainingError
from .labeling import Complexity, ComplexityLabel
from .rankers import tokenize

logger = logging.getLogger(__name__)

# Slots at the top of the vector reserved for non-hashed statistics.
_INTERROGATIVES = ("who", "what", "when", "where", "which", "why", "how", "whose")
STAT_SLOTS = 3 + len(_INTERROGATIVES)

_CLAUSE_RE = re.compile(r"[,;:]")
_ENTITY_TOKEN_RE = re.compile(r"^(?:[A-Z][\w'-]*|\S*\d\S*)$")


@dataclass(frozen=True)
class EncoderConfig:
    """Feature hashing setup: total dimension and the n-gram order."""

    dim: int = 65536
    ngram_order: int = 2

    def __post_init__(self):
        if self.dim <= STAT_SLOTS:
            raise ValueError(f"dim must exceed {STAT_SLOTS}")
        if self.ngram_order < 1:
            raise ValueError("ngram_order must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    """L2-normalized sparse feature vector of a fixed configured length."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.values
        return out


def _hash_slot(ngram: str, slots: int) -> int:
    digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % slots


def _statistics(question: str) -> list[float]:
    tokens = question.split()
    entity_count = sum(1 for i, t in enumerate(tokens) if i > 0 and _ENTITY_TOKEN_RE.match(t))
    clause_count = len(_CLAUSE_RE.findall(question))
    lowered = {t.strip("?.,!").casefold() for t in tokens}
    stats = [
        min(len(tokens), 64) / 64.0,
        min(entity_count, 16) / 16.0,
        min(clause_count, 16) / 16.0,
    ]
    stats.extend(1.0 if w in lowered else 0.0 for w in _INTERROGATIVES)
    return stats


def featurize(question: str, config: EncoderConfig | None = None) -> FeatureVector:
    """Encode a question as hashed n-gram counts plus query statistics.

    Deterministic: identical (trimmed) text always yields an identical
    vector. The result is L2-normalized.
    """
    config = config if config is not None else EncoderConfig()
    question = question.strip()
    if not question:
        raise ValueError("cannot featurize empty text")

    slots = config.dim - STAT_SLOTS
    counts: dict[int, float] = {}
    tokens = tokenize(question)
    for order in range(1, config.ngram_order + 1):
        for i in range(len(tokens) - order + 1):
            gram = "\x1f".join(tokens[i : i + order])
            slot = STAT_SLOTS + _hash_slot(gram, slots)
            counts[slot] = counts.get(slot, 0.0) + 1.0
    for slot, value in enumerate(_statistics(question)):
        if value != 0.0:
            counts[slot] = value

    indices = tuple(sorted(counts))
    values = np.array([counts[i] for i in indices])
    norm = float(np.sqrt((values**2).sum()))
    if norm > 0.0:
        values = values / norm
    return FeatureVector(indices=indices, values=tuple(float(v) for v in values), dim=config.dim)


@dataclass(frozen=True)
class ClassifierModel:
    """Linear decoder over the hashed feature space."""

    weights: np.ndarray
    bias: float
    encoder: EncoderConfig
    delta: int = 2
    version: int = 0

    def __post_init__(self):
        if self.weights.shape != (self.encoder.dim,):
            raise ValueError("weight vector length must equal the encoder dimension")


@dataclass(frozen=True)
class TrainConfig:
    """Descent hyperparameters.

    The step size and epoch budget are scale-adjusted for a linear model
    over unit-norm features (a transformer fine-tune needs far fewer,
    far smaller steps). Full-batch descent stays provably monotone: the
    loss is at most 0.5-smooth here, so any lr < 4 decreases it.
    """

    epochs: int = 400
    lr: float = 3.0
    batch_size: int = 32
    full_batch: bool = True
    seed: int = 0


@dataclass(frozen=True)
class AdaptConfig:
    """Fast-adaptation budget: a few mini-batch epochs on feedback labels."""

    epochs: int = 3
    batch_size: int = 16
    lr: float = 0.5
    seed: int = 0


@dataclass
class TrainResult:
    model: ClassifierModel
    losses: list[float]
    accuracy: float


def _design_matrix(
    questions: Sequence[str], config: EncoderConfig
) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for i, q in enumerate(questions):
        fv = featurize(q, config)
        rows.extend([i] * len(fv.indices))
        cols.extend(fv.indices)
        vals.extend(fv.values)
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(questions), config.dim), dtype=np.float64
    )


def _decode(weights: np.ndarray, bias: float, x: sparse.csr_matrix) -> np.ndarray:
    z = np.asarray(x @ weights).ravel() + bias
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _loss(weights: np.ndarray, bias: float, x, y: np.ndarray) -> float:
    z = np.asarray(x @ weights).ravel() + bias
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _labels_to_array(labels: Sequence[ComplexityLabel]) -> np.ndarray:
    return np.array([float(lbl.value) for lbl in labels])


def _descend(
    weights: np.ndarray,
    bias: float,
    x: sparse.csr_matrix,
    y: np.ndarray,
    epochs: int,
    lr: float,
    batch_size: int | None,
    seed: int,
) -> tuple[np.ndarray, float, list[float]]:
    n = x.shape[0]
    losses = []
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        if batch_size is None or batch_size >= n:
            p = _decode(weights, bias, x)
            grad = np.asarray(x.T @ (p - y)).ravel() / n
            weights = weights - lr * grad
            bias = bias - lr * float(np.mean(p - y))
        else:
            order = rng.permutation(n)
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                xb, yb = x[idx], y[idx]
                p = _decode(weights, bias, xb)
                grad = np.asarray(xb.T @ (p - yb)).ravel() / len(idx)
                weights = weights - lr * grad
                bias = bias - lr * float(np.mean(p - yb))
        losses.append(_loss(weights, bias, x, y))
    return weights, bias, losses


def train(
    dataset: Sequence[tuple[str, ComplexityLabel]],
    config: TrainConfig | None = None,
    encoder: EncoderConfig | None = None,
    delta: int = 2,
) -> TrainResult:
    """Fit the classifier by seeded, reproducible gradient descent.

    Raises DegenerateTrainingError unless both classes are present.
    """
    config = config if config is not None else TrainConfig()
    encoder = encoder if encoder is not None else EncoderConfig()
    if not dataset:
        raise DegenerateTrainingError("empty training set")
    labels = {lbl.value for _, lbl in dataset}
    if len(labels) < 2:
        raise DegenerateTrainingError("training set contains a single class")

    x = _design_matrix([q for q, _ in dataset], encoder)
    y = _labels_to_array([lbl for _, lbl in dataset])
    weights = np.zeros(encoder.dim)
    weights, bias, losses = _descend(
        weights,
        0.0,
        x,
        y,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=None if config.full_batch else config.batch_size,
        seed=config.seed,
    )
    predictions = _decode(weights, bias, x) > 0.5
    accuracy = float(np.mean(predictions == (y > 0.5)))
    logger.info(
        "trained classifier on %d queries: loss %.4f, accuracy %.3f",
        len(dataset),
        losses[-1],
        accuracy,
    )
    model = ClassifierModel(
        weights=weights, bias=bias, encoder=encoder, delta=delta, version=0
    )
    return TrainResult(model=model, losses=losses, accuracy=accuracy)


def predict_proba(model: ClassifierModel, question: str) -> tuple[float, float]:
    """(p_simple, p_complex) for a question; the pair sums to 1."""
    fv = featurize(question, model.encoder)
    z = sum(model.weights[i] * v for i, v in zip(fv.indices, fv.values)) + model.bias
    p_complex = 0.5 * (1.0 + np.tanh(0.5 * z))
    return 1.0 - p_complex, float(p_complex)


def predict(model: ClassifierModel, question: str) -> tuple[ComplexityLabel, float]:
    """Argmax label and its probability; a 0.5 tie resolves to Simple."""
    p_simple, p_complex = predict_proba(model, question)
    if p_complex > 0.5:
        return ComplexityLabel(Complexity.COMPLEX), p_complex
    return ComplexityLabel(Complexity.SIMPLE), p_simple


def fast_adapt(
    model: ClassifierModel,
    feedback: Sequence[tuple[str, ComplexityLabel]],
    config: AdaptConfig | None = None,
) -> ClassifierModel:
    """Fine-tune a copy of the model on refined feedback labels.

    Empty feedback is a no-op (warned, same model returned, version
    unchanged); otherwise the returned model's version is incremented by
    one and the input model is left untouched.
    """
    if not feedback:
        logger.warning("fast_adapt called with empty feedback; model unchanged")
        return model
    config = config if config is not None else AdaptConfig()
    x = _design_matrix([q for q, _ in feedback], model.encoder)
    y = _labels_to_array([lbl for _, lbl in feedback])
    weights, bias, _ = _descend(
        model.weights.copy(),
        model.bias,
        x,
        y,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=config.batch_size,
        seed=config.seed + model.version,
    )
    return replace(model, weights=weights, bias=bias, version=model.version + 1)


def feedback_loss(
    model: ClassifierModel, feedback: Sequence[tuple[str, ComplexityLabel]]
) -> float:
    """Mean cross-entropy of the model on a feedback sample set."""
    x = _design_matrix([q for q, _ in feedback], model.encoder)
    y = _labels_to_array([lbl for _, lbl in feedback])
    return _loss(model.weights, model.bias, x, y)


def save_model(model: ClassifierModel, path: str | Path) -> None:
    """Dump the model so that loading reproduces identical predictions."""
    meta = {
        "format": 1,
        "dim": model.encoder.dim,
        "ngram_order": model.encoder.ngram_order,
        "delta": model.delta,
        "version": model.version,
        "bias": model.bias,
    }
    with open(path, "wb") as fh:
        np.savez(fh, weights=model.weights, meta=np.frombuffer(
            json.dumps(meta).encode("utf-8"), dtype=np.uint8
        ))


def load_model(path: str | Path) -> ClassifierModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format") != 1:
            raise ValueError(f"unsupported model format: {meta.get('format')}")
        weights = data["weights"].astype(np.float64)
    return ClassifierModel(
        weights=weights,
        bias=float(meta["bias"]),
        encoder=EncoderConfig(dim=int(meta["dim"]), ngram_order=int(meta["ngram_order"])),
        delta=int(meta["delta"]),
        version=int(meta["version"]),
    )
