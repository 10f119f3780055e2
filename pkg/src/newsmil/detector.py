"""Multi-instance event detection.

Each article is a bag of sentence instances. A biLSTM encodes every
sentence into a local representation; a CNN bank over the sequence of
sentence representations yields one document-level context vector,
which is concatenated onto each sentence's local representation before
a sigmoid scoring layer. The bag probability is the mean of the k
highest sentence scores, and training minimizes binary cross-entropy on
that bag probability.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import ndlearn
from .corpus import Article, EmbeddingTable
from .ndlearn import (
    AdamState,
    BiLstmParams,
    ConvBankParams,
    DenseParams,
    Tensor,
    adam_step,
    bce_loss,
    bilstm_forward,
    collect_grads,
    concat,
    conv_bank_forward,
    dense,
    dropout,
    zero_grads,
)
from .ndlearn import checkpoint as ckpt
from .ndlearn.tensor import mean_scalars, take, tmean


class DetectionError(ValueError):
    pass


@dataclass
class MilConfig:
    hidden_dim: int = 50
    conv_widths: tuple[int, ...] = (2, 3, 4)
    n_filters: int = 50
    dropout: float = 0.25
    k: int = 2
    learning_rate: float = 8e-5
    batch_size: int = 5
    epochs: int = 50
    embedding_dim: int = 300
    decision_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.conv_widths = tuple(self.conv_widths)
        if self.k < 1:
            raise DetectionError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.decision_threshold < 1.0:
            raise DetectionError(f"decision threshold must be in (0,1), got {self.decision_threshold}")
        for name in ("hidden_dim", "n_filters", "batch_size", "epochs", "embedding_dim"):
            if getattr(self, name) <= 0:
                raise DetectionError(f"{name} must be positive")

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["conv_widths"] = list(self.conv_widths)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "MilConfig":
        return cls(**{k: tuple(v) if k == "conv_widths" else v for k, v in doc.items()})


@dataclass
class MilModel:
    config: MilConfig
    sentence_encoder: BiLstmParams
    context_bank: ConvBankParams
    scorer: DenseParams

    def tensors(self) -> dict[str, Tensor]:
        return {
            **self.sentence_encoder.tensors("lstm"),
            **self.context_bank.tensors("conv"),
            **self.scorer.tensors("scorer"),
        }


def init_mil_model(config: MilConfig) -> MilModel:
    rng = np.random.default_rng([config.seed, 0])
    encoder = ndlearn.init_bilstm(rng, config.embedding_dim, config.hidden_dim)
    bank = ndlearn.init_conv_bank(rng, 2 * config.hidden_dim,
                                  config.conv_widths, config.n_filters)
    scorer_in = 2 * config.hidden_dim + bank.output_dim
    # Zero-init output layer: an untrained model scores every sentence 0.5.
    scorer = ndlearn.init_dense(rng, scorer_in, 1, zero_init=True)
    return MilModel(config, encoder, bank, scorer)


@dataclass
class DetectionResult:
    article_id: str
    bag_probability: float
    sentence_scores: list[float]
    key_sentence_indices: list[int]
    predicted: bool

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "bag_probability": self.bag_probability,
            "predicted": self.predicted,
            "key_sentence_indices": self.key_sentence_indices,
            "sentence_scores": self.sentence_scores,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DetectionResult":
        return cls(
            article_id=str(doc["article_id"]),
            bag_probability=float(doc["bag_probability"]),
            sentence_scores=[float(s) for s in doc["sentence_scores"]],
            key_sentence_indices=[int(i) for i in doc["key_sentence_indices"]],
            predicted=bool(doc["predicted"]),
        )


def top_k_indices(scores: Sequence[float], k: int) -> list[int]:
    """Indices of the k largest scores (k clipped to len), ties broken
    by lower index first."""
    if len(scores) == 0:
        raise DetectionError("top-k of an empty score list")
    if k < 1:
        raise DetectionError(f"k must be >= 1, got {k}")
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return [int(i) for i in order[: min(k, len(scores))]]


def top_k_mean(scores: Sequence[float], k: int) -> float:
    """Mean of the k largest scores; k is clipped to the list length."""
    idx = top_k_indices(scores, k)
    return float(np.mean([scores[i] for i in idx]))


def embed_sentence(tokens: Sequence[str], table: EmbeddingTable) -> list[Tensor]:
    return [Tensor(table.vector(tok)) for tok in tokens]


def _article_graph(article: Article, model: MilModel, table: EmbeddingTable,
                   training: bool, rng: np.random.Generator | None):
    """Build the detection graph for one article.

    Returns (bag probability tensor, per-sentence scores as floats,
    key sentence indices)."""
    if not article.tokenized:
        raise DetectionError(f"article {article.id!r} is not tokenized")
    cfg = model.config
    summaries = []
    for tokens in article.sentences:
        _, summary = bilstm_forward(embed_sentence(tokens, table), model.sentence_encoder)
        assert np.all(np.isfinite(summary.data)), "non-finite sentence representation"
        summaries.append(dropout(summary, cfg.dropout, rng, training) if training else summary)

    # One context vector per article, shared by every sentence score.
    context = conv_bank_forward(summaries, model.context_bank)
    assert np.all(np.isfinite(context.data)), "non-finite context vector"

    score_tensors = [dense(concat([s, context]), model.scorer, "sigmoid")
                     for s in summaries]
    scores_vec = concat(score_tensors)
    scores = [float(s) for s in scores_vec.data]
    key_idx = top_k_indices(scores, min(cfg.k, len(scores)))
    bag = tmean(take(scores_vec, key_idx))
    return bag, scores, key_idx


def forward(article: Article, model: MilModel, table: EmbeddingTable,
            training: bool = False, rng: np.random.Generator | None = None) -> DetectionResult:
    if training and rng is None:
        raise DetectionError("training-mode forward needs a random generator for dropout")
    bag, scores, key_idx = _article_graph(article, model, table, training, rng)
    bag_p = float(bag.data)
    return DetectionResult(
        article_id=article.id,
        bag_probability=bag_p,
        sentence_scores=scores,
        key_sentence_indices=key_idx,
        predicted=bag_p >= model.config.decision_threshold,
    )


LabeledArticle = tuple[Article, bool]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_f1: float | None

    def to_json(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "dev_f1": self.dev_f1}


def train(train_set: Sequence[LabeledArticle], dev_set: Sequence[LabeledArticle],
          config: MilConfig, table: EmbeddingTable,
          progress: Callable[["EpochRecord"], None] | None = None,
          ) -> tuple[MilModel, list[EpochRecord]]:
    """Train on (article, is_event) pairs; returns the parameters with
    the best dev F1 across epochs and the per-epoch history."""
    labels = {bool(y) for _, y in train_set}
    if labels != {True, False}:
        raise DetectionError("train set must contain both classes")
    model = init_mil_model(config)
    params = model.tensors()
    state = AdamState(learning_rate=config.learning_rate)
    rng = np.random.default_rng([config.seed, 1])

    best_f1 = -1.0
    best_params: dict[str, np.ndarray] | None = None
    history: list[EpochRecord] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            zero_grads(params.values())
            per_article = []
            for article, y in batch:
                bag, _, _ = _article_graph(article, model, table, True, rng)
                per_article.append(bce_loss(bag, int(bool(y))))
            loss = mean_scalars(per_article)
            loss.backward()
            adam_step(params, collect_grads(params), state)
            losses.append(float(loss.data))

        dev_f1 = None
        if dev_set:
            results = [forward(a, model, table) for a, _ in dev_set]
            gold = {a.id: bool(y) for a, y in dev_set}
            dev_f1 = evaluate(results, gold).f1
            if dev_f1 > best_f1:
                best_f1 = dev_f1
                best_params = {k: t.data.copy() for k, t in params.items()}
        record = EpochRecord(epoch, float(np.mean(losses)), dev_f1)
        history.append(record)
        if progress is not None:
            progress(record)

    if best_params is not None:
        for name, t in params.items():
            t.data[...] = best_params[name]
    return model, history


def train_split(split, config: MilConfig, table: EmbeddingTable,
                progress: Callable[["EpochRecord"], None] | None = None,
                ) -> tuple[MilModel, list[EpochRecord]]:
    """`train` over a CorpusSplit of (article, is_event) pairs."""
    return train(split.train, split.dev, config, table, progress)


def predict(articles: Iterable[Article], model: MilModel,
            table: EmbeddingTable) -> list[DetectionResult]:
    """Inference pass: dropout off, deterministic, input order preserved."""
    return [forward(a, model, table) for a in articles]


@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def evaluate(results: Sequence[DetectionResult], gold: Mapping[str, bool]) -> Metrics:
    """Precision/recall/F1 with the positive class is_event=true;
    0/0 ratios are defined as 0."""
    tp = fp = fn = tn = 0
    for r in results:
        if r.article_id not in gold:
            raise DetectionError(f"no gold label for article {r.article_id!r}")
        truth = bool(gold[r.article_id])
        if r.predicted and truth:
            tp += 1
        elif r.predicted and not truth:
            fp += 1
        elif not r.predicted and truth:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(precision, recall, f1, tp, fp, fn, tn)


def save_detector(path: str | Path, model: MilModel) -> None:
    ckpt.save(path, {"model_type": "mil_detector", **model.config.to_json()}, model.tensors())


def load_detector(path: str | Path) -> MilModel:
    config_doc, arrays = ckpt.load(path)
    if config_doc.pop("model_type", None) != "mil_detector":
        raise ckpt.CheckpointError("checkpoint is not a detector model")
    model = init_mil_model(MilConfig.from_json(config_doc))
    ckpt.restore_tensors(model.tensors(), arrays)
    return model
