"""Event-attribute extraction.

A biLSTM reads the concatenation of an article's top two key sentences
(as ranked by the detector) and two independent softmax heads predict
the target group (8-way) and the action type (4-way). Training is
multi-task: the loss is the unweighted sum of the two cross-entropies.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import ndlearn
from .corpus import ActionClass, Article, EmbeddingTable, TargetClass
from .detector import DetectionResult, EpochRecord
from .ndlearn import (
    AdamState,
    BiLstmParams,
    DenseParams,
    adam_step,
    bilstm_forward,
    collect_grads,
    cross_entropy,
    dense,
    dropout,
    zero_grads,
)
from .ndlearn import checkpoint as ckpt
from .ndlearn.tensor import mean_scalars, add
from .detector import embed_sentence

TARGETS = list(TargetClass)
ACTIONS = list(ActionClass)


class ExtractionError(ValueError):
    pass


@dataclass
class ExtractorConfig:
    hidden_dim: int = 50
    dropout: float = 0.25
    learning_rate: float = 8e-5
    batch_size: int = 5
    epochs: int = 50
    embedding_dim: int = 300
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_dim", "batch_size", "epochs", "embedding_dim"):
            if getattr(self, name) <= 0:
                raise ExtractionError(f"{name} must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "ExtractorConfig":
        return cls(**doc)


@dataclass
class ExtractorModel:
    config: ExtractorConfig
    encoder: BiLstmParams
    target_head: DenseParams
    action_head: DenseParams

    def tensors(self):
        return {
            **self.encoder.tensors("lstm"),
            **self.target_head.tensors("target_head"),
            **self.action_head.tensors("action_head"),
        }


def init_extractor(config: ExtractorConfig) -> ExtractorModel:
    rng = np.random.default_rng([config.seed, 2])
    encoder = ndlearn.init_bilstm(rng, config.embedding_dim, config.hidden_dim)
    # Zero-init heads: the untrained model outputs uniform distributions
    # and the initial multitask loss is exactly ln 8 + ln 4.
    target_head = ndlearn.init_dense(rng, 2 * config.hidden_dim, len(TARGETS), zero_init=True)
    action_head = ndlearn.init_dense(rng, 2 * config.hidden_dim, len(ACTIONS), zero_init=True)
    return ExtractorModel(config, encoder, target_head, action_head)


@dataclass
class ExtractionResult:
    article_id: str
    target_distribution: list[float]
    action_distribution: list[float]
    target: TargetClass
    action: ActionClass

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "target": self.target.value,
            "action": self.action.value,
            "target_distribution": self.target_distribution,
            "action_distribution": self.action_distribution,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExtractionResult":
        return cls(
            article_id=str(doc["article_id"]),
            target_distribution=[float(x) for x in doc["target_distribution"]],
            action_distribution=[float(x) for x in doc["action_distribution"]],
            target=TargetClass(doc["target"]),
            action=ActionClass(doc["action"]),
        )


def build_input(article: Article, detection: DetectionResult) -> list[str]:
    """Tokens of the two highest-scoring sentences, concatenated in
    document order; a one-sentence article contributes that sentence."""
    if not article.sentences:
        raise ExtractionError(f"article {article.id!r} has no sentences")
    scores = detection.sentence_scores
    if len(scores) != len(article.sentences):
        raise ExtractionError(
            f"article {article.id!r}: {len(scores)} scores for {len(article.sentences)} sentences")
    order = np.argsort(-np.asarray(scores), kind="stable")
    chosen = sorted(int(i) for i in order[:2])
    tokens = []
    for i in chosen:
        tokens.extend(article.sentences[i])
    return tokens


def _graph(tokens: Sequence[str], model: ExtractorModel, table: EmbeddingTable,
           training: bool, rng: np.random.Generator | None):
    if not tokens:
        raise ExtractionError("empty extraction input")
    _, summary = bilstm_forward(embed_sentence(tokens, table), model.encoder)
    if training:
        summary = dropout(summary, model.config.dropout, rng, True)
    target_probs = dense(summary, model.target_head, "softmax")
    action_probs = dense(summary, model.action_head, "softmax")
    return target_probs, action_probs


def extract(tokens: Sequence[str], model: ExtractorModel, table: EmbeddingTable,
            article_id: str = "") -> ExtractionResult:
    target_probs, action_probs = _graph(tokens, model, table, False, None)
    t_idx = int(np.argmax(target_probs.data))   # ties resolve to declaration order
    a_idx = int(np.argmax(action_probs.data))
    return ExtractionResult(
        article_id=article_id,
        target_distribution=[float(p) for p in target_probs.data],
        action_distribution=[float(p) for p in action_probs.data],
        target=TARGETS[t_idx],
        action=ACTIONS[a_idx],
    )


ExtractionExample = tuple[Sequence[str], TargetClass, ActionClass]


def example_loss(example: ExtractionExample, model: ExtractorModel,
                 table: EmbeddingTable) -> float:
    """Multitask loss of one example with the model as-is (no dropout);
    for a freshly initialized model this is exactly ln 8 + ln 4."""
    tokens, target, action = example
    t_probs, a_probs = _graph(tokens, model, table, False, None)
    loss = add(cross_entropy(t_probs, TARGETS.index(target)),
               cross_entropy(a_probs, ACTIONS.index(action)))
    return float(loss.data)


def train_multitask(examples: Sequence[ExtractionExample], config: ExtractorConfig,
                    table: EmbeddingTable,
                    progress: Callable[[EpochRecord], None] | None = None,
                    ) -> tuple[ExtractorModel, list[EpochRecord]]:
    """Joint training of both heads; loss per example is
    cross-entropy(target) + cross-entropy(action) with equal weights."""
    if len(examples) < 2:
        raise ExtractionError(f"need at least 2 training examples, got {len(examples)}")
    seen_targets = {t for _, t, _ in examples}
    seen_actions = {a for _, _, a in examples}
    for missing in sorted(t.value for t in set(TARGETS) - seen_targets):
        warnings.warn(f"target class {missing!r} absent from training data")
    for missing in sorted(a.value for a in set(ACTIONS) - seen_actions):
        warnings.warn(f"action class {missing!r} absent from training data")

    model = init_extractor(config)
    params = model.tensors()
    state = AdamState(learning_rate=config.learning_rate)
    rng = np.random.default_rng([config.seed, 3])

    history: list[EpochRecord] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(examples))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start:start + config.batch_size]]
            zero_grads(params.values())
            per_example = []
            for tokens, target, action in batch:
                t_probs, a_probs = _graph(tokens, model, table, True, rng)
                per_example.append(add(cross_entropy(t_probs, TARGETS.index(target)),
                                       cross_entropy(a_probs, ACTIONS.index(action))))
            loss = mean_scalars(per_example)
            loss.backward()
            adam_step(params, collect_grads(params), state)
            losses.append(float(loss.data))
        record = EpochRecord(epoch, float(np.mean(losses)), None)
        history.append(record)
        if progress is not None:
            progress(record)
    return model, history


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class MacroMetrics:
    precision: float
    recall: float
    f1: float
    per_class: dict[str, ClassMetrics]

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_class": {k: asdict(v) for k, v in self.per_class.items()},
        }


def _macro(pairs: list[tuple[str, str]]) -> MacroMetrics:
    """Macro P/R/F1 averaged over the classes present in the gold
    labels; classes that never occur in gold are excluded."""
    gold_classes = sorted({g for g, _ in pairs})
    per_class = {}
    for c in gold_classes:
        tp = sum(1 for g, p in pairs if g == c and p == c)
        fp = sum(1 for g, p in pairs if g != c and p == c)
        fn = sum(1 for g, p in pairs if g == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = ClassMetrics(precision, recall, f1)
    ms = list(per_class.values())
    return MacroMetrics(
        precision=float(np.mean([m.precision for m in ms])),
        recall=float(np.mean([m.recall for m in ms])),
        f1=float(np.mean([m.f1 for m in ms])),
        per_class=per_class,
    )


def evaluate_extraction(results: Sequence[ExtractionResult],
                        gold: Mapping[str, tuple[TargetClass, ActionClass]],
                        ) -> dict[str, MacroMetrics]:
    if not gold:
        raise ExtractionError("empty gold set")
    target_pairs, action_pairs = [], []
    for r in results:
        if r.article_id not in gold:
            raise ExtractionError(f"no gold attributes for article {r.article_id!r}")
        g_target, g_action = gold[r.article_id]
        target_pairs.append((g_target.value, r.target.value))
        action_pairs.append((g_action.value, r.action.value))
    return {"target": _macro(target_pairs), "action": _macro(action_pairs)}


def save_extractor(path: str | Path, model: ExtractorModel) -> None:
    ckpt.save(path, {"model_type": "extractor", **model.config.to_json()}, model.tensors())


def load_extractor(path: str | Path) -> ExtractorModel:
    config_doc, arrays = ckpt.load(path)
    if config_doc.pop("model_type", None) != "extractor":
        raise ckpt.CheckpointError("checkpoint is not an extractor model")
    model = init_extractor(ExtractorConfig.from_json(config_doc))
    ckpt.restore_tensors(model.tensors(), arrays)
    return model
