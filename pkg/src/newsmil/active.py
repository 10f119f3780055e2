"""Uncertainty sampling for the annotation loop.

Unlabeled articles are drawn for human annotation with weights from a
Gaussian density centered on predicted probability 0.5 (sd 0.1 by
default), so the queue concentrates on articles the detector is unsure
about. Draws are sequential and without replacement: draw one id
proportionally to the remaining weights, remove it, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import AnnotationLabel


class SamplingError(ValueError):
    pass


@dataclass
class SamplerConfig:
    n_samples: int
    mean: float = 0.5
    std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mean < 1.0:
            raise SamplingError(f"mean must be in (0,1), got {self.mean}")
        if self.std <= 0:
            raise SamplingError(f"std must be positive, got {self.std}")
        if self.n_samples < 1:
            raise SamplingError(f"n_samples must be >= 1, got {self.n_samples}")


PENDING, LABELED, SKIPPED = "pending", "labeled", "skipped"


@dataclass
class QueueItem:
    article_id: str
    bag_probability: float
    sample_weight: float
    status: str = PENDING

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "bag_probability": self.bag_probability,
            "sample_weight": self.sample_weight,
            "status": self.status,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QueueItem":
        return cls(str(doc["article_id"]), float(doc["bag_probability"]),
                   float(doc["sample_weight"]), str(doc.get("status", PENDING)))


@dataclass
class AnnotationQueue:
    items: list[QueueItem] = field(default_factory=list)

    def __post_init__(self):
        ids = [it.article_id for it in self.items]
        if len(ids) != len(set(ids)):
            raise SamplingError("queue contains duplicate article ids")

    def pending(self) -> list[QueueItem]:
        return [it for it in self.items if it.status == PENDING]

    def get(self, article_id: str) -> QueueItem | None:
        for it in self.items:
            if it.article_id == article_id:
                return it
        return None


def uncertainty_weight(probability: float, mean: float = 0.5, std: float = 0.1) -> float:
    """exp(-(p - mean)^2 / (2 std^2)): 1 at the mean, decaying with
    distance; for p=0.8 vs p=0.5 at sd 0.1 the ratio is exp(4.5)."""
    z = (probability - mean) / std
    return math.exp(-0.5 * z * z)


def sample_uncertain(pool: Sequence[tuple[str, float]], config: SamplerConfig) -> AnnotationQueue:
    """Weighted sampling without replacement from (article_id,
    probability) pairs; the queue preserves draw order."""
    if len(pool) < config.n_samples:
        raise SamplingError(
            f"pool of {len(pool)} is smaller than n_samples={config.n_samples}")
    ids = [str(a) for a, _ in pool]
    if len(set(ids)) != len(ids):
        raise SamplingError("pool contains duplicate article ids")
    probs = np.asarray([p for _, p in pool], dtype=np.float64)
    weights = np.exp(-0.5 * ((probs - config.mean) / config.std) ** 2)
    if weights.sum() <= 0.0:
        raise SamplingError("all sampling weights underflowed to zero")

    rng = np.random.default_rng(config.seed)
    remaining = list(range(len(pool)))
    w = weights.copy()
    items = []
    for _ in range(config.n_samples):
        active = np.asarray(remaining)
        cumulative = np.cumsum(w[active])
        total = cumulative[-1]
        if total <= 0.0:
            raise SamplingError("remaining sampling weights underflowed to zero")
        r = rng.random() * total
        pick = int(np.searchsorted(cumulative, r, side="right"))
        pick = min(pick, len(active) - 1)
        idx = int(active[pick])
        items.append(QueueItem(ids[idx], float(probs[idx]), float(weights[idx])))
        remaining.pop(pick)
    return AnnotationQueue(items)


class LabelStore:
    """Annotation records keyed by (article_id, annotator_id). Adding
    the same record twice is a no-op; a changed record from the same
    annotator replaces their earlier one. Multiple annotators per
    article are kept side by side (that is what kappa consumes)."""

    def __init__(self, labels: Iterable[AnnotationLabel] = ()):
        self._order: list[tuple[str, str]] = []
        self._by_key: dict[tuple[str, str], AnnotationLabel] = {}
        for lab in labels:
            self.add(lab)

    def add(self, label: AnnotationLabel) -> bool:
        """True if the store changed."""
        key = (label.article_id, label.annotator_id)
        if key in self._by_key:
            if self._by_key[key] == label:
                return False
            self._by_key[key] = label
            return True
        self._by_key[key] = label
        self._order.append(key)
        return True

    def records(self) -> list[AnnotationLabel]:
        return [self._by_key[k] for k in self._order]

    def for_article(self, article_id: str) -> list[AnnotationLabel]:
        return [lab for lab in self.records() if lab.article_id == article_id]

    def annotators_of(self, article_id: str) -> set[str]:
        return {lab.annotator_id for lab in self.for_article(article_id)}

    def __len__(self) -> int:
        return len(self._order)


def merge_labels(queue: AnnotationQueue, labels: Sequence[AnnotationLabel],
                 store: LabelStore) -> LabelStore:
    """Record new labels and mark their queue items labeled.

    Idempotent per (article_id, annotator_id); a label for an id not in
    the queue is an error."""
    for label in labels:
        item = queue.get(label.article_id)
        if item is None:
            raise SamplingError(f"label for unknown queue article {label.article_id!r}")
        store.add(label)
        item.status = LABELED
    return store
