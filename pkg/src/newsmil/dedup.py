"""Incident deduplication.

Two incident records are duplicates when they share state, city, target
and action, and their dates are at most one calendar day apart. The
duplicate relation is not transitive day-to-day, so groups are the
connected components of the pairwise edge set (a chain on days 1, 2, 3
collapses into a single incident).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date as Date
from typing import Mapping, Sequence

from .corpus import ActionClass, Article, TargetClass
from .detector import DetectionResult


class DedupError(ValueError):
    pass


@dataclass(frozen=True)
class IncidentRecord:
    article_id: str
    city: str
    state: str
    date: Date
    target: TargetClass | None
    action: ActionClass | None

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "city": self.city,
            "state": self.state,
            "date": self.date.isoformat(),
            "target": self.target.value if self.target else None,
            "action": self.action.value if self.action else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IncidentRecord":
        try:
            when = Date.fromisoformat(str(doc["date"]))
        except ValueError as exc:
            raise DedupError(f"record {doc.get('article_id')!r}: bad date {doc.get('date')!r}") from exc
        return cls(
            article_id=str(doc["article_id"]),
            city=str(doc["city"]),
            state=str(doc["state"]),
            date=when,
            target=TargetClass(doc["target"]) if doc.get("target") else None,
            action=ActionClass(doc["action"]) if doc.get("action") else None,
        )


def _norm_city(city: str) -> str:
    return re.sub(r"\s+", " ", city.strip().lower())


def _group_key(r: IncidentRecord) -> tuple:
    return (r.state.strip().lower(), _norm_city(r.city), r.target, r.action)


@dataclass
class DedupReport:
    duplicate_pairs: list[tuple[str, str]]
    clusters: list[list[str]]
    unique_count: int

    def to_json(self) -> dict:
        return {
            "pairs": [list(p) for p in self.duplicate_pairs],
            "clusters": self.clusters,
            "unique_count": self.unique_count,
        }


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def duplicate_edge(a: IncidentRecord, b: IncidentRecord) -> bool:
    """The pairwise duplicate predicate; symmetric, never reflexive in
    use (records are compared at distinct positions)."""
    return _group_key(a) == _group_key(b) and abs((a.date - b.date).days) <= 1


def find_duplicates(records: Sequence[IncidentRecord]) -> DedupReport:
    """Edges and connected components of the duplicate relation.

    Records are bucketed by (state, city, target, action) and each
    bucket is swept in date order, so only date-adjacent candidates are
    compared; the tests hold this against the brute-force O(n^2) scan.
    """
    for r in records:
        if not isinstance(r.date, Date):
            raise DedupError(f"record {r.article_id!r}: invalid date {r.date!r}")

    buckets: dict[tuple, list[int]] = {}
    for i, r in enumerate(records):
        buckets.setdefault(_group_key(r), []).append(i)

    uf = _UnionFind(len(records))
    pairs: list[tuple[int, int]] = []
    for indices in buckets.values():
        by_date = sorted(indices, key=lambda i: (records[i].date, i))
        for pos, i in enumerate(by_date):
            for j in by_date[pos + 1:]:
                if (records[j].date - records[i].date).days > 1:
                    break
                pairs.append((min(i, j), max(i, j)))
                uf.union(i, j)

    cluster_members: dict[int, list[int]] = {}
    for i in range(len(records)):
        cluster_members.setdefault(uf.find(i), []).append(i)
    clusters = [[records[i].article_id for i in members]
                for _, members in sorted(cluster_members.items())]
    pair_ids = [(records[i].article_id, records[j].article_id)
                for i, j in sorted(set(pairs))]
    return DedupReport(pair_ids, clusters, len(clusters))


@dataclass
class SkippedArticle:
    article_id: str
    reason: str


def incidents_from_predictions(
    detections: Sequence[DetectionResult],
    extractions: Mapping[str, tuple[TargetClass, ActionClass]],
    articles: Mapping[str, Article],
) -> tuple[list[IncidentRecord], list[SkippedArticle]]:
    """One record per positive detection, with location/time from the
    article metadata. A positive with no extraction is an error; an
    article without city metadata is skipped with a warning record."""
    records, skipped = [], []
    for det in detections:
        if not det.predicted:
            continue
        article = articles.get(det.article_id)
        if article is None:
            raise DedupError(f"positive detection {det.article_id!r} has no article")
        if det.article_id not in extractions:
            raise DedupError(f"positive detection {det.article_id!r} has no extraction")
        if not article.city.strip():
            skipped.append(SkippedArticle(det.article_id, "missing city metadata"))
            continue
        target, action = extractions[det.article_id]
        records.append(IncidentRecord(
            article_id=det.article_id,
            city=article.city,
            state=article.state,
            date=article.date,
            target=target,
            action=action,
        ))
    return records, skipped
