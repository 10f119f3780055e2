"""Corpus handling: article ingest, tokenization, keyword filtering,
train/dev/test splitting and word-vector loading.

Articles arrive as JSONL (keys id, city, state, date, title, body);
annotations as JSONL (article_id, is_event, target, action,
annotator_id); embeddings as whitespace-separated text. All UTF-8.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from datetime import date as Date
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CorpusError(ValueError):
    pass


class EmptyDocument(CorpusError):
    pass


class TargetClass(Enum):
    RACE = "race"
    NATIONALITY = "nationality"
    GENDER = "gender"
    RELIGION = "religion"
    SEXUAL_ORIENTATION = "sexual_orientation"
    IDEOLOGY = "ideology"
    POLITICAL_IDENTIFICATION = "political_identification"
    MENTAL_PHYSICAL_HEALTH = "mental_physical_health"


class ActionClass(Enum):
    ASSAULT = "assault"
    ARSON = "arson"
    VANDALISM = "vandalism"
    HATE_DEMONSTRATION = "hate_demonstration"


# Keyword presets; matching is whole-token and case-insensitive.
# The kidnapping source list names "abduct" twice; it is stored once.
KEYWORD_PRESETS: dict[str, tuple[str, ...]] = {
    "hate": ("swastika", "hate", "racial", "religion", "religious",
             "gay", "transgender", "transsexual"),
    "homicide": ("homicide", "manslaughter", "murder", "kill"),
    "kidnapping": ("kidnapping", "abduct", "hostage", "shanghai"),
}

MAX_SENTENCES = 60
MAX_TOKENS_PER_SENTENCE = 80


@dataclass
class Article:
    id: str
    city: str
    state: str
    date: Date
    title: str
    body: str
    sentences: list[list[str]] = field(default_factory=list)

    @property
    def tokenized(self) -> bool:
        return bool(self.sentences)

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "city": self.city,
            "state": self.state,
            "date": self.date.isoformat(),
            "title": self.title,
            "body": self.body,
        }
        if self.sentences:
            doc["sentences"] = self.sentences
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Article":
        return cls(
            id=str(doc["id"]),
            city=str(doc["city"]),
            state=str(doc["state"]),
            date=Date.fromisoformat(doc["date"]),
            title=str(doc["title"]),
            body=str(doc["body"]),
            sentences=[list(map(str, s)) for s in doc.get("sentences", [])],
        )


@dataclass
class AnnotationLabel:
    article_id: str
    is_event: bool
    target: TargetClass | None
    action: ActionClass | None
    annotator_id: str

    def __post_init__(self):
        if not self.is_event and (self.target is not None or self.action is not None):
            raise CorpusError(
                f"label for {self.article_id}: target/action present on a negative label")

    def to_json(self) -> dict:
        return {
            "article_id": self.article_id,
            "is_event": self.is_event,
            "target": self.target.value if self.target else None,
            "action": self.action.value if self.action else None,
            "annotator_id": self.annotator_id,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AnnotationLabel":
        return cls(
            article_id=str(doc["article_id"]),
            is_event=bool(doc["is_event"]),
            target=TargetClass(doc["target"]) if doc.get("target") else None,
            action=ActionClass(doc["action"]) if doc.get("action") else None,
            annotator_id=str(doc["annotator_id"]),
        )


@dataclass
class IngestError:
    line: int
    message: str


@dataclass
class IngestResult:
    articles: list[Article]
    errors: list[IngestError]


REQUIRED_ARTICLE_KEYS = ("id", "city", "state", "date", "title", "body")


def ingest(path: str | Path, strict: bool = False) -> IngestResult:
    """Read one article JSON object per line, in file order.

    Malformed lines become error records naming the line number (or
    raise under strict mode); a duplicate article id is always fatal.
    """
    articles: list[Article] = []
    errors: list[IngestError] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                missing = [k for k in REQUIRED_ARTICLE_KEYS if k not in doc]
                if missing:
                    raise CorpusError(f"missing field(s) {', '.join(missing)}")
                article = Article.from_json(doc)
                if not article.id:
                    raise CorpusError("empty id")
            except CorpusError as exc:
                err = IngestError(lineno, str(exc))
                if strict:
                    raise CorpusError(f"line {lineno}: {exc}") from exc
                errors.append(err)
                continue
            except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
                err = IngestError(lineno, f"malformed line: {exc}")
                if strict:
                    raise CorpusError(f"line {lineno}: {exc}") from exc
                errors.append(err)
                continue
            if article.id in seen:
                raise CorpusError(f"line {lineno}: duplicate article id {article.id!r}")
            seen.add(article.id)
            articles.append(article)
    return IngestResult(articles, errors)


def read_labels(path: str | Path) -> list[AnnotationLabel]:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                labels.append(AnnotationLabel.from_json(json.loads(line)))
            except (json.JSONDecodeError, ValueError, KeyError) as exc:
                raise CorpusError(f"labels line {lineno}: {exc}") from exc
    return labels


def write_jsonl(path: str | Path, docs: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


# -- tokenization ---------------------------------------------------------------

# Words that end with a period without closing a sentence.
ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "st", "jr", "sr", "prof", "gen", "sen", "rep",
    "gov", "lt", "col", "sgt", "capt", "det", "dept", "univ", "inc", "corp",
    "co", "vs", "etc", "e.g", "i.e", "u.s", "u.k", "jan", "feb", "mar", "apr",
    "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "no", "vol", "ave",
}

_BOUNDARY = re.compile(r"[.!?]+(?=\s+[A-Z])")


def _is_abbreviation(text: str, punct_start: int) -> bool:
    head = text[:punct_start]
    m = re.search(r"(\S+)$", head)
    if not m:
        return False
    word = m.group(1).rstrip(".").lower()
    # Single letters are treated as initials ("John F. Kennedy").
    return word in ABBREVIATIONS or (len(word) == 1 and word.isalpha())


def split_sentences(text: str) -> list[str]:
    boundaries = []
    for m in _BOUNDARY.finditer(text):
        if "." in m.group(0) and set(m.group(0)) == {"."} and _is_abbreviation(text, m.start()):
            continue
        boundaries.append(m.end())
    pieces = []
    start = 0
    for b in boundaries:
        pieces.append(text[start:b])
        start = b
    pieces.append(text[start:])
    return [p.strip() for p in pieces if p.strip()]


def word_tokenize(sentence: str) -> list[str]:
    """Lowercase and split punctuation off chunk edges; interior
    punctuation ("don't", "u.s") stays attached so no character of the
    input is lost."""
    tokens: list[str] = []
    for chunk in sentence.lower().split():
        lead = []
        while chunk and not chunk[0].isalnum():
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail = []
        while chunk and not chunk[-1].isalnum():
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def tokenize(article: Article) -> Article:
    """Fill `sentences` with lowercased token lists; raises
    EmptyDocument when the body has no visible text."""
    if not article.body.strip():
        raise EmptyDocument(f"article {article.id!r} has an empty body")
    sentences = []
    for sent in split_sentences(article.body)[:MAX_SENTENCES]:
        tokens = word_tokenize(sent)
        if tokens:
            sentences.append(tokens[:MAX_TOKENS_PER_SENTENCE])
    if not sentences:
        raise EmptyDocument(f"article {article.id!r} tokenized to nothing")
    return replace(article, sentences=sentences)


def keyword_filter(articles: Sequence[Article], keywords: Sequence[str]) -> list[Article]:
    """Keep articles containing at least one keyword as a whole token
    (case-insensitive) in the title or body; order preserved."""
    if not keywords:
        raise CorpusError("empty keyword set")
    wanted = {k.lower() for k in keywords}
    kept = []
    for article in articles:
        if not article.tokenized:
            raise CorpusError(f"article {article.id!r} must be tokenized before filtering")
        tokens = {t for sent in article.sentences for t in sent}
        tokens.update(word_tokenize(article.title))
        if tokens & wanted:
            kept.append(article)
    return kept


# -- splitting -------------------------------------------------------------------


@dataclass
class CorpusSplit:
    train: list
    dev: list
    test: list
    seed: int


def split(labeled: Sequence, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
          seed: int = 0) -> CorpusSplit:
    """Seeded shuffle then partition. Sizes follow the ratios by the
    largest-remainder rule, so each is within one item of exact."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise CorpusError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must sum to 1, got {sum(ratios)}")
    if len(labeled) < 3:
        raise CorpusError(f"need at least 3 labeled articles to split, got {len(labeled)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labeled))
    shuffled = [labeled[i] for i in order]

    n = len(shuffled)
    raw = [n * r for r in ratios]
    sizes = [int(x) for x in raw]
    remainders = sorted(range(3), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in range(n - sum(sizes)):
        sizes[remainders[i]] += 1
    a, b = sizes[0], sizes[0] + sizes[1]
    return CorpusSplit(train=shuffled[:a], dev=shuffled[a:b], test=shuffled[b:], seed=seed)


# -- embeddings ------------------------------------------------------------------


@dataclass
class EmbeddingTable:
    vocabulary: dict[str, int]
    matrix: np.ndarray
    dim: int
    seed: int

    def vector(self, token: str) -> np.ndarray:
        idx = self.vocabulary.get(token)
        if idx is not None:
            return self.matrix[idx]
        return _oov_vector(token, self.dim, self.seed)


def _oov_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """Uniform [-0.05, 0.05] vector, deterministic in (seed, token)
    regardless of process or vocabulary order."""
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.uniform(-0.05, 0.05, size=dim)


def load_embeddings(path: str | Path, vocab_tokens: Iterable[str],
                    dim: int = 300, seed: int = 0) -> EmbeddingTable:
    """Build a table over `vocab_tokens`: file vectors where available,
    seeded uniform [-0.05, 0.05] rows for out-of-vocabulary tokens."""
    vocab = list(dict.fromkeys(vocab_tokens))
    wanted = set(vocab)
    file_vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise CorpusError(
                    f"embeddings line {lineno}: expected {dim} values, got {len(values)}")
            if token in wanted and token not in file_vectors:
                file_vectors[token] = np.array([float(v) for v in values])
    matrix = np.empty((len(vocab), dim))
    for i, token in enumerate(vocab):
        vec = file_vectors.get(token)
        matrix[i] = vec if vec is not None else _oov_vector(token, dim, seed)
    return EmbeddingTable({t: i for i, t in enumerate(vocab)}, matrix, dim, seed)


def resolve_labels(articles: Sequence[Article],
                   labels: Sequence[AnnotationLabel]) -> list[tuple[Article, AnnotationLabel]]:
    """Join articles with annotations, one resolved label per article.

    Multiple annotators may label the same article (that is what feeds
    kappa); training needs a single label, so is_event is the majority
    vote with ties broken by the earliest record, and target/action come
    from the earliest positive record. Unlabeled articles are dropped.
    """
    by_article: dict[str, list[AnnotationLabel]] = {}
    for lab in labels:
        by_article.setdefault(lab.article_id, []).append(lab)
    resolved = []
    for article in articles:
        records = by_article.get(article.id)
        if not records:
            continue
        votes = sum(1 if r.is_event else -1 for r in records)
        is_event = votes > 0 or (votes == 0 and records[0].is_event)
        target = action = None
        if is_event:
            for r in records:
                if r.is_event:
                    target, action = r.target, r.action
                    break
        resolved.append((article, AnnotationLabel(
            article_id=article.id, is_event=is_event, target=target,
            action=action, annotator_id=records[0].annotator_id)))
    return resolved


def corpus_vocabulary(articles: Iterable[Article]) -> list[str]:
    """All distinct tokens across tokenized articles, in first-seen order."""
    seen: dict[str, None] = {}
    for article in articles:
        for sent in article.sentences:
            for tok in sent:
                seen.setdefault(tok, None)
    return list(seen)
