"""Synthetic corpora with known ground truth.

Real news and official-report data cannot ship with the package, so
tests and the demo pipeline run on generated fixtures: planted-trigger
articles for the detector (the trigger sentence is the oracle for key
sentences), planted-vocabulary articles for the extractor, disjoint
duplicate pairs for dedup, and per-city incident/official-count tables
for the statistics stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date, timedelta

import numpy as np

from .corpus import (
    ActionClass,
    AnnotationLabel,
    Article,
    EmbeddingTable,
    TargetClass,
)
from .dedup import IncidentRecord

STATES = ("CA", "NY", "TX", "WA", "IL", "OH", "GA", "MA", "AZ", "CO")

TARGET_MARKERS = {t: f"tmark{i}" for i, t in enumerate(TargetClass)}
ACTION_MARKERS = {a: f"amark{i}" for i, a in enumerate(ActionClass)}


def background_vocab(size: int) -> list[str]:
    return [f"w{i:03d}" for i in range(size)]


def random_embeddings(tokens: list[str], dim: int, seed: int = 0) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.5, 0.5, size=(len(tokens), dim))
    return EmbeddingTable({t: i for i, t in enumerate(tokens)}, matrix, dim, seed)


def _sentence(rng: np.random.Generator, vocab: list[str], length: int) -> list[str]:
    return [vocab[int(i)] for i in rng.integers(0, len(vocab), size=length)]


@dataclass
class TriggerCorpus:
    articles: list[Article]
    labels: dict[str, bool]
    trigger_index: dict[str, int]        # positive article id -> planted sentence index
    vocabulary: list[str]
    trigger_tokens: list[str]

    def labeled(self) -> list[tuple[Article, bool]]:
        return [(a, self.labels[a.id]) for a in self.articles]


def make_trigger_corpus(n_articles: int = 50, positive_fraction: float = 0.5,
                        vocab_size: int = 30, n_trigger_tokens: int = 6,
                        sentences_range: tuple[int, int] = (3, 6),
                        tokens_range: tuple[int, int] = (4, 8),
                        seed: int = 0,
                        trigger_tokens: list[str] | None = None,
                        keyword_tokens: list[str] | None = None) -> TriggerCorpus:
    """Articles of filler sentences; each positive carries exactly one
    planted trigger sentence built from a distinct trigger vocabulary.

    `keyword_tokens`, when given, are mixed into every article so the
    corpus survives keyword filtering without leaking the label.
    """
    rng = np.random.default_rng(seed)
    vocab = background_vocab(vocab_size)
    triggers = trigger_tokens if trigger_tokens is not None else [
        f"trig{i}" for i in range(n_trigger_tokens)]
    n_pos = int(round(n_articles * positive_fraction))

    articles, labels, trigger_index = [], {}, {}
    for i in range(n_articles):
        positive = i < n_pos
        n_sent = int(rng.integers(sentences_range[0], sentences_range[1] + 1))
        sentences = [_sentence(rng, vocab, int(rng.integers(*tokens_range)))
                     for _ in range(n_sent)]
        if keyword_tokens:
            spot = int(rng.integers(0, n_sent))
            sentences[spot] = sentences[spot] + [
                keyword_tokens[int(rng.integers(0, len(keyword_tokens)))]]
        if positive:
            planted = int(rng.integers(0, n_sent))
            k = max(3, len(triggers) // 2)
            picks = rng.choice(len(triggers), size=min(k, len(triggers)), replace=False)
            sentences[planted] = [triggers[int(j)] for j in picks] + _sentence(rng, vocab, 2)
            trigger_index[f"art{i:04d}"] = planted
        art = Article(
            id=f"art{i:04d}",
            city=f"City{int(rng.integers(0, 10))}",
            state=STATES[int(rng.integers(0, len(STATES)))],
            date=Date(2018, 1, 1) + timedelta(days=int(rng.integers(0, 361))),
            title=f"Report {i}",
            body=" ".join(" ".join(s).capitalize() + "." for s in sentences),
            sentences=[s + ["."] for s in sentences],
        )
        articles.append(art)
        labels[art.id] = positive

    order = rng.permutation(len(articles))
    articles = [articles[int(i)] for i in order]
    return TriggerCorpus(articles, labels, trigger_index, vocab, list(triggers))


def corpus_embeddings(corpus: TriggerCorpus, dim: int, seed: int = 0,
                      extra_tokens: list[str] | None = None) -> EmbeddingTable:
    tokens = sorted({t for a in corpus.articles for s in a.sentences for t in s})
    tokens += [t for t in (extra_tokens or []) if t not in tokens]
    return random_embeddings(tokens, dim, seed)


@dataclass
class ExtractionCorpus:
    examples: list[tuple[list[str], TargetClass, ActionClass]]
    article_ids: list[str]


def make_extraction_corpus(per_target: int = 12, seed: int = 0,
                           vocab_size: int = 30,
                           tokens_range: tuple[int, int] = (3, 6)) -> ExtractionCorpus:
    """Token inputs where one marker token encodes the target class and
    another the action class, amid filler."""
    rng = np.random.default_rng(seed)
    vocab = background_vocab(vocab_size)
    examples, ids = [], []
    actions = list(ActionClass)
    n = 0
    for target in TargetClass:
        for j in range(per_target):
            action = actions[n % len(actions)]
            filler = _sentence(rng, vocab, int(rng.integers(*tokens_range)))
            tokens = filler[:]
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), TARGET_MARKERS[target])
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), ACTION_MARKERS[action])
            examples.append((tokens, target, action))
            ids.append(f"ex{n:04d}")
            n += 1
    order = rng.permutation(len(examples))
    return ExtractionCorpus([examples[int(i)] for i in order],
                            [ids[int(i)] for i in order])


def extraction_embeddings(dim: int, seed: int = 0, vocab_size: int = 30) -> EmbeddingTable:
    tokens = (background_vocab(vocab_size)
              + list(TARGET_MARKERS.values()) + list(ACTION_MARKERS.values()))
    return random_embeddings(tokens, dim, seed)


def make_dedup_records(n_unique: int = 658, n_duplicate_pairs: int = 20,
                       seed: int = 0) -> list[IncidentRecord]:
    """n_unique + n_duplicate_pairs records containing exactly
    n_duplicate_pairs disjoint duplicate pairs (every base record gets
    its own city, so no accidental edges)."""
    if n_duplicate_pairs > n_unique:
        raise ValueError("cannot have more duplicate pairs than unique incidents")
    rng = np.random.default_rng(seed)
    targets, actions = list(TargetClass), list(ActionClass)
    records = []
    for i in range(n_unique):
        records.append(IncidentRecord(
            article_id=f"inc{i:05d}",
            city=f"Uniquetown{i:04d}",
            state=STATES[int(rng.integers(0, len(STATES)))],
            date=Date(2018, 1, 1) + timedelta(days=int(rng.integers(0, 361))),
            target=targets[int(rng.integers(0, len(targets)))],
            action=actions[int(rng.integers(0, len(actions)))],
        ))
    dup_of = rng.choice(n_unique, size=n_duplicate_pairs, replace=False)
    for j, src in enumerate(dup_of):
        base = records[int(src)]
        records.append(IncidentRecord(
            article_id=f"dup{j:05d}",
            city=base.city.upper(),     # exercises case-insensitive matching
            state=base.state.lower(),
            date=base.date + timedelta(days=int(rng.integers(0, 2))),
            target=base.target,
            action=base.action,
        ))
    order = rng.permutation(len(records))
    return [records[int(i)] for i in order]


# -- shipped news-style fixture ----------------------------------------------

BACKGROUND_WORDS = (
    "the a council meeting residents street park school library report "
    "officials weather festival music garden volunteers local community "
    "center county project budget traffic bridge road repairs season team "
    "game students teachers market farmers shop bakery opened closed planned "
    "discussed approved announced neighbors group event held saturday "
    "evening morning downtown annual fair board vote corner crowd"
).split()

# class-marker words appear only inside positive trigger sentences
NEWS_TARGET_MARKERS = {
    TargetClass.RACE: "racist",
    TargetClass.NATIONALITY: "immigrant",
    TargetClass.GENDER: "women",
    TargetClass.RELIGION: "mosque",
    TargetClass.SEXUAL_ORIENTATION: "pride",
    TargetClass.IDEOLOGY: "leftist",
    TargetClass.POLITICAL_IDENTIFICATION: "campaign",
    TargetClass.MENTAL_PHYSICAL_HEALTH: "disabled",
}
NEWS_ACTION_MARKERS = {
    ActionClass.ASSAULT: "punched",
    ActionClass.ARSON: "torched",
    ActionClass.VANDALISM: "spraypainted",
    ActionClass.HATE_DEMONSTRATION: "rally",
}

FIXTURE_CITIES = [
    ("Cedar Falls", "IA"), ("Riverton", "CA"), ("Oak Grove", "TX"),
    ("Maple Heights", "OH"), ("Fairview", "NY"), ("Lakeside", "WA"),
    ("Granite Bay", "CO"), ("Elm Park", "IL"), ("Stonebridge", "MA"),
    ("Willow Creek", "GA"), ("Harbor Point", "AZ"), ("North Haven", "CT"),
]

HATE_KEYWORDS = ("swastika", "hate", "racial", "religion", "religious",
                 "gay", "transgender", "transsexual")


@dataclass
class NewsFixture:
    articles: list[dict]                 # raw article JSON docs (untokenized)
    labels: list[dict]                   # annotation JSON docs
    embedding_rows: list[str]            # lines for the embeddings file
    official_rows: list[tuple[str, str, str, int]]
    other_incidents: dict[str, list[IncidentRecord]]
    config: dict
    gold: dict[str, dict]                # article id -> truth for tests


def make_news_fixture(n_positive: int = 55, n_negative: int = 75,
                      seed: int = 5, embedding_dim: int = 16,
                      n_labeled: int | None = None,
                      n_double_labeled: int | None = None) -> NewsFixture:
    """The shipped end-to-end corpus: every article carries at least one
    hate keyword (so keyword filtering keeps both classes), positives
    carry one trigger sentence with distinctive attribute markers, and
    the annotation file has a second annotator over a subset for kappa.
    Class counts keep positives below negatives, matching the shape of
    the real annotation statistics.
    """
    rng = np.random.default_rng(seed)
    targets, actions = list(TargetClass), list(ActionClass)

    def background_sentence():
        n = int(rng.integers(4, 9))
        return [BACKGROUND_WORDS[int(i)] for i in rng.integers(0, len(BACKGROUND_WORDS), n)]

    def neutral_keyword_sentence():
        kw = HATE_KEYWORDS[int(rng.integers(0, len(HATE_KEYWORDS)))]
        words = background_sentence()
        words.insert(int(rng.integers(0, len(words) + 1)), kw)
        return words

    total = n_positive + n_negative
    drafts, truths = [], []
    for i in range(total):
        positive = i < n_positive
        city, state = FIXTURE_CITIES[int(rng.integers(0, len(FIXTURE_CITIES)))]
        when = Date(2018, 1, 1) + timedelta(days=int(rng.integers(0, 360)))
        n_sent = int(rng.integers(3, 7))
        sentences = [background_sentence() for _ in range(n_sent)]
        spot = int(rng.integers(0, n_sent))
        if positive:
            target = targets[i % len(targets)]
            action = actions[(i // len(targets)) % len(actions)]
            kw = HATE_KEYWORDS[int(rng.integers(0, len(HATE_KEYWORDS)))]
            sentences[spot] = ["police", "said", kw, NEWS_ACTION_MARKERS[action],
                               NEWS_TARGET_MARKERS[target], "victim"]
            truth = {"is_event": True, "target": target.value,
                     "action": action.value, "trigger_index": spot}
        else:
            sentences[spot] = neutral_keyword_sentence()
            truth = {"is_event": False, "target": None, "action": None,
                     "trigger_index": None}
        body = " ".join(" ".join(s).capitalize() + "." for s in sentences)
        title = " ".join(background_sentence()[:4]).capitalize()
        drafts.append({"city": city, "state": state, "date": when.isoformat(),
                       "title": title, "body": body})
        truths.append(truth)

    # ids are assigned after shuffling so id order carries no label signal
    order = rng.permutation(total)
    articles, gold = [], {}
    for pos, j in enumerate(order):
        aid = f"news{pos:04d}"
        articles.append({"id": aid, **drafts[int(j)]})
        gold[aid] = truths[int(j)]

    # annotator 1 labels a prefix of the ids, leaving an unlabeled pool
    # for the active-learning loop; annotator 2 re-labels a subset,
    # agreeing ~90% of the time (disagreements flip the binary label)
    if n_labeled is None:
        n_labeled = min(100, total)
    if n_double_labeled is None:
        n_double_labeled = min(40, n_labeled)
    labels = []
    labeled_ids = [f"news{i:04d}" for i in range(min(n_labeled, total))]
    for aid in labeled_ids:
        truth = gold[aid]
        labels.append({"article_id": aid, "is_event": truth["is_event"],
                       "target": truth["target"], "action": truth["action"],
                       "annotator_id": "ann1"})
    for aid in labeled_ids[:n_double_labeled]:
        truth = gold[aid]
        agree = rng.random() < 0.9
        is_event = truth["is_event"] if agree else not truth["is_event"]
        target = action = None
        if is_event:
            target = truth["target"] or targets[int(rng.integers(0, 8))].value
            action = truth["action"] or actions[int(rng.integers(0, 4))].value
        labels.append({"article_id": aid, "is_event": is_event,
                       "target": target, "action": action, "annotator_id": "ann2"})

    from .corpus import Article, tokenize
    vocab: dict[str, None] = {}
    for doc in articles:
        art = tokenize(Article.from_json(doc))
        for sent in art.sentences:
            for tok in sent:
                vocab.setdefault(tok, None)
    emb_rng = np.random.default_rng([seed, 7])
    embedding_rows = [
        tok + " " + " ".join(f"{v:.6f}" for v in emb_rng.uniform(-0.5, 0.5, embedding_dim))
        for tok in vocab
    ]

    official_rows = []
    other_incidents: dict[str, list[IncidentRecord]] = {"homicide": [], "kidnapping": []}
    k = 0
    for city, state in FIXTURE_CITIES:
        for crime in ("hate", "homicide", "kidnapping"):
            official_rows.append((city, state, crime, int(rng.integers(1, 7))))
        for crime in ("homicide", "kidnapping"):
            for j in range(int(rng.integers(1, 9))):
                other_incidents[crime].append(IncidentRecord(
                    article_id=f"{crime[:3]}{k:05d}", city=city, state=state,
                    date=Date(2018, 1, 1) + timedelta(days=5 * j),
                    target=None, action=None))
                k += 1

    config = {
        "seed": seed,
        "keywords": "hate",
        "paths": {},
        "detector": {"hidden_dim": 10, "conv_widths": [2, 3], "n_filters": 6,
                     "dropout": 0.25, "k": 2, "learning_rate": 0.01,
                     "batch_size": 5, "epochs": 18, "embedding_dim": embedding_dim,
                     "decision_threshold": 0.5},
        "extractor": {"hidden_dim": 10, "dropout": 0.25, "learning_rate": 0.01,
                      "batch_size": 5, "epochs": 25, "embedding_dim": embedding_dim},
        "sampler": {"mean": 0.5, "std": 0.1},
    }
    return NewsFixture(articles, labels, embedding_rows, official_rows,
                       other_incidents, config, gold)


@dataclass
class CoverageFixture:
    incidents: dict[str, list[IncidentRecord]]   # crime type -> records
    official_rows: list[tuple[str, str, str, int]]


def make_coverage_fixture(n_cities: int = 10, seed: int = 0,
                          crime_types: tuple[str, ...] = ("hate", "homicide", "kidnapping"),
                          ) -> CoverageFixture:
    """Per-city incident records plus an official count for every
    (city, crime) cell, all strictly positive, so the coverage ratios
    are simple hand-checkable fractions."""
    rng = np.random.default_rng(seed)
    incidents: dict[str, list[IncidentRecord]] = {c: [] for c in crime_types}
    official = []
    k = 0
    for c in range(n_cities):
        city, state = f"Metro{c:02d}", STATES[c % len(STATES)]
        for crime in crime_types:
            official.append((city, state, crime, int(rng.integers(1, 8))))
            # 5-day spacing within a city keeps every record its own incident
            for j in range(int(rng.integers(1, 9))):
                incidents[crime].append(IncidentRecord(
                    article_id=f"cov{k:05d}",
                    city=city,
                    state=state,
                    date=Date(2018, 1, 1) + timedelta(days=5 * j),
                    target=None,
                    action=None,
                ))
                k += 1
    return CoverageFixture(incidents, official)
