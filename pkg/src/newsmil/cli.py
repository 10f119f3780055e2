"""Command-line pipeline driver.

Subcommands cover the full flow: ingest -> filter -> split ->
train-detector / train-baseline -> predict -> train-extractor ->
extract -> al-sample / dedupe -> stats, plus kappa and the annotation
service (serve). Every command accepts --config <json> for defaults,
--seed to override all module seeds, writes a run manifest next to its
artifacts, and logs one JSON object per line to stderr.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import active, baseline, corpus, dedup, detector, extractor, stats
from .manifest import RunManifest

USAGE_EXIT = 1
DATA_EXIT = 2

DataError = (
    ValueError,      # covers every module error type in this package
    OSError,
    json.JSONDecodeError,
)


def log(event: str, **fields) -> None:
    sys.stderr.write(json.dumps({"event": event, **fields}, sort_keys=True) + "\n")


class CliParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage problems; the pipeline reserves 2
    for data errors and uses 1 for usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


@dataclass
class PipelineConfig:
    seed: int = 0
    keywords: str | list[str] = "hate"
    paths: dict[str, str] = field(default_factory=dict)
    detector: dict = field(default_factory=dict)
    extractor: dict = field(default_factory=dict)
    sampler: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None) -> "PipelineConfig":
        if path is None:
            return cls()
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise corpus.CorpusError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def resolve_keywords(selection: str | Sequence[str]) -> list[str]:
    if isinstance(selection, str):
        if selection in corpus.KEYWORD_PRESETS:
            return list(corpus.KEYWORD_PRESETS[selection])
        return [k.strip().lower() for k in selection.split(",") if k.strip()]
    return [str(k).lower() for k in selection]


def _config_of(args) -> PipelineConfig:
    cfg = PipelineConfig.load(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _path_arg(args, cfg: PipelineConfig, flag: str, path_key: str, required=True) -> str | None:
    value = getattr(args, flag, None) or cfg.paths.get(path_key)
    if value is None and required:
        raise corpus.CorpusError(f"--{flag.replace('_', '-')} is required "
                                 f"(or set paths.{path_key} in the config)")
    return value


def read_tokenized(path: str) -> list[corpus.Article]:
    result = corpus.ingest(path)
    if result.errors:
        raise corpus.CorpusError(
            f"{path}: {len(result.errors)} malformed line(s), first at line "
            f"{result.errors[0].line}: {result.errors[0].message}")
    missing = [a.id for a in result.articles if not a.tokenized]
    if missing:
        raise corpus.CorpusError(
            f"{path}: articles are not tokenized (first: {missing[0]!r}); run ingest first")
    return result.articles


def build_table(articles: Sequence[corpus.Article], embeddings_path: str,
                dim: int, seed: int) -> corpus.EmbeddingTable:
    vocab = corpus.corpus_vocabulary(articles)
    return corpus.load_embeddings(embeddings_path, vocab, dim=dim, seed=seed)


def _labeled_pairs(articles, labels_path):
    labels = corpus.read_labels(labels_path)
    resolved = corpus.resolve_labels(articles, labels)
    return [(a, lab.is_event) for a, lab in resolved], resolved


# -- commands ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _config_of(args)
    src = _path_arg(args, cfg, "articles", "articles")
    manifest = RunManifest("ingest", cfg.seed, {"strict": args.strict})
    manifest.add_input(src)
    result = corpus.ingest(src, strict=args.strict)
    tokenized = []
    for article in result.articles:
        try:
            tokenized.append(corpus.tokenize(article))
        except corpus.EmptyDocument as exc:
            if args.strict:
                raise
            log("empty_document", article_id=article.id, message=str(exc))
    for err in result.errors:
        log("malformed_line", line=err.line, message=err.message)
    corpus.write_jsonl(args.out, (a.to_json() for a in tokenized))
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("ingested", articles=len(tokenized), errors=len(result.errors))
    print(len(tokenized))
    return 0


def cmd_filter(args) -> int:
    cfg = _config_of(args)
    articles_path = _path_arg(args, cfg, "articles", "articles")
    articles = read_tokenized(articles_path)
    keywords = resolve_keywords(args.keywords or cfg.keywords)
    manifest = RunManifest("filter", cfg.seed, {"keywords": keywords})
    manifest.add_input(articles_path)
    kept = corpus.keyword_filter(articles, keywords)
    corpus.write_jsonl(args.out, (a.to_json() for a in kept))
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("filtered", retained=len(kept), of=len(articles))
    print(len(kept))
    return 0


def cmd_split(args) -> int:
    cfg = _config_of(args)
    articles_path = _path_arg(args, cfg, "articles", "articles")
    articles = read_tokenized(articles_path)
    if args.labels:
        labeled_ids = {lab.article_id for lab in corpus.read_labels(args.labels)}
        articles = [a for a in articles if a.id in labeled_ids]
    ratios = tuple(float(x) for x in args.ratios.split(","))
    result = corpus.split(articles, ratios, seed=cfg.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("split", cfg.seed, {"ratios": list(ratios)})
    manifest.add_input(articles_path)
    for name, part in (("train", result.train), ("dev", result.dev), ("test", result.test)):
        path = out_dir / f"{name}.jsonl"
        corpus.write_jsonl(path, (a.to_json() for a in part))
        manifest.add_output(path)
    manifest.write(out_dir)
    log("split", train=len(result.train), dev=len(result.dev), test=len(result.test))
    return 0


def cmd_train_detector(args) -> int:
    cfg = _config_of(args)
    mil_cfg = detector.MilConfig(**{**cfg.detector, "seed": cfg.seed})
    train_articles = read_tokenized(args.train)
    dev_articles = read_tokenized(args.dev) if args.dev else []
    labels_path = _path_arg(args, cfg, "labels", "labels")
    embeddings_path = _path_arg(args, cfg, "embeddings", "embeddings")
    train_pairs, _ = _labeled_pairs(train_articles, labels_path)
    dev_pairs, _ = _labeled_pairs(dev_articles, labels_path) if dev_articles else ([], None)
    table = build_table(train_articles + dev_articles, embeddings_path,
                        mil_cfg.embedding_dim, cfg.seed)

    manifest = RunManifest("train-detector", cfg.seed, mil_cfg.to_json())
    for p in filter(None, (args.train, args.dev, labels_path, embeddings_path)):
        manifest.add_input(p)
    model, history = detector.train(
        train_pairs, dev_pairs, mil_cfg, table,
        progress=lambda r: log("epoch", epoch=r.epoch, train_loss=r.train_loss,
                               dev_f1=r.dev_f1))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "detector.json"
    detector.save_detector(model_path, model)
    history_path = out_dir / "history-detector.json"
    history_path.write_text(
        json.dumps([r.to_json() for r in history], sort_keys=True) + "\n", encoding="utf-8")
    manifest.add_output(model_path)
    manifest.add_output(history_path)
    manifest.write(out_dir)
    best = max((r.dev_f1 for r in history if r.dev_f1 is not None), default=None)
    log("trained_detector", epochs=len(history), best_dev_f1=best)
    return 0


def cmd_train_extractor(args) -> int:
    cfg = _config_of(args)
    ext_cfg = extractor.ExtractorConfig(**{**cfg.extractor, "seed": cfg.seed})
    articles = read_tokenized(args.train)
    labels_path = _path_arg(args, cfg, "labels", "labels")
    embeddings_path = _path_arg(args, cfg, "embeddings", "embeddings")
    mil_model = detector.load_detector(args.detector)
    _, resolved = _labeled_pairs(articles, labels_path)
    positives = [(a, lab) for a, lab in resolved
                 if lab.is_event and lab.target and lab.action]
    if not positives:
        raise corpus.CorpusError("no positive articles with target and action labels")
    table = build_table(articles, embeddings_path, ext_cfg.embedding_dim, cfg.seed)
    detections = {r.article_id: r
                  for r in detector.predict([a for a, _ in positives], mil_model, table)}
    examples = [(extractor.build_input(a, detections[a.id]), lab.target, lab.action)
                for a, lab in positives]

    manifest = RunManifest("train-extractor", cfg.seed, ext_cfg.to_json())
    for p in (args.train, labels_path, embeddings_path, args.detector):
        manifest.add_input(p)
    model, history = extractor.train_multitask(
        examples, ext_cfg, table,
        progress=lambda r: log("epoch", epoch=r.epoch, train_loss=r.train_loss))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "extractor.json"
    extractor.save_extractor(model_path, model)
    history_path = out_dir / "history-extractor.json"
    history_path.write_text(
        json.dumps([r.to_json() for r in history], sort_keys=True) + "\n", encoding="utf-8")
    manifest.add_output(model_path)
    manifest.add_output(history_path)
    manifest.write(out_dir)
    log("trained_extractor", epochs=len(history), examples=len(examples))
    return 0


def cmd_train_baseline(args) -> int:
    cfg = _config_of(args)
    train_articles = read_tokenized(args.train)
    labels_path = _path_arg(args, cfg, "labels", "labels")
    train_pairs, _ = _labeled_pairs(train_articles, labels_path)
    docs = [baseline.article_tokens(a) for a, _ in train_pairs]
    vectorizer, matrix = baseline.fit_transform(docs, max_features=args.max_features)
    model, history = baseline.train_linear(
        matrix, [int(y) for _, y in train_pairs],
        baseline.LinearConfig(l2=args.l2, seed=cfg.seed))

    manifest = RunManifest("train-baseline", cfg.seed,
                           {"l2": args.l2, "max_features": args.max_features})
    manifest.add_input(args.train)
    manifest.add_input(labels_path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "baseline.json"
    baseline.save_baseline(model_path, model, vectorizer)
    manifest.add_output(model_path)
    metrics_doc = {"train_loss_final": history[-1], "iterations": len(history)}
    if args.test:
        test_articles = read_tokenized(args.test)
        test_pairs, _ = _labeled_pairs(test_articles, labels_path)
        metrics = baseline.evaluate_baseline(
            model, vectorizer, [a for a, _ in test_pairs],
            {a.id: bool(y) for a, y in test_pairs})
        metrics_doc["test"] = metrics.to_json()
        manifest.add_input(args.test)
        log("baseline_test", **metrics.to_json())
    metrics_path = out_dir / "metrics-baseline.json"
    metrics_path.write_text(json.dumps(metrics_doc, sort_keys=True) + "\n", encoding="utf-8")
    manifest.add_output(metrics_path)
    manifest.write(out_dir)
    return 0


def cmd_predict(args) -> int:
    cfg = _config_of(args)
    model = detector.load_detector(args.model)
    articles_path = _path_arg(args, cfg, "articles", "articles")
    articles = read_tokenized(articles_path)
    embeddings_path = _path_arg(args, cfg, "embeddings", "embeddings")
    table = build_table(articles, embeddings_path, model.config.embedding_dim, cfg.seed)
    results = detector.predict(articles, model, table)
    corpus.write_jsonl(args.out, (r.to_json() for r in results))
    manifest = RunManifest("predict", cfg.seed, {"threshold": model.config.decision_threshold})
    manifest.add_input(args.model)
    manifest.add_input(articles_path)
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    positives = sum(r.predicted for r in results)
    log("predicted", articles=len(results), positives=positives)
    print(positives)
    return 0


def read_predictions(path: str) -> list[detector.DetectionResult]:
    results = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                results.append(detector.DetectionResult.from_json(json.loads(line)))
    return results


def read_extractions(path: str) -> list[extractor.ExtractionResult]:
    results = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                results.append(extractor.ExtractionResult.from_json(json.loads(line)))
    return results


def cmd_extract(args) -> int:
    cfg = _config_of(args)
    model = extractor.load_extractor(args.model)
    articles_path = _path_arg(args, cfg, "articles", "articles")
    articles = {a.id: a for a in read_tokenized(articles_path)}
    embeddings_path = _path_arg(args, cfg, "embeddings", "embeddings")
    predictions = read_predictions(args.predictions)
    table = build_table(list(articles.values()), embeddings_path,
                        model.config.embedding_dim, cfg.seed)
    results = []
    for det in predictions:
        if not det.predicted:
            continue
        article = articles.get(det.article_id)
        if article is None:
            raise corpus.CorpusError(f"prediction references unknown article {det.article_id!r}")
        tokens = extractor.build_input(article, det)
        results.append(extractor.extract(tokens, model, table, article_id=article.id))
    corpus.write_jsonl(args.out, (r.to_json() for r in results))
    manifest = RunManifest("extract", cfg.seed, {})
    for p in (args.model, articles_path, args.predictions):
        manifest.add_input(p)
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("extracted", articles=len(results))
    return 0


def cmd_al_sample(args) -> int:
    cfg = _config_of(args)
    predictions = read_predictions(args.predictions)
    labeled_ids = set()
    if args.labels and Path(args.labels).exists():
        labeled_ids = {lab.article_id for lab in corpus.read_labels(args.labels)}
    pool = [(r.article_id, r.bag_probability) for r in predictions
            if r.article_id not in labeled_ids]
    sampler_cfg = active.SamplerConfig(**{**cfg.sampler, "n_samples": args.n, "seed": cfg.seed})
    queue = active.sample_uncertain(pool, sampler_cfg)
    corpus.write_jsonl(args.out, (item.to_json() for item in queue.items))
    manifest = RunManifest("al-sample", cfg.seed,
                           {"n": args.n, "mean": sampler_cfg.mean, "std": sampler_cfg.std})
    manifest.add_input(args.predictions)
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("sampled", queue=len(queue.items), pool=len(pool))
    return 0


def read_incidents(path: str) -> list[dedup.IncidentRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(dedup.IncidentRecord.from_json(json.loads(line)))
    return records


def cmd_dedupe(args) -> int:
    cfg = _config_of(args)
    manifest = RunManifest("dedupe", cfg.seed, {})
    if args.incidents:
        records = read_incidents(args.incidents)
        manifest.add_input(args.incidents)
    else:
        for flag in ("articles", "predictions", "extractions"):
            if getattr(args, flag) is None:
                raise corpus.CorpusError(
                    "dedupe needs either --incidents or all of "
                    "--articles/--predictions/--extractions")
        articles = {a.id: a for a in read_tokenized(args.articles)}
        predictions = read_predictions(args.predictions)
        extractions = {r.article_id: (r.target, r.action)
                       for r in read_extractions(args.extractions)}
        records, skipped = dedup.incidents_from_predictions(
            predictions, extractions, articles)
        for s in skipped:
            log("skipped_article", article_id=s.article_id, reason=s.reason)
        for p in (args.articles, args.predictions, args.extractions):
            manifest.add_input(p)
        if args.incidents_out:
            corpus.write_jsonl(args.incidents_out, (r.to_json() for r in records))
            manifest.add_output(args.incidents_out)
    report = dedup.find_duplicates(records)
    Path(args.out).write_text(json.dumps(report.to_json(), sort_keys=True) + "\n",
                              encoding="utf-8")
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("deduped", records=len(records), pairs=len(report.duplicate_pairs),
        unique=report.unique_count)
    print(report.unique_count)
    return 0


def cmd_stats(args) -> int:
    cfg = _config_of(args)
    official_path = _path_arg(args, cfg, "official", "official_counts")
    official = stats.load_official_counts(official_path)
    manifest = RunManifest("stats", cfg.seed, {})
    manifest.add_input(official_path)
    samples = []
    for spec_text in args.incidents:
        if "=" not in spec_text:
            raise corpus.CorpusError(
                f"--incidents must look like crime=path, got {spec_text!r}")
        crime, path = spec_text.split("=", 1)
        records = read_incidents(path)
        manifest.add_input(path)
        samples.append(stats.coverage_ratios(records, official, crime.strip()))
    if len(samples) < 2:
        raise corpus.CorpusError("stats needs at least two --incidents groups")
    welch = stats.welch_anova(samples)
    posthoc = stats.posthoc_pairwise(samples, names=[s.crime_type for s in samples])
    report = {
        "per_crime_ratios": {s.crime_type: s.to_json() for s in samples},
        "welch": welch.to_json(),
        "posthoc": [t.to_json() for t in posthoc],
    }
    Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    manifest.add_output(args.out)
    manifest.write(Path(args.out).parent)
    log("stats", F=welch.F, df1=welch.df1, df2=welch.df2, p=welch.p)
    return 0


def cmd_kappa(args) -> int:
    cfg = _config_of(args)
    labels_path = _path_arg(args, cfg, "labels", "labels")
    labels = corpus.read_labels(labels_path)
    by_annotator: dict[str, dict[str, corpus.AnnotationLabel]] = {}
    for lab in labels:
        by_annotator.setdefault(lab.annotator_id, {})[lab.article_id] = lab
    for annotator in (args.annotator_a, args.annotator_b):
        if annotator not in by_annotator:
            raise corpus.CorpusError(f"annotator {annotator!r} has no labels")
    a_map, b_map = by_annotator[args.annotator_a], by_annotator[args.annotator_b]
    shared = sorted(set(a_map) & set(b_map))
    if not shared:
        raise corpus.CorpusError("annotators share no labeled articles")

    def value_of(lab: corpus.AnnotationLabel):
        if args.on == "is_event":
            return lab.is_event
        attr = getattr(lab, args.on)
        return attr.value if attr else "none"

    kappa = stats.cohen_kappa([value_of(a_map[i]) for i in shared],
                              [value_of(b_map[i]) for i in shared])
    log("kappa", value=kappa, shared=len(shared), on=args.on)
    print(f"{kappa:.6f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps({"kappa": kappa, "n_shared": len(shared), "on": args.on},
                       sort_keys=True) + "\n", encoding="utf-8")
        manifest = RunManifest("kappa", cfg.seed, {"on": args.on})
        manifest.add_input(labels_path)
        manifest.add_output(args.out)
        manifest.write(Path(args.out).parent)
    return 0


def cmd_serve(args) -> int:
    from . import service
    cfg = _config_of(args)
    settings = service.ServiceSettings(
        articles_path=_path_arg(args, cfg, "articles", "articles"),
        labels_path=_path_arg(args, cfg, "labels", "labels"),
        detector_path=args.detector,
        embeddings_path=args.embeddings or cfg.paths.get("embeddings"),
        extractions_path=args.extractions,
        stats_path=args.stats,
        ui_dir=args.ui_dir,
        keywords=resolve_keywords(args.keywords or cfg.keywords),
        cold=args.cold,
        seed=cfg.seed,
        detector_config=cfg.detector,
        sampler_config=cfg.sampler,
    )
    server = service.build_server(settings, args.port)
    log("serving", port=server.server_address[1], cold=args.cold)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown_state()
    return 0


def build_parser() -> CliParser:
    parser = CliParser(prog="newsmil", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override every module seed")

    p = sub.add_parser("ingest", help="read raw article JSONL, tokenize, write JSONL")
    common(p)
    p.add_argument("--articles")
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("filter", help="keep articles matching a keyword set")
    common(p)
    p.add_argument("--articles")
    p.add_argument("--keywords", help="preset name (hate|homicide|kidnapping) or comma list")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("split", help="train/dev/test split")
    common(p)
    p.add_argument("--articles")
    p.add_argument("--labels", help="restrict to labeled articles")
    p.add_argument("--ratios", default="0.7,0.1,0.2")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("train-detector", help="train the MIL detection model")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--labels")
    p.add_argument("--embeddings")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_train_detector)

    p = sub.add_parser("train-extractor", help="train the attribute extractor")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--labels")
    p.add_argument("--embeddings")
    p.add_argument("--detector", required=True, help="detector checkpoint for key sentences")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_train_extractor)

    p = sub.add_parser("train-baseline", help="train the TF-IDF baseline")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--labels")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--max-features", type=int, default=20_000)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_train_baseline)

    p = sub.add_parser("predict", help="run the detector over articles")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--articles")
    p.add_argument("--embeddings")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("extract", help="extract attributes for positive predictions")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--articles")
    p.add_argument("--embeddings")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("al-sample", help="build an uncertainty-sampled annotation queue")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", help="exclude already-labeled articles")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_al_sample)

    p = sub.add_parser("dedupe", help="collapse near-duplicate incidents")
    common(p)
    p.add_argument("--incidents", help="incident records JSONL")
    p.add_argument("--articles")
    p.add_argument("--predictions")
    p.add_argument("--extractions")
    p.add_argument("--incidents-out", help="write built incident records here")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dedupe)

    p = sub.add_parser("stats", help="coverage ratios, Welch ANOVA, post-hoc tests")
    common(p)
    p.add_argument("--official")
    p.add_argument("--incidents", action="append", required=True,
                   metavar="CRIME=PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("kappa", help="inter-annotator agreement")
    common(p)
    p.add_argument("--labels")
    p.add_argument("--annotator-a", required=True)
    p.add_argument("--annotator-b", required=True)
    p.add_argument("--on", choices=["is_event", "target", "action"], default="is_event")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_kappa)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    common(p)
    p.add_argument("--articles")
    p.add_argument("--labels")
    p.add_argument("--detector")
    p.add_argument("--embeddings")
    p.add_argument("--extractions")
    p.add_argument("--stats")
    p.add_argument("--keywords")
    p.add_argument("--cold", action="store_true",
                   help="serve a keyword-based queue without a trained model")
    p.add_argument("--ui-dir", help="static files for the annotation UI")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    try:
        return args.fn(args)
    except DataError as exc:
        log("error", type=type(exc).__name__, message=str(exc))
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
