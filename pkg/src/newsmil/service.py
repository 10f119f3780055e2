"""Annotation HTTP service.

JSON over HTTP/1.1, stdlib server. Read endpoints are served from an
in-memory snapshot; label-store and queue mutations serialize through
one lock, and the label file is appended and fsynced before the request
is acknowledged, so a crash loses at most the in-flight record.
Retraining runs on a single background worker; a second retrain request
while one is running gets 409. The queue keeps serving from the frozen
previous model during training.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import active, corpus, detector, extractor
from .active import AnnotationQueue, LabelStore, QueueItem
from .corpus import ActionClass, AnnotationLabel, Article, TargetClass


class ServiceError(ValueError):
    pass


@dataclass
class ServiceSettings:
    articles_path: str
    labels_path: str
    detector_path: str | None = None
    embeddings_path: str | None = None
    extractions_path: str | None = None
    stats_path: str | None = None
    ui_dir: str | None = None
    keywords: list[str] = field(default_factory=lambda: list(corpus.KEYWORD_PRESETS["hate"]))
    cold: bool = False
    seed: int = 0
    detector_config: dict = field(default_factory=dict)
    sampler_config: dict = field(default_factory=dict)
    default_queue_size: int = 50


class ServiceState:
    def __init__(self, settings: ServiceSettings):
        self.settings = settings
        self.lock = threading.RLock()

        self.articles: dict[str, Article] = {
            a.id: a for a in corpus.ingest(settings.articles_path).articles}
        labels = (corpus.read_labels(settings.labels_path)
                  if Path(settings.labels_path).exists() else [])
        self.store = LabelStore(labels)

        self.model: detector.MilModel | None = None
        self.table: corpus.EmbeddingTable | None = None
        self.predictions: dict[str, detector.DetectionResult] = {}
        if settings.detector_path:
            if not settings.embeddings_path:
                raise ServiceError("a detector checkpoint needs --embeddings")
            self.model = detector.load_detector(settings.detector_path)
            self._load_table()
            self._refresh_predictions()
        elif not settings.cold:
            raise ServiceError("serve needs a detector checkpoint or --cold")

        self.extractions: dict[str, extractor.ExtractionResult] = {}
        if settings.extractions_path:
            with open(settings.extractions_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        r = extractor.ExtractionResult.from_json(json.loads(line))
                        self.extractions[r.article_id] = r

        self.stats_doc = None
        if settings.stats_path and Path(settings.stats_path).exists():
            self.stats_doc = json.loads(Path(settings.stats_path).read_text(encoding="utf-8"))

        self.queue = self._build_queue(settings.default_queue_size)

        self.training = False
        self.training_thread: threading.Thread | None = None
        self.training_progress: dict = {}
        self.last_metrics: dict = {}

    # -- internals ---------------------------------------------------------

    def _load_table(self):
        vocab = corpus.corpus_vocabulary(self.articles.values())
        self.table = corpus.load_embeddings(
            self.settings.embeddings_path, vocab,
            dim=self.model.config.embedding_dim, seed=self.settings.seed)

    def _refresh_predictions(self):
        results = detector.predict(list(self.articles.values()), self.model, self.table)
        self.predictions = {r.article_id: r for r in results}

    def _unlabeled_ids(self) -> set[str]:
        labeled = {lab.article_id for lab in self.store.records()}
        return set(self.articles) - labeled

    def _build_queue(self, n: int) -> AnnotationQueue:
        candidates = self._unlabeled_ids()
        if self.predictions:
            pool = [(aid, self.predictions[aid].bag_probability)
                    for aid in sorted(candidates) if aid in self.predictions]
            if not pool:
                return AnnotationQueue([])
            cfg = active.SamplerConfig(**{
                **self.settings.sampler_config,
                "n_samples": min(n, len(pool)), "seed": self.settings.seed})
            return active.sample_uncertain(pool, cfg)
        keyword_hits = corpus.keyword_filter(
            [self.articles[aid] for aid in sorted(candidates)], self.settings.keywords)
        return AnnotationQueue([QueueItem(a.id, 0.5, 1.0) for a in keyword_hits[:n]])

    # -- endpoint logic -----------------------------------------------------

    def queue_items(self, limit: int, annotator_id: str | None) -> list[dict]:
        with self.lock:
            out = []
            for item in self.queue.pending():
                if annotator_id and annotator_id in self.store.annotators_of(item.article_id):
                    continue
                article = self.articles[item.article_id]
                det = self.predictions.get(item.article_id)
                out.append({
                    **item.to_json(),
                    "title": article.title,
                    "body": article.body,
                    "sentences": article.sentences,
                    "key_sentence_indices": det.key_sentence_indices if det else [],
                })
                if len(out) >= limit:
                    break
            return out

    def article_view(self, article_id: str) -> dict | None:
        with self.lock:
            article = self.articles.get(article_id)
            if article is None:
                return None
            det = self.predictions.get(article_id)
            ext = self.extractions.get(article_id)
            return {
                "article": article.to_json(),
                "detection": det.to_json() if det else None,
                "extraction": ext.to_json() if ext else None,
                "labels": [lab.to_json() for lab in self.store.for_article(article_id)],
            }

    def submit_label(self, doc: dict) -> AnnotationLabel:
        try:
            label = AnnotationLabel(
                article_id=str(doc["article_id"]),
                is_event=bool(doc["is_event"]),
                target=TargetClass(doc["target"]) if doc.get("target") else None,
                action=ActionClass(doc["action"]) if doc.get("action") else None,
                annotator_id=str(doc["annotator_id"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ServiceError(f"bad label: {exc}") from exc
        with self.lock:
            if label.article_id not in self.articles:
                raise KeyError(label.article_id)
            # write-ahead append, fsync, then acknowledge
            with open(self.settings.labels_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(label.to_json(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.store.add(label)
            item = self.queue.get(label.article_id)
            if item is not None:
                item.status = active.LABELED
        return label

    def resample(self, n: int) -> int:
        with self.lock:
            self.queue = self._build_queue(n)
            return len(self.queue.items)

    def start_retrain(self) -> bool:
        """True if a run was started, False if one is already going."""
        with self.lock:
            if self.training:
                return False
            if not self.settings.embeddings_path:
                raise ServiceError("retraining needs an embeddings path")
            self.training = True
            self.training_progress = {"epoch": 0, "total": 0}
        self.training_thread = threading.Thread(target=self._retrain, daemon=True)
        self.training_thread.start()
        return True

    def _retrain(self):
        try:
            with self.lock:
                resolved = corpus.resolve_labels(
                    list(self.articles.values()), self.store.records())
            pairs = [(a, lab.is_event) for a, lab in resolved]
            rng = np.random.default_rng(self.settings.seed)
            order = rng.permutation(len(pairs))
            cut = max(1, int(len(pairs) * 0.8))
            train_set = [pairs[i] for i in order[:cut]]
            dev_set = [pairs[i] for i in order[cut:]]
            cfg = detector.MilConfig(**{**self.settings.detector_config,
                                        "seed": self.settings.seed})
            self.training_progress["total"] = cfg.epochs
            vocab = corpus.corpus_vocabulary(self.articles.values())
            table = corpus.load_embeddings(self.settings.embeddings_path, vocab,
                                           dim=cfg.embedding_dim, seed=self.settings.seed)

            def on_epoch(record):
                self.training_progress = {
                    "epoch": record.epoch + 1, "total": cfg.epochs,
                    "train_loss": record.train_loss, "dev_f1": record.dev_f1}

            model, history = detector.train(train_set, dev_set, cfg, table,
                                            progress=on_epoch)
            with self.lock:
                self.model = model
                self.table = table
                self._refresh_predictions()
                best = max((r.dev_f1 for r in history if r.dev_f1 is not None), default=None)
                self.last_metrics = {"best_dev_f1": best, "epochs": len(history),
                                     "train_loss_final": history[-1].train_loss}
        except Exception as exc:  # surfaces through /api/status
            self.last_metrics = {"error": f"{type(exc).__name__}: {exc}"}
        finally:
            self.training = False

    def status(self) -> dict:
        with self.lock:
            labeled = {lab.article_id for lab in self.store.records()}
            return {
                "training": self.training,
                "progress": self.training_progress,
                "counts": {
                    "articles": len(self.articles),
                    "labeled_articles": len(labeled),
                    "labels": len(self.store),
                    "queue_pending": len(self.queue.pending()),
                },
                "last_metrics": self.last_metrics,
                "model_loaded": self.model is not None,
            }


class ApiHandler(BaseHTTPRequestHandler):
    server_version = "newsmil/0.1"
    state: ServiceState  # set by build_server

    def log_message(self, fmt, *args):  # route access logs to stderr as JSON
        import sys
        sys.stderr.write(json.dumps({"event": "http", "message": fmt % args}) + "\n")

    # -- helpers -----------------------------------------------------------

    def _send_json(self, code: int, doc) -> None:
        body = json.dumps(doc, sort_keys=True).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ServiceError("empty request body")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ServiceError(f"malformed JSON body: {exc}") from exc
        if not isinstance(doc, dict):
            raise ServiceError("request body must be a JSON object")
        return doc

    # -- routing ------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        state = self.state
        if url.path == "/api/queue":
            limit = int(query.get("limit", ["10"])[0])
            annotator = query.get("annotator_id", [None])[0]
            self._send_json(200, {"items": state.queue_items(limit, annotator)})
        elif url.path.startswith("/api/articles/"):
            view = state.article_view(url.path.removeprefix("/api/articles/"))
            if view is None:
                self._send_json(404, {"error": "unknown article"})
            else:
                self._send_json(200, view)
        elif url.path == "/api/status":
            self._send_json(200, state.status())
        elif url.path == "/api/stats":
            if state.stats_doc is None:
                self._send_json(404, {"error": "no stats report available"})
            else:
                self._send_json(200, state.stats_doc)
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        state = self.state
        try:
            if url.path == "/api/labels":
                doc = self._read_body()
                try:
                    label = state.submit_label(doc)
                except KeyError:
                    self._send_json(404, {"error": "unknown article"})
                    return
                self._send_json(201, {"status": "stored", "label": label.to_json()})
            elif url.path == "/api/sample":
                doc = self._read_body()
                n = doc.get("n")
                if not isinstance(n, int) or n < 1:
                    raise ServiceError("sample needs a positive integer n")
                self._send_json(200, {"queue": state.resample(n)})
            elif url.path == "/api/retrain":
                if state.start_retrain():
                    self._send_json(202, {"status": "training started"})
                else:
                    self._send_json(409, {"error": "a training run is already in progress"})
            else:
                self._send_json(404, {"error": "unknown endpoint"})
        except ServiceError as exc:
            self._send_json(400, {"error": str(exc)})

    def _serve_static(self, path: str) -> None:
        ui_dir = self.state.settings.ui_dir
        if ui_dir is None:
            self._send_json(404, {"error": "unknown endpoint"})
            return
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        full = (Path(ui_dir) / rel).resolve()
        if not str(full).startswith(str(Path(ui_dir).resolve())) or not full.is_file():
            self._send_json(404, {"error": "not found"})
            return
        body = full.read_bytes()
        ctype = mimetypes.guess_type(str(full))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class PipelineServer(ThreadingHTTPServer):
    daemon_threads = True

    def shutdown_state(self):
        state = self.RequestHandlerClass.state
        if state.training_thread is not None:
            state.training_thread.join(timeout=60)


def build_server(settings: ServiceSettings, port: int | None = None) -> PipelineServer:
    if port is None:
        port = int(os.environ.get("PORT", "8080"))
    state = ServiceState(settings)
    handler = type("BoundApiHandler", (ApiHandler,), {"state": state})
    return PipelineServer(("127.0.0.1", port), handler)
