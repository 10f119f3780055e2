"""HTTP service tests: endpoint contracts, label write-ahead behavior,
queue state, and the single-slot retrain rule."""

import json
import threading
import time
import urllib.error
import urllib.request
from contextlib import contextmanager
from pathlib import Path

import pytest

from newsmil import corpus, detector, service
from newsmil.cli import main as cli_main


def request(method, url, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, json.loads(resp.read() or b"null")
    except urllib.error.HTTPError as exc:
        payload = exc.read()
        return exc.code, json.loads(payload) if payload else None


@contextmanager
def running(settings):
    server = service.build_server(settings, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.shutdown_state()


@pytest.fixture()
def cold(mini_news, tmp_path):
    """Cold-mode service: keyword queue, no model."""
    fixture, paths = mini_news
    labels_path = tmp_path / "labels.jsonl"
    settings = service.ServiceSettings(
        articles_path=str(tmp_path / "tokenized.jsonl"),
        labels_path=str(labels_path),
        cold=True,
        seed=3,
    )
    assert cli_main(["ingest", "--articles", str(paths["articles"]),
                     "--out", settings.articles_path]) == 0
    with running(settings) as base:
        yield base, labels_path


class TestQueueAndLabels:
    def test_queue_returns_pending_items_with_article_text(self, cold):
        base, _ = cold
        status, doc = request("GET", f"{base}/api/queue?limit=5")
        assert status == 200
        assert 0 < len(doc["items"]) <= 5
        first = doc["items"][0]
        assert {"article_id", "bag_probability", "status", "title", "body",
                "sentences", "key_sentence_indices"} <= set(first)
        assert first["status"] == "pending"

    def test_label_round_trip_and_queue_exclusion(self, cold):
        base, labels_path = cold
        _, doc = request("GET", f"{base}/api/queue?limit=1")
        aid = doc["items"][0]["article_id"]
        label = {"article_id": aid, "is_event": True, "target": "religion",
                 "action": "vandalism", "annotator_id": "annX"}
        status, reply = request("POST", f"{base}/api/labels", label)
        assert status == 201
        # write-ahead file holds the record verbatim
        stored = [json.loads(line) for line in open(labels_path)]
        assert label in stored
        # the labeled item no longer shows as pending
        _, doc = request("GET", f"{base}/api/queue?limit=100")
        assert aid not in {item["article_id"] for item in doc["items"]}

    def test_queue_excludes_items_labeled_by_requesting_annotator(self, cold):
        base, _ = cold
        _, doc = request("GET", f"{base}/api/queue?limit=2")
        target = doc["items"][1]["article_id"]
        # labeled by somebody else: still visible to annB, hidden from annA
        request("POST", f"{base}/api/labels",
                {"article_id": target, "is_event": False, "annotator_id": "annA"})
        _, for_a = request("GET", f"{base}/api/queue?limit=100&annotator_id=annA")
        assert target not in {i["article_id"] for i in for_a["items"]}

    def test_unknown_article_404(self, cold):
        base, _ = cold
        status, _ = request("POST", f"{base}/api/labels",
                            {"article_id": "ghost", "is_event": False,
                             "annotator_id": "a"})
        assert status == 404

    def test_malformed_body_400(self, cold):
        base, _ = cold
        status, doc = request("POST", f"{base}/api/labels",
                              {"article_id": "news0001"})   # missing fields
        assert status == 400
        req = urllib.request.Request(f"{base}/api/labels", data=b"{not json",
                                     method="POST")
        try:
            urllib.request.urlopen(req, timeout=10)
            raised = None
        except urllib.error.HTTPError as exc:
            raised = exc.code
        assert raised == 400

    def test_label_invariant_enforced(self, cold):
        base, _ = cold
        status, doc = request("POST", f"{base}/api/labels",
                              {"article_id": "news0001", "is_event": False,
                               "target": "race", "annotator_id": "a"})
        assert status == 400

    def test_article_view(self, cold):
        base, _ = cold
        status, doc = request("GET", f"{base}/api/articles/news0001")
        assert status == 200
        assert doc["article"]["id"] == "news0001"
        assert "detection" in doc and "extraction" in doc
        status, _ = request("GET", f"{base}/api/articles/ghost")
        assert status == 404

    def test_resample(self, cold):
        base, _ = cold
        status, doc = request("POST", f"{base}/api/sample", {"n": 3})
        assert status == 200
        assert doc["queue"] == 3
        _, q = request("GET", f"{base}/api/queue?limit=100")
        assert len(q["items"]) == 3

    def test_resample_bad_n_400(self, cold):
        base, _ = cold
        status, _ = request("POST", f"{base}/api/sample", {"n": "lots"})
        assert status == 400

    def test_status_counts(self, cold):
        base, _ = cold
        status, doc = request("GET", f"{base}/api/status")
        assert status == 200
        assert doc["counts"]["articles"] == 36
        assert doc["training"] is False
        assert doc["model_loaded"] is False

    def test_stats_404_without_report(self, cold):
        base, _ = cold
        status, _ = request("GET", f"{base}/api/stats")
        assert status == 404

    def test_unknown_endpoint_404(self, cold):
        base, _ = cold
        assert request("GET", f"{base}/api/nothing")[0] == 404
        assert request("POST", f"{base}/api/nothing", {})[0] == 404


class TestStatsAndStatic:
    def test_stats_served_verbatim(self, mini_news, tmp_path):
        _, paths = mini_news
        report = {"welch": {"F": 1.5, "df1": 2, "df2": 10.0, "p": 0.3},
                  "per_crime_ratios": {}, "posthoc": []}
        stats_path = tmp_path / "stats.json"
        stats_path.write_text(json.dumps(report))
        tokenized = tmp_path / "tok.jsonl"
        cli_main(["ingest", "--articles", str(paths["articles"]), "--out", str(tokenized)])
        settings = service.ServiceSettings(
            articles_path=str(tokenized), labels_path=str(tmp_path / "labels.jsonl"),
            cold=True, stats_path=str(stats_path))
        with running(settings) as base:
            status, doc = request("GET", f"{base}/api/stats")
            assert status == 200
            assert doc == report

    def test_static_ui_served(self, mini_news, tmp_path):
        _, paths = mini_news
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>annotate</body></html>")
        tokenized = tmp_path / "tok.jsonl"
        cli_main(["ingest", "--articles", str(paths["articles"]), "--out", str(tokenized)])
        settings = service.ServiceSettings(
            articles_path=str(tokenized), labels_path=str(tmp_path / "labels.jsonl"),
            cold=True, ui_dir=str(ui))
        with running(settings) as base:
            req = urllib.request.Request(f"{base}/")
            with urllib.request.urlopen(req, timeout=10) as resp:
                assert resp.status == 200
                assert b"annotate" in resp.read()
            # path traversal is refused
            status, _ = request("GET", f"{base}/../pyproject.toml")
            assert status == 404


class TestWarmModeAndRetrain:
    @pytest.fixture()
    def warm(self, mini_news, tmp_path):
        fixture, paths = mini_news
        tokenized = tmp_path / "tok.jsonl"
        assert cli_main(["ingest", "--articles", str(paths["articles"]),
                         "--out", str(tokenized)]) == 0
        out_dir = tmp_path / "model"
        out_dir.mkdir()
        assert cli_main(["split", "--config", str(paths["config"]),
                         "--articles", str(tokenized), "--labels", str(paths["labels"]),
                         "--out-dir", str(out_dir)]) == 0
        assert cli_main(["train-detector", "--config", str(paths["config"]),
                         "--train", str(out_dir / "train.jsonl"),
                         "--dev", str(out_dir / "dev.jsonl"),
                         "--labels", str(paths["labels"]),
                         "--embeddings", str(paths["embeddings"]),
                         "--out-dir", str(out_dir)]) == 0
        labels_copy = tmp_path / "labels.jsonl"
        labels_copy.write_text(Path(paths["labels"]).read_text())
        settings = service.ServiceSettings(
            articles_path=str(tokenized),
            labels_path=str(labels_copy),
            detector_path=str(out_dir / "detector.json"),
            embeddings_path=str(paths["embeddings"]),
            seed=7,
            detector_config=fixture.config["detector"],
        )
        with running(settings) as base:
            yield base

    def test_queue_carries_model_scores(self, warm):
        status, doc = request("GET", f"{warm}/api/queue?limit=5")
        assert status == 200
        assert doc["items"], "warm queue should not be empty"
        for item in doc["items"]:
            assert 0.0 <= item["bag_probability"] <= 1.0
            assert isinstance(item["key_sentence_indices"], list)

    def test_retrain_single_slot_and_completion(self, warm):
        status1, _ = request("POST", f"{warm}/api/retrain")
        status2, doc2 = request("POST", f"{warm}/api/retrain")
        assert status1 == 202
        assert status2 == 409
        assert "in progress" in doc2["error"]
        # queue stays servable during training on the frozen model
        status, _ = request("GET", f"{warm}/api/queue?limit=2")
        assert status == 200
        deadline = time.time() + 120
        while time.time() < deadline:
            _, doc = request("GET", f"{warm}/api/status")
            if not doc["training"]:
                break
            time.sleep(0.25)
        assert not doc["training"], "training did not finish in time"
        assert doc["last_metrics"].get("error") is None
        assert doc["last_metrics"]["epochs"] == 4
        assert doc["model_loaded"] is True
        # after completion a new retrain is accepted again
        status3, _ = request("POST", f"{warm}/api/retrain")
        assert status3 == 202
        deadline = time.time() + 120
        while time.time() < deadline:
            _, doc = request("GET", f"{warm}/api/status")
            if not doc["training"]:
                break
            time.sleep(0.25)
        assert not doc["training"]
