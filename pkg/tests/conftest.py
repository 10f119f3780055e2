"""Shared test helpers: write a small news-style fixture corpus to disk
in the formats the CLI and the service consume, plus the hook that lets
the acceptance suite print one pass/fail line per criterion."""

import csv
import json
from pathlib import Path

import pytest

from newsmil import synthetic


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    setattr(item, f"rep_{report.when}", report)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"


def write_jsonl(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def write_fixture_files(fixture: synthetic.NewsFixture, out: Path) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "articles": out / "articles.jsonl",
        "labels": out / "labels.jsonl",
        "embeddings": out / "embeddings.txt",
        "official": out / "official_counts.csv",
        "config": out / "config.json",
    }
    write_jsonl(paths["articles"], fixture.articles)
    write_jsonl(paths["labels"], fixture.labels)
    paths["embeddings"].write_text("\n".join(fixture.embedding_rows) + "\n",
                                   encoding="utf-8")
    with open(paths["official"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["city", "state", "crime_type", "count"])
        writer.writerows(fixture.official_rows)
    for crime, records in fixture.other_incidents.items():
        path = out / f"incidents-{crime}.jsonl"
        write_jsonl(path, (r.to_json() for r in records))
        paths[f"incidents_{crime}"] = path
    paths["config"].write_text(json.dumps(fixture.config, sort_keys=True, indent=2) + "\n",
                               encoding="utf-8")
    return paths


@pytest.fixture(scope="session")
def mini_news(tmp_path_factory):
    """A 36-article corpus on disk, 26 labeled, fast training config."""
    fixture = synthetic.make_news_fixture(
        n_positive=16, n_negative=20, seed=13, embedding_dim=10,
        n_labeled=26, n_double_labeled=12)
    fixture.config["detector"].update(
        {"hidden_dim": 6, "conv_widths": [2], "n_filters": 4, "epochs": 4,
         "embedding_dim": 10})
    fixture.config["extractor"].update({"hidden_dim": 6, "epochs": 4,
                                        "embedding_dim": 10})
    out = tmp_path_factory.mktemp("mini_news")
    paths = write_fixture_files(fixture, out)
    return fixture, paths
