#!/usr/bin/env python3
"""Run the full pipeline on the shipped synthetic fixtures.

    python3 scripts/run_synthetic_pipeline.py [OUT_DIR]

Stages: ingest -> filter -> split -> train-detector -> predict ->
train-extractor -> extract -> dedupe -> stats -> al-sample -> kappa ->
train-baseline. Everything is seeded through fixtures/config.json, so
two runs into different directories produce byte-identical artifacts.
"""

import sys
from pathlib import Path

from newsmil.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"


def run(out_dir: str | Path, epochs_override: int | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = str(FIX / "config.json")

    def step(*argv):
        code = cli([str(a) for a in argv])
        if code != 0:
            raise SystemExit(f"pipeline step failed ({code}): {' '.join(map(str, argv))}")

    step("ingest", "--articles", FIX / "articles.jsonl", "--out", out / "tokenized.jsonl")
    step("filter", "--config", config, "--articles", out / "tokenized.jsonl",
         "--out", out / "filtered.jsonl")
    step("split", "--config", config, "--articles", out / "filtered.jsonl",
         "--labels", FIX / "labels.jsonl", "--out-dir", out)
    step("train-detector", "--config", config, "--train", out / "train.jsonl",
         "--dev", out / "dev.jsonl", "--labels", FIX / "labels.jsonl",
         "--embeddings", FIX / "embeddings.txt", "--out-dir", out)
    step("predict", "--config", config, "--model", out / "detector.json",
         "--articles", out / "tokenized.jsonl", "--embeddings", FIX / "embeddings.txt",
         "--out", out / "predictions.jsonl")
    step("train-extractor", "--config", config, "--train", out / "train.jsonl",
         "--labels", FIX / "labels.jsonl", "--embeddings", FIX / "embeddings.txt",
         "--detector", out / "detector.json", "--out-dir", out)
    step("extract", "--config", config, "--model", out / "extractor.json",
         "--articles", out / "tokenized.jsonl", "--embeddings", FIX / "embeddings.txt",
         "--predictions", out / "predictions.jsonl", "--out", out / "extractions.jsonl")
    step("dedupe", "--articles", out / "tokenized.jsonl",
         "--predictions", out / "predictions.jsonl",
         "--extractions", out / "extractions.jsonl",
         "--incidents-out", out / "incidents-hate.jsonl", "--out", out / "dedup-report.json")
    step("stats", "--official", FIX / "official_counts.csv",
         "--incidents", f"hate={out / 'incidents-hate.jsonl'}",
         "--incidents", f"homicide={FIX / 'incidents-homicide.jsonl'}",
         "--incidents", f"kidnapping={FIX / 'incidents-kidnapping.jsonl'}",
         "--out", out / "stats.json")
    step("al-sample", "--config", config, "--predictions", out / "predictions.jsonl",
         "--labels", FIX / "labels.jsonl", "--n", 10, "--out", out / "queue.jsonl")
    step("kappa", "--labels", FIX / "labels.jsonl",
         "--annotator-a", "ann1", "--annotator-b", "ann2", "--out", out / "kappa.json")
    step("train-baseline", "--config", config, "--train", out / "train.jsonl",
         "--test", out / "test.jsonl", "--labels", FIX / "labels.jsonl", "--out-dir", out)


if __name__ == "__main__":
    run(sys.argv[1] if len(sys.argv) > 1 else ROOT / "out" / "synthetic-run")
