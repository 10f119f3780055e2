#!/usr/bin/env python3
"""Regenerate the shipped fixtures under fixtures/.

Everything is seeded, so rerunning this script reproduces the committed
files byte for byte.
"""

import csv
import json
import sys
from pathlib import Path

from newsmil import synthetic

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def write_jsonl(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    fixture = synthetic.make_news_fixture()

    write_jsonl(OUT / "articles.jsonl", fixture.articles)
    write_jsonl(OUT / "labels.jsonl", fixture.labels)
    (OUT / "embeddings.txt").write_text("\n".join(fixture.embedding_rows) + "\n",
                                        encoding="utf-8")
    with open(OUT / "official_counts.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["city", "state", "crime_type", "count"])
        writer.writerows(fixture.official_rows)
    for crime, records in fixture.other_incidents.items():
        write_jsonl(OUT / f"incidents-{crime}.jsonl", (r.to_json() for r in records))
    (OUT / "config.json").write_text(
        json.dumps(fixture.config, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    write_jsonl(OUT / "gold.jsonl",
                ({"article_id": aid, **truth} for aid, truth in sorted(fixture.gold.items())))
    print(f"wrote fixtures to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
